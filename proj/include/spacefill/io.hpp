#ifndef SPACEFILL_IO_HPP
#define SPACEFILL_IO_HPP

#include "spacefill/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace spacefill {

/// 17 significant digits: enough to round-trip any double.
std::string format_real(double value);

/// Writes text atomically enough for our purposes (truncate + write). Creates parent dirs.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Pretty JSON with every floating-point number printed with 17 significant digits.
std::string dump_json(const nlohmann::json& j);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Plain numeric table: header row, then rows of reals.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const Eigen::Ref<const Eigen::MatrixXd>& rows);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace spacefill

#endif  // SPACEFILL_IO_HPP
