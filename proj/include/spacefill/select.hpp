#ifndef SPACEFILL_SELECT_HPP
#define SPACEFILL_SELECT_HPP

#include "spacefill/embedding.hpp"
#include "spacefill/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spacefill {

enum class SelectionMethod { sobol, lhs, random };

std::string to_string(SelectionMethod m);
SelectionMethod parse_selection_method(const std::string& text);

struct SelectionConfig {
  double alpha = 0.01;
  SelectionMethod method = SelectionMethod::sobol;
  std::uint64_t seed = 0;
  Index volume_samples = 10000;
  Index hull_subsample = 2000;
  unsigned threads = 0;  ///< 0 = hardware concurrency; results do not depend on it

  void validate() const;
};

struct SubsetResult {
  std::vector<Index> indices;  ///< sorted, unique rows of the source table
  Index n_design = 0;
  std::optional<double> v_hat;  ///< empty for the random baseline
  double lambda_subset = 0.0;   ///< coverage of the selected normalized rows

  Index size() const { return static_cast<Index>(indices.size()); }
};

/// Normalize rows to [0,1]^d, design ceil(alpha * n / V) points with cfg.method,
/// take the exact nearest data row of every design point, deduplicate.
/// cfg.method == random dispatches to select_random.
SubsetResult select_spacefilling(const RegressorTable& table, const SelectionConfig& cfg);

/// Uniform sample without replacement of round(alpha * n) rows (at least one).
SubsetResult select_random(const RegressorTable& table, double alpha, std::uint64_t seed);

nlohmann::json to_json(const SubsetResult& r);
SubsetResult subset_result_from_json(const nlohmann::json& j);
void write_indices_csv(const std::filesystem::path& path, const SubsetResult& r);

}  // namespace spacefill

#endif  // SPACEFILL_SELECT_HPP
