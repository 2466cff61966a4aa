#ifndef SPACEFILL_EMBEDDING_HPP
#define SPACEFILL_EMBEDDING_HPP

#include "spacefill/dataset.hpp"
#include "spacefill/types.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spacefill {

struct LagTerm {
  std::string signal;
  std::vector<int> lags;
};

/// Which lagged channels make up a NARX regressor. Inputs come first in declaration
/// order, then the lagged outputs; the target is output(k).
struct LagSpec {
  std::vector<LagTerm> inputs;
  std::string output;
  std::vector<int> output_lags;

  /// x(k) = (u1(k), u1(k-1), u1(k-2), u2(k-1), u3(k-1), y(k-1), y(k-2)).
  static LagSpec narx_default();

  /// Throws PreconditionError on negative lags or a zero output lag.
  void validate() const;
  int max_lag() const;
  int max_output_lag() const;
  Index dimension() const;
  std::vector<std::string> column_names() const;
  /// (signal name, lag) feeding column c.
  std::pair<std::string, int> column_source(Index c) const;
};

struct RegressorTable {
  PointCloud X;  ///< n_rows x d
  Eigen::VectorXd y;
  std::vector<Index> origin;  ///< source time index k of each row
  std::vector<std::string> column_names;
  Index dropped_rows = 0;  ///< rows discarded for non-finite entries

  Index rows() const { return X.rows(); }
  Index dimension() const { return X.cols(); }
  RegressorTable subset(std::span<const Index> indices) const;
};

/// One row per k in [max_lag, n-1] of the uniformly sampled dataset.
RegressorTable build_regressors(const TimeSeriesDataset& ds, const LagSpec& spec);

/// Static (lag-free) table, e.g. for function approximation experiments.
RegressorTable make_static_table(PointCloud X, Eigen::VectorXd y,
                                 std::vector<std::string> column_names);

/// Header with the column names plus "target", then numeric rows.
void write_csv(const std::filesystem::path& path, const RegressorTable& table);

}  // namespace spacefill

#endif  // SPACEFILL_EMBEDDING_HPP
