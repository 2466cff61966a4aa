#include "spacefill/embedding.hpp"

#include "spacefill/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace spacefill {

LagSpec LagSpec::narx_default() {
  LagSpec spec;
  spec.inputs = {{"u1", {0, 1, 2}}, {"u2", {1}}, {"u3", {1}}};
  spec.output = "y";
  spec.output_lags = {1, 2};
  return spec;
}

void LagSpec::validate() const {
  for (const auto& term : inputs) {
    for (int lag : term.lags) {
      if (lag < 0) throw PreconditionError("LagSpec: negative lag for '" + term.signal + "'");
    }
  }
  for (int lag : output_lags) {
    if (lag < 1) throw PreconditionError("LagSpec: output lags must be >= 1");
  }
  if (dimension() == 0) throw PreconditionError("LagSpec: no regressor columns");
}

int LagSpec::max_lag() const {
  int m = max_output_lag();
  for (const auto& term : inputs) {
    for (int lag : term.lags) m = std::max(m, lag);
  }
  return m;
}

int LagSpec::max_output_lag() const {
  int m = 0;
  for (int lag : output_lags) m = std::max(m, lag);
  return m;
}

Index LagSpec::dimension() const {
  Index d = static_cast<Index>(output_lags.size());
  for (const auto& term : inputs) d += static_cast<Index>(term.lags.size());
  return d;
}

namespace {
std::string lagged_name(const std::string& signal, int lag) {
  return lag == 0 ? signal + "(k)" : fmt::format("{}(k-{})", signal, lag);
}
}  // namespace

std::vector<std::string> LagSpec::column_names() const {
  std::vector<std::string> names;
  for (Index c = 0; c < dimension(); ++c) {
    const auto [signal, lag] = column_source(c);
    names.push_back(lagged_name(signal, lag));
  }
  return names;
}

std::pair<std::string, int> LagSpec::column_source(Index c) const {
  Index i = c;
  for (const auto& term : inputs) {
    if (i < static_cast<Index>(term.lags.size())) return {term.signal, term.lags[std::size_t(i)]};
    i -= static_cast<Index>(term.lags.size());
  }
  if (i < static_cast<Index>(output_lags.size())) return {output, output_lags[std::size_t(i)]};
  throw PreconditionError(fmt::format("LagSpec: column {} out of range", c));
}

RegressorTable RegressorTable::subset(std::span<const Index> indices) const {
  RegressorTable out;
  out.X.resize(static_cast<Index>(indices.size()), X.cols());
  out.y.resize(static_cast<Index>(indices.size()));
  out.column_names = column_names;
  out.origin.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Index src = indices[r];
    if (src < 0 || src >= rows()) throw PreconditionError("RegressorTable::subset: index out of range");
    out.X.row(Index(r)) = X.row(src);
    out.y(Index(r)) = y(src);
    out.origin.push_back(origin.empty() ? src : origin[std::size_t(src)]);
  }
  return out;
}

RegressorTable build_regressors(const TimeSeriesDataset& ds, const LagSpec& spec) {
  spec.validate();
  if (!ds.rate_hz) throw PreconditionError("build_regressors: dataset is not uniformly sampled");

  std::vector<const Eigen::VectorXd*> sources;
  const Index d = spec.dimension();
  std::vector<int> lags;
  for (Index c = 0; c < d; ++c) {
    const auto [name, lag] = spec.column_source(c);
    if (!ds.contains(name)) throw PreconditionError("build_regressors: missing signal '" + name + "'");
    sources.push_back(&ds.at(name).v);
    lags.push_back(lag);
  }
  if (!ds.contains(spec.output)) {
    throw PreconditionError("build_regressors: missing signal '" + spec.output + "'");
  }
  const Eigen::VectorXd& target = ds.at(spec.output).v;

  const Index n = ds.length();
  const Index max_lag = spec.max_lag();
  if (n <= max_lag) {
    throw PreconditionError(
        fmt::format("build_regressors: {} samples is too short for max lag {}", n, max_lag));
  }

  RegressorTable table;
  table.column_names = spec.column_names();
  table.X.resize(n - max_lag, d);
  table.y.resize(n - max_lag);
  Index row = 0;
  for (Index k = max_lag; k < n; ++k) {
    bool finite = std::isfinite(target(k));
    for (Index c = 0; c < d; ++c) {
      const double value = (*sources[std::size_t(c)])(k - lags[std::size_t(c)]);
      table.X(row, c) = value;
      finite = finite && std::isfinite(value);
    }
    if (!finite) {
      ++table.dropped_rows;
      continue;
    }
    table.y(row) = target(k);
    table.origin.push_back(k);
    ++row;
  }
  table.X.conservativeResize(row, d);
  table.y.conservativeResize(row);
  return table;
}

RegressorTable make_static_table(PointCloud X, Eigen::VectorXd y,
                                 std::vector<std::string> column_names) {
  if (X.rows() != y.size()) throw StructuralError("make_static_table: row count mismatch");
  if (!column_names.empty() && static_cast<Index>(column_names.size()) != X.cols()) {
    throw StructuralError("make_static_table: column name count mismatch");
  }
  RegressorTable table;
  table.X = std::move(X);
  table.y = std::move(y);
  table.column_names = std::move(column_names);
  if (table.column_names.empty()) {
    for (Index c = 0; c < table.X.cols(); ++c) table.column_names.push_back(fmt::format("x{}", c + 1));
  }
  for (Index r = 0; r < table.X.rows(); ++r) table.origin.push_back(r);
  return table;
}

void write_csv(const std::filesystem::path& path, const RegressorTable& table) {
  auto header = table.column_names;
  header.push_back("target");
  Eigen::MatrixXd rows(table.rows(), table.dimension() + 1);
  rows.leftCols(table.dimension()) = table.X;
  rows.col(table.dimension()) = table.y;
  write_table_csv(path, header, rows);
}

}  // namespace spacefill
