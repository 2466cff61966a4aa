#include "spacefill/select.hpp"

#include "spacefill/coverage.hpp"
#include "spacefill/dataset.hpp"
#include "spacefill/design.hpp"
#include "spacefill/hull.hpp"
#include "spacefill/io.hpp"
#include "spacefill/kdtree.hpp"
#include "spacefill/parallel.hpp"
#include "spacefill/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

namespace spacefill {

std::string to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::sobol:
      return "sobol";
    case SelectionMethod::lhs:
      return "lhs";
    case SelectionMethod::random:
      return "random";
  }
  return "unknown";
}

SelectionMethod parse_selection_method(const std::string& text) {
  if (text == "sobol") return SelectionMethod::sobol;
  if (text == "lhs") return SelectionMethod::lhs;
  if (text == "random") return SelectionMethod::random;
  throw PreconditionError("unknown selection method '" + text + "' (sobol|lhs|random)");
}

void SelectionConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw PreconditionError(fmt::format("selection: alpha must lie in (0, 1], got {}", alpha));
  }
  if (volume_samples < 1 || hull_subsample < 1) {
    throw PreconditionError("selection: sample counts must be at least 1");
  }
}

namespace {

double subset_lambda(const PointCloud& normalized, const std::vector<Index>& indices,
                     unsigned threads) {
  if (indices.size() < 2) return 0.0;
  PointCloud picked(static_cast<Index>(indices.size()), normalized.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) picked.row(Index(i)) = normalized.row(indices[i]);
  const auto v = nn_distances(picked, threads);
  if (!(v.mean() > 0.0)) return 0.0;
  return coverage_lambda_from_distances<double>(v);
}

// Morton (Z-order) permutation of points in the unit cube. Consecutive queries in this
// order are close, so each one can seed its search with the previous answer.
std::vector<Index> z_order(const PointCloud& points) {
  const Index d = points.cols();
  const int bits = d > 0 ? static_cast<int>(std::min<Index>(63 / d, 16)) : 0;
  std::vector<std::pair<std::uint64_t, Index>> keys(static_cast<std::size_t>(points.rows()));
  const double cells = std::ldexp(1.0, bits);
  for (Index i = 0; i < points.rows(); ++i) {
    std::uint64_t key = 0;
    for (int b = bits - 1; b >= 0; --b) {
      for (Index j = 0; j < d; ++j) {
        const auto cell = static_cast<std::uint64_t>(std::clamp(points(i, j) * cells, 0.0, cells - 1.0));
        key = (key << 1) | ((cell >> b) & 1u);
      }
    }
    keys[std::size_t(i)] = {key, i};
  }
  std::sort(keys.begin(), keys.end());
  std::vector<Index> order(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) order[i] = keys[i].second;
  return order;
}

}  // namespace

SubsetResult select_spacefilling(const RegressorTable& table, const SelectionConfig& cfg) {
  cfg.validate();
  if (cfg.method == SelectionMethod::random) return select_random(table, cfg.alpha, cfg.seed);
  const Index n = table.rows();
  if (n == 0) throw PreconditionError("select_spacefilling: table is empty");

  const auto [normalized, map] = normalize_minmax(table.X);
  const Index d = normalized.cols();

  SubsetResult result;
  const double v_hat = estimate_hull_volume(normalized, cfg.volume_samples, cfg.hull_subsample,
                                            derive_seed(cfg.seed, "volume"));
  result.v_hat = v_hat;
  // The relative nudge keeps products like 0.01 * n / 0.001 from rounding up past 10 n.
  const double wanted = std::ceil(cfg.alpha * static_cast<double>(n) / v_hat * (1.0 - 1e-12));
  if (wanted > 10.0 * static_cast<double>(n)) {
    throw PreconditionError(fmt::format(
        "select_spacefilling: {} design points exceed 10x the {} data rows (alpha {} / volume {})",
        wanted, n, cfg.alpha, v_hat));
  }
  const auto n_design = static_cast<Index>(wanted);
  result.n_design = n_design;

  const PointCloud design = cfg.method == SelectionMethod::sobol
                                ? sobol_points(n_design, d)
                                : lhs_points(n_design, d, derive_seed(cfg.seed, "lhs"));

  const KdTree<double> tree(normalized);
  const std::vector<Index> order = z_order(design);
  std::vector<Index> picks(static_cast<std::size_t>(n_design));
  parallel_chunks(n_design, cfg.threads, [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
    Index hint = -1;
    for (std::ptrdiff_t k = begin; k < end; ++k) {
      const Index i = order[std::size_t(k)];
      hint = tree.nearest(design.row(i), -1, hint).index;
      picks[std::size_t(i)] = hint;
    }
  });
  std::sort(picks.begin(), picks.end());
  picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
  result.indices = std::move(picks);
  result.lambda_subset = subset_lambda(normalized, result.indices, cfg.threads);
  return result;
}

SubsetResult select_random(const RegressorTable& table, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw PreconditionError(fmt::format("select_random: alpha must lie in (0, 1], got {}", alpha));
  }
  const Index n = table.rows();
  if (n == 0) throw PreconditionError("select_random: table is empty");
  const Index count =
      std::clamp<Index>(static_cast<Index>(std::llround(alpha * static_cast<double>(n))), 1, n);

  Rng rng(seed);
  std::vector<Index> ids(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids[std::size_t(i)] = i;
  for (Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Index>(rng.below(std::uint64_t(n - i)));
    std::swap(ids[std::size_t(i)], ids[std::size_t(j)]);
  }
  ids.resize(static_cast<std::size_t>(count));
  std::sort(ids.begin(), ids.end());

  SubsetResult result;
  result.indices = std::move(ids);
  result.n_design = count;
  // Coverage is reported in the same normalized frame as the space-filling subsets.
  const bool spread = (table.X.colwise().maxCoeff() - table.X.colwise().minCoeff()).minCoeff() > 0;
  const PointCloud normalized = spread && n >= 2 ? normalize_minmax(table.X).first : table.X;
  result.lambda_subset = subset_lambda(normalized, result.indices, 1);
  return result;
}

nlohmann::json to_json(const SubsetResult& r) {
  nlohmann::json j;
  j["indices"] = r.indices;
  j["n_design"] = r.n_design;
  j["v_hat"] = r.v_hat ? nlohmann::json(*r.v_hat) : nlohmann::json(nullptr);
  j["lambda_subset"] = r.lambda_subset;
  return j;
}

SubsetResult subset_result_from_json(const nlohmann::json& j) {
  SubsetResult r;
  r.indices = j.at("indices").get<std::vector<Index>>();
  r.n_design = j.at("n_design").get<Index>();
  if (!j.at("v_hat").is_null()) r.v_hat = j.at("v_hat").get<double>();
  r.lambda_subset = j.at("lambda_subset").get<double>();
  return r;
}

void write_indices_csv(const std::filesystem::path& path, const SubsetResult& r) {
  std::string out = "index\n";
  for (Index i : r.indices) out += std::to_string(i) + '\n';
  write_text(path, out);
}

}  // namespace spacefill
