#include "spacefill/design.hpp"

#include "spacefill/rng.hpp"

#include <fmt/format.h>

#include <array>
#include <limits>

namespace spacefill {

namespace {

struct DirectionEntry {
  int degree;                  // s
  std::uint32_t coefficients;  // a
  std::array<std::uint32_t, 7> m;
};

// Dimensions 2..21 of new-joe-kuo-6.21201. Dimension 1 is the van der Corput sequence.
constexpr std::array<DirectionEntry, kSobolMaxDimension - 1> kJoeKuo{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
    {5, 11, {1, 1, 5, 1, 1}},
    {5, 13, {1, 1, 1, 3, 11}},
    {5, 14, {1, 3, 5, 5, 31}},
    {6, 1, {1, 3, 3, 9, 7, 49}},
    {6, 13, {1, 1, 1, 15, 21, 21}},
    {6, 16, {1, 3, 1, 13, 27, 49}},
    {6, 19, {1, 1, 1, 15, 7, 5}},
    {6, 22, {1, 3, 1, 15, 13, 25}},
    {6, 25, {1, 1, 5, 5, 19, 61}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
}};

constexpr int kBits = 32;

std::array<std::uint32_t, kBits> direction_numbers(Index dim) {
  std::array<std::uint32_t, kBits> v{};
  if (dim == 0) {
    for (int i = 0; i < kBits; ++i) v[std::size_t(i)] = 1u << (kBits - 1 - i);
    return v;
  }
  const DirectionEntry& e = kJoeKuo[std::size_t(dim - 1)];
  const int s = e.degree;
  for (int i = 0; i < s; ++i) v[std::size_t(i)] = e.m[std::size_t(i)] << (kBits - 1 - i);
  for (int i = s; i < kBits; ++i) {
    std::uint32_t value = v[std::size_t(i - s)] ^ (v[std::size_t(i - s)] >> s);
    for (int k = 1; k < s; ++k) {
      if ((e.coefficients >> (s - 1 - k)) & 1u) value ^= v[std::size_t(i - k)];
    }
    v[std::size_t(i)] = value;
  }
  return v;
}

}  // namespace

PointCloud sobol_points(Index n, Index d) {
  if (n < 0) throw PreconditionError("sobol_points: n must be non-negative");
  if (d < 1) throw PreconditionError("sobol_points: d must be at least 1");
  if (d > kSobolMaxDimension) {
    throw PreconditionError(fmt::format(
        "sobol_points: dimension {} exceeds the {} supported by the direction numbers", d,
        kSobolMaxDimension));
  }
  if (n >= (Index(1) << kBits) - 1) throw PreconditionError("sobol_points: n too large");

  std::vector<std::array<std::uint32_t, kBits>> v(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) v[std::size_t(j)] = direction_numbers(j);

  PointCloud points(n, d);
  std::vector<std::uint32_t> x(static_cast<std::size_t>(d), 0u);
  constexpr double scale = 1.0 / 4294967296.0;  // 2^-32
  // Gray-code order: point i+1 flips the direction number at the lowest zero bit of i.
  for (Index i = 0; i < n; ++i) {
    std::uint64_t c = static_cast<std::uint64_t>(i);
    int bit = 0;
    while (c & 1u) {
      c >>= 1;
      ++bit;
    }
    for (Index j = 0; j < d; ++j) {
      x[std::size_t(j)] ^= v[std::size_t(j)][std::size_t(bit)];
      points(i, j) = static_cast<double>(x[std::size_t(j)]) * scale;
    }
  }
  return points;
}

PointCloud lhs_points(Index n, Index d, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("lhs_points: n must be at least 1");
  if (d < 1) throw PreconditionError("lhs_points: d must be at least 1");
  Rng rng(seed);
  PointCloud points(n, d);
  std::vector<Index> strata(static_cast<std::size_t>(n));
  const double width = 1.0 / static_cast<double>(n);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) strata[std::size_t(i)] = i;
    rng.shuffle(strata);
    for (Index i = 0; i < n; ++i) {
      const auto s = static_cast<double>(strata[std::size_t(i)]);
      double value = (s + rng.uniform()) * width;
      // Guard the upper stratum edge against rounding up into the next stratum.
      const double upper = (s + 1.0) * width;
      if (value >= upper) value = std::nextafter(upper, 0.0);
      points(i, j) = value;
    }
  }
  return points;
}

namespace {

double squared_distance(const PointCloud& p, Index a, Index b) {
  return (p.row(a) - p.row(b)).squaredNorm();
}

Index farthest_from(const PointCloud& p, const Eigen::RowVectorXd& anchor) {
  Index best = 0;
  double best_d = -1.0;
  for (Index i = 0; i < p.rows(); ++i) {
    const double d = (p.row(i) - anchor).squaredNorm();
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::vector<Index> greedy_maximin(const PointCloud& candidates, Index m) {
  const Index n = candidates.rows();
  if (m < 1 || m > n) {
    throw PreconditionError(fmt::format("greedy_maximin: need 1 <= m <= {}, got {}", n, m));
  }
  if (n == 1) return {0};

  Index first = 0;
  Index second = 1;
  if (n < 10000) {
    double best = -1.0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double d = squared_distance(candidates, i, j);
        if (d > best) {
          best = d;
          first = i;
          second = j;
        }
      }
    }
  } else {
    const Eigen::RowVectorXd centroid = candidates.colwise().mean();
    const Index a = farthest_from(candidates, centroid);
    const Index b = farthest_from(candidates, candidates.row(a));
    first = std::min(a, b);
    second = std::max(a, b);
  }

  std::vector<Index> selected{first};
  if (m == 1) return selected;
  selected.push_back(second);

  Eigen::VectorXd min_d2(n);
  for (Index i = 0; i < n; ++i) {
    min_d2(i) = std::min(squared_distance(candidates, i, first),
                         squared_distance(candidates, i, second));
  }
  while (static_cast<Index>(selected.size()) < m) {
    Index pick = -1;
    double best = -1.0;
    for (Index i = 0; i < n; ++i) {
      if (min_d2(i) > best) {
        best = min_d2(i);
        pick = i;
      }
    }
    // Every remaining candidate duplicates a selected one: take the lowest unselected.
    if (best <= 0.0) {
      std::vector<bool> taken(static_cast<std::size_t>(n), false);
      for (Index s : selected) taken[std::size_t(s)] = true;
      for (Index i = 0; i < n && static_cast<Index>(selected.size()) < m; ++i) {
        if (!taken[std::size_t(i)]) selected.push_back(i);
      }
      break;
    }
    selected.push_back(pick);
    min_d2(pick) = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (min_d2(i) > 0.0) min_d2(i) = std::min(min_d2(i), squared_distance(candidates, i, pick));
    }
  }
  return selected;
}

}  // namespace spacefill
