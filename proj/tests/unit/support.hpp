#ifndef SPACEFILL_TESTS_SUPPORT_HPP
#define SPACEFILL_TESTS_SUPPORT_HPP

#include "spacefill/rng.hpp"
#include "spacefill/types.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>

namespace testing {

using spacefill::Index;
using spacefill::PointCloud;

// O(n^2) nearest neighbor with the lowest index winning ties.
inline std::pair<Index, double> brute_nearest(const PointCloud& points,
                                              const Eigen::Ref<const Eigen::RowVectorXd>& q,
                                              Index exclude = -1) {
  Index best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < points.rows(); ++i) {
    if (i == exclude) continue;
    double d2 = 0.0;
    for (Index j = 0; j < points.cols(); ++j) {
      const double diff = q(j) - points(i, j);
      d2 += diff * diff;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, best_d2};
}

inline PointCloud uniform_cloud(Index n, Index d, std::uint64_t seed) {
  spacefill::Rng rng(seed);
  PointCloud p(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) p(i, j) = rng.uniform();
  }
  return p;
}

// Fresh scratch directory under the build tree, removed up front.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

}  // namespace testing

#endif  // SPACEFILL_TESTS_SUPPORT_HPP
