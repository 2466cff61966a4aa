#ifndef SPACEFILL_COVERAGE_HPP
#define SPACEFILL_COVERAGE_HPP

#include "spacefill/kdtree.hpp"
#include "spacefill/parallel.hpp"
#include "spacefill/rng.hpp"
#include "spacefill/types.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace spacefill {

/// v(i): Euclidean distance from point i to its nearest other point. Duplicates give 0.
template <class Scalar>
VectorT<Scalar> nn_distances(const PointCloudT<Scalar>& points, unsigned threads = 1) {
  if (points.rows() < 2) throw PreconditionError("nn_distances: need at least 2 points");
  const KdTree<Scalar> tree(points);
  VectorT<Scalar> v(points.rows());
  parallel_for(points.rows(), threads, [&](std::ptrdiff_t i) {
    v(i) = std::sqrt(tree.nearest(points.row(i), i).distance2);
  });
  return v;
}

/// Coverage measure: population standard deviation of nearest-neighbor distances
/// divided by their mean. 0 for perfectly even spacing; large for clustered data.
template <class Scalar>
Scalar coverage_lambda_from_distances(const VectorT<Scalar>& v) {
  const Scalar mean = v.mean();
  if (!(mean > Scalar(0))) {
    throw DegenerateError("coverage_lambda: mean nearest-neighbor distance is zero");
  }
  const Scalar variance = (v.array() - mean).square().mean();
  return std::sqrt(variance) / mean;
}

template <class Scalar>
Scalar coverage_lambda(const PointCloudT<Scalar>& points, unsigned threads = 1) {
  return coverage_lambda_from_distances<Scalar>(nn_distances(points, threads));
}

/// Estimate of lambda for very large clouds: lambda of a uniform random sub-draw of
/// `sample` points (without replacement). Note the nearest neighbors are taken within
/// the sub-draw, so this estimates lambda of a cloud of that size, not of the full set.
template <class Scalar>
Scalar coverage_lambda_estimate(const PointCloudT<Scalar>& points, Index sample,
                                std::uint64_t seed, unsigned threads = 1) {
  if (points.rows() <= sample) return coverage_lambda(points, threads);
  Rng rng(seed);
  std::vector<Index> ids(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) ids[std::size_t(i)] = i;
  // Partial Fisher-Yates.
  for (Index i = 0; i < sample; ++i) {
    const auto j = i + static_cast<Index>(rng.below(std::uint64_t(points.rows() - i)));
    std::swap(ids[std::size_t(i)], ids[std::size_t(j)]);
  }
  PointCloudT<Scalar> draw(sample, points.cols());
  for (Index i = 0; i < sample; ++i) draw.row(i) = points.row(ids[std::size_t(i)]);
  return coverage_lambda(draw, threads);
}

}  // namespace spacefill

#endif  // SPACEFILL_COVERAGE_HPP
