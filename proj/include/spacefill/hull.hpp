#ifndef SPACEFILL_HULL_HPP
#define SPACEFILL_HULL_HPP

#include "spacefill/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace spacefill {

/// Point-in-convex-hull oracle for a fixed vertex set.
///
/// Membership of q is the feasibility of  sum_i w_i p_i = q,  sum_i w_i = 1,  w >= 0,
/// decided by a phase-1 simplex. Hyperplanes that separated earlier queries are cached
/// and tried first; a cached direction only ever rejects points that are provably
/// outside, so the cache changes speed, never answers.
class ConvexHullMembership {
 public:
  /// Throws DegenerateError if the vertices do not span their dimension affinely.
  explicit ConvexHullMembership(PointCloud vertices, double tolerance = 1e-9);

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& q);

  Index dimension() const { return vertices_.cols(); }
  Index lp_solves() const { return lp_solves_; }

 private:
  void add_direction(const Eigen::VectorXd& w);
  bool solve_lp(const Eigen::VectorXd& q);

  PointCloud vertices_;
  double tolerance_;
  Eigen::MatrixXd directions_;  // one direction per column
  Eigen::VectorXd lower_;
  Eigen::VectorXd upper_;
  Index cached_ = 0;
  Index lp_solves_ = 0;
  Eigen::MatrixXd tableau_;
};

/// Monte-Carlo volume of the convex hull of points in [0,1]^d: the fraction of
/// `volume_samples` uniform points inside the hull of a `hull_subsample`-point
/// maximin subset, clamped to [1e-3, 1].
double estimate_hull_volume(const PointCloud& normalized, Index volume_samples = 10000,
                            Index hull_subsample = 2000, std::uint64_t seed = 0);

/// The vertex subset estimate_hull_volume uses (all points when few enough).
PointCloud hull_vertex_subsample(const PointCloud& normalized, Index hull_subsample,
                                 std::uint64_t seed);

}  // namespace spacefill

#endif  // SPACEFILL_HULL_HPP
