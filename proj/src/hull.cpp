#include "spacefill/hull.hpp"

#include "spacefill/design.hpp"
#include "spacefill/rng.hpp"

#include <Eigen/LU>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace spacefill {

namespace {
constexpr Index kMaxDirections = 1024;
constexpr double kPivotEps = 1e-12;
constexpr Index kHullDrawSize = 20000;
}  // namespace

ConvexHullMembership::ConvexHullMembership(PointCloud vertices, double tolerance)
    : vertices_(std::move(vertices)), tolerance_(tolerance) {
  const Index m = vertices_.rows();
  const Index d = vertices_.cols();
  if (d < 1) throw PreconditionError("ConvexHullMembership: dimension must be at least 1");
  if (m < d + 1) {
    throw DegenerateError(
        fmt::format("convex hull: {} points cannot span {} dimensions", m, d));
  }
  const Eigen::RowVectorXd centroid = vertices_.colwise().mean();
  const Eigen::MatrixXd centered = vertices_.rowwise() - centroid;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(centered);
  lu.setThreshold(1e-10);
  if (lu.rank() < d) {
    throw DegenerateError(fmt::format(
        "convex hull: points are affinely dependent (rank {} in {} dimensions)", lu.rank(), d));
  }

  directions_.resize(d, kMaxDirections);
  lower_.resize(kMaxDirections);
  upper_.resize(kMaxDirections);
  for (Index i = 0; i < d; ++i) {
    add_direction(Eigen::VectorXd::Unit(d, i));
    for (Index j = i + 1; j < d; ++j) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
      w(i) = 1.0;
      w(j) = 1.0;
      add_direction(w);
      w(j) = -1.0;
      add_direction(w);
    }
  }
  tableau_.resize(d + 2, m + d + 2);
}

void ConvexHullMembership::add_direction(const Eigen::VectorXd& w) {
  if (cached_ >= kMaxDirections) return;
  const double norm = w.norm();
  if (!(norm > 0) || !std::isfinite(norm)) return;
  const Eigen::VectorXd unit = w / norm;
  const Eigen::VectorXd proj = vertices_ * unit;
  directions_.col(cached_) = unit;
  lower_(cached_) = proj.minCoeff();
  upper_(cached_) = proj.maxCoeff();
  ++cached_;
}

bool ConvexHullMembership::contains(const Eigen::Ref<const Eigen::VectorXd>& q) {
  if (q.size() != dimension()) throw PreconditionError("ConvexHullMembership: dimension mismatch");
  const Eigen::VectorXd s = directions_.leftCols(cached_).transpose() * q;
  for (Index k = 0; k < cached_; ++k) {
    if (s(k) > upper_(k) + tolerance_ || s(k) < lower_(k) - tolerance_) return false;
  }
  return solve_lp(q);
}

bool ConvexHullMembership::solve_lp(const Eigen::VectorXd& q) {
  ++lp_solves_;
  const Index m = vertices_.rows();
  const Index d = vertices_.cols();
  const Index rows = d + 1;
  const Index art = m;          // first artificial column
  const Index rhs = m + rows;   // right-hand side column
  auto& t = tableau_;
  t.setZero();

  Eigen::VectorXd sign(rows);
  for (Index i = 0; i < rows; ++i) {
    const double b = i < d ? q(i) : 1.0;
    sign(i) = b < 0 ? -1.0 : 1.0;
    if (i < d) {
      t.row(i).head(m) = sign(i) * vertices_.col(i).transpose();
    } else {
      t.row(i).head(m).setOnes();
    }
    t(i, art + i) = 1.0;
    t(i, rhs) = sign(i) * b;
  }
  // Objective row for min sum(artificials), expressed in the nonbasic columns.
  t.row(rows).head(m) = -t.topRows(rows).leftCols(m).colwise().sum();
  t(rows, rhs) = -t.col(rhs).head(rows).sum();

  std::vector<Index> basis(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) basis[std::size_t(i)] = art + i;

  const Index max_iterations = 50 * (m + rows);
  Index degenerate_run = 0;
  for (Index iter = 0; iter < max_iterations; ++iter) {
    if (-t(rows, rhs) <= tolerance_) return true;

    // Dantzig pricing; Bland's rule after a run of degenerate pivots prevents cycling.
    Index enter = -1;
    if (degenerate_run < 50) {
      double most_negative = -kPivotEps;
      for (Index j = 0; j < m; ++j) {
        if (t(rows, j) < most_negative) {
          most_negative = t(rows, j);
          enter = j;
        }
      }
    } else {
      for (Index j = 0; j < m; ++j) {
        if (t(rows, j) < -kPivotEps) {
          enter = j;
          break;
        }
      }
    }
    if (enter < 0) break;  // phase-1 optimum with positive infeasibility

    Index leave = -1;
    double best_ratio = 0.0;
    for (Index i = 0; i < rows; ++i) {
      if (t(i, enter) > kPivotEps) {
        const double ratio = t(i, rhs) / t(i, enter);
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis[std::size_t(i)] < basis[std::size_t(leave)])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase 1; bail out
    degenerate_run = best_ratio <= kPivotEps ? degenerate_run + 1 : 0;

    t.row(leave) /= t(leave, enter);
    for (Index i = 0; i <= rows; ++i) {
      if (i != leave && t(i, enter) != 0.0) {
        const double f = t(i, enter);
        t.row(i) -= f * t.row(leave);
      }
    }
    basis[std::size_t(leave)] = enter;
  }
  if (-t(rows, rhs) <= tolerance_) return true;

  // Dual multipliers give a hyperplane w.p + c <= 0 over the vertices, > 0 at q.
  Eigen::VectorXd dual(rows);
  for (Index i = 0; i < rows; ++i) dual(i) = sign(i) * (1.0 - t(rows, art + i));
  add_direction(dual.head(d));
  return false;
}

PointCloud hull_vertex_subsample(const PointCloud& normalized, Index hull_subsample,
                                 std::uint64_t seed) {
  const Index n = normalized.rows();
  if (n <= hull_subsample) return normalized;
  Rng rng(seed);
  const Index draw_size = std::min(n, kHullDrawSize);
  std::vector<Index> ids(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids[std::size_t(i)] = i;
  for (Index i = 0; i < draw_size; ++i) {
    const auto j = i + static_cast<Index>(rng.below(std::uint64_t(n - i)));
    std::swap(ids[std::size_t(i)], ids[std::size_t(j)]);
  }
  std::sort(ids.begin(), ids.begin() + draw_size);
  PointCloud draw(draw_size, normalized.cols());
  for (Index i = 0; i < draw_size; ++i) draw.row(i) = normalized.row(ids[std::size_t(i)]);

  const auto picked = greedy_maximin(draw, hull_subsample);
  PointCloud vertices(hull_subsample, normalized.cols());
  for (Index i = 0; i < hull_subsample; ++i) vertices.row(i) = draw.row(picked[std::size_t(i)]);
  return vertices;
}

double estimate_hull_volume(const PointCloud& normalized, Index volume_samples,
                            Index hull_subsample, std::uint64_t seed) {
  if (volume_samples < 1 || hull_subsample < 1) {
    throw PreconditionError("estimate_hull_volume: sample counts must be positive");
  }
  const Index d = normalized.cols();
  ConvexHullMembership hull(hull_vertex_subsample(normalized, hull_subsample,
                                                  derive_seed(seed, "hull-subsample")));
  Rng rng(derive_seed(seed, "hull-volume"));
  Eigen::VectorXd q(d);
  Index inside = 0;
  for (Index s = 0; s < volume_samples; ++s) {
    for (Index j = 0; j < d; ++j) q(j) = rng.uniform();
    if (hull.contains(q)) ++inside;
  }
  const double fraction = static_cast<double>(inside) / static_cast<double>(volume_samples);
  return std::clamp(fraction, 1e-3, 1.0);
}

}  // namespace spacefill
