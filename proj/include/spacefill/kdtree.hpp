#ifndef SPACEFILL_KDTREE_HPP
#define SPACEFILL_KDTREE_HPP

#include "spacefill/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace spacefill {

/// Exact nearest-neighbor index over a fixed point cloud.
///
/// The tree is split along the principal axes of the cloud, and nodes carry tight
/// bounding boxes in that frame. Lagged time-series regressors are strongly
/// correlated, so axis-aligned boxes in the raw frame would be mostly empty.
/// Candidate distances are always computed in the original coordinates, in dimension
/// order, and ties go to the lowest original index: results are identical to a
/// brute-force scan. The rotated boxes only prune, with a margin that covers the
/// rounding of the rotation.
///
/// Queries are const and touch no shared mutable state, so any number of threads
/// may query one tree concurrently.
template <class Scalar>
class KdTree {
 public:
  struct Neighbor {
    Index index = -1;
    Scalar distance2 = std::numeric_limits<Scalar>::infinity();
  };

  explicit KdTree(const PointCloudT<Scalar>& points, Index leaf_size = 16)
      : dim_(points.cols()), leaf_size_(std::max<Index>(1, leaf_size)) {
    if (points.rows() == 0) throw PreconditionError("KdTree: empty point cloud");
    fit_frame(points);
    const PointCloudT<Scalar> rotated = points * rotation_;
    scale_ = std::max(points.cwiseAbs().maxCoeff(), rotated.cwiseAbs().maxCoeff());

    order_.resize(static_cast<std::size_t>(points.rows()));
    std::iota(order_.begin(), order_.end(), Index(0));
    nodes_.reserve(static_cast<std::size_t>(2 * points.rows() / leaf_size_ + 1));
    build(rotated, 0, points.rows());

    // Store points in leaf order so leaf scans are contiguous.
    points_.resize(points.rows(), dim_);
    position_.resize(order_.size());
    for (Index i = 0; i < points.rows(); ++i) {
      points_.row(i) = points.row(order_[std::size_t(i)]);
      position_[std::size_t(order_[std::size_t(i)])] = i;
    }
  }

  Index size() const { return points_.rows(); }
  Index dimension() const { return dim_; }
  Index leaf_size() const { return leaf_size_; }

  /// Nearest point to q, optionally ignoring one original index (for self-queries).
  template <class Derived>
  Neighbor nearest(const Eigen::MatrixBase<Derived>& q, Index exclude = -1) const {
    return nearest(q, exclude, -1);
  }

  /// Same result as nearest(q, exclude); `hint` (an original index, typically the answer
  /// for a nearby query) only seeds the pruning bound.
  template <class Derived>
  Neighbor nearest(const Eigen::MatrixBase<Derived>& q, Index exclude, Index hint) const {
    if (q.size() != dim_) throw PreconditionError("KdTree: query dimension mismatch");
    Query query;
    query.x = q.template cast<Scalar>().reshaped();
    query.z = rotation_.transpose() * query.x;
    query.exclude = exclude;
    // Rounding of the rotation shifts distances by far less than this.
    const Scalar reach = std::max(scale_, query.x.cwiseAbs().maxCoeff());
    query.slack = Scalar(64) * Scalar(dim_ + 1) * std::numeric_limits<Scalar>::epsilon() *
                  (Scalar(1) + reach);
    if (hint >= 0 && hint < size() && hint != exclude) {
      query.offer(hint, distance2(query.x.data(), points_.row(position_[std::size_t(hint)]).data()));
    }
    search(0, query);
    return query.best;
  }

 private:
  struct Node {
    Index begin;
    Index end;
    Index left = -1;
    Index right = -1;
    Index min_index = 0;  // smallest original index below this node
  };

  struct Query {
    VectorT<Scalar> x;  // original frame
    VectorT<Scalar> z;  // principal frame
    Index exclude = -1;
    Scalar slack = 0;
    Neighbor best;
    Scalar bound2 = std::numeric_limits<Scalar>::infinity();  // prune boxes beyond this

    void offer(Index index, Scalar d2) {
      if (d2 < best.distance2 || (d2 == best.distance2 && index < best.index)) {
        best.distance2 = d2;
        best.index = index;
        const Scalar r = std::sqrt(d2) + slack;
        bound2 = r * r;
      }
    }
  };

  void fit_frame(const PointCloudT<Scalar>& points) {
    rotation_ = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Identity(dim_, dim_);
    if (dim_ < 2 || points.rows() < 2) return;
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean = points.colwise().mean();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> centered = points.rowwise() - mean;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> eig(cov);
    if (eig.info() == Eigen::Success && eig.eigenvectors().allFinite()) {
      rotation_ = eig.eigenvectors();
    }
  }

  Index build(const PointCloudT<Scalar>& rotated, Index begin, Index end) {
    const Index id = static_cast<Index>(nodes_.size());
    nodes_.push_back(Node{begin, end, -1, -1, 0});
    lo_.resize(lo_.size() + std::size_t(dim_), std::numeric_limits<Scalar>::infinity());
    hi_.resize(hi_.size() + std::size_t(dim_), -std::numeric_limits<Scalar>::infinity());
    Scalar* lo = &lo_[std::size_t(id * dim_)];
    Scalar* hi = &hi_[std::size_t(id * dim_)];
    Index min_index = std::numeric_limits<Index>::max();
    for (Index i = begin; i < end; ++i) {
      const Index p = order_[std::size_t(i)];
      for (Index j = 0; j < dim_; ++j) {
        lo[j] = std::min(lo[j], rotated(p, j));
        hi[j] = std::max(hi[j], rotated(p, j));
      }
      min_index = std::min(min_index, p);
    }
    nodes_[std::size_t(id)].min_index = min_index;
    if (end - begin <= leaf_size_) return id;

    Index axis = 0;
    Scalar spread = hi[0] - lo[0];
    for (Index j = 1; j < dim_; ++j) {
      if (hi[j] - lo[j] > spread) {
        spread = hi[j] - lo[j];
        axis = j;
      }
    }
    if (!(spread > Scalar(0))) return id;  // all points identical

    const Index mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](Index a, Index b) { return rotated(a, axis) < rotated(b, axis); });
    const Index left = build(rotated, begin, mid);
    const Index right = build(rotated, mid, end);
    nodes_[std::size_t(id)].left = left;
    nodes_[std::size_t(id)].right = right;
    return id;
  }

  Scalar distance2(const Scalar* q, const Scalar* p) const {
    Scalar d2 = 0;
    for (Index j = 0; j < dim_; ++j) {
      const Scalar diff = q[j] - p[j];
      d2 += diff * diff;
    }
    return d2;
  }

  Scalar box_distance2(Index node, const Scalar* z) const {
    const Scalar* lo = &lo_[std::size_t(node * dim_)];
    const Scalar* hi = &hi_[std::size_t(node * dim_)];
    Scalar d2 = 0;
    for (Index j = 0; j < dim_; ++j) {
      Scalar gap = 0;
      if (z[j] < lo[j]) {
        gap = lo[j] - z[j];
      } else if (z[j] > hi[j]) {
        gap = z[j] - hi[j];
      }
      d2 += gap * gap;
    }
    return d2;
  }

  // A subtree is skipped when none of its points can beat the current best: all are
  // farther than the bound, or none is strictly closer and all lose the index tie-break.
  bool worth_visiting(Index node, Scalar box2, const Query& query) const {
    if (box2 > query.bound2) return false;
    if (nodes_[std::size_t(node)].min_index < query.best.index) return true;
    const Scalar r = std::sqrt(box2) - query.slack;
    const Scalar lower2 = r > Scalar(0) ? r * r : Scalar(0);
    return lower2 < query.best.distance2;
  }

  void search(Index node, Query& query) const {
    const Node& n = nodes_[std::size_t(node)];
    if (n.left < 0) {
      for (Index i = n.begin; i < n.end; ++i) {
        const Index original = order_[std::size_t(i)];
        if (original == query.exclude) continue;
        query.offer(original, distance2(query.x.data(), points_.row(i).data()));
      }
      return;
    }
    const Scalar dl = box_distance2(n.left, query.z.data());
    const Scalar dr = box_distance2(n.right, query.z.data());
    const bool left_first = dl <= dr;
    const Index first = left_first ? n.left : n.right;
    const Index second = left_first ? n.right : n.left;
    if (worth_visiting(first, std::min(dl, dr), query)) search(first, query);
    if (worth_visiting(second, std::max(dl, dr), query)) search(second, query);
  }

  Index dim_;
  Index leaf_size_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> rotation_;  // columns = principal axes
  Scalar scale_ = 0;
  std::vector<Index> order_;
  std::vector<Index> position_;  // original index -> row of points_
  std::vector<Node> nodes_;
  std::vector<Scalar> lo_;  // per-node bounding boxes in the principal frame, dim_ entries each
  std::vector<Scalar> hi_;
  PointCloudT<Scalar> points_;
};

}  // namespace spacefill

#endif  // SPACEFILL_KDTREE_HPP
