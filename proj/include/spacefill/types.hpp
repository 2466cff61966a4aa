#ifndef SPACEFILL_TYPES_HPP
#define SPACEFILL_TYPES_HPP

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spacefill {

using Index = Eigen::Index;

/// n x d point set, one point per row. Row-major so each point is contiguous.
template <class Scalar>
using PointCloudT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PointCloud = PointCloudT<double>;

template <class Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Error hierarchy. Everything thrown by the library derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV cell, config value).
struct ParseError : Error {
  ParseError(const std::string& what, Index row) : Error(what), row(row) {}
  Index row;
};

/// Input violates a structural invariant (ordering, lengths, shapes).
struct StructuralError : Error {
  using Error::Error;
};

/// Caller broke a documented precondition.
struct PreconditionError : Error {
  using Error::Error;
};

/// Geometric degeneracy: constant dimension, affinely dependent cloud, zero spread.
struct DegenerateError : Error {
  using Error::Error;
};

/// Non-finite values during optimization.
struct NumericalError : Error {
  using Error::Error;
};

/// Closed-loop simulation left the admissible output range.
struct DivergenceError : Error {
  DivergenceError(const std::string& what, Index step) : Error(what), step(step) {}
  Index step;
};

}  // namespace spacefill

#endif  // SPACEFILL_TYPES_HPP
