#ifndef SPACEFILL_DATASET_HPP
#define SPACEFILL_DATASET_HPP

#include "spacefill/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>

namespace spacefill {

/// One measured channel. t is in seconds and strictly increasing.
struct Signal {
  std::string name;
  std::string unit;
  Eigen::VectorXd t;
  Eigen::VectorXd v;

  Index size() const { return t.size(); }
};

/// Throws StructuralError unless len(t) == len(v) >= 2, t strictly increasing, all finite.
void validate(const Signal& s);

/// Sampling rate if t is uniform to within a relative jitter of 1e-6, otherwise empty.
std::optional<double> uniform_rate(const Eigen::VectorXd& t);

struct TimeSeriesDataset {
  std::map<std::string, Signal> signals;
  /// Present iff every signal sits on one shared uniform grid.
  std::optional<double> rate_hz;

  const Signal& at(const std::string& name) const;
  bool contains(const std::string& name) const { return signals.count(name) != 0; }
  /// Sample count of the shared grid; throws if signals differ in length.
  Index length() const;
  void insert(Signal s);
  /// Recomputes rate_hz from the current signals.
  void refresh_rate();
};

/// Maps a CSV header (column) to the signal name it becomes.
using CsvSchema = std::map<std::string, std::string>;

/// Reads a comma-separated file whose first column is time in seconds. Columns
/// missing from a non-empty schema are ignored; an empty schema keeps every column
/// under its header name. Row numbers in errors count data rows from 1.
TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes the dataset in the format load_csv reads ("t" first, then signals by name).
void write_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds);

/// Zero-phase 4th-order Butterworth low-pass (forward-backward, odd-reflected ends).
Signal lowpass_filter(const Signal& s, double cutoff_hz);
TimeSeriesDataset lowpass_filter(const TimeSeriesDataset& ds, double cutoff_hz);

/// Linear interpolation onto t_first + i / rate_hz for every grid point <= t_last.
Signal resample_linear(const Signal& s, double rate_hz);
TimeSeriesDataset resample_linear(const TimeSeriesDataset& ds, double rate_hz);

/// Per-dimension affine map x -> (x - min) / (max - min).
template <class Scalar>
struct NormalizationMapT {
  VectorT<Scalar> min;
  VectorT<Scalar> max;

  Index dimension() const { return min.size(); }

  PointCloudT<Scalar> apply(const PointCloudT<Scalar>& points) const {
    PointCloudT<Scalar> out(points.rows(), points.cols());
    for (Index j = 0; j < points.cols(); ++j) {
      const Scalar span = max(j) - min(j);
      out.col(j) = (points.col(j).array() - min(j)) / span;
    }
    return out;
  }

  PointCloudT<Scalar> invert(const PointCloudT<Scalar>& normalized) const {
    PointCloudT<Scalar> out(normalized.rows(), normalized.cols());
    for (Index j = 0; j < normalized.cols(); ++j) {
      const Scalar span = max(j) - min(j);
      out.col(j) = normalized.col(j).array() * span + min(j);
    }
    return out;
  }
};
using NormalizationMap = NormalizationMapT<double>;

/// Fits the min-max map of a cloud. Throws DegenerateError naming a constant dimension.
template <class Scalar>
NormalizationMapT<Scalar> fit_minmax(const PointCloudT<Scalar>& points) {
  if (points.rows() < 2) throw PreconditionError("normalize_minmax: need at least 2 points");
  NormalizationMapT<Scalar> map;
  map.min = points.colwise().minCoeff().transpose();
  map.max = points.colwise().maxCoeff().transpose();
  for (Index j = 0; j < points.cols(); ++j) {
    if (!std::isfinite(map.min(j)) || !std::isfinite(map.max(j))) {
      throw StructuralError("normalize_minmax: non-finite value in dimension " + std::to_string(j));
    }
    if (!(map.max(j) > map.min(j))) {
      throw DegenerateError("normalize_minmax: dimension " + std::to_string(j) +
                            " is constant; drop or perturb it");
    }
  }
  return map;
}

/// Maps every dimension onto [0, 1] exactly: observed min -> 0, max -> 1.
template <class Scalar>
std::pair<PointCloudT<Scalar>, NormalizationMapT<Scalar>> normalize_minmax(
    const PointCloudT<Scalar>& points) {
  auto map = fit_minmax(points);
  return {map.apply(points), std::move(map)};
}

}  // namespace spacefill

#endif  // SPACEFILL_DATASET_HPP
