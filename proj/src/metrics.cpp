#include "spacefill/metrics.hpp"

#include "spacefill/parallel.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace spacefill {

double nrmse(const Eigen::Ref<const Eigen::VectorXd>& y,
             const Eigen::Ref<const Eigen::VectorXd>& y_hat, double normalizer) {
  if (y.size() != y_hat.size()) {
    throw PreconditionError(fmt::format("nrmse: length mismatch ({} vs {})", y.size(), y_hat.size()));
  }
  if (y.size() == 0) throw PreconditionError("nrmse: empty sequences");
  if (!(normalizer > 0)) throw PreconditionError("nrmse: normalizer must be positive");
  return std::sqrt((y - y_hat).squaredNorm() / static_cast<double>(y.size())) / normalizer;
}

Eigen::VectorXd silverman_bandwidth(const PointCloud& points) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (n < 2) throw PreconditionError("silverman_bandwidth: need at least 2 points");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::RowVectorXd sigma =
      ((points.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n - 1))
          .sqrt();
  const double factor = std::pow(4.0 / ((static_cast<double>(d) + 2.0) * static_cast<double>(n)),
                                 1.0 / (static_cast<double>(d) + 4.0));
  Eigen::VectorXd h = (sigma * factor).transpose();
  for (Index j = 0; j < d; ++j) {
    if (!(h(j) > 0)) h(j) = 1e-12;
  }
  return h;
}

namespace {

void check_kde_args(const PointCloud& points, const Eigen::Ref<const Eigen::VectorXd>& query,
                    const Eigen::Ref<const Eigen::VectorXd>& bandwidth) {
  if (points.rows() < 1) throw PreconditionError("kde: need at least one point");
  if (query.size() != points.cols() || bandwidth.size() != points.cols()) {
    throw PreconditionError("kde: dimension mismatch");
  }
  if (!(bandwidth.array() > 0).all()) throw PreconditionError("kde: bandwidths must be positive");
}

// log of the normalization constant prod_j 1 / (h_j sqrt(2 pi)).
double log_kernel_norm(const Eigen::Ref<const Eigen::VectorXd>& bandwidth) {
  return -bandwidth.array().log().sum() -
         0.5 * static_cast<double>(bandwidth.size()) * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double kde_density(const PointCloud& points, const Eigen::Ref<const Eigen::VectorXd>& query,
                   const Eigen::Ref<const Eigen::VectorXd>& bandwidth) {
  check_kde_args(points, query, bandwidth);
  const Eigen::RowVectorXd inv_h = bandwidth.cwiseInverse().transpose();
  const Eigen::RowVectorXd q = query.transpose();
  double sum = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    const double z2 = ((points.row(i) - q).cwiseProduct(inv_h)).squaredNorm();
    sum += std::exp(-0.5 * z2);
  }
  return std::exp(log_kernel_norm(bandwidth)) * sum / static_cast<double>(points.rows());
}

double kde_log_density(const PointCloud& points, const Eigen::Ref<const Eigen::VectorXd>& query,
                       const Eigen::Ref<const Eigen::VectorXd>& bandwidth) {
  check_kde_args(points, query, bandwidth);
  const Eigen::RowVectorXd inv_h = bandwidth.cwiseInverse().transpose();
  const Eigen::RowVectorXd q = query.transpose();
  Eigen::VectorXd exponents(points.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    exponents(i) = -0.5 * ((points.row(i) - q).cwiseProduct(inv_h)).squaredNorm();
  }
  const double top = exponents.maxCoeff();
  const double lse = top + std::log((exponents.array() - top).exp().sum());
  return lse - std::log(static_cast<double>(points.rows())) + log_kernel_norm(bandwidth);
}

double mean_log_density(const PointCloud& reference, const PointCloud& queries,
                        const Eigen::Ref<const Eigen::VectorXd>& bandwidth, unsigned threads) {
  if (queries.rows() < 1) throw PreconditionError("mean_log_density: no query points");
  Eigen::VectorXd logs(queries.rows());
  parallel_for(queries.rows(), threads, [&](std::ptrdiff_t i) {
    logs(i) = kde_log_density(reference, queries.row(i).transpose(), bandwidth);
  });
  return logs.mean();
}

void EvalReport::validate() const {
  auto check = [](const std::string& what, double v) {
    if (!std::isfinite(v) || v < 0) {
      throw StructuralError(fmt::format("EvalReport: {} = {} is not finite and non-negative", what, v));
    }
  };
  for (const auto& [k, v] : nrmse_by_dataset) check("nrmse[" + k + "]", v);
  for (const auto& [k, v] : lambda_values) check("lambda[" + k + "]", v);
  if (train_wall_time) check("train_wall_time", *train_wall_time);
  for (const auto& [k, v] : subset_sizes) check("subset_sizes[" + k + "]", static_cast<double>(v));
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["nrmse_by_dataset"] = r.nrmse_by_dataset;
  j["lambda_values"] = r.lambda_values;
  if (r.train_wall_time) j["train_wall_time"] = *r.train_wall_time;
  j["subset_sizes"] = r.subset_sizes;
  return j;
}

}  // namespace spacefill
