#ifndef SPACEFILL_METRICS_HPP
#define SPACEFILL_METRICS_HPP

#include "spacefill/types.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>

namespace spacefill {

/// sqrt(mean((y - y_hat)^2)) / normalizer.
double nrmse(const Eigen::Ref<const Eigen::VectorXd>& y,
             const Eigen::Ref<const Eigen::VectorXd>& y_hat, double normalizer);

/// Silverman's rule of thumb per dimension: sigma_j * (4 / ((d + 2) n))^(1 / (d + 4)).
/// Dimensions with zero spread get a bandwidth of 1e-12 so the kernel stays defined.
Eigen::VectorXd silverman_bandwidth(const PointCloud& points);

/// Gaussian product-kernel density estimate at `query`; integrates to 1.
double kde_density(const PointCloud& points, const Eigen::Ref<const Eigen::VectorXd>& query,
                   const Eigen::Ref<const Eigen::VectorXd>& bandwidth);

/// log of kde_density, evaluated with log-sum-exp so far-away queries stay finite.
double kde_log_density(const PointCloud& points, const Eigen::Ref<const Eigen::VectorXd>& query,
                       const Eigen::Ref<const Eigen::VectorXd>& bandwidth);

/// Distribution-shift diagnostic: mean log-density of `queries` under the KDE of
/// `reference`. Lower means the query set sits where the reference has little mass.
double mean_log_density(const PointCloud& reference, const PointCloud& queries,
                        const Eigen::Ref<const Eigen::VectorXd>& bandwidth,
                        unsigned threads = 1);

struct EvalReport {
  std::map<std::string, double> nrmse_by_dataset;
  std::map<std::string, double> lambda_values;
  std::optional<double> train_wall_time;  ///< seconds; omitted from deterministic reports
  std::map<std::string, Index> subset_sizes;

  /// Throws StructuralError if any value is negative or non-finite.
  void validate() const;
};

nlohmann::json to_json(const EvalReport& r);

}  // namespace spacefill

#endif  // SPACEFILL_METRICS_HPP
