#ifndef SPACEFILL_NARX_HPP
#define SPACEFILL_NARX_HPP

#include "spacefill/dataset.hpp"
#include "spacefill/embedding.hpp"
#include "spacefill/lm.hpp"
#include "spacefill/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace spacefill {

/// Feedforward net with logistic hidden layers and one linear output.
///
/// Inputs and target are min-max scaled inside the model; weights act on scaled
/// values and predictions come back in target units. Parameters are ordered layer by
/// layer, each layer's weights row-major (output neuron major) followed by its biases.
struct FnnModel {
  std::vector<Index> layer_sizes;  ///< e.g. {7, 22, 1}
  std::vector<Eigen::MatrixXd> weights;  ///< layer l: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;
  NormalizationMap input_map;   ///< identity (0..1) until fitted to data
  double target_min = 0.0;
  double target_max = 1.0;
  std::uint64_t seed = 0;

  Index input_size() const { return layer_sizes.front(); }
  Index parameter_count() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);
  /// Throws StructuralError on inconsistent shapes or non-finite parameters.
  void validate() const;
};

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Weights uniform in +-sqrt(3 / fan_in) (unit variance for unit-variance inputs),
/// biases zero; deterministic per seed.
FnnModel fnn_init(const std::vector<Index>& layer_sizes, std::uint64_t seed);

double fnn_forward(const FnnModel& m, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Predictions for every row of X (raw input units).
Eigen::VectorXd fnn_predict(const FnnModel& m, const PointCloud& X);

/// d yhat / d parameters for every row of X, in target units (n x p).
Eigen::MatrixXd fnn_jacobian(const FnnModel& m, const PointCloud& X);

/// Fits the model's input/target scaling to the table. Constant columns keep unit span.
void fit_scaling(FnnModel& m, const RegressorTable& table);

/// Levenberg-Marquardt on the sum of squared one-step errors.
///
/// Rows are put in a canonical (lexicographic) order first, so the result does not
/// depend on the table's row order. The model's scaling is refit to the table.
std::pair<FnnModel, TrainReport> lm_train(FnnModel m, const RegressorTable& table,
                                          const TrainConfig& cfg);

/// Series-parallel (one-step) prediction from measured regressors.
Eigen::VectorXd predict_one_step(const FnnModel& m, const RegressorTable& table);

using Predictor = std::function<double(const Eigen::VectorXd&)>;

/// Parallel (closed-loop) simulation: exogenous channels come from ds, lagged outputs
/// from the model's own past predictions. y_init holds the max_output_lag outputs
/// preceding the first simulated step, oldest first. The result covers the time
/// steps k = max_lag .. n-1 (the rows build_regressors would produce).
/// If divergence_bound is set, |yhat| above it throws DivergenceError naming the step.
Signal simulate_closed_loop(const Predictor& predict, const TimeSeriesDataset& ds,
                            const LagSpec& spec, const Eigen::VectorXd& y_init,
                            std::optional<double> divergence_bound = std::nullopt);

/// Model overload; the divergence bound is 10x the training target range.
Signal simulate_closed_loop(const FnnModel& m, const TimeSeriesDataset& ds, const LagSpec& spec,
                            const Eigen::VectorXd& y_init);

nlohmann::json to_json(const FnnModel& m);
FnnModel fnn_from_json(const nlohmann::json& j);

}  // namespace spacefill

#endif  // SPACEFILL_NARX_HPP
