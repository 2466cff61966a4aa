#include "spacefill/narx.hpp"

#include "spacefill/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spacefill {

void TrainConfig::validate() const {
  if (max_epochs < 1) throw PreconditionError("TrainConfig: max_epochs must be positive");
  if (!(damping_init > 0 && damping_up > 1 && damping_down > 1 && damping_max > damping_init)) {
    throw PreconditionError("TrainConfig: invalid damping schedule");
  }
  if (!(stop_band > 0)) throw PreconditionError("TrainConfig: stop_band must be positive");
  if (stop_window < 2) throw PreconditionError("TrainConfig: stop_window must be at least 2");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::band:
      return "band";
    case StopReason::max_epochs:
      return "max_epochs";
    case StopReason::damping_overflow:
      return "damping_overflow";
  }
  return "unknown";
}

Index FnnModel::parameter_count() const {
  Index p = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return p;
}

Eigen::VectorXd FnnModel::parameters() const {
  Eigen::VectorXd p(parameter_count());
  Index offset = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& W = weights[l];
    for (Index j = 0; j < W.rows(); ++j) {
      for (Index k = 0; k < W.cols(); ++k) p(offset++) = W(j, k);
    }
    p.segment(offset, biases[l].size()) = biases[l];
    offset += biases[l].size();
  }
  return p;
}

void FnnModel::set_parameters(const Eigen::VectorXd& p) {
  if (p.size() != parameter_count()) throw PreconditionError("FnnModel: parameter count mismatch");
  Index offset = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto& W = weights[l];
    for (Index j = 0; j < W.rows(); ++j) {
      for (Index k = 0; k < W.cols(); ++k) W(j, k) = p(offset++);
    }
    biases[l] = p.segment(offset, biases[l].size());
    offset += biases[l].size();
  }
}

void FnnModel::validate() const {
  if (layer_sizes.size() < 2) throw StructuralError("FnnModel: need at least input and output layers");
  if (layer_sizes.back() != 1) throw StructuralError("FnnModel: output layer must have one neuron");
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
    throw StructuralError("FnnModel: layer count mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
        biases[l].size() != layer_sizes[l + 1]) {
      throw StructuralError(fmt::format("FnnModel: layer {} has inconsistent shape", l));
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw StructuralError(fmt::format("FnnModel: layer {} has non-finite parameters", l));
    }
  }
  if (input_map.dimension() != layer_sizes.front()) {
    throw StructuralError("FnnModel: input scaling does not match the input size");
  }
}

FnnModel fnn_init(const std::vector<Index>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw PreconditionError("fnn_init: need at least two layers");
  for (Index s : layer_sizes) {
    if (s < 1) throw PreconditionError("fnn_init: layer sizes must be positive");
  }
  if (layer_sizes.back() != 1) throw PreconditionError("fnn_init: output layer must have size 1");
  FnnModel m;
  m.layer_sizes = layer_sizes;
  m.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const Index fan_in = layer_sizes[l];
    const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    Eigen::MatrixXd W(layer_sizes[l + 1], fan_in);
    for (Index j = 0; j < W.rows(); ++j) {
      for (Index k = 0; k < W.cols(); ++k) W(j, k) = rng.uniform(-bound, bound);
    }
    m.weights.push_back(std::move(W));
    m.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
  }
  m.input_map.min = Eigen::VectorXd::Zero(layer_sizes.front());
  m.input_map.max = Eigen::VectorXd::Ones(layer_sizes.front());
  return m;
}

namespace {

double target_span(const FnnModel& m) { return m.target_max - m.target_min; }

// Scaled inputs, one sample per column.
Eigen::MatrixXd scaled_columns(const FnnModel& m, const PointCloud& X) {
  if (X.cols() != m.input_size()) {
    throw PreconditionError(fmt::format("FNN expects {} inputs, got {}", m.input_size(), X.cols()));
  }
  Eigen::MatrixXd A = X.transpose();
  for (Index j = 0; j < A.rows(); ++j) {
    const double span = m.input_map.max(j) - m.input_map.min(j);
    A.row(j) = (A.row(j).array() - m.input_map.min(j)) / span;
  }
  return A;
}

// Activations of every layer for scaled inputs A0; the last entry is the linear output.
std::vector<Eigen::MatrixXd> forward_layers(const FnnModel& m, Eigen::MatrixXd A0) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(m.weights.size() + 1);
  acts.push_back(std::move(A0));
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    Eigen::MatrixXd Z = m.weights[l] * acts.back();
    Z.colwise() += m.biases[l];
    if (l + 1 < m.weights.size()) {
      Z = Z.unaryExpr([](double z) { return logistic(z); });
    }
    acts.push_back(std::move(Z));
  }
  return acts;
}

Eigen::VectorXd predict_scaled(const FnnModel& m, const Eigen::MatrixXd& A0) {
  const auto acts = forward_layers(m, A0);
  return (m.target_min + target_span(m) * acts.back().row(0).array()).transpose();
}

Eigen::MatrixXd jacobian_scaled(const FnnModel& m, const Eigen::MatrixXd& A0) {
  const auto acts = forward_layers(m, A0);
  const Index n = A0.cols();
  Eigen::MatrixXd J(n, m.parameter_count());

  std::vector<Index> offsets(m.weights.size());
  Index offset = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    offsets[l] = offset;
    offset += m.weights[l].size() + m.biases[l].size();
  }

  // delta: d yhat / d Z for the current layer, one sample per column.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Constant(1, n, target_span(m));
  for (std::size_t l = m.weights.size(); l-- > 0;) {
    const Eigen::MatrixXd& input = acts[l];
    const Index rows = m.weights[l].rows();
    const Index cols = m.weights[l].cols();
    for (Index j = 0; j < rows; ++j) {
      for (Index k = 0; k < cols; ++k) {
        J.col(offsets[l] + j * cols + k) =
            delta.row(j).cwiseProduct(input.row(k)).transpose();
      }
      J.col(offsets[l] + rows * cols + j) = delta.row(j).transpose();
    }
    if (l > 0) {
      const Eigen::MatrixXd& h = acts[l];
      delta = (m.weights[l].transpose() * delta).cwiseProduct(
          h.cwiseProduct((1.0 - h.array()).matrix()));
    }
  }
  return J;
}

}  // namespace

double fnn_forward(const FnnModel& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != m.input_size()) {
    throw PreconditionError(fmt::format("fnn_forward: expected {} inputs, got {}", m.input_size(),
                                        x.size()));
  }
  PointCloud row = x.transpose();
  return fnn_predict(m, row)(0);
}

Eigen::VectorXd fnn_predict(const FnnModel& m, const PointCloud& X) {
  return predict_scaled(m, scaled_columns(m, X));
}

Eigen::MatrixXd fnn_jacobian(const FnnModel& m, const PointCloud& X) {
  return jacobian_scaled(m, scaled_columns(m, X));
}

void fit_scaling(FnnModel& m, const RegressorTable& table) {
  if (table.dimension() != m.input_size()) {
    throw PreconditionError(fmt::format("FNN expects {} inputs, table has {} columns",
                                        m.input_size(), table.dimension()));
  }
  if (table.rows() == 0) throw PreconditionError("fit_scaling: table is empty");
  m.input_map.min = table.X.colwise().minCoeff().transpose();
  m.input_map.max = table.X.colwise().maxCoeff().transpose();
  for (Index j = 0; j < m.input_map.dimension(); ++j) {
    if (!(m.input_map.max(j) > m.input_map.min(j))) m.input_map.max(j) = m.input_map.min(j) + 1.0;
  }
  m.target_min = table.y.minCoeff();
  m.target_max = table.y.maxCoeff();
  if (!(m.target_max > m.target_min)) m.target_max = m.target_min + 1.0;
}

namespace {

class FnnLeastSquares {
 public:
  FnnLeastSquares(FnnModel& model, Eigen::MatrixXd inputs, Eigen::VectorXd targets)
      : model_(model), inputs_(std::move(inputs)), targets_(std::move(targets)) {}

  Eigen::VectorXd residuals(const Eigen::VectorXd& params) {
    model_.set_parameters(params);
    return targets_ - predict_scaled(model_, inputs_);
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& params) {
    model_.set_parameters(params);
    return jacobian_scaled(model_, inputs_);
  }

 private:
  FnnModel& model_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
};

std::vector<Index> canonical_row_order(const RegressorTable& table) {
  std::vector<Index> order(static_cast<std::size_t>(table.rows()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index c = 0; c < table.dimension(); ++c) {
      if (table.X(a, c) != table.X(b, c)) return table.X(a, c) < table.X(b, c);
    }
    return table.y(a) < table.y(b);
  });
  return order;
}

}  // namespace

std::pair<FnnModel, TrainReport> lm_train(FnnModel m, const RegressorTable& table,
                                          const TrainConfig& cfg) {
  if (table.rows() == 0) throw PreconditionError("lm_train: table is empty");
  m.validate();
  fit_scaling(m, table);

  const RegressorTable sorted = table.subset(canonical_row_order(table));
  FnnLeastSquares problem(m, scaled_columns(m, sorted.X), sorted.y);
  Eigen::VectorXd params = m.parameters();
  TrainReport report = levenberg_marquardt(problem, params, cfg);
  m.set_parameters(params);
  if (table.rows() < m.parameter_count()) {
    report.warnings.push_back(fmt::format("{} training rows for {} parameters", table.rows(),
                                          m.parameter_count()));
  }
  return {std::move(m), std::move(report)};
}

Eigen::VectorXd predict_one_step(const FnnModel& m, const RegressorTable& table) {
  return fnn_predict(m, table.X);
}

Signal simulate_closed_loop(const Predictor& predict, const TimeSeriesDataset& ds,
                            const LagSpec& spec, const Eigen::VectorXd& y_init,
                            std::optional<double> divergence_bound) {
  spec.validate();
  if (!ds.rate_hz) throw PreconditionError("simulate_closed_loop: dataset is not uniformly sampled");
  const Index n = ds.length();
  const Index k0 = spec.max_lag();
  const Index ylag = spec.max_output_lag();
  if (y_init.size() != ylag) {
    throw PreconditionError(
        fmt::format("simulate_closed_loop: need {} initial outputs, got {}", ylag, y_init.size()));
  }
  if (n <= k0) throw PreconditionError("simulate_closed_loop: dataset shorter than the max lag");

  const Index d = spec.dimension();
  std::vector<const Eigen::VectorXd*> sources(static_cast<std::size_t>(d), nullptr);
  std::vector<int> lags(static_cast<std::size_t>(d));
  const auto inputs = static_cast<Index>(d - static_cast<Index>(spec.output_lags.size()));
  for (Index c = 0; c < d; ++c) {
    const auto [name, lag] = spec.column_source(c);
    lags[std::size_t(c)] = lag;
    if (c < inputs) sources[std::size_t(c)] = &ds.at(name).v;
  }

  Eigen::VectorXd history = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  history.segment(k0 - ylag, ylag) = y_init;
  Eigen::VectorXd x(d);
  for (Index k = k0; k < n; ++k) {
    for (Index c = 0; c < d; ++c) {
      const Index src = k - lags[std::size_t(c)];
      x(c) = c < inputs ? (*sources[std::size_t(c)])(src) : history(src);
    }
    const double yk = predict(x);
    if (!std::isfinite(yk) || (divergence_bound && std::abs(yk) > *divergence_bound)) {
      throw DivergenceError(
          fmt::format("closed-loop simulation diverged at step {} (yhat = {})", k, yk), k);
    }
    history(k) = yk;
  }

  Signal out;
  out.name = spec.output;
  out.unit = ds.contains(spec.output) ? ds.at(spec.output).unit : "";
  const Eigen::VectorXd& t = ds.signals.begin()->second.t;
  out.t = t.segment(k0, n - k0);
  out.v = history.segment(k0, n - k0);
  return out;
}

Signal simulate_closed_loop(const FnnModel& m, const TimeSeriesDataset& ds, const LagSpec& spec,
                            const Eigen::VectorXd& y_init) {
  if (spec.dimension() != m.input_size()) {
    throw PreconditionError("simulate_closed_loop: lag spec does not match the model inputs");
  }
  const double bound = 10.0 * target_span(m);
  return simulate_closed_loop([&m](const Eigen::VectorXd& x) { return fnn_forward(m, x); }, ds,
                              spec, y_init, bound);
}

nlohmann::json to_json(const FnnModel& m) {
  nlohmann::json j;
  j["layer_sizes"] = m.layer_sizes;
  j["weights"] = nlohmann::json::array();
  j["biases"] = nlohmann::json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    std::vector<double> w;
    for (Index r = 0; r < m.weights[l].rows(); ++r) {
      for (Index c = 0; c < m.weights[l].cols(); ++c) w.push_back(m.weights[l](r, c));
    }
    j["weights"].push_back(w);
    j["biases"].push_back(std::vector<double>(m.biases[l].data(), m.biases[l].data() + m.biases[l].size()));
  }
  const auto& in = m.input_map;
  j["input_map"] = {{"min", std::vector<double>(in.min.data(), in.min.data() + in.min.size())},
                    {"max", std::vector<double>(in.max.data(), in.max.data() + in.max.size())}};
  j["target_map"] = {{"min", m.target_min}, {"max", m.target_max}};
  j["seed"] = m.seed;
  return j;
}

FnnModel fnn_from_json(const nlohmann::json& j) {
  FnnModel m;
  m.layer_sizes = j.at("layer_sizes").get<std::vector<Index>>();
  if (m.layer_sizes.size() < 2) throw StructuralError("model JSON: need at least two layers");
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() + 1 != m.layer_sizes.size() || biases.size() != weights.size()) {
    throw StructuralError("model JSON: layer count mismatch");
  }
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const auto w = weights[l].get<std::vector<double>>();
    const auto b = biases[l].get<std::vector<double>>();
    const Index rows = m.layer_sizes[l + 1];
    const Index cols = m.layer_sizes[l];
    if (static_cast<Index>(w.size()) != rows * cols || static_cast<Index>(b.size()) != rows) {
      throw StructuralError(fmt::format("model JSON: layer {} has the wrong size", l));
    }
    m.weights.push_back(
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            w.data(), rows, cols));
    m.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
  }
  const auto lo = j.at("input_map").at("min").get<std::vector<double>>();
  const auto hi = j.at("input_map").at("max").get<std::vector<double>>();
  m.input_map.min = Eigen::Map<const Eigen::VectorXd>(lo.data(), Index(lo.size()));
  m.input_map.max = Eigen::Map<const Eigen::VectorXd>(hi.data(), Index(hi.size()));
  m.target_min = j.at("target_map").at("min").get<double>();
  m.target_max = j.at("target_map").at("max").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.validate();
  return m;
}

}  // namespace spacefill
