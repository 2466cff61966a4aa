#ifndef SPACEFILL_LM_HPP
#define SPACEFILL_LM_HPP

#include "spacefill/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace spacefill {

struct TrainConfig {
  int max_epochs = 1000;
  double damping_init = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  double damping_max = 1e10;
  double stop_band = 1e-10;
  int stop_window = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class StopReason { band, max_epochs, damping_overflow };
std::string to_string(StopReason r);

struct TrainReport {
  double final_sse = 0.0;
  int epochs = 0;
  double wall_time = 0.0;  ///< seconds
  StopReason stop_reason = StopReason::max_epochs;
  std::vector<double> sse_history;  ///< entry e is the SSE after epoch e (0 = initial)
  std::vector<std::string> warnings;
};

/// Training-error band stop: fires once the SSE has moved less than `band` over the
/// last `window` epochs, i.e. max - min over the trailing window + 1 values. A loss
/// frozen from epoch E therefore stops at exactly E + window.
class StopBand {
 public:
  StopBand(double band, int window) : band_(band), window_(window) {}

  /// Records the SSE after one more epoch; returns true when training should stop.
  bool push(double sse) {
    values_.push_back(sse);
    if (static_cast<int>(values_.size()) > window_ + 1) values_.pop_front();
    if (static_cast<int>(values_.size()) < window_ + 1) return false;
    const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    return *hi - *lo < band_;
  }

 private:
  double band_;
  int window_;
  std::deque<double> values_;
};

/// Levenberg-Marquardt on sum of squared residuals.
///
/// Problem must provide
///   Eigen::VectorXd residuals(const Eigen::VectorXd& params)   // e = y - f(params)
///   Eigen::MatrixXd jacobian(const Eigen::VectorXd& params)    // df/dparams, n x p
/// Each epoch solves (J'J + mu diag(J'J)) delta = J'e, retrying with mu *= up until
/// the SSE does not increase; mu /= down after an accepted step.
template <class Problem>
TrainReport levenberg_marquardt(Problem& problem, Eigen::VectorXd& params, const TrainConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainReport report;

  Eigen::VectorXd e = problem.residuals(params);
  double sse = e.squaredNorm();
  if (!std::isfinite(sse)) throw NumericalError("levenberg_marquardt: initial loss is not finite");
  report.sse_history.push_back(sse);
  StopBand stop(cfg.stop_band, cfg.stop_window);
  stop.push(sse);

  double mu = cfg.damping_init;
  const Index p = params.size();
  Eigen::MatrixXd hessian(p, p);
  Eigen::MatrixXd damped(p, p);
  Eigen::VectorXd gradient(p);
  Eigen::LLT<Eigen::MatrixXd> llt(p);

  report.stop_reason = StopReason::max_epochs;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const Eigen::MatrixXd J = problem.jacobian(params);
    hessian.setZero();
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
    hessian.triangularView<Eigen::StrictlyUpper>() = hessian.transpose();
    gradient.noalias() = J.transpose() * e;
    if (!hessian.allFinite() || !gradient.allFinite()) {
      throw NumericalError("levenberg_marquardt: non-finite Jacobian at epoch " +
                           std::to_string(epoch));
    }

    bool accepted = false;
    if (gradient.isZero(0.0)) {
      // Stationary point: the step is exactly zero and the loss stays frozen.
      accepted = true;
    } else {
      const Eigen::VectorXd diag = hessian.diagonal();
      const double floor = std::max(diag.maxCoeff(), 1.0) * 1e-15;
      while (mu <= cfg.damping_max) {
        damped = hessian;
        damped.diagonal() += mu * diag.cwiseMax(floor);
        llt.compute(damped);
        if (llt.info() == Eigen::Success) {
          const Eigen::VectorXd trial = params + llt.solve(gradient);
          Eigen::VectorXd e_trial = problem.residuals(trial);
          const double sse_trial = e_trial.squaredNorm();
          if (std::isfinite(sse_trial) && sse_trial <= sse) {
            params = trial;
            e = std::move(e_trial);
            sse = sse_trial;
            mu = std::max(mu / cfg.damping_down, 1e-20);
            accepted = true;
            break;
          }
        }
        mu *= cfg.damping_up;
      }
    }
    if (!accepted) {
      report.stop_reason = StopReason::damping_overflow;
      break;
    }
    report.epochs = epoch;
    report.sse_history.push_back(sse);
    if (stop.push(sse)) {
      report.stop_reason = StopReason::band;
      break;
    }
  }
  report.final_sse = sse;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace spacefill

#endif  // SPACEFILL_LM_HPP
