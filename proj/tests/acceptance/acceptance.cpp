// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "spacefill/app.hpp"
#include "spacefill/coverage.hpp"
#include "spacefill/hull.hpp"
#include "spacefill/io.hpp"
#include "spacefill/kdtree.hpp"
#include "spacefill/narx.hpp"
#include "spacefill/rng.hpp"
#include "spacefill/select.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

using namespace spacefill;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kLambdaExample = 0.20203;
constexpr double kLambdaTol = 1e-5;
constexpr double kCoverageRatio = 5.0;
constexpr double kTrainRelTol = 0.5;
constexpr double kSpeedup = 3.0;
constexpr double kJacobianTol = 1e-5;
constexpr double kBudget1 = 1.0, kBudget2 = 30.0, kBudget3 = 600.0, kBudget4 = 900.0, kBudget5 = 3600.0,
                 kBudget6 = 60.0, kBudget7 = 60.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int failures = 0;

void criterion(int id, double budget, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double t = seconds_since(start);
  const bool in_time = budget <= 0 || t < budget;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", id, o.detail.c_str(), t,
              in_time ? "" : fmt::format(", over the {:.0f} s budget", budget).c_str());
  std::fflush(stdout);
}

std::pair<Index, double> brute_nearest(const PointCloud& p, Index self) {
  Index best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < p.rows(); ++i) {
    if (i == self) continue;
    double d2 = 0.0;  // summed in dimension order, like the index
    for (Index j = 0; j < p.cols(); ++j) d2 += (p(i, j) - p(self, j)) * (p(i, j) - p(self, j));
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return {best, best_d2};
}

PointCloud random_cloud(Index n, Index d, Rng& rng, bool lattice) {
  PointCloud p(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) p(i, j) = lattice ? std::round(8.0 * rng.uniform()) / 8.0 : rng.uniform();
  }
  return p;
}

Outcome lambda_example() {
  PointCloud p(3, 1);
  p << 0.0, 0.4, 1.0;
  const double lambda = coverage_lambda(p);
  PointCloud grid(50, 1);
  for (Index i = 0; i < 50; ++i) grid(i, 0) = double(i) / 64.0;
  const double flat = coverage_lambda(grid);
  return {std::abs(lambda - kLambdaExample) <= kLambdaTol && flat == 0.0,
          fmt::format("lambda{{0, 0.4, 1}} = {:.7f}, equidistant grid {}", lambda, flat)};
}

Outcome index_vs_brute_force() {
  Rng rng(2024);
  int mismatches = 0;
  for (int c = 0; c < 1000; ++c) {
    const Index d = std::array<Index, 3>{1, 2, 7}[std::size_t(c % 3)];
    const Index n = 2 + Index(rng.below(499));
    const PointCloud p = random_cloud(n, d, rng, c % 5 == 0);
    const KdTree<double> tree(p);
    for (Index i = 0; i < n; ++i) {
      const auto hit = tree.nearest(p.row(i), i);
      const auto [index, d2] = brute_nearest(p, i);
      if (hit.index != index || hit.distance2 != d2) ++mismatches;
    }
  }
  return {mismatches == 0, fmt::format("1000 clouds, d in {{1, 2, 7}}, {} mismatches", mismatches)};
}

Outcome drive_cycle_coverage() {
  BatteryScenario sc;
  sc.train_duration = 20100.0;  // 201k rows at 10 Hz
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const BatteryData data = make_battery_data(sc, seed);
    const RegressorTable table = build_regressors(data.train, LagSpec::narx_default());
    const auto [normalized, map] = normalize_minmax(table.X);
    const double raw = coverage_lambda(normalized);
    SelectionConfig cfg;
    cfg.alpha = 0.01;
    cfg.seed = derive_seed(seed, "selection");
    const SubsetResult sobol = select_spacefilling(table, cfg);
    cfg.method = SelectionMethod::lhs;
    const SubsetResult lhs = select_spacefilling(table, cfg);
    const SubsetResult random =
        select_random(table, double(sobol.size()) / double(table.rows()), derive_seed(seed, "random"));
    const bool ok = table.rows() >= 200000 && raw > 0.5 &&
                    kCoverageRatio * sobol.lambda_subset <= random.lambda_subset &&
                    kCoverageRatio * lhs.lambda_subset <= random.lambda_subset;
    if (ok) ++wins;
    detail += fmt::format(" [seed {}: rows {}, raw {:.3f}, random/sobol {:.2f}, random/lhs {:.2f}]", seed,
                          table.rows(), raw, random.lambda_subset / sobol.lambda_subset,
                          random.lambda_subset / lhs.lambda_subset);
  }
  return {wins >= 4, fmt::format("{}/5 seeds with a {}x coverage gain;{}", wins, kCoverageRatio, detail)};
}

Outcome camel_experiment() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CamelOptions opt;
    opt.seed = seed;
    opt.restarts = 50;
    const CamelSummary s = run_camel(opt);
    const double ta = s.a.mean_train_nrmse, tb = s.b.mean_train_nrmse;
    const bool ok = s.b.mean_validation_nrmse > s.a.mean_validation_nrmse &&
                    std::abs(ta - tb) < kTrainRelTol * std::max(ta, tb);
    if (ok) ++wins;
    detail += fmt::format(" [seed {}: val A {:.3f} B {:.3f}, train A {:.3f} B {:.3f}]", seed,
                          s.a.mean_validation_nrmse, s.b.mean_validation_nrmse, ta, tb);
  }
  return {wins >= 4, fmt::format("{}/5 runs with B worse on validation, training alike;{}", wins, detail)};
}

// A closed-loop run that diverged counts as an unbounded error, so any divergence
// makes the mean infinite.
double mean_with_divergence(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  return sum / static_cast<double>(values.size());
}

Outcome battery_experiment() {
  BatteryOptions opt;
  const BatterySummary s = run_battery(opt);
  const auto& all = s.datasets.at("all");
  const double r2 = mean_with_divergence(s.datasets.at("random").nrmse.at("validation2"));
  bool beats = true, faster = true;
  std::string detail;
  for (const char* name : {"sobol", "lhs"}) {
    beats = beats && mean_with_divergence(s.datasets.at(name).nrmse.at("validation2")) < r2;
  }
  for (const char* name : {"sobol", "lhs", "random"}) {
    const auto& d = s.datasets.at(name);
    faster = faster && kSpeedup * d.mean_train_time <= all.mean_train_time;
    detail += fmt::format(" [{}: rows {}, val2 {:.4f} ({} of {} diverged), train {:.2f} s]", name, d.rows,
                          mean_with_divergence(d.nrmse.at("validation2")), d.diverged.count("validation2") ? d.diverged.at("validation2") : 0,
                          d.nrmse.at("validation2").size(), d.mean_train_time);
  }
  const bool density = s.log_density_validation2 < s.log_density_validation1;
  detail += fmt::format(" [all: val2 {:.4f}, train {:.2f} s; log-density val1 {:.3f} val2 {:.3f}]",
                        mean_with_divergence(all.nrmse.at("validation2")), all.mean_train_time,
                        s.log_density_validation1, s.log_density_validation2);
  return {beats && faster && density,
          fmt::format("(a) {} (b) {} (c) {};{}", beats ? "ok" : "no", faster ? "ok" : "no", density ? "ok" : "no",
                      detail)};
}

Outcome training_checks() {
  // Jacobian against central differences on 20 random models.
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::vector<Index> sizes = s % 2 ? std::vector<Index>{7, 22, 1} : std::vector<Index>{3, 5, 4, 1};
    FnnModel m = fnn_init(sizes, s);
    Rng rng(100 + s);
    for (auto& b : m.biases) {
      for (Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-1, 1);
    }
    PointCloud X(10, sizes.front());
    for (Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
    const Eigen::MatrixXd J = fnn_jacobian(m, X);
    const Eigen::VectorXd p = m.parameters();
    Eigen::MatrixXd fd(X.rows(), p.size());
    const double h = 1e-6;
    for (Index k = 0; k < p.size(); ++k) {
      Eigen::VectorXd hi = p, lo = p;
      hi(k) += h;
      lo(k) -= h;
      m.set_parameters(hi);
      const Eigen::VectorXd up = fnn_predict(m, X);
      m.set_parameters(lo);
      fd.col(k) = (up - fnn_predict(m, X)) / (2 * h);
    }
    worst = std::max(worst, (J - fd).cwiseAbs().maxCoeff() / J.cwiseAbs().maxCoeff());
  }

  // Accepted LM steps never raise the loss.
  bool monotone = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    Rng rng(200 + s);
    PointCloud X(150, 3);
    Eigen::VectorXd y(150);
    for (Index i = 0; i < 150; ++i) {
      X.row(i) << rng.uniform(), rng.uniform(), rng.uniform();
      y(i) = std::sin(4 * X(i, 0)) + X(i, 1) * X(i, 2);
    }
    const RegressorTable t = make_static_table(X, y, {"a", "b", "c"});
    TrainConfig cfg;
    cfg.max_epochs = 150;
    const auto [m, report] = lm_train(fnn_init({3, 8, 1}, s), t, cfg);
    for (std::size_t e = 1; e < report.sse_history.size(); ++e) {
      monotone = monotone && report.sse_history[e] <= report.sse_history[e - 1];
    }
  }

  // The band stop fires exactly at E + 10 once the loss freezes at epoch E.
  bool stop_exact = true;
  for (int e : {0, 1, 7, 40}) {
    StopBand stop(1e-10, 10);
    int fired = -1;
    for (int epoch = 0; epoch < 200 && fired < 0; ++epoch) {
      if (stop.push(epoch < e ? 50.0 - epoch : 50.0 - e)) fired = epoch;
    }
    stop_exact = stop_exact && fired == e + 10;
  }
  return {worst < kJacobianTol && monotone && stop_exact,
          fmt::format("Jacobian max rel. error {:.2e}, monotone {}, stop at E + 10 {}", worst, monotone,
                      stop_exact)};
}

Outcome hull_volume() {
  PointCloud square(4, 2);
  square << 0, 0, 1, 0, 0, 1, 1, 1;
  PointCloud triangle(3, 2);
  triangle << 0, 0, 1, 0, 0, 1;
  const double vs = estimate_hull_volume(square, 100000);
  const double vt = estimate_hull_volume(triangle, 100000);
  return {vs >= 0.95 && vs <= 1.0 && vt >= 0.45 && vt <= 0.55,
          fmt::format("square {:.4f}, triangle {:.4f}", vs, vt)};
}

Outcome deterministic_pipeline() {
  const fs::path dir = fs::current_path() / "scratch" / "acceptance-pipeline";
  fs::remove_all(dir);
  RunConfig cfg = run_config_from_json(nlohmann::json::parse(R"({
    "seed": 11,
    "model": {"hidden": [6]},
    "selection": {"alpha": 0.005},
    "training": {"max_epochs": 30},
    "synth": {"train_duration": 300, "validation_duration": 120}
  })"));
  cfg.out = dir / "data";
  cmd_synth(cfg);
  RunConfig run = load_run_config(dir / "data" / "pipeline.json");
  run.out = dir / "a";
  cmd_pipeline(run);
  run.out = dir / "b";
  cmd_pipeline(run);
  const std::string a = read_text(dir / "a" / "eval_report.json");
  const std::string b = read_text(dir / "b" / "eval_report.json");
  return {a == b && !a.empty(), fmt::format("eval_report.json {} ({} bytes)", a == b ? "identical" : "differs",
                                            a.size())};
}

}  // namespace

int main() {
  criterion(1, kBudget1, lambda_example);
  criterion(2, kBudget2, index_vs_brute_force);
  criterion(3, kBudget3, drive_cycle_coverage);
  criterion(4, kBudget4, camel_experiment);
  criterion(5, kBudget5, battery_experiment);
  criterion(6, kBudget6, training_checks);
  criterion(7, kBudget7, hull_volume);
  criterion(8, 0, deterministic_pipeline);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
