#include "spacefill/io.hpp"
#include "spacefill/metrics.hpp"
#include "spacefill/narx.hpp"

#include "support.hpp"

#include <cmath>

using namespace spacefill;

namespace {

FnnModel random_model(const std::vector<Index>& sizes, std::uint64_t seed) {
  FnnModel m = fnn_init(sizes, seed);
  Rng rng(seed + 1000);
  for (auto& b : m.biases) {
    for (Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-1, 1);
  }
  m.input_map.min = Eigen::VectorXd::Constant(sizes.front(), -2.0);
  m.input_map.max = Eigen::VectorXd::Constant(sizes.front(), 3.0);
  m.target_min = -0.5;
  m.target_max = 4.0;
  return m;
}

RegressorTable random_table(Index n, Index d, std::uint64_t seed, auto&& f) {
  PointCloud X = testing::uniform_cloud(n, d, seed);
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) y(i) = f(X.row(i));
  std::vector<std::string> names;
  for (Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  return make_static_table(std::move(X), std::move(y), names);
}

// Exogenous channels plus outputs produced by running `teacher` in closed loop.
TimeSeriesDataset teacher_dataset(const FnnModel& teacher, Index n, std::uint64_t seed) {
  Rng rng(seed);
  TimeSeriesDataset ds;
  const LagSpec spec = LagSpec::narx_default();
  auto channel = [&](const std::string& name) {
    Signal s;
    s.name = name;
    s.t = Eigen::VectorXd::LinSpaced(n, 0.0, 0.1 * double(n - 1));
    s.v.resize(n);
    for (Index i = 0; i < n; ++i) s.v(i) = rng.uniform(-1, 1);
    return s;
  };
  for (const char* name : {"u1", "u2", "u3"}) ds.insert(channel(name));
  Signal y = channel("y");
  for (Index k = 2; k < n; ++k) {
    Eigen::VectorXd x(7);
    x << ds.at("u1").v(k), ds.at("u1").v(k - 1), ds.at("u1").v(k - 2), ds.at("u2").v(k - 1),
        ds.at("u3").v(k - 1), y.v(k - 1), y.v(k - 2);
    y.v(k) = fnn_forward(teacher, x);
  }
  ds.insert(y);
  return ds;
}

struct Frozen {
  // e = 2 - min(p, 1): one accepted step reaches the flat region, then the loss freezes.
  Eigen::VectorXd residuals(const Eigen::VectorXd& p) const {
    return Eigen::VectorXd::Constant(1, 2.0 - std::min(p(0), 1.0));
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const {
    return Eigen::MatrixXd::Constant(1, 1, p(0) < 1.0 ? 1.0 : 0.0);
  }
};

}  // namespace

TEST_CASE("fnn_init: shape, determinism, errors") {
  const FnnModel m = fnn_init({7, 22, 1}, 3);
  CHECK(m.parameter_count() == 199);
  CHECK(m.parameters() == fnn_init({7, 22, 1}, 3).parameters());
  CHECK(m.parameters() != fnn_init({7, 22, 1}, 4).parameters());
  CHECK(m.biases[0].isZero());
  CHECK(m.weights[0].cwiseAbs().maxCoeff() <= std::sqrt(3.0 / 7.0));
  CHECK(m.weights[1].cwiseAbs().maxCoeff() <= std::sqrt(3.0 / 22.0));
  CHECK_THROWS_AS(fnn_init({7, 0, 1}, 1), PreconditionError);
  CHECK_THROWS_AS(fnn_init({7}, 1), PreconditionError);
}

TEST_CASE("fnn_forward examples") {
  FnnModel zero = fnn_init({3, 4, 1}, 1);
  zero.set_parameters(Eigen::VectorXd::Zero(zero.parameter_count()));
  zero.biases[1](0) = 0.7;
  CHECK(fnn_forward(zero, Eigen::Vector3d(5, -1, 2)) == doctest::Approx(0.7));

  FnnModel single = fnn_init({2, 1, 1}, 1);
  single.weights[0].setZero();
  single.biases[0].setZero();
  single.weights[1](0, 0) = 2.0;
  single.biases[1](0) = 0.0;
  CHECK(fnn_forward(single, Eigen::Vector2d(0.3, 9.0)) == 1.0);
  CHECK_THROWS_AS(fnn_forward(single, Eigen::Vector3d(1, 2, 3)), PreconditionError);
}

TEST_CASE("analytic Jacobian matches central differences") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::vector<Index> sizes = s % 3 == 0 ? std::vector<Index>{4, 6, 5, 1} : std::vector<Index>{7, 22, 1};
    FnnModel m = random_model(sizes, s);
    const PointCloud X = testing::uniform_cloud(8, sizes.front(), 50 + s);
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
    m.set_parameters(p);
    CAPTURE(s);
    CHECK((J - fd).cwiseAbs().maxCoeff() / J.cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("LM: constant target is fitted and the band stop fires") {
  const RegressorTable t = random_table(50, 3, 1, [](const auto&) { return 0.5; });
  const auto [m, report] = lm_train(fnn_init({3, 4, 1}, 2), t, TrainConfig{});
  CHECK(report.final_sse < 1e-8);
  CHECK(report.stop_reason == StopReason::band);
}

TEST_CASE("LM: linear target, 5 hidden neurons") {
  int good = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const RegressorTable t = random_table(200, 2, 10 + seed, [](const auto& x) { return 0.3 * x(0) - 0.2 * x(1); });
    const auto [m, report] = lm_train(fnn_init({2, 5, 1}, seed), t, TrainConfig{});
    if (nrmse(t.y, predict_one_step(m, t), 1.0) < 0.01) ++good;
  }
  CHECK(good >= 8);
}

TEST_CASE("LM: accepted steps never increase the loss; reported SSE is exact") {
  const RegressorTable t = random_table(120, 3, 4, [](const auto& x) { return std::sin(4 * x(0)) + x(1) * x(2); });
  TrainConfig cfg;
  cfg.max_epochs = 200;
  const auto [m, report] = lm_train(fnn_init({3, 8, 1}, 7), t, cfg);
  REQUIRE(report.sse_history.size() == std::size_t(report.epochs + 1));
  for (std::size_t e = 1; e < report.sse_history.size(); ++e) CHECK(report.sse_history[e] <= report.sse_history[e - 1]);
  const double recomputed = (t.y - predict_one_step(m, t)).squaredNorm();
  CHECK(std::abs(report.final_sse - recomputed) <= 1e-10 * recomputed);
  CHECK(report.epochs <= cfg.max_epochs);
}

TEST_CASE("LM: row order does not change the trajectory") {
  const RegressorTable t = random_table(80, 2, 5, [](const auto& x) { return x(0) * x(0) - x(1); });
  std::vector<Index> reversed(80);
  for (Index i = 0; i < 80; ++i) reversed[std::size_t(i)] = 79 - i;
  TrainConfig cfg;
  cfg.max_epochs = 50;
  const auto a = lm_train(fnn_init({2, 5, 1}, 1), t, cfg);
  const auto b = lm_train(fnn_init({2, 5, 1}, 1), t.subset(reversed), cfg);
  CHECK(a.first.parameters() == b.first.parameters());
  CHECK(a.second.sse_history == b.second.sse_history);
}

TEST_CASE("band stop: a loss frozen from epoch E stops at E + window") {
  for (int e : {0, 3, 25}) {
    StopBand stop(1e-10, 10);
    int fired = -1;
    for (int epoch = 0; epoch < 100 && fired < 0; ++epoch) {
      const double sse = epoch < e ? 100.0 - epoch : 100.0 - e;
      if (stop.push(sse)) fired = epoch;
    }
    CHECK(fired == e + 10);
  }

  Frozen problem;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  const TrainReport report = levenberg_marquardt(problem, p, TrainConfig{});
  CHECK(report.stop_reason == StopReason::band);
  CHECK(report.sse_history[1] == 1.0);
  CHECK(report.epochs == 11);  // frozen from epoch 1
}

TEST_CASE("LM: damping overflow and config validation") {
  struct Uphill {
    Eigen::VectorXd residuals(const Eigen::VectorXd& p) const { return Eigen::VectorXd::Constant(1, 1.0 + p(0)); }
    // Jacobian sign is wrong, so every proposed step increases the loss.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const { return Eigen::MatrixXd::Constant(1, 1, 1.0); }
  } problem;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  const TrainReport report = levenberg_marquardt(problem, p, TrainConfig{});
  CHECK(report.stop_reason == StopReason::damping_overflow);
  CHECK(report.epochs == 0);

  TrainConfig bad;
  bad.stop_window = 1;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = TrainConfig{};
  bad.max_epochs = 0;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("LM warns when rows are fewer than parameters") {
  const RegressorTable t = random_table(10, 2, 1, [](const auto& x) { return x(0); });
  const auto [m, report] = lm_train(fnn_init({2, 6, 1}, 1), t, TrainConfig{});
  CHECK(report.warnings.size() == 1);
}

TEST_CASE("predict_one_step examples") {
  const FnnModel m = random_model({7, 5, 1}, 3);
  const RegressorTable t = random_table(30, 7, 2, [&](const auto& x) { return fnn_forward(m, x.transpose()); });
  const Eigen::VectorXd yhat = predict_one_step(m, t);
  CHECK((t.y - yhat).cwiseAbs().maxCoeff() < 1e-14);  // batched vs single-row products round differently

  FnnModel c = fnn_init({7, 3, 1}, 1);
  c.set_parameters(Eigen::VectorXd::Zero(c.parameter_count()));
  c.biases[1](0) = 0.25;
  CHECK((t.y - predict_one_step(c, t)).isApprox((t.y.array() - 0.25).matrix()));
}

TEST_CASE("closed loop: y(k) = y(k-1) holds its initial value") {
  TimeSeriesDataset ds;
  for (const char* name : {"u1", "u2", "u3", "y"}) {
    Signal s;
    s.name = name;
    s.t = Eigen::VectorXd::LinSpaced(50, 0, 4.9);
    s.v = Eigen::VectorXd::Random(50);
    ds.insert(s);
  }
  const LagSpec spec = LagSpec::narx_default();
  const Signal sim = simulate_closed_loop([](const Eigen::VectorXd& x) { return x(5); }, ds, spec,
                                          Eigen::Vector2d(1.5, 1.5));
  CHECK(sim.size() == 48);
  CHECK((sim.v.array() == 1.5).all());
  CHECK(sim.t(0) == ds.at("y").t(2));

  FnnModel zero = fnn_init({7, 4, 1}, 1);
  zero.set_parameters(Eigen::VectorXd::Zero(zero.parameter_count()));
  zero.biases[1](0) = 0.4;
  zero.target_min = 0.0;
  zero.target_max = 1.0;
  CHECK((simulate_closed_loop(zero, ds, spec, Eigen::Vector2d(3, 3)).v.array() == 0.4).all());
  CHECK_THROWS_AS(simulate_closed_loop(zero, ds, spec, Eigen::VectorXd::Zero(1)), PreconditionError);
}

TEST_CASE("closed loop of a perfect model tracks the one-step prediction") {
  FnnModel teacher = random_model({7, 6, 1}, 12);
  teacher.weights[1] *= 0.3;  // keep the feedback loop contractive
  const TimeSeriesDataset ds = teacher_dataset(teacher, 102, 5);
  const LagSpec spec = LagSpec::narx_default();
  const RegressorTable table = build_regressors(ds, spec);
  const Eigen::VectorXd one_step = predict_one_step(teacher, table);
  const Eigen::VectorXd& y = ds.at("y").v;
  const Signal sim = simulate_closed_loop(teacher, ds, spec, y.head(2));
  REQUIRE(sim.size() == 100);
  CHECK(nrmse(sim.v, one_step, 1.0) < 1e-6);
  CHECK(nrmse(one_step, table.y, 1.0) < 1e-12);
}

TEST_CASE("closed loop reports divergence with the step") {
  TimeSeriesDataset ds;
  for (const char* name : {"u1", "u2", "u3", "y"}) {
    Signal s;
    s.name = name;
    s.t = Eigen::VectorXd::LinSpaced(40, 0, 3.9);
    s.v = Eigen::VectorXd::Ones(40);
    ds.insert(s);
  }
  try {
    simulate_closed_loop([](const Eigen::VectorXd& x) { return 2.0 * x(5); }, ds, LagSpec::narx_default(),
                         Eigen::Vector2d(1, 1), 100.0);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step == 2 + 6);  // 2^7 = 128 is the first value above 100
  }
}

TEST_CASE("model JSON round-trips bit-exactly") {
  FnnModel m = random_model({7, 22, 1}, 9);
  m.seed = 9;
  m.weights[0](0, 0) = 0.1 + 0.2;  // not representable in few digits
  const FnnModel back = fnn_from_json(nlohmann::json::parse(dump_json(to_json(m))));
  CHECK(back.layer_sizes == m.layer_sizes);
  CHECK(back.parameters() == m.parameters());
  CHECK(back.input_map.min == m.input_map.min);
  CHECK(back.input_map.max == m.input_map.max);
  CHECK(back.target_min == m.target_min);
  CHECK(back.target_max == m.target_max);
  CHECK(back.seed == m.seed);

  auto j = to_json(m);
  j["weights"][0].erase(0);
  CHECK_THROWS_AS(fnn_from_json(j), StructuralError);
}
