#include "spacefill/embedding.hpp"
#include "spacefill/io.hpp"

#include "support.hpp"

#include <limits>

using namespace spacefill;

namespace {

Signal channel(const std::string& name, std::vector<double> values) {
  Signal s;
  s.name = name;
  s.t.resize(Index(values.size()));
  s.v = Eigen::Map<Eigen::VectorXd>(values.data(), Index(values.size()));
  for (Index i = 0; i < s.t.size(); ++i) s.t(i) = 0.1 * static_cast<double>(i);
  return s;
}

TimeSeriesDataset random_dataset(Index n, std::uint64_t seed) {
  Rng rng(seed);
  TimeSeriesDataset ds;
  for (const char* name : {"u1", "u2", "u3", "y"}) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.uniform(-1, 1);
    ds.insert(channel(name, v));
  }
  return ds;
}

}  // namespace

TEST_CASE("default lag spec is the 7-column NARX layout") {
  const LagSpec spec = LagSpec::narx_default();
  CHECK(spec.dimension() == 7);
  CHECK(spec.max_lag() == 2);
  CHECK(spec.max_output_lag() == 2);
  const std::vector<std::pair<std::string, int>> expected{
      {"u1", 0}, {"u1", 1}, {"u1", 2}, {"u2", 1}, {"u3", 1}, {"y", 1}, {"y", 2}};
  for (Index c = 0; c < 7; ++c) CHECK(spec.column_source(c) == expected[std::size_t(c)]);
}

TEST_CASE("build_regressors: three samples give one row") {
  TimeSeriesDataset ds;
  ds.insert(channel("u1", {10, 20, 30}));
  ds.insert(channel("u2", {1, 2, 3}));
  ds.insert(channel("u3", {5, 6, 7}));
  ds.insert(channel("y", {100, 110, 120}));
  const RegressorTable t = build_regressors(ds, LagSpec::narx_default());
  REQUIRE(t.rows() == 1);
  Eigen::RowVectorXd expected(7);
  expected << 30, 20, 10, 2, 6, 110, 100;
  CHECK(t.X.row(0) == expected);
  CHECK(t.y(0) == 120);
  CHECK(t.origin[0] == 2);
}

TEST_CASE("build_regressors: n - max_lag rows, every entry sourced exactly") {
  const TimeSeriesDataset ds = random_dataset(100, 4);
  const LagSpec spec = LagSpec::narx_default();
  const RegressorTable t = build_regressors(ds, spec);
  REQUIRE(t.rows() == 98);
  CHECK(t.column_names.size() == 7);
  for (Index r = 0; r < t.rows(); ++r) {
    const Index k = t.origin[std::size_t(r)];
    CHECK(t.y(r) == ds.at("y").v(k));
    for (Index c = 0; c < t.dimension(); ++c) {
      const auto [signal, lag] = spec.column_source(c);
      CHECK(t.X(r, c) == ds.at(signal).v(k - lag));
    }
  }
}

TEST_CASE("build_regressors: constant channels give identical rows") {
  TimeSeriesDataset ds;
  for (const char* name : {"u1", "u2", "u3", "y"}) ds.insert(channel(name, std::vector<double>(20, 1.25)));
  const RegressorTable t = build_regressors(ds, LagSpec::narx_default());
  CHECK(t.rows() == 18);
  CHECK((t.X.rowwise() - t.X.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.y.array() == 1.25).all());
}

TEST_CASE("build_regressors: custom lags and errors") {
  const TimeSeriesDataset ds = random_dataset(30, 8);
  LagSpec spec;
  spec.inputs = {{"u2", {0, 3}}};
  spec.output = "y";
  spec.output_lags = {1};
  const RegressorTable t = build_regressors(ds, spec);
  CHECK(t.rows() == 27);
  CHECK(t.X(0, 1) == ds.at("u2").v(0));

  spec.inputs = {{"nope", {0}}};
  try {
    build_regressors(ds, spec);
    FAIL("expected a missing-signal error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
  CHECK_THROWS_AS(build_regressors(random_dataset(2, 1), LagSpec::narx_default()), PreconditionError);

  LagSpec bad = LagSpec::narx_default();
  bad.output_lags = {0, 1};
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = LagSpec::narx_default();
  bad.inputs[0].lags = {-1};
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("build_regressors drops non-finite rows and counts them") {
  TimeSeriesDataset ds = random_dataset(20, 2);
  // Bypass Signal validation to plant a gap the way a corrupted log would.
  ds.signals["u2"].v(10) = std::numeric_limits<double>::quiet_NaN();
  const RegressorTable t = build_regressors(ds, LagSpec::narx_default());
  CHECK(t.dropped_rows == 1);  // u2 enters only at lag 1, so only k = 11 is affected
  CHECK(t.rows() == 17);
  CHECK(t.X.allFinite());
  for (Index k : t.origin) CHECK(k != 11);
}

TEST_CASE("subset keeps rows, targets and origins aligned") {
  const RegressorTable t = build_regressors(random_dataset(50, 5), LagSpec::narx_default());
  const std::vector<Index> pick{3, 0, 40};
  const RegressorTable s = t.subset(pick);
  REQUIRE(s.rows() == 3);
  for (std::size_t i = 0; i < pick.size(); ++i) {
    CHECK(s.X.row(Index(i)) == t.X.row(pick[i]));
    CHECK(s.y(Index(i)) == t.y(pick[i]));
    CHECK(s.origin[i] == t.origin[std::size_t(pick[i])]);
  }
  CHECK_THROWS_AS(t.subset(std::vector<Index>{48}), PreconditionError);
}

TEST_CASE("regressor CSV export has names then target") {
  const auto dir = testing::scratch_dir("embedding_csv");
  const RegressorTable t = build_regressors(random_dataset(6, 1), LagSpec::narx_default());
  write_csv(dir / "t.csv", t);
  const std::string text = read_text(dir / "t.csv");
  CHECK(text.substr(0, text.find('\n')) == "u1(k),u1(k-1),u1(k-2),u2(k-1),u3(k-1),y(k-1),y(k-2),target");
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}
