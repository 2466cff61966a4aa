#include "spacefill/app.hpp"

#include "spacefill/coverage.hpp"
#include "spacefill/io.hpp"
#include "spacefill/metrics.hpp"
#include "spacefill/narx.hpp"
#include "spacefill/parallel.hpp"
#include "spacefill/rng.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numeric>

namespace spacefill {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<Index> layer_sizes(Index inputs, const std::vector<Index>& hidden) {
  std::vector<Index> sizes{inputs};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  Index count = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      sum += x;
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

double population_std(const Eigen::VectorXd& v) {
  return std::sqrt((v.array() - v.mean()).square().mean());
}

}  // namespace

// ---------------------------------------------------------------------------
// Camel

CamelSummary run_camel(const CamelOptions& opt) {
  if (opt.restarts < 2) throw PreconditionError("camel: restarts must be at least 2");
  const CamelExperiment exp = gen_camel_experiment(opt.seed);
  const double normalizer = population_std(exp.validation.y);

  struct Outcome {
    double train = 0, validation = 0, seconds = 0;
  };
  const auto restarts = static_cast<std::size_t>(opt.restarts);
  std::vector<Outcome> a(restarts), b(restarts);
  parallel_for(static_cast<std::ptrdiff_t>(2 * restarts), opt.threads, [&](std::ptrdiff_t job) {
    const auto i = static_cast<std::size_t>(job) % restarts;
    const bool model_b = static_cast<std::size_t>(job) >= restarts;
    const RegressorTable& table = model_b ? exp.model_b : exp.model_a;
    // Both model classes start from the same initialization for a given restart.
    const FnnModel init = fnn_init(layer_sizes(2, opt.hidden), derive_seed(opt.seed, fmt::format("init-{}", i)));
    const auto [model, report] = lm_train(init, table, opt.training);
    Outcome& o = model_b ? b[i] : a[i];
    o.train = nrmse(table.y, predict_one_step(model, table), normalizer);
    o.validation = nrmse(exp.validation.y, predict_one_step(model, exp.validation), normalizer);
    o.seconds = report.wall_time;
  });

  CamelSummary s;
  s.cluster_center = exp.cluster_center;
  s.lambda_a = coverage_lambda(exp.model_a.X);
  s.lambda_b = coverage_lambda(exp.model_b.X);
  auto fill = [](CamelSummary::PerModel& m, const std::vector<Outcome>& outcomes) {
    std::vector<double> seconds;
    for (const auto& o : outcomes) {
      m.train_nrmse.push_back(o.train);
      m.validation_nrmse.push_back(o.validation);
      seconds.push_back(o.seconds);
    }
    m.mean_train_nrmse = mean_of(m.train_nrmse);
    m.mean_validation_nrmse = mean_of(m.validation_nrmse);
    m.mean_wall_time = mean_of(seconds);
  };
  fill(s.a, a);
  fill(s.b, b);
  return s;
}

json to_json(const CamelSummary& s) {
  auto model = [](const CamelSummary::PerModel& m) {
    return json{{"mean_train_nrmse", m.mean_train_nrmse},
                {"mean_validation_nrmse", m.mean_validation_nrmse},
                {"train_nrmse", m.train_nrmse},
                {"validation_nrmse", m.validation_nrmse}};
  };
  return {{"model_a", model(s.a)},
          {"model_b", model(s.b)},
          {"cluster_center", s.cluster_center},
          {"lambda_a", s.lambda_a},
          {"lambda_b", s.lambda_b}};
}

// ---------------------------------------------------------------------------
// Battery

BatteryData make_battery_data(const BatteryScenario& sc, std::uint64_t seed, bool raw_logs) {
  BatteryData data;
  auto simulate = [&](const Signal& current, const Signal& temp, double soc0) {
    return raw_logs ? record_battery_log(sc.ecm, current, temp, soc0, sc.sensors)
                    : synthesize_battery_dataset(sc.ecm, current, temp, soc0, sc.cutoff_hz, sc.rate_hz,
                                                 sc.sensors);
  };
  auto drive = [&](double duration, const char* name, double soc0) {
    DriveProfile p = sc.profile;
    p.duration = duration;
    p.seed = derive_seed(seed, name);
    const Signal current = gen_drive_profile(p);
    const Signal temp = gen_temperature_trace(current, sc.temp_mean, sc.temp_amplitude, sc.temp_period,
                                              derive_seed(seed, std::string(name) + "-temperature"));
    return simulate(current, temp, soc0);
  };
  data.train = drive(sc.train_duration, "profile", sc.soc0);
  data.validation1 = drive(sc.validation_duration, "validation-1", sc.soc0);

  const Signal stairs = gen_staircase_profile(sc.validation_duration, sc.profile.rate_hz, sc.stair_levels,
                                              sc.stair_step, sc.stair_rest);
  const Signal temp = gen_temperature_trace(stairs, sc.temp_mean + sc.stair_temp_offset,
                                            sc.temp_amplitude / 3.0, sc.temp_period,
                                            derive_seed(seed, "validation-2-temperature"));
  data.validation2 = simulate(stairs, temp, sc.stair_soc0);
  return data;
}

std::vector<fs::path> cmd_synth(const RunConfig& cfg) {
  const BatteryData data = make_battery_data(cfg.synth, cfg.seed, true);
  fs::create_directories(cfg.out);
  std::vector<fs::path> written{cfg.out / "train.csv", cfg.out / "validation1.csv",
                                cfg.out / "validation2.csv", cfg.out / "pipeline.json"};
  write_csv(written[0], data.train);
  write_csv(written[1], data.validation1);
  write_csv(written[2], data.validation2);

  RunConfig pipeline = cfg;
  pipeline.dataset.train = "train.csv";
  pipeline.dataset.validation = {{"validation1", "validation1.csv"}, {"validation2", "validation2.csv"}};
  pipeline.dataset.schema.clear();
  pipeline.out = "pipeline-out";
  write_json(written[3], to_json(pipeline));
  return written;
}

BatterySummary run_battery(const BatteryOptions& opt, const std::optional<fs::path>& out_dir) {
  if (opt.restarts < 1) throw PreconditionError("battery: restarts must be at least 1");
  const LagSpec spec = LagSpec::narx_default();
  const BatteryData data = make_battery_data(opt.scenario, opt.seed);
  const RegressorTable table = build_regressors(data.train, spec);
  const std::map<std::string, const TimeSeriesDataset*> validation{
      {"validation1", &data.validation1}, {"validation2", &data.validation2}};

  // Subsets. The random baseline gets the same cardinality as the Sobol subset.
  std::map<std::string, std::vector<Index>> subsets;
  std::vector<Index> all(static_cast<std::size_t>(table.rows()));
  std::iota(all.begin(), all.end(), Index(0));
  subsets["all"] = all;
  std::map<std::string, double> lambdas;
  const auto [normalized, map] = normalize_minmax(table.X);
  lambdas["all"] = coverage_lambda(normalized, opt.threads);
  for (SelectionMethod method : {SelectionMethod::sobol, SelectionMethod::lhs}) {
    SelectionConfig sel;
    sel.alpha = opt.alpha;
    sel.method = method;
    sel.seed = derive_seed(opt.seed, "selection");
    sel.threads = opt.threads;
    const SubsetResult r = select_spacefilling(table, sel);
    subsets[to_string(method)] = r.indices;
    lambdas[to_string(method)] = r.lambda_subset;
  }
  const double random_alpha =
      static_cast<double>(subsets["sobol"].size()) / static_cast<double>(table.rows());
  const SubsetResult random = select_random(table, random_alpha, derive_seed(opt.seed, "selection"));
  subsets["random"] = random.indices;
  lambdas["random"] = random.lambda_subset;

  // One job per (dataset, restart); every dataset sees the same initializations.
  struct Job {
    std::string dataset;
    int restart;
    double seconds = 0;
    std::map<std::string, double> nrmse;
    std::map<std::string, Eigen::VectorXd> simulation;
  };
  std::vector<Job> jobs;
  for (const auto& [name, idx] : subsets) {
    for (int i = 0; i < opt.restarts; ++i) jobs.push_back({name, i, 0, {}, {}});
  }
  const Index k0 = spec.max_lag();
  const Index ylag = spec.max_output_lag();
  parallel_for(static_cast<std::ptrdiff_t>(jobs.size()), opt.threads, [&](std::ptrdiff_t j) {
    Job& job = jobs[std::size_t(j)];
    const FnnModel init = fnn_init(layer_sizes(table.dimension(), opt.hidden),
                                   derive_seed(opt.seed, fmt::format("init-{}", job.restart)));
    const auto [model, report] = lm_train(init, table.subset(subsets.at(job.dataset)), opt.training);
    job.seconds = report.wall_time;
    for (const auto& [vname, ds] : validation) {
      const Eigen::VectorXd& y = ds->at(spec.output).v;
      try {
        const Signal sim = simulate_closed_loop(model, *ds, spec, y.segment(k0 - ylag, ylag));
        job.nrmse[vname] = nrmse(y.tail(sim.size()), sim.v, opt.normalizer);
        job.simulation[vname] = sim.v;
      } catch (const DivergenceError&) {
        job.nrmse[vname] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });

  BatterySummary s;
  for (const auto& [name, idx] : subsets) {
    auto& d = s.datasets[name];
    d.rows = static_cast<Index>(idx.size());
    d.lambda = lambdas[name];
  }
  for (const Job& job : jobs) {  // jobs are in (dataset, restart) order
    auto& d = s.datasets[job.dataset];
    d.train_time.push_back(job.seconds);
    for (const auto& [vname, value] : job.nrmse) {
      d.nrmse[vname].push_back(value);
      if (!std::isfinite(value)) ++d.diverged[vname];
    }
  }
  for (auto& [name, d] : s.datasets) {
    d.mean_train_time = mean_of(d.train_time);
    for (const auto& [vname, values] : d.nrmse) {
      d.mean_nrmse[vname] = mean_of(values);
      d.diverged.try_emplace(vname, 0);
    }
  }

  // Distribution shift of the validation sets relative to the training data.
  PointCloud train_points = map.apply(table.X);
  const Eigen::VectorXd bandwidth = silverman_bandwidth(train_points);
  const RegressorTable v1 = build_regressors(data.validation1, spec);
  const RegressorTable v2 = build_regressors(data.validation2, spec);
  s.log_density_validation1 = mean_log_density(train_points, map.apply(v1.X), bandwidth, opt.threads);
  s.log_density_validation2 = mean_log_density(train_points, map.apply(v2.X), bandwidth, opt.threads);

  if (out_dir) {
    // Plot data: measured output and the first restart's simulation per dataset.
    for (const auto& [vname, ds] : validation) {
      const Eigen::VectorXd& y = ds->at(spec.output).v;
      const Eigen::VectorXd& t = ds->at(spec.output).t;
      const Index n = y.size() - k0;
      std::vector<std::string> header{"t", "y"};
      Eigen::MatrixXd rows(n, 2 + static_cast<Index>(subsets.size()));
      rows.col(0) = t.tail(n);
      rows.col(1) = y.tail(n);
      Index c = 2;
      for (const auto& [name, idx] : subsets) {
        header.push_back(name);
        rows.col(c).setConstant(std::numeric_limits<double>::quiet_NaN());
        for (const Job& job : jobs) {
          if (job.dataset == name && job.restart == 0 && job.simulation.count(vname)) {
            rows.col(c) = job.simulation.at(vname);
          }
        }
        ++c;
      }
      write_table_csv(*out_dir / fmt::format("plot_{}.csv", vname), header, rows);
    }
  }
  return s;
}

json to_json(const BatterySummary& s) {
  json datasets = json::object();
  for (const auto& [name, d] : s.datasets) {
    datasets[name] = {{"rows", d.rows},
                      {"lambda", d.lambda},
                      {"nrmse", d.nrmse},
                      {"mean_nrmse", d.mean_nrmse},
                      {"diverged", d.diverged}};
  }
  return {{"datasets", datasets},
          {"log_density",
           {{"validation1", s.log_density_validation1}, {"validation2", s.log_density_validation2}}}};
}

}  // namespace spacefill
