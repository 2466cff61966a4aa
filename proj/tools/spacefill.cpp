// spacefill: space-filling subset selection and NARX training from the terminal.

#include "spacefill/app.hpp"
#include "spacefill/coverage.hpp"
#include "spacefill/io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spacefill;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> alpha;
  std::optional<std::string> method;
  std::optional<int> restarts;
};

RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out = *f.out;
  if (f.alpha) cfg.selection.alpha = *f.alpha;
  if (f.method) cfg.selection.method = parse_selection_method(*f.method);
  cfg.validate();
  return cfg;
}

void print_json_table(const std::string& title, const json& rows) {
  std::printf("%s\n", title.c_str());
  for (const auto& [key, value] : rows.items()) {
    if (value.is_number_float()) {
      std::printf("  %-32s %.6g\n", key.c_str(), value.get<double>());
    } else {
      std::printf("  %-32s %s\n", key.c_str(), value.dump().c_str());
    }
  }
}

int run_camel_command(const CommonFlags& f) {
  RunConfig cfg = resolve_config(f);
  CamelOptions opt;
  opt.seed = cfg.seed;
  opt.restarts = f.restarts.value_or(25);
  opt.training = cfg.training;
  opt.threads = cfg.threads;
  const auto start = std::chrono::steady_clock::now();
  const CamelSummary s = run_camel(opt);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const json report = to_json(s);
  fs::create_directories(cfg.out);
  write_json(cfg.out / "camel_report.json", report);
  write_json(cfg.out / "timing.json", {{"model_a_mean_wall_time", s.a.mean_wall_time},
                                       {"model_b_mean_wall_time", s.b.mean_wall_time},
                                       {"total_seconds", seconds}});
  write_manifest(cfg.out, true);

  std::printf("%-8s %12s %12s %12s\n", "model", "train", "validation", "time [s]");
  std::printf("%-8s %12.6f %12.6f %12.4f\n", "A", report["model_a"]["mean_train_nrmse"].get<double>(),
              report["model_a"]["mean_validation_nrmse"].get<double>(), s.a.mean_wall_time);
  std::printf("%-8s %12.6f %12.6f %12.4f\n", "B", report["model_b"]["mean_train_nrmse"].get<double>(),
              report["model_b"]["mean_validation_nrmse"].get<double>(), s.b.mean_wall_time);
  std::printf("lambda A %.4f, lambda B %.4f, %d restarts\n", s.lambda_a, s.lambda_b, opt.restarts);
  return 0;
}

int run_battery_command(const CommonFlags& f) {
  RunConfig cfg = resolve_config(f);
  BatteryOptions opt;
  opt.seed = cfg.seed;
  opt.restarts = f.restarts.value_or(3);
  opt.alpha = cfg.selection.alpha;
  opt.scenario = cfg.synth;
  opt.hidden = cfg.hidden;
  opt.training = cfg.training;
  opt.normalizer = cfg.normalizer;
  opt.threads = cfg.threads;
  fs::create_directories(cfg.out);
  const BatterySummary s = run_battery(opt, cfg.out);

  const json report = to_json(s);
  write_json(cfg.out / "battery_report.json", report);
  json timing = json::object();
  for (const auto& [name, d] : s.datasets) timing[name] = {{"train_time", d.train_time}, {"mean_train_time", d.mean_train_time}};
  write_json(cfg.out / "timing.json", timing);
  write_manifest(cfg.out, true);

  std::printf("%-8s %8s %10s %14s %14s %10s %12s\n", "dataset", "rows", "lambda", "nrmse val1",
              "nrmse val2", "diverged", "train [s]");
  for (const auto& [name, d] : s.datasets) {
    int diverged = 0;
    for (const auto& [v, count] : d.diverged) diverged += count;
    std::printf("%-8s %8lld %10.4f %14.6f %14.6f %10d %12.3f\n", name.c_str(),
                static_cast<long long>(d.rows), d.lambda, d.mean_nrmse.at("validation1"),
                d.mean_nrmse.at("validation2"), diverged, d.mean_train_time);
  }
  std::printf("mean log-density under training KDE: validation1 %.4f, validation2 %.4f\n",
              s.log_density_validation1, s.log_density_validation2);
  return 0;
}

RegressorTable table_from_config(const RunConfig& cfg) {
  if (cfg.dataset.train.empty()) throw PreconditionError("no training CSV configured (dataset.train)");
  TimeSeriesDataset ds = load_csv(cfg.dataset.train, cfg.dataset.schema);
  if (cfg.preprocessing.cutoff_hz) ds = lowpass_filter(ds, *cfg.preprocessing.cutoff_hz);
  if (cfg.preprocessing.rate_hz) ds = resample_linear(ds, *cfg.preprocessing.rate_hz);
  return build_regressors(ds, cfg.lags);
}

int run_select_command(const CommonFlags& f) {
  RunConfig cfg = resolve_config(f);
  const RegressorTable table = table_from_config(cfg);
  SelectionConfig sel = cfg.selection;
  sel.seed = derive_seed(cfg.seed, "selection");
  sel.threads = cfg.threads;
  const SubsetResult r = select_spacefilling(table, sel);
  fs::create_directories(cfg.out);
  write_json(cfg.out / "subset.json", to_json(r));
  write_indices_csv(cfg.out / "subset_indices.csv", r);
  write_manifest(cfg.out, true);
  print_json_table("selection", {{"rows", table.rows()},
                                 {"selected", r.size()},
                                 {"n_design", r.n_design},
                                 {"v_hat", r.v_hat ? json(*r.v_hat) : json(nullptr)},
                                 {"lambda_subset", r.lambda_subset}});
  return 0;
}

int run_coverage_command(const CommonFlags& f, const std::string& input, Index sample) {
  PointCloud points;
  if (!input.empty()) {
    // Any numeric CSV: every column except the first (time or index) is a coordinate.
    const TimeSeriesDataset ds = load_csv(input);
    points.resize(ds.length(), static_cast<Index>(ds.signals.size()));
    Index c = 0;
    for (const auto& [name, s] : ds.signals) points.col(c++) = s.v;
  } else {
    points = table_from_config(resolve_config(f)).X;
  }
  const auto [normalized, map] = normalize_minmax(points);
  json out{{"rows", points.rows()}, {"dimension", points.cols()}};
  if (sample > 0 && sample < points.rows()) {
    out["lambda_estimate"] = coverage_lambda_estimate(normalized, sample, f.seed.value_or(0));
    out["sample"] = sample;
  } else {
    out["lambda"] = coverage_lambda(normalized);
  }
  std::cout << dump_json(out);
  return 0;
}

int run_synth_command(const CommonFlags& f) {
  RunConfig cfg = resolve_config(f);
  for (const auto& path : cmd_synth(cfg)) std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-filling subset selection for NARX training data"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string input;
  Index sample = 0;

  auto add_common = [&](CLI::App* sub, bool with_selection, bool with_restarts) {
    sub->add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "global seed");
    sub->add_option("--out", flags.out, "output directory");
    if (with_selection) {
      sub->add_option("--alpha", flags.alpha, "subset fraction alpha in (0, 1]");
      sub->add_option("--method", flags.method, "sobol | lhs | random");
    }
    if (with_restarts) sub->add_option("--restarts", flags.restarts, "model restarts");
  };
  auto* pipeline = app.add_subcommand("pipeline", "load, filter, resample, embed, select, train, evaluate");
  add_common(pipeline, true, false);
  auto* camel = app.add_subcommand("camel", "six-hump camel experiment (Model A vs Model B)");
  add_common(camel, false, true);
  auto* battery = app.add_subcommand("battery", "synthetic battery experiment (all vs subsets)");
  add_common(battery, true, true);
  auto* select = app.add_subcommand("select", "space-filling subset of a dataset's regressors");
  add_common(select, true, false);
  auto* coverage = app.add_subcommand("coverage", "coverage measure lambda of a point cloud");
  add_common(coverage, false, false);
  coverage->add_option("--input", input, "CSV whose columns after the first are coordinates");
  coverage->add_option("--sample", sample, "estimate from a random sub-draw of this many points");
  auto* synth = app.add_subcommand("synth", "write synthetic battery logs and a pipeline config");
  add_common(synth, false, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*pipeline) {
      cmd_pipeline(resolve_config(flags));
      return 0;
    }
    if (*camel) {
      if (flags.restarts && *flags.restarts < 2) throw PreconditionError("--restarts must be at least 2");
      return run_camel_command(flags);
    }
    if (*battery) return run_battery_command(flags);
    if (*select) return run_select_command(flags);
    if (*coverage) return run_coverage_command(flags, input, sample);
    if (*synth) return run_synth_command(flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
