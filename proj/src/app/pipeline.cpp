#include "spacefill/app.hpp"

#include "spacefill/coverage.hpp"
#include "spacefill/io.hpp"
#include "spacefill/metrics.hpp"
#include "spacefill/narx.hpp"
#include "spacefill/rng.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdio>
#include <vector>

namespace spacefill {

namespace fs = std::filesystem;
using nlohmann::json;

void write_manifest(const fs::path& dir, bool complete, const json& extra) {
  json files = json::array();
  std::vector<fs::path> paths;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
        paths.push_back(entry.path());
      }
    }
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    files.push_back({{"path", fs::relative(p, dir).generic_string()}, {"sha256", sha256_file(p)}});
  }
  json manifest = extra;
  manifest["complete"] = complete;
  manifest["files"] = files;
  write_json(dir / "manifest.json", manifest);
}

namespace {

class StageRunner {
 public:
  template <class F>
  auto run(const char* name, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(body())>) {
        body();
        finish(name, start);
      } else {
        auto result = body();
        finish(name, start);
        return result;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  }

  const std::vector<std::string>& completed() const { return completed_; }
  const json& seconds() const { return seconds_; }

 private:
  void finish(const char* name, std::chrono::steady_clock::time_point start) {
    completed_.emplace_back(name);
    seconds_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  std::vector<std::string> completed_;
  json seconds_ = json::object();
};

TimeSeriesDataset preprocess(const TimeSeriesDataset& ds, const RunConfig& cfg, bool filter,
                             bool resample) {
  TimeSeriesDataset out = ds;
  if (filter && cfg.preprocessing.cutoff_hz) out = lowpass_filter(out, *cfg.preprocessing.cutoff_hz);
  if (resample && cfg.preprocessing.rate_hz) out = resample_linear(out, *cfg.preprocessing.rate_hz);
  return out;
}

Eigen::VectorXd origin_times(const TimeSeriesDataset& ds, const RegressorTable& table) {
  const Eigen::VectorXd& t = ds.signals.begin()->second.t;
  Eigen::VectorXd out(table.rows());
  for (Index r = 0; r < table.rows(); ++r) out(r) = t(table.origin[std::size_t(r)]);
  return out;
}

void write_trace(const fs::path& path, const Eigen::VectorXd& t, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& yhat) {
  Eigen::MatrixXd rows(t.size(), 3);
  rows << t, y, yhat;
  write_table_csv(path, {"t", "y", "yhat"}, rows);
}

void print_summary(const json& report, const json& timing) {
  std::printf("%-28s %s\n", "quantity", "value");
  for (const auto& [name, v] : report.at("nrmse_by_dataset").items()) {
    std::printf("%-28s %.6g\n", ("nrmse " + name).c_str(), v.get<double>());
  }
  for (const auto& [name, v] : report.at("lambda_values").items()) {
    std::printf("%-28s %.6g\n", ("lambda " + name).c_str(), v.get<double>());
  }
  for (const auto& [name, v] : report.at("subset_sizes").items()) {
    std::printf("%-28s %lld\n", ("rows " + name).c_str(), static_cast<long long>(v.get<Index>()));
  }
  std::printf("%-28s %.3f s\n", "train wall time", timing.at("train_wall_time").get<double>());
}

}  // namespace

PipelineResult cmd_pipeline(const RunConfig& cfg) {
  cfg.validate();
  PipelineResult result;
  result.out_dir = cfg.out;
  StageRunner stages;
  json warnings = json::array();
  try {
    stages.run("setup", [&] {
      fs::create_directories(cfg.out);
      fs::remove(cfg.out / "manifest.json");
      write_json(cfg.out / "config.json", to_json(cfg));
    });

    auto [train_raw, validation_raw] = stages.run("load", [&] {
      if (cfg.dataset.train.empty()) throw PreconditionError("no training CSV configured (dataset.train)");
      std::map<std::string, TimeSeriesDataset> validation;
      TimeSeriesDataset train = load_csv(cfg.dataset.train, cfg.dataset.schema);
      for (const auto& [name, path] : cfg.dataset.validation) validation[name] = load_csv(path, cfg.dataset.schema);
      return std::make_pair(std::move(train), std::move(validation));
    });

    auto filtered = stages.run("filter", [&] {
      std::map<std::string, TimeSeriesDataset> out;
      out["train"] = preprocess(train_raw, cfg, true, false);
      for (const auto& [name, ds] : validation_raw) out[name] = preprocess(ds, cfg, true, false);
      return out;
    });

    const auto datasets = stages.run("resample", [&] {
      std::map<std::string, TimeSeriesDataset> out;
      for (const auto& [name, ds] : filtered) out[name] = preprocess(ds, cfg, false, true);
      return out;
    });

    const auto tables = stages.run("embed", [&] {
      std::map<std::string, RegressorTable> out;
      for (const auto& [name, ds] : datasets) {
        out[name] = build_regressors(ds, cfg.lags);
        if (out[name].dropped_rows > 0) {
          warnings.push_back(fmt::format("{}: dropped {} non-finite rows", name, out[name].dropped_rows));
        }
      }
      return out;
    });
    const RegressorTable& table = tables.at("train");

    const SubsetResult subset = stages.run("select", [&] {
      SelectionConfig sel = cfg.selection;
      sel.seed = derive_seed(cfg.seed, "selection");
      sel.threads = cfg.threads;
      SubsetResult r = select_spacefilling(table, sel);
      write_json(cfg.out / "subset.json", to_json(r));
      write_indices_csv(cfg.out / "subset_indices.csv", r);
      return r;
    });

    auto [model, train_report] = stages.run("train", [&] {
      std::vector<Index> sizes{table.dimension()};
      sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
      sizes.push_back(1);
      const FnnModel init = fnn_init(sizes, derive_seed(cfg.seed, "init-0"));
      auto trained = lm_train(init, table.subset(subset.indices), cfg.training);
      write_json(cfg.out / "model.json", to_json(trained.first));
      for (const auto& w : trained.second.warnings) warnings.push_back(w);
      return trained;
    });

    stages.run("evaluate", [&] {
      EvalReport report;
      for (const auto& [name, tab] : tables) {
        const TimeSeriesDataset& ds = datasets.at(name);
        const Eigen::VectorXd t = origin_times(ds, tab);
        const Eigen::VectorXd one_step = predict_one_step(model, tab);
        report.nrmse_by_dataset[name + "_one_step"] = nrmse(tab.y, one_step, cfg.normalizer);
        write_trace(cfg.out / fmt::format("prediction_{}.csv", name), t, tab.y, one_step);

        // Closed loop starts from the measured outputs preceding the first row.
        const Eigen::VectorXd& y = ds.at(cfg.lags.output).v;
        const Index k0 = cfg.lags.max_lag();
        const Index ylag = cfg.lags.max_output_lag();
        const Eigen::VectorXd y_init = y.segment(k0 - ylag, ylag);
        try {
          const Signal sim = simulate_closed_loop(model, ds, cfg.lags, y_init);
          const Eigen::VectorXd measured = y.tail(sim.size());
          report.nrmse_by_dataset[name + "_closed_loop"] = nrmse(measured, sim.v, cfg.normalizer);
          write_trace(cfg.out / fmt::format("simulation_{}.csv", name), sim.t, measured, sim.v);
        } catch (const DivergenceError& e) {
          warnings.push_back(fmt::format("{}: {}", name, e.what()));
        }
      }
      const auto [normalized, map] = normalize_minmax(table.X);
      report.lambda_values["all"] = coverage_lambda(normalized, cfg.threads);
      report.lambda_values["subset"] = subset.lambda_subset;
      report.subset_sizes["all"] = table.rows();
      report.subset_sizes["subset"] = subset.size();
      report.subset_sizes["design"] = subset.n_design;
      report.validate();
      result.report = to_json(report);
      write_json(cfg.out / "eval_report.json", result.report);
      write_json(cfg.out / "training.json",
                 {{"final_sse", train_report.final_sse},
                  {"epochs", train_report.epochs},
                  {"stop_reason", to_string(train_report.stop_reason)},
                  {"warnings", train_report.warnings}});
    });

    result.train_wall_time = train_report.wall_time;
    const json timing{{"train_wall_time", train_report.wall_time}, {"stage_seconds", stages.seconds()}};
    write_json(cfg.out / "timing.json", timing);
    write_manifest(cfg.out, true, {{"stages_completed", stages.completed()}, {"warnings", warnings}});
    print_summary(result.report, timing);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.get<std::string>().c_str());
  } catch (const StageError& e) {
    try {
      if (fs::exists(cfg.out)) {
        write_manifest(cfg.out, false,
                       {{"stages_completed", stages.completed()},
                        {"failed_stage", e.stage()},
                        {"error", e.what()},
                        {"warnings", warnings}});
      }
    } catch (const std::exception&) {
      // The stage error is the one worth reporting.
    }
    throw;
  }
  return result;
}

}  // namespace spacefill
