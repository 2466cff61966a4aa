#include "spacefill/app.hpp"
#include "spacefill/io.hpp"

#include "support.hpp"

#include <cstdlib>
#include <string>

using namespace spacefill;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + SPACEFILL_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return status == 0 ? 0 : 1;
}

// Small enough to run in seconds: two minutes of training log, one of validation.
RunConfig small_config(const fs::path& out) {
  RunConfig cfg = run_config_from_json(json::parse(R"({
    "seed": 5,
    "model": {"hidden": [4]},
    "selection": {"alpha": 0.005, "volume_samples": 20000},
    "training": {"max_epochs": 15},
    "synth": {"train_duration": 120, "validation_duration": 60}
  })"));
  cfg.out = out;
  return cfg;
}

}  // namespace

TEST_CASE("config: defaults, overrides and relative paths") {
  const RunConfig defaults = run_config_from_json(json::object());
  CHECK(defaults.hidden == std::vector<Index>{22});
  CHECK(defaults.selection.alpha == 0.01);
  CHECK(*defaults.preprocessing.cutoff_hz == 5.0);

  const RunConfig cfg = run_config_from_json(json::parse(R"({
    "dataset": {"train": "logs/train.csv", "validation": {"v1": "/abs/v1.csv"}},
    "preprocessing": {"cutoff_hz": null},
    "selection": {"method": "lhs"},
    "out": "run"
  })"), "/base");
  CHECK(cfg.dataset.train == fs::path("/base/logs/train.csv"));
  CHECK(cfg.dataset.validation.at("v1") == fs::path("/abs/v1.csv"));
  CHECK(cfg.out == fs::path("/base/run"));
  CHECK_FALSE(cfg.preprocessing.cutoff_hz);
  CHECK(cfg.selection.method == SelectionMethod::lhs);

  const RunConfig back = run_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
}

TEST_CASE("config: unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"selction": {}})")), PreconditionError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"training": {"epochs": 3}})")), PreconditionError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"selection": {"alpha": 0}})")), PreconditionError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"model": {"hidden": []}})")), PreconditionError);
  const fs::path dir = testing::scratch_dir("config-parse");
  CHECK_THROWS_AS(load_run_config(testing::write_file(dir / "bad.json", "{ not json")), ParseError);
}

TEST_CASE("synth then pipeline writes a complete, reproducible run") {
  const fs::path dir = testing::scratch_dir("pipeline");
  RunConfig cfg = small_config(dir / "data");
  const auto written = cmd_synth(cfg);
  REQUIRE(written.size() == 4);
  for (const auto& p : written) CHECK(fs::exists(p));

  RunConfig run = load_run_config(dir / "data" / "pipeline.json");
  CHECK(run.dataset.train == dir / "data" / "train.csv");
  run.out = dir / "first";
  const PipelineResult first = cmd_pipeline(run);
  for (const char* name : {"config.json", "subset.json", "subset_indices.csv", "model.json", "eval_report.json",
                           "training.json", "timing.json", "manifest.json", "prediction_train.csv",
                           "prediction_validation2.csv"}) {
    CAPTURE(name);
    CHECK(fs::exists(run.out / name));
  }
  const json manifest = json::parse(read_text(run.out / "manifest.json"));
  CHECK(manifest.at("complete") == true);
  CHECK(manifest.at("stages_completed").size() == 8);
  bool listed = false;
  for (const json& f : manifest.at("files")) {
    CHECK(f.at("sha256") == sha256_file(run.out / f.at("path").get<std::string>()));
    listed = listed || f.at("path") == "eval_report.json";
  }
  CHECK(listed);

  const json report = json::parse(read_text(run.out / "eval_report.json"));
  CHECK(report == first.report);
  CHECK(report.at("nrmse_by_dataset").contains("validation1_one_step"));
  CHECK(report.at("subset_sizes").at("subset").get<Index>() <= report.at("subset_sizes").at("design").get<Index>());
  CHECK_FALSE(report.contains("train_wall_time"));
  CHECK(first.train_wall_time > 0.0);

  run.out = dir / "second";
  cmd_pipeline(run);
  CHECK(read_text(dir / "first" / "eval_report.json") == read_text(dir / "second" / "eval_report.json"));
  CHECK(read_text(dir / "first" / "subset_indices.csv") == read_text(dir / "second" / "subset_indices.csv"));
}

TEST_CASE("pipeline: a missing CSV names the stage and the path") {
  const fs::path dir = testing::scratch_dir("missing");
  RunConfig cfg = small_config(dir / "out");
  cfg.dataset.train = dir / "nowhere.csv";
  try {
    cmd_pipeline(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
    CHECK(std::string(e.what()).find("nowhere.csv") != std::string::npos);
  }
  const json manifest = json::parse(read_text(dir / "out" / "manifest.json"));
  CHECK(manifest.at("complete") == false);
  CHECK(manifest.at("failed_stage") == "load");
}

TEST_CASE("command line: exit codes and outputs") {
  const fs::path dir = testing::scratch_dir("cli");
  const fs::path log = dir / "log.txt";
  testing::write_file(dir / "cfg.json", to_json(small_config(dir / "data")).dump());

  CHECK(run_cli("synth --config \"" + (dir / "cfg.json").string() + "\" --out \"" + (dir / "data").string() + "\"", log) == 0);
  CHECK(fs::exists(dir / "data" / "pipeline.json"));

  CHECK(run_cli("pipeline --config \"" + (dir / "data" / "pipeline.json").string() + "\" --out \"" +
                    (dir / "run").string() + "\"",
                log) == 0);
  CHECK(fs::exists(dir / "run" / "eval_report.json"));

  CHECK(run_cli("select --config \"" + (dir / "data" / "pipeline.json").string() + "\" --out \"" +
                    (dir / "sel").string() + "\"",
                log) == 0);
  CHECK(read_text(dir / "sel" / "subset_indices.csv") == read_text(dir / "run" / "subset_indices.csv"));

  testing::write_file(dir / "points.csv", "i,x\n0,0\n1,0.4\n2,1\n");
  CHECK(run_cli("coverage --input \"" + (dir / "points.csv").string() + "\"", log) == 0);
  CHECK(json::parse(read_text(log)).at("lambda").get<double>() == doctest::Approx(0.20203).epsilon(1e-4));

  json broken = to_json(small_config(dir / "broken"));
  broken["dataset"]["train"] = (dir / "absent.csv").string();
  testing::write_file(dir / "broken.json", broken.dump());
  CHECK(run_cli("pipeline --config \"" + (dir / "broken.json").string() + "\"", log) != 0);
  CHECK(read_text(log).find("absent.csv") != std::string::npos);

  CHECK(run_cli("camel --restarts 1 --out \"" + (dir / "camel").string() + "\"", log) != 0);
  CHECK(run_cli("select --alpha 2", log) != 0);
  CHECK(run_cli("frobnicate", log) != 0);
}
