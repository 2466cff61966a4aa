#ifndef SPACEFILL_APP_HPP
#define SPACEFILL_APP_HPP

// Command layer behind the `spacefill` executable: configuration, the end-to-end
// pipeline and the two experiments.

#include "spacefill/dataset.hpp"
#include "spacefill/embedding.hpp"
#include "spacefill/lm.hpp"
#include "spacefill/select.hpp"
#include "spacefill/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spacefill {

/// Synthetic battery scenario: one training drive cycle and two validation runs.
struct BatteryScenario {
  EcmParams ecm;
  SensorResolution sensors;
  DriveProfile profile;             ///< training and validation 1; seeds are derived
  double train_duration = 2400.0;   ///< s
  double validation_duration = 1200.0;
  double soc0 = 0.8;
  double temp_mean = 298.15;        ///< K
  double temp_amplitude = 3.0;
  double temp_period = 1800.0;      ///< s
  // Validation 2: sustained current staircase at a shifted temperature.
  std::vector<double> stair_levels{10.0, 20.0, 30.0, 40.0};  ///< A
  double stair_step = 30.0;         ///< s
  double stair_rest = 60.0;         ///< s
  double stair_temp_offset = -2.0;  ///< K relative to temp_mean
  double stair_soc0 = 0.7;
  double cutoff_hz = 5.0;
  double rate_hz = 10.0;
};

void read_battery_scenario(const nlohmann::json& j, BatteryScenario& sc);
nlohmann::json battery_scenario_json(const BatteryScenario& sc);

struct RunConfig {
  struct Dataset {
    std::filesystem::path train;
    std::map<std::string, std::filesystem::path> validation;
    CsvSchema schema;  ///< CSV column -> signal name; empty = identity
  } dataset;
  struct Preprocessing {
    std::optional<double> cutoff_hz = 5.0;  ///< empty: no filtering
    std::optional<double> rate_hz = 10.0;   ///< empty: keep the input grid
  } preprocessing;
  LagSpec lags = LagSpec::narx_default();
  std::vector<Index> hidden{22};
  SelectionConfig selection;
  TrainConfig training;
  double normalizer = 3.6;
  BatteryScenario synth;
  std::filesystem::path out = "spacefill-out";
  std::uint64_t seed = 0;
  unsigned threads = 0;

  /// Throws PreconditionError on invalid values.
  void validate() const;
};

/// Parses a JSON config. Relative paths are resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// A stage failure: `stage` names the step, what() carries the cause.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineResult {
  std::filesystem::path out_dir;
  nlohmann::json report;  ///< EvalReport JSON as written to eval_report.json
  double train_wall_time = 0.0;
};

/// load -> filter -> resample -> embed -> select -> train -> evaluate.
/// Writes model.json, subset.json, subset_indices.csv, eval_report.json (deterministic),
/// timing.json, prediction/simulation CSVs and manifest.json. On failure the manifest
/// is written with "complete": false and the failing stage, and StageError is thrown.
PipelineResult cmd_pipeline(const RunConfig& cfg);

struct CamelSummary {
  struct PerModel {
    double mean_train_nrmse = 0.0;
    double mean_validation_nrmse = 0.0;
    double mean_wall_time = 0.0;
    std::vector<double> train_nrmse;       ///< per restart, in restart order
    std::vector<double> validation_nrmse;
  };
  PerModel a;
  PerModel b;
  Index cluster_center = 0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
};

struct CamelOptions {
  std::uint64_t seed = 0;
  int restarts = 25;
  std::vector<Index> hidden{22};
  TrainConfig training;
  unsigned threads = 0;
};

/// Trains `restarts` models on Model A (49 maximin points) and Model B (plus 16
/// clustered points); errors are normalized by the validation-grid target spread.
CamelSummary run_camel(const CamelOptions& opt);
nlohmann::json to_json(const CamelSummary& s);

struct BatteryOptions {
  std::uint64_t seed = 0;
  int restarts = 3;
  double alpha = 0.01;
  BatteryScenario scenario;
  std::vector<Index> hidden{22};
  TrainConfig training;
  double normalizer = 3.6;
  unsigned threads = 0;
};

struct BatteryData {
  TimeSeriesDataset train;
  TimeSeriesDataset validation1;  ///< fresh drive cycle
  TimeSeriesDataset validation2;  ///< staircase, shifted temperature
};

/// Seeds derive from `seed` by name ("profile", "validation-1", ...). By default the
/// excitation is filtered and resampled before the ECM runs (experiment data); with
/// raw_logs the ECM runs on the excitation grid, giving logger-style files for the
/// pipeline.
BatteryData make_battery_data(const BatteryScenario& sc, std::uint64_t seed, bool raw_logs = false);

/// Writes train.csv, validation1.csv, validation2.csv (raw logs) and a pipeline.json
/// that points at them. Returns the written paths.
std::vector<std::filesystem::path> cmd_synth(const RunConfig& cfg);

struct BatterySummary {
  struct PerDataset {
    Index rows = 0;
    double lambda = 0.0;
    std::vector<double> train_time;                  ///< per restart, seconds
    std::map<std::string, std::vector<double>> nrmse;  ///< validation -> per restart (NaN = diverged)
    std::map<std::string, double> mean_nrmse;        ///< over non-diverged restarts
    std::map<std::string, int> diverged;
    double mean_train_time = 0.0;
  };
  std::map<std::string, PerDataset> datasets;  ///< all, sobol, lhs, random
  double log_density_validation1 = 0.0;        ///< mean log-density under the training KDE
  double log_density_validation2 = 0.0;
};

/// Trains `restarts` models on all data and on sobol, lhs and random subsets, then
/// simulates both validation sets in closed loop. Plot data goes to out_dir if set.
BatterySummary run_battery(const BatteryOptions& opt,
                           const std::optional<std::filesystem::path>& out_dir = std::nullopt);
/// Deterministic part of the summary (no wall times).
nlohmann::json to_json(const BatterySummary& s);

/// Writes a manifest listing every file under dir (except the manifest) with its SHA-256.
void write_manifest(const std::filesystem::path& dir, bool complete,
                    const nlohmann::json& extra = nlohmann::json::object());

}  // namespace spacefill

#endif  // SPACEFILL_APP_HPP
