#include "spacefill/app.hpp"

#include "spacefill/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace spacefill {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Unknown keys are almost always typos; reject them instead of silently ignoring.
void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw PreconditionError("config: '" + section + "' must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw PreconditionError(fmt::format("config: unknown key '{}' in '{}'", it.key(), section));
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_optional(const json& j, const char* key, std::optional<double>& out) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
  } else {
    out = j.at(key).get<double>();
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

void read_segment(const json& j, const std::string& name, SegmentShape& s) {
  check_keys(j, name, {"amplitude_min", "amplitude_max", "duration_min", "duration_max", "weight"});
  read(j, "amplitude_min", s.amplitude_min);
  read(j, "amplitude_max", s.amplitude_max);
  read(j, "duration_min", s.duration_min);
  read(j, "duration_max", s.duration_max);
  read(j, "weight", s.weight);
}

json segment_json(const SegmentShape& s) {
  return {{"amplitude_min", s.amplitude_min}, {"amplitude_max", s.amplitude_max},
          {"duration_min", s.duration_min},   {"duration_max", s.duration_max},
          {"weight", s.weight}};
}

}  // namespace

void read_battery_scenario(const json& j, BatteryScenario& sc) {
  check_keys(j, "synth",
             {"ecm", "sensors", "profile", "train_duration", "validation_duration", "soc0",
              "temp_mean", "temp_amplitude", "temp_period", "stair_levels", "stair_step",
              "stair_rest", "stair_temp_offset", "stair_soc0", "cutoff_hz", "rate_hz"});
  if (j.contains("ecm")) {
    const json& e = j.at("ecm");
    check_keys(e, "synth.ecm", {"capacity_ah", "r0_ref", "r1", "c1", "r2", "c2", "ocv_table",
                                "temp_coeff", "t_ref", "nominal_voltage"});
    read(e, "capacity_ah", sc.ecm.capacity_ah);
    read(e, "r0_ref", sc.ecm.r0_ref);
    read(e, "r1", sc.ecm.r1);
    read(e, "c1", sc.ecm.c1);
    read(e, "r2", sc.ecm.r2);
    read(e, "c2", sc.ecm.c2);
    read(e, "ocv_table", sc.ecm.ocv_table);
    read(e, "temp_coeff", sc.ecm.temp_coeff);
    read(e, "t_ref", sc.ecm.t_ref);
    read(e, "nominal_voltage", sc.ecm.nominal_voltage);
  }
  if (j.contains("sensors")) {
    const json& s = j.at("sensors");
    check_keys(s, "synth.sensors", {"current", "temperature", "soc", "voltage"});
    read(s, "current", sc.sensors.current);
    read(s, "temperature", sc.sensors.temperature);
    read(s, "soc", sc.sensors.soc);
    read(s, "voltage", sc.sensors.voltage);
  }
  if (j.contains("profile")) {
    const json& p = j.at("profile");
    check_keys(p, "synth.profile",
               {"rate_hz", "max_current", "rest_share", "jitter", "accel", "brake", "cruise"});
    read(p, "rate_hz", sc.profile.rate_hz);
    read(p, "max_current", sc.profile.max_current);
    read(p, "rest_share", sc.profile.rest_share);
    read(p, "jitter", sc.profile.jitter);
    if (p.contains("accel")) read_segment(p.at("accel"), "synth.profile.accel", sc.profile.accel);
    if (p.contains("brake")) read_segment(p.at("brake"), "synth.profile.brake", sc.profile.brake);
    if (p.contains("cruise")) read_segment(p.at("cruise"), "synth.profile.cruise", sc.profile.cruise);
  }
  read(j, "train_duration", sc.train_duration);
  read(j, "validation_duration", sc.validation_duration);
  read(j, "soc0", sc.soc0);
  read(j, "temp_mean", sc.temp_mean);
  read(j, "temp_amplitude", sc.temp_amplitude);
  read(j, "temp_period", sc.temp_period);
  read(j, "stair_levels", sc.stair_levels);
  read(j, "stair_step", sc.stair_step);
  read(j, "stair_rest", sc.stair_rest);
  read(j, "stair_temp_offset", sc.stair_temp_offset);
  read(j, "stair_soc0", sc.stair_soc0);
  read(j, "cutoff_hz", sc.cutoff_hz);
  read(j, "rate_hz", sc.rate_hz);
}

json battery_scenario_json(const BatteryScenario& sc) {
  return {
      {"ecm",
       {{"capacity_ah", sc.ecm.capacity_ah},
        {"r0_ref", sc.ecm.r0_ref},
        {"r1", sc.ecm.r1},
        {"c1", sc.ecm.c1},
        {"r2", sc.ecm.r2},
        {"c2", sc.ecm.c2},
        {"ocv_table", sc.ecm.ocv_table},
        {"temp_coeff", sc.ecm.temp_coeff},
        {"t_ref", sc.ecm.t_ref},
        {"nominal_voltage", sc.ecm.nominal_voltage}}},
      {"sensors",
       {{"current", sc.sensors.current},
        {"temperature", sc.sensors.temperature},
        {"soc", sc.sensors.soc},
        {"voltage", sc.sensors.voltage}}},
      {"profile",
       {{"rate_hz", sc.profile.rate_hz},
        {"max_current", sc.profile.max_current},
        {"rest_share", sc.profile.rest_share},
        {"jitter", sc.profile.jitter},
        {"accel", segment_json(sc.profile.accel)},
        {"brake", segment_json(sc.profile.brake)},
        {"cruise", segment_json(sc.profile.cruise)}}},
      {"train_duration", sc.train_duration},
      {"validation_duration", sc.validation_duration},
      {"soc0", sc.soc0},
      {"temp_mean", sc.temp_mean},
      {"temp_amplitude", sc.temp_amplitude},
      {"temp_period", sc.temp_period},
      {"stair_levels", sc.stair_levels},
      {"stair_step", sc.stair_step},
      {"stair_rest", sc.stair_rest},
      {"stair_temp_offset", sc.stair_temp_offset},
      {"stair_soc0", sc.stair_soc0},
      {"cutoff_hz", sc.cutoff_hz},
      {"rate_hz", sc.rate_hz},
  };
}

void RunConfig::validate() const {
  if (preprocessing.cutoff_hz && !(*preprocessing.cutoff_hz > 0)) {
    throw PreconditionError("config: preprocessing.cutoff_hz must be positive");
  }
  if (preprocessing.rate_hz && !(*preprocessing.rate_hz > 0)) {
    throw PreconditionError("config: preprocessing.rate_hz must be positive");
  }
  lags.validate();
  if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](Index h) { return h < 1; })) {
    throw PreconditionError("config: model.hidden needs at least one positive layer size");
  }
  selection.validate();
  training.validate();
  if (!(normalizer > 0)) throw PreconditionError("config: metrics.normalizer must be positive");
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  check_keys(j, "config", {"seed", "out", "threads", "dataset", "preprocessing", "lags", "model",
                           "selection", "training", "metrics", "synth"});
  RunConfig cfg;
  read(j, "seed", cfg.seed);
  read(j, "threads", cfg.threads);
  if (j.contains("out")) cfg.out = resolve(base_dir, j.at("out").get<std::string>());

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d, "dataset", {"train", "validation", "schema"});
    if (d.contains("train")) cfg.dataset.train = resolve(base_dir, d.at("train").get<std::string>());
    if (d.contains("validation")) {
      for (const auto& [name, path] : d.at("validation").items()) {
        cfg.dataset.validation[name] = resolve(base_dir, path.get<std::string>());
      }
    }
    read(d, "schema", cfg.dataset.schema);
  }
  if (j.contains("preprocessing")) {
    const json& p = j.at("preprocessing");
    check_keys(p, "preprocessing", {"cutoff_hz", "rate_hz"});
    read_optional(p, "cutoff_hz", cfg.preprocessing.cutoff_hz);
    read_optional(p, "rate_hz", cfg.preprocessing.rate_hz);
  }
  if (j.contains("lags")) {
    const json& l = j.at("lags");
    check_keys(l, "lags", {"inputs", "output", "output_lags"});
    if (l.contains("inputs")) {
      cfg.lags.inputs.clear();
      for (const json& term : l.at("inputs")) {
        check_keys(term, "lags.inputs[]", {"signal", "lags"});
        cfg.lags.inputs.push_back({term.at("signal").get<std::string>(), term.at("lags").get<std::vector<int>>()});
      }
    }
    read(l, "output", cfg.lags.output);
    read(l, "output_lags", cfg.lags.output_lags);
  }
  if (j.contains("model")) {
    check_keys(j.at("model"), "model", {"hidden"});
    read(j.at("model"), "hidden", cfg.hidden);
  }
  if (j.contains("selection")) {
    const json& s = j.at("selection");
    check_keys(s, "selection", {"alpha", "method", "volume_samples", "hull_subsample"});
    read(s, "alpha", cfg.selection.alpha);
    if (s.contains("method")) cfg.selection.method = parse_selection_method(s.at("method").get<std::string>());
    read(s, "volume_samples", cfg.selection.volume_samples);
    read(s, "hull_subsample", cfg.selection.hull_subsample);
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t, "training", {"max_epochs", "damping_init", "damping_up", "damping_down",
                               "damping_max", "stop_band", "stop_window"});
    read(t, "max_epochs", cfg.training.max_epochs);
    read(t, "damping_init", cfg.training.damping_init);
    read(t, "damping_up", cfg.training.damping_up);
    read(t, "damping_down", cfg.training.damping_down);
    read(t, "damping_max", cfg.training.damping_max);
    read(t, "stop_band", cfg.training.stop_band);
    read(t, "stop_window", cfg.training.stop_window);
  }
  if (j.contains("metrics")) {
    check_keys(j.at("metrics"), "metrics", {"normalizer"});
    read(j.at("metrics"), "normalizer", cfg.normalizer);
  }
  if (j.contains("synth")) read_battery_scenario(j.at("synth"), cfg.synth);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path.string() + "': " + e.what(), 0);
  }
  return run_config_from_json(j, path.parent_path());
}

json to_json(const RunConfig& cfg) {
  json inputs = json::array();
  for (const auto& term : cfg.lags.inputs) inputs.push_back({{"signal", term.signal}, {"lags", term.lags}});
  json validation = json::object();
  for (const auto& [name, path] : cfg.dataset.validation) validation[name] = path.string();
  auto optional = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {
      {"seed", cfg.seed},
      {"out", cfg.out.string()},
      {"threads", cfg.threads},
      {"dataset", {{"train", cfg.dataset.train.string()}, {"validation", validation}, {"schema", cfg.dataset.schema}}},
      {"preprocessing", {{"cutoff_hz", optional(cfg.preprocessing.cutoff_hz)}, {"rate_hz", optional(cfg.preprocessing.rate_hz)}}},
      {"lags", {{"inputs", inputs}, {"output", cfg.lags.output}, {"output_lags", cfg.lags.output_lags}}},
      {"model", {{"hidden", cfg.hidden}}},
      {"selection",
       {{"alpha", cfg.selection.alpha},
        {"method", to_string(cfg.selection.method)},
        {"volume_samples", cfg.selection.volume_samples},
        {"hull_subsample", cfg.selection.hull_subsample}}},
      {"training",
       {{"max_epochs", cfg.training.max_epochs},
        {"damping_init", cfg.training.damping_init},
        {"damping_up", cfg.training.damping_up},
        {"damping_down", cfg.training.damping_down},
        {"damping_max", cfg.training.damping_max},
        {"stop_band", cfg.training.stop_band},
        {"stop_window", cfg.training.stop_window}}},
      {"metrics", {{"normalizer", cfg.normalizer}}},
      {"synth", battery_scenario_json(cfg.synth)},
  };
}

}  // namespace spacefill
