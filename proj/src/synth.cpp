#include "spacefill/synth.hpp"

#include "spacefill/design.hpp"
#include "spacefill/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace spacefill {

double camel(double x1, double x2) {
  const double a = x1 * x1;
  const double b = x2 * x2;
  return (4.0 - 2.1 * a + a * a / 3.0) * a + x1 * x2 + (-4.0 + 4.0 * b) * b;
}

namespace {

RegressorTable camel_table(const PointCloud& X) {
  Eigen::VectorXd y(X.rows());
  for (Index i = 0; i < X.rows(); ++i) y(i) = camel(X(i, 0), X(i, 1));
  return make_static_table(X, std::move(y), {"x1", "x2"});
}

}  // namespace

CamelExperiment gen_camel_experiment(std::uint64_t seed) {
  constexpr Index kGridX1 = 81;  // step 0.05 over [-2, 2]
  constexpr Index kGridX2 = 41;  // step 0.05 over [-1, 1]
  constexpr Index kDesign = 49;
  constexpr Index kCluster = 16;
  constexpr double kRadius = 0.02;

  PointCloud candidates(kGridX1 * kGridX2, 2);
  for (Index i = 0; i < kGridX1; ++i) {
    for (Index j = 0; j < kGridX2; ++j) {
      candidates(i * kGridX2 + j, 0) =
          kCamelX1Min + (kCamelX1Max - kCamelX1Min) * static_cast<double>(i) / (kGridX1 - 1);
      candidates(i * kGridX2 + j, 1) =
          kCamelX2Min + (kCamelX2Max - kCamelX2Min) * static_cast<double>(j) / (kGridX2 - 1);
    }
  }
  const auto picked = greedy_maximin(candidates, kDesign);
  PointCloud a(kDesign, 2);
  for (Index i = 0; i < kDesign; ++i) a.row(i) = candidates.row(picked[std::size_t(i)]);

  Rng rng(seed);
  CamelExperiment ex;
  ex.cluster_center = static_cast<Index>(rng.below(kDesign));
  PointCloud b(kDesign + kCluster, 2);
  b.topRows(kDesign) = a;
  for (Index i = 0; i < kCluster; ++i) {
    const double r = kRadius * std::sqrt(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    b(kDesign + i, 0) = a(ex.cluster_center, 0) + r * std::cos(phi);
    b(kDesign + i, 1) = a(ex.cluster_center, 1) + r * std::sin(phi);
  }

  constexpr Index kValidation = 50;
  PointCloud v(kValidation * kValidation, 2);
  for (Index i = 0; i < kValidation; ++i) {
    for (Index j = 0; j < kValidation; ++j) {
      v(i * kValidation + j, 0) =
          kCamelX1Min + (kCamelX1Max - kCamelX1Min) * static_cast<double>(i) / (kValidation - 1);
      v(i * kValidation + j, 1) =
          kCamelX2Min + (kCamelX2Max - kCamelX2Min) * static_cast<double>(j) / (kValidation - 1);
    }
  }

  ex.model_a = camel_table(a);
  ex.model_b = camel_table(b);
  ex.validation = camel_table(v);
  return ex;
}

void EcmParams::validate() const {
  if (!(capacity_ah > 0 && r0_ref > 0 && r1 > 0 && c1 > 0 && r2 > 0 && c2 > 0 && t_ref > 0 &&
        nominal_voltage > 0)) {
    throw PreconditionError("EcmParams: capacity, resistances and capacitances must be positive");
  }
  if (ocv_table.size() < 2) throw PreconditionError("EcmParams: OCV table needs two entries");
  for (std::size_t i = 1; i < ocv_table.size(); ++i) {
    if (!(ocv_table[i].first > ocv_table[i - 1].first) ||
        !(ocv_table[i].second > ocv_table[i - 1].second)) {
      throw PreconditionError("EcmParams: OCV table must increase in SOC and voltage");
    }
  }
}

double EcmParams::ocv(double soc) const {
  if (soc <= ocv_table.front().first) return ocv_table.front().second;
  if (soc >= ocv_table.back().first) return ocv_table.back().second;
  const auto hi = std::upper_bound(ocv_table.begin(), ocv_table.end(), soc,
                                   [](double s, const auto& e) { return s < e.first; });
  const auto lo = hi - 1;
  const double w = (soc - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

double EcmParams::r0(double temperature) const {
  return r0_ref * std::exp(temp_coeff * (t_ref - temperature));
}

TimeSeriesDataset ecm_simulate(const EcmParams& params, const Signal& current, const Signal& temp,
                               double soc0) {
  params.validate();
  validate(current);
  validate(temp);
  if (!(soc0 >= 0.0 && soc0 <= 1.0)) throw PreconditionError("ecm_simulate: soc0 must be in [0, 1]");
  if (current.t.size() != temp.t.size() || current.t != temp.t) {
    throw PreconditionError("ecm_simulate: current and temperature must share one grid");
  }
  const auto rate = uniform_rate(current.t);
  if (!rate) throw PreconditionError("ecm_simulate: excitation must be uniformly sampled");

  const double dt = 1.0 / *rate;
  const Index n = current.size();
  Eigen::VectorXd soc(n), y(n);
  double u1 = 0.0, u2 = 0.0, s = soc0;
  Index length = n;
  for (Index k = 0; k < n; ++k) {
    if (s < 0.0 || s > 1.0) {
      std::fprintf(stderr, "warning: ecm_simulate: SOC left [0, 1] at t = %.3f s; truncating\n",
                   current.t(k));
      length = k;
      break;
    }
    const double i = current.v(k);
    soc(k) = s;
    y(k) = params.ocv(s) - params.r0(temp.v(k)) * i - u1 - u2;
    u1 += dt * (-u1 / (params.r1 * params.c1) + i / params.c1);
    u2 += dt * (-u2 / (params.r2 * params.c2) + i / params.c2);
    s -= dt * i / (3600.0 * params.capacity_ah);
  }
  if (length < 2) throw StructuralError("ecm_simulate: SOC out of range from the start");

  auto channel = [&](const char* name, const char* unit, const Eigen::VectorXd& v) {
    Signal out;
    out.name = name;
    out.unit = unit;
    out.t = current.t.head(length);
    out.v = v.head(length);
    return out;
  };
  TimeSeriesDataset ds;
  ds.signals.emplace("u1", channel("u1", "A", current.v));
  ds.signals.emplace("u2", channel("u2", "K", temp.v));
  ds.signals.emplace("u3", channel("u3", "1", soc));
  ds.signals.emplace("y", channel("y", "V", y));
  ds.refresh_rate();
  return ds;
}

void DriveProfile::validate() const {
  if (!(duration > 0 && rate_hz > 0 && max_current > 0)) {
    throw PreconditionError("DriveProfile: duration, rate and max current must be positive");
  }
  if (!(rest_share >= 0.0 && rest_share <= 1.0)) {
    throw PreconditionError("DriveProfile: rest_share must lie in [0, 1]");
  }
  for (const SegmentShape* s : {&accel, &brake, &cruise}) {
    if (!(s->duration_min > 0 && s->duration_max >= s->duration_min && s->weight >= 0 &&
          s->amplitude_max >= s->amplitude_min && std::abs(s->amplitude_min) <= 1.0 &&
          std::abs(s->amplitude_max) <= 1.0)) {
      throw PreconditionError("DriveProfile: invalid segment shape");
    }
  }
  if (!(accel.weight + brake.weight + cruise.weight > 0)) {
    throw PreconditionError("DriveProfile: segment weights sum to zero");
  }
}

namespace {

Signal uniform_grid_signal(const char* name, const char* unit, double duration, double rate_hz) {
  const auto n = static_cast<Index>(std::floor(duration * rate_hz)) + 1;
  if (n < 2) throw PreconditionError("profile: duration shorter than one sample");
  Signal s;
  s.name = name;
  s.unit = unit;
  s.t.resize(n);
  for (Index k = 0; k < n; ++k) s.t(k) = static_cast<double>(k) / rate_hz;
  s.v = Eigen::VectorXd::Zero(n);
  return s;
}

}  // namespace

Signal gen_drive_profile(const DriveProfile& p) {
  p.validate();
  Signal s = uniform_grid_signal("u1", "A", p.duration, p.rate_hz);
  const Index n = s.size();
  const auto active_samples =
      static_cast<Index>(std::llround((1.0 - p.rest_share) * static_cast<double>(n)));
  Rng rng(p.seed);

  struct Segment {
    const SegmentShape* shape;
    Index length;
    double amplitude;
    double ripple_phase;
  };
  std::vector<Segment> segments;
  Index total = 0;
  const double weights = p.accel.weight + p.brake.weight + p.cruise.weight;
  while (total < active_samples) {
    const double pick = rng.uniform() * weights;
    const SegmentShape* shape = pick < p.accel.weight                  ? &p.accel
                                : pick < p.accel.weight + p.brake.weight ? &p.brake
                                                                         : &p.cruise;
    const double seconds = rng.uniform(shape->duration_min, shape->duration_max);
    auto length = std::max<Index>(1, static_cast<Index>(std::llround(seconds * p.rate_hz)));
    length = std::min(length, active_samples - total);
    const double amplitude = rng.uniform(shape->amplitude_min, shape->amplitude_max) * p.max_current;
    segments.push_back({shape, length, amplitude, 2.0 * std::numbers::pi * rng.uniform()});
    total += length;
  }

  // Split the rest budget into one gap before each segment plus a trailing gap.
  const Index rest_samples = n - active_samples;
  std::vector<double> gap_weights(segments.size() + 1);
  for (double& w : gap_weights) w = 0.2 + rng.uniform();
  const double gap_total = std::accumulate(gap_weights.begin(), gap_weights.end(), 0.0);
  std::vector<Index> gaps(gap_weights.size());
  Index assigned = 0;
  for (std::size_t g = 0; g < gaps.size(); ++g) {
    gaps[g] = static_cast<Index>(std::floor(gap_weights[g] / gap_total * static_cast<double>(rest_samples)));
    assigned += gaps[g];
  }
  gaps.back() += rest_samples - assigned;

  Index k = 0;
  for (std::size_t g = 0; g < segments.size(); ++g) {
    k += gaps[g];
    const Segment& seg = segments[g];
    const auto ramp = std::max<Index>(1, static_cast<Index>(0.5 * p.rate_hz));
    for (Index i = 0; i < seg.length; ++i) {
      const double progress = static_cast<double>(i) / static_cast<double>(seg.length);
      const double edge = std::min({1.0, static_cast<double>(i + 1) / static_cast<double>(ramp),
                                    static_cast<double>(seg.length - i) / static_cast<double>(ramp)});
      double value = seg.amplitude * edge;
      if (seg.shape == &p.cruise) {
        value *= 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * 0.05 * static_cast<double>(i) / p.rate_hz +
                                      seg.ripple_phase);
      } else {
        value *= 1.0 - 0.3 * progress;  // pulses fade as speed builds or drops
      }
      value += p.jitter * p.max_current * rng.normal() * edge;
      s.v(k + i) = std::clamp(value, -p.max_current, p.max_current);
    }
    k += seg.length;
  }
  return s;
}

Signal gen_staircase_profile(double duration, double rate_hz, const std::vector<double>& levels,
                             double step_seconds, double rest_seconds) {
  if (levels.empty() || !(step_seconds > 0) || rest_seconds < 0) {
    throw PreconditionError("gen_staircase_profile: invalid staircase");
  }
  Signal s = uniform_grid_signal("u1", "A", duration, rate_hz);
  std::vector<std::pair<double, double>> pattern;  // (current, seconds)
  for (double level : levels) pattern.emplace_back(level, step_seconds);
  pattern.emplace_back(0.0, rest_seconds);
  for (double level : levels) pattern.emplace_back(-level, step_seconds);
  pattern.emplace_back(0.0, rest_seconds);
  double cycle = 0.0;
  for (const auto& [level, seconds] : pattern) cycle += seconds;

  for (Index k = 0; k < s.size(); ++k) {
    double phase = std::fmod(s.t(k), cycle);
    for (const auto& [level, seconds] : pattern) {
      if (phase < seconds) {
        s.v(k) = level;
        break;
      }
      phase -= seconds;
    }
  }
  return s;
}

Signal gen_temperature_trace(const Signal& like, double mean_k, double amplitude_k,
                             double period_s, std::uint64_t seed) {
  if (!(period_s > 0)) throw PreconditionError("gen_temperature_trace: period must be positive");
  Rng rng(seed);
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  const double drift_phase = 2.0 * std::numbers::pi * rng.uniform();
  Signal s;
  s.name = "u2";
  s.unit = "K";
  s.t = like.t;
  s.v.resize(like.size());
  for (Index k = 0; k < like.size(); ++k) {
    const double w = 2.0 * std::numbers::pi * like.t(k) / period_s;
    s.v(k) = mean_k + amplitude_k * std::sin(w + phase) + 0.3 * amplitude_k * std::sin(3.1 * w + drift_phase);
  }
  return s;
}

void quantize(Signal& s, double step) {
  if (step < 0) throw PreconditionError("quantize: negative step");
  if (step == 0) return;
  s.v = (s.v / step).array().round() * step;
}

namespace {

void quantize_channels(TimeSeriesDataset& ds, const SensorResolution& sensors) {
  quantize(ds.signals.at("u1"), sensors.current);
  quantize(ds.signals.at("u2"), sensors.temperature);
  quantize(ds.signals.at("u3"), sensors.soc);
  quantize(ds.signals.at("y"), sensors.voltage);
}

}  // namespace

TimeSeriesDataset synthesize_battery_dataset(const EcmParams& params, const Signal& current,
                                             const Signal& temp, double soc0, double cutoff_hz,
                                             double rate_hz, const SensorResolution& sensors) {
  const Signal i = resample_linear(lowpass_filter(current, cutoff_hz), rate_hz);
  const Signal t = resample_linear(lowpass_filter(temp, cutoff_hz), rate_hz);
  TimeSeriesDataset ds = ecm_simulate(params, i, t, soc0);
  quantize_channels(ds, sensors);
  return ds;
}

TimeSeriesDataset record_battery_log(const EcmParams& params, const Signal& current,
                                     const Signal& temp, double soc0,
                                     const SensorResolution& sensors) {
  TimeSeriesDataset ds = ecm_simulate(params, current, temp, soc0);
  quantize_channels(ds, sensors);
  return ds;
}

}  // namespace spacefill
