#ifndef SPACEFILL_SYNTH_HPP
#define SPACEFILL_SYNTH_HPP

#include "spacefill/dataset.hpp"
#include "spacefill/embedding.hpp"
#include "spacefill/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace spacefill {

// ---------------------------------------------------------------------------
// Six-hump camel back function experiment

/// (4 - 2.1 x1^2 + x1^4 / 3) x1^2 + x1 x2 + (-4 + 4 x2^2) x2^2
double camel(double x1, double x2);

struct CamelExperiment {
  RegressorTable model_a;     ///< 49 greedy-maximin points
  RegressorTable model_b;     ///< model_a plus 16 points clustered around one of them
  RegressorTable validation;  ///< 50 x 50 grid over the domain
  Index cluster_center = 0;   ///< row of model_a the cluster surrounds
};

inline constexpr double kCamelX1Min = -2.0, kCamelX1Max = 2.0;
inline constexpr double kCamelX2Min = -1.0, kCamelX2Max = 1.0;

/// The seed picks the cluster center and the clustered points (radius 0.02 disc).
CamelExperiment gen_camel_experiment(std::uint64_t seed);

// ---------------------------------------------------------------------------
// 2RC equivalent-circuit battery

struct EcmParams {
  double capacity_ah = 10.0;
  double r0_ref = 0.010;    ///< ohm at t_ref
  double r1 = 0.005;        ///< ohm
  double c1 = 2000.0;       ///< farad (R1 C1 = 10 s)
  double r2 = 0.005;        ///< ohm
  double c2 = 20000.0;      ///< farad (R2 C2 = 100 s)
  std::vector<std::pair<double, double>> ocv_table{{0.0, 3.0}, {1.0, 4.2}};  ///< (SOC, V)
  double temp_coeff = 0.03;  ///< 1/K
  double t_ref = 298.15;     ///< K
  double nominal_voltage = 3.6;

  /// Throws PreconditionError on non-positive elements or a non-monotone OCV table.
  void validate() const;
  /// Piecewise-linear, clamped at the table ends.
  double ocv(double soc) const;
  double r0(double temperature) const;
};

/// Forward-Euler integration on the current's (uniform) grid. Discharge current is
/// positive. Output channels: u1 = current, u2 = temperature, u3 = SOC, y = voltage.
/// If SOC leaves [0, 1] the series is truncated there and a warning is printed.
TimeSeriesDataset ecm_simulate(const EcmParams& params, const Signal& current, const Signal& temp,
                               double soc0);

// ---------------------------------------------------------------------------
// Current profiles

struct SegmentShape {
  double amplitude_min;  ///< fraction of max_current (sign gives direction)
  double amplitude_max;
  double duration_min;   ///< seconds
  double duration_max;
  double weight;         ///< relative frequency among active segments
};

struct DriveProfile {
  double duration = 3600.0;  ///< s
  double rate_hz = 100.0;
  double max_current = 50.0;  ///< A
  double rest_share = 0.85;   ///< fraction of time at I = 0
  double jitter = 0.6;        ///< std of white load noise on active samples, fraction of max_current
  SegmentShape accel{0.3, 1.0, 3.0, 15.0, 0.35};
  SegmentShape brake{-0.9, -0.3, 4.0, 16.0, 0.35};
  SegmentShape cruise{-0.1, 0.25, 10.0, 60.0, 0.30};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Rests (I = 0) fill exactly rest_share of the duration, split at random between the
/// active segments; accel/brake pulses and cruise stretches fill the rest.
Signal gen_drive_profile(const DriveProfile& p);

/// Sustained current staircase: discharge steps up through `levels`, rest, charge
/// steps down through the same magnitudes, rest; repeated until `duration`.
Signal gen_staircase_profile(double duration, double rate_hz, const std::vector<double>& levels,
                             double step_seconds, double rest_seconds);

/// Slowly varying temperature trace in kelvin on the grid of `like`.
Signal gen_temperature_trace(const Signal& like, double mean_k, double amplitude_k,
                             double period_s, std::uint64_t seed);

/// Measurement resolution of a battery management system; 0 disables rounding.
struct SensorResolution {
  double current = 0.1;       ///< A
  double temperature = 0.1;   ///< K
  double soc = 0.001;
  double voltage = 0.001;     ///< V
};

/// Rounds every sample to the nearest multiple of `step` (no-op for step 0).
void quantize(Signal& s, double step);

/// Filters (cutoff_hz) and resamples (rate_hz) the excitation, integrates the ECM on the
/// resampled grid, then rounds the recorded channels to the sensor resolution.
TimeSeriesDataset synthesize_battery_dataset(const EcmParams& params, const Signal& current,
                                             const Signal& temp, double soc0, double cutoff_hz,
                                             double rate_hz, const SensorResolution& sensors = {});

/// Raw logger view of the same cell: the ECM steps on the excitation grid itself (no
/// filtering or resampling) and the channels are rounded to the sensor resolution.
/// This is the input the pipeline's preprocessing expects.
TimeSeriesDataset record_battery_log(const EcmParams& params, const Signal& current,
                                     const Signal& temp, double soc0,
                                     const SensorResolution& sensors = {});

}  // namespace spacefill

#endif  // SPACEFILL_SYNTH_HPP
