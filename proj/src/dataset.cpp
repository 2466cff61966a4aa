#include "spacefill/dataset.hpp"

#include "spacefill/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace spacefill {

void validate(const Signal& s) {
  if (s.t.size() != s.v.size()) {
    throw StructuralError(fmt::format("signal '{}': {} timestamps but {} values", s.name,
                                      s.t.size(), s.v.size()));
  }
  if (s.t.size() < 2) {
    throw StructuralError(fmt::format("signal '{}': need at least 2 samples", s.name));
  }
  for (Index i = 0; i < s.t.size(); ++i) {
    if (!std::isfinite(s.t(i)) || !std::isfinite(s.v(i))) {
      throw StructuralError(fmt::format("signal '{}': non-finite sample at index {}", s.name, i));
    }
    if (i > 0 && !(s.t(i) > s.t(i - 1))) {
      throw StructuralError(
          fmt::format("signal '{}': time not strictly increasing at sample {}", s.name, i + 1));
    }
  }
}

std::optional<double> uniform_rate(const Eigen::VectorXd& t) {
  if (t.size() < 2) return std::nullopt;
  const Index n = t.size();
  const double dt = (t(n - 1) - t(0)) / static_cast<double>(n - 1);
  if (!(dt > 0)) return std::nullopt;
  for (Index i = 1; i < n; ++i) {
    if (std::abs((t(i) - t(i - 1)) - dt) > 1e-6 * dt) return std::nullopt;
  }
  return 1.0 / dt;
}

const Signal& TimeSeriesDataset::at(const std::string& name) const {
  auto it = signals.find(name);
  if (it == signals.end()) throw PreconditionError("dataset has no signal '" + name + "'");
  return it->second;
}

Index TimeSeriesDataset::length() const {
  if (signals.empty()) return 0;
  const Index n = signals.begin()->second.size();
  for (const auto& [name, s] : signals) {
    if (s.size() != n) {
      throw StructuralError("dataset signals have different lengths ('" + name + "')");
    }
  }
  return n;
}

void TimeSeriesDataset::insert(Signal s) {
  validate(s);
  auto name = s.name;
  signals.insert_or_assign(std::move(name), std::move(s));
  refresh_rate();
}

void TimeSeriesDataset::refresh_rate() {
  rate_hz.reset();
  if (signals.empty()) return;
  const auto& first = signals.begin()->second.t;
  for (const auto& [name, s] : signals) {
    if (s.t.size() != first.size() || s.t != first) return;
  }
  rate_hz = uniform_rate(first);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

}  // namespace

TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("CSV file '" + path.string() + "' is empty", 0);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header_views = split_commas(line);
  std::vector<std::string> header(header_views.begin(), header_views.end());
  if (header.size() < 2) throw ParseError("CSV header needs a time column and a signal", 0);

  // column index -> output signal name
  std::vector<std::pair<std::size_t, std::string>> mapped;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (schema.empty()) {
      mapped.emplace_back(c, header[c]);
    } else if (auto it = schema.find(header[c]); it != schema.end()) {
      mapped.emplace_back(c, it->second);
    }
  }
  for (const auto& [column, name] : schema) {
    if (std::find(header.begin(), header.end(), column) == header.end()) {
      throw StructuralError("CSV '" + path.string() + "' lacks column '" + column + "'");
    }
  }

  std::vector<double> t;
  std::vector<std::vector<double>> values(mapped.size());
  Index row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw ParseError(fmt::format("CSV row {}: expected {} cells, found {}", row, header.size(),
                                   cells.size()),
                       row);
    }
    auto parse = [&](std::size_t c) {
      double value = 0.0;
      const auto cell = cells[c];
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw ParseError(
            fmt::format("CSV row {}: malformed number '{}' in column '{}'", row, cell, header[c]),
            row);
      }
      return value;
    };
    const double time = parse(0);
    if (!t.empty() && !(time > t.back())) {
      throw StructuralError(fmt::format("CSV row {}: time {} is not after the previous {}", row,
                                        time, t.back()));
    }
    t.push_back(time);
    for (std::size_t k = 0; k < mapped.size(); ++k) values[k].push_back(parse(mapped[k].first));
  }
  if (t.size() < 2) {
    throw StructuralError(
        fmt::format("CSV '{}': need at least 2 samples, found {}", path.string(), t.size()));
  }

  TimeSeriesDataset ds;
  const Eigen::VectorXd time = Eigen::Map<const Eigen::VectorXd>(t.data(), Index(t.size()));
  for (std::size_t k = 0; k < mapped.size(); ++k) {
    Signal s;
    s.name = mapped[k].second;
    s.t = time;
    s.v = Eigen::Map<const Eigen::VectorXd>(values[k].data(), Index(values[k].size()));
    validate(s);
    ds.signals.insert_or_assign(s.name, std::move(s));
  }
  ds.refresh_rate();
  return ds;
}

void write_csv(const std::filesystem::path& path, const TimeSeriesDataset& ds) {
  if (ds.signals.empty()) throw PreconditionError("write_csv: dataset is empty");
  const auto& time = ds.signals.begin()->second.t;
  for (const auto& [name, s] : ds.signals) {
    if (s.t.size() != time.size() || s.t != time) {
      throw StructuralError("write_csv: signals do not share one timestamp grid");
    }
  }
  std::string out = "t";
  for (const auto& [name, s] : ds.signals) out += "," + name;
  out += '\n';
  for (Index i = 0; i < time.size(); ++i) {
    out += format_real(time(i));
    for (const auto& [name, s] : ds.signals) {
      out += ',';
      out += format_real(s.v(i));
    }
    out += '\n';
  }
  write_text(path, out);
}

namespace {

// Transposed direct form II biquad, normalized so a0 == 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

constexpr int kButterworthOrder = 4;

std::array<Biquad, kButterworthOrder / 2> butterworth_lowpass(double cutoff_hz, double rate_hz) {
  // Bilinear transform with prewarping; each conjugate pole pair becomes one section.
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  std::array<Biquad, kButterworthOrder / 2> sections{};
  for (int s = 0; s < kButterworthOrder / 2; ++s) {
    const double theta = std::numbers::pi * (2.0 * s + 1.0) / (2.0 * kButterworthOrder);
    const double q = 1.0 / (2.0 * std::sin(theta));
    const double norm = 1.0 / (1.0 + k / q + k * k);
    Biquad& b = sections[static_cast<std::size_t>(s)];
    b.b0 = k * k * norm;
    b.b1 = 2.0 * b.b0;
    b.b2 = b.b0;
    b.a1 = 2.0 * (k * k - 1.0) * norm;
    b.a2 = (1.0 - k / q + k * k) * norm;
  }
  return sections;
}

// Runs the cascade over x in place, starting each section in the steady state of x[0].
void run_cascade(const std::array<Biquad, kButterworthOrder / 2>& sections,
                 std::vector<double>& x) {
  for (const Biquad& b : sections) {
    const double x0 = x.front();
    // Steady state for constant input x0 (DC gain of each section is 1).
    double z2 = (b.b2 - b.a2) * x0;
    double z1 = (b.b1 - b.a1) * x0 + z2;
    for (double& value : x) {
      const double in = value;
      const double out = b.b0 * in + z1;
      z1 = b.b1 * in - b.a1 * out + z2;
      z2 = b.b2 * in - b.a2 * out;
      value = out;
    }
  }
}

}  // namespace

Signal lowpass_filter(const Signal& s, double cutoff_hz) {
  validate(s);
  if (!(cutoff_hz > 0)) throw PreconditionError("lowpass_filter: cutoff must be positive");
  const auto rate = uniform_rate(s.t);
  if (!rate) {
    throw PreconditionError("lowpass_filter: signal '" + s.name + "' is not uniformly sampled");
  }
  if (!(*rate > 2.0 * cutoff_hz)) {
    throw PreconditionError(fmt::format(
        "lowpass_filter: sampling rate {} Hz must exceed twice the cutoff {} Hz", *rate, cutoff_hz));
  }
  const auto sections = butterworth_lowpass(cutoff_hz, *rate);

  // Warm-up length: order x samples per cutoff period.
  const Index n = s.size();
  const auto warmup = static_cast<Index>(std::ceil(kButterworthOrder * *rate / cutoff_hz));
  const Index pad = std::min(n - 1, warmup);

  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(n + 2 * pad));
  for (Index i = pad; i >= 1; --i) x.push_back(2.0 * s.v(0) - s.v(i));
  for (Index i = 0; i < n; ++i) x.push_back(s.v(i));
  for (Index i = 1; i <= pad; ++i) x.push_back(2.0 * s.v(n - 1) - s.v(n - 1 - i));

  run_cascade(sections, x);
  std::reverse(x.begin(), x.end());
  run_cascade(sections, x);
  std::reverse(x.begin(), x.end());

  Signal out = s;
  for (Index i = 0; i < n; ++i) out.v(i) = x[static_cast<std::size_t>(i + pad)];
  return out;
}

TimeSeriesDataset lowpass_filter(const TimeSeriesDataset& ds, double cutoff_hz) {
  TimeSeriesDataset out;
  for (const auto& [name, s] : ds.signals) out.signals.emplace(name, lowpass_filter(s, cutoff_hz));
  out.rate_hz = ds.rate_hz;
  return out;
}

Signal resample_linear(const Signal& s, double rate_hz) {
  validate(s);
  if (!(rate_hz > 0) || !std::isfinite(rate_hz)) {
    throw PreconditionError("resample_linear: rate must be positive");
  }
  const Index n = s.size();
  const double t0 = s.t(0);
  const double span = s.t(n - 1) - t0;
  // The partial interval after the last full grid step is dropped.
  const auto count = static_cast<Index>(std::floor(span * rate_hz * (1.0 + 1e-12))) + 1;
  if (count < 2) throw PreconditionError("resample_linear: target grid has fewer than 2 points");

  Signal out;
  out.name = s.name;
  out.unit = s.unit;
  out.t.resize(count);
  out.v.resize(count);
  const double step = 1.0 / rate_hz;
  const double dt_min = span / static_cast<double>(n - 1);
  Index j = 0;
  for (Index i = 0; i < count; ++i) {
    const double ti = std::min(t0 + static_cast<double>(i) * step, s.t(n - 1));
    while (j + 2 < n && s.t(j + 1) <= ti) ++j;
    out.t(i) = t0 + static_cast<double>(i) * step;
    // Snap onto knots so resampling on the original grid reproduces values exactly.
    const double snap = 1e-9 * dt_min;
    if (std::abs(ti - s.t(j)) <= snap) {
      out.v(i) = s.v(j);
    } else if (std::abs(ti - s.t(j + 1)) <= snap) {
      out.v(i) = s.v(j + 1);
    } else {
      const double w = (ti - s.t(j)) / (s.t(j + 1) - s.t(j));
      out.v(i) = s.v(j) + w * (s.v(j + 1) - s.v(j));
    }
  }
  return out;
}

TimeSeriesDataset resample_linear(const TimeSeriesDataset& ds, double rate_hz) {
  TimeSeriesDataset out;
  for (const auto& [name, s] : ds.signals) out.signals.emplace(name, resample_linear(s, rate_hz));
  out.refresh_rate();
  return out;
}

}  // namespace spacefill
