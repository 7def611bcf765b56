#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "topoforge/error.hpp"

namespace topoforge {

// Uniformly sampled time series of the measured quantity.
struct Waveform {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> samples;

  std::size_t size() const noexcept { return samples.size(); }
  double time(std::size_t i) const noexcept { return t0 + dt * static_cast<double>(i); }
  double t_end() const noexcept { return samples.empty() ? t0 : time(samples.size() - 1); }

  // Linear interpolation, clamped to the first/last sample outside the range.
  double at(double t) const {
    if (samples.empty()) throw std::domain_error("Waveform::at on empty waveform");
    if (samples.size() == 1 || t <= t0) return samples.front();
    const double u = (t - t0) / dt;
    const auto last = static_cast<double>(samples.size() - 1);
    if (u >= last) return samples.back();
    const auto i = static_cast<std::size_t>(std::floor(u));
    const double frac = u - static_cast<double>(i);
    if (frac == 0.0) return samples[i];
    return samples[i] + frac * (samples[i + 1] - samples[i]);
  }

  double mean_square() const {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (double v : samples) acc += v * v;
    return acc / static_cast<double>(samples.size());
  }

  friend bool operator==(const Waveform&, const Waveform&) = default;
};

// Throws MalformedInput unless the waveform satisfies its invariants.
inline void validate(const Waveform& w) {
  if (!(w.dt > 0.0) || !std::isfinite(w.dt)) throw MalformedInput("waveform: dt must be positive");
  if (!std::isfinite(w.t0)) throw MalformedInput("waveform: t0 must be finite");
  if (w.samples.size() < 2) throw MalformedInput("waveform: need at least 2 samples");
  for (double v : w.samples)
    if (!std::isfinite(v)) throw MalformedInput("waveform: non-finite sample");
}

// Voltage step switched on at `delay`.
struct StepSource {
  double amplitude = 1.0;
  double delay = 0.0;
  friend bool operator==(const StepSource&, const StepSource&) = default;
};

using SourceSignal = std::variant<StepSource, Waveform>;

inline double source_value(const SourceSignal& s, double t) {
  if (const auto* step = std::get_if<StepSource>(&s)) return t >= step->delay ? step->amplitude : 0.0;
  return std::get<Waveform>(s).at(t);
}

inline double source_peak(const SourceSignal& s) {
  if (const auto* step = std::get_if<StepSource>(&s)) return std::abs(step->amplitude);
  double peak = 0.0;
  for (double v : std::get<Waveform>(s).samples) peak = std::max(peak, std::abs(v));
  return peak;
}

// ---------------------------------------------------------------------------
// CSV: header `t,v`, one row per sample, shortest round-trip decimal form.

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw MalformedInput("not a number: '" + std::string(text) + "'");
  return v;
}

inline void write_csv(std::ostream& os, const Waveform& w) {
  os << "t,v\n";
  for (std::size_t i = 0; i < w.size(); ++i)
    os << format_double(w.time(i)) << ',' << format_double(w.samples[i]) << '\n';
}

inline std::string to_csv(const Waveform& w) {
  std::ostringstream os;
  write_csv(os, w);
  return os.str();
}

// Reads a `t,v` CSV. Times must be uniformly spaced (relative jitter up to 1e-6
// of dt is tolerated and discarded).
inline Waveform read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw MalformedInput("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,v") throw MalformedInput("csv: expected header 't,v'");
  std::vector<double> times;
  Waveform w;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw MalformedInput("csv: line " + std::to_string(lineno) + " must have two fields");
    times.push_back(parse_double(std::string_view(line).substr(0, comma)));
    w.samples.push_back(parse_double(std::string_view(line).substr(comma + 1)));
  }
  if (times.size() < 2) throw MalformedInput("csv: need at least 2 samples");
  w.t0 = times.front();
  w.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  if (!(w.dt > 0.0)) throw MalformedInput("csv: times must be increasing");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - w.time(i)) > 1e-6 * w.dt)
      throw MalformedInput("csv: non-uniform time grid at line " + std::to_string(i + 2));
  validate(w);
  return w;
}

inline Waveform read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot open " + path);
  return read_csv(in);
}

inline void write_csv_file(const std::string& path, const Waveform& w) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_csv(out, w);
}

}  // namespace topoforge
