#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "topoforge/circuit_model.hpp"
#include "topoforge/component_graph.hpp"
#include "topoforge/error.hpp"
#include "topoforge/waveform.hpp"

namespace topoforge {

enum class Integrator : std::uint8_t { BackwardEuler, Trapezoidal };

constexpr std::string_view to_string(Integrator i) noexcept {
  return i == Integrator::BackwardEuler ? "backward-euler" : "trapezoidal";
}

inline Integrator integrator_from_string(std::string_view s) {
  if (s == "backward-euler" || s == "be") return Integrator::BackwardEuler;
  if (s == "trapezoidal" || s == "trap") return Integrator::Trapezoidal;
  throw MalformedInput("unknown integrator '" + std::string(s) + "'");
}

struct SimConfig {
  double t_end = 5e-3;
  double dt = 1e-5;
  Integrator integrator = Integrator::Trapezoidal;
  double pivot_tolerance = 1e-13;  // relative to the largest matrix entry
  double kcl_tolerance = 1e-9;     // absolute, amperes
  // Merge a resistor into its neighbour across an internal degree-2 vertex
  // before stamping. Exact for linear elements; removes the auxiliary vertex.
  bool fold_series = true;

  std::size_t sample_count() const { return static_cast<std::size_t>(std::llround(t_end / dt)) + 1; }
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

inline void validate(const SimConfig& c) {
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw std::invalid_argument("sim: dt must be positive");
  if (!(c.t_end > c.dt) || !std::isfinite(c.t_end)) throw std::invalid_argument("sim: need dt < t_end");
  if (!(c.pivot_tolerance > 0.0) || !(c.kcl_tolerance > 0.0))
    throw std::invalid_argument("sim: tolerances must be positive");
}

enum class SimStatus : std::uint8_t { Ok, Singular, NonFinite, KclViolation };

constexpr std::string_view to_string(SimStatus s) noexcept {
  switch (s) {
    case SimStatus::Ok: return "Ok";
    case SimStatus::Singular: return "Singular";
    case SimStatus::NonFinite: return "NonFinite";
    case SimStatus::KclViolation: return "KclViolation";
  }
  return "?";
}

struct SimResult {
  SimStatus status = SimStatus::Ok;
  Waveform waveform;                  // load voltage
  std::vector<double> source_current;  // current delivered by the source, per sample
  double max_kcl_residual = 0.0;
  std::string message;

  bool ok() const noexcept { return status == SimStatus::Ok; }
};

// ---------------------------------------------------------------------------
// Process-wide counters, so test suites can assert the KCL bound on every step
// taken anywhere (including inside optimizers).

struct SimulationStats {
  std::uint64_t simulations = 0;
  std::uint64_t steps = 0;
  std::uint64_t kcl_violations = 0;
  double max_kcl_residual = 0.0;
};

namespace detail {

struct StatsCounters {
  std::atomic<std::uint64_t> simulations{0};
  std::atomic<std::uint64_t> steps{0};
  std::atomic<std::uint64_t> violations{0};
  std::atomic<std::uint64_t> max_residual_bits{0};
};

inline StatsCounters& stats_counters() {
  static StatsCounters c;
  return c;
}

inline void record_simulation(std::uint64_t steps, double max_residual, bool violated) {
  auto& c = stats_counters();
  c.simulations.fetch_add(1, std::memory_order_relaxed);
  c.steps.fetch_add(steps, std::memory_order_relaxed);
  if (violated) c.violations.fetch_add(1, std::memory_order_relaxed);
  // Non-negative doubles order like their bit patterns.
  const auto bits = std::bit_cast<std::uint64_t>(max_residual);
  auto cur = c.max_residual_bits.load(std::memory_order_relaxed);
  while (bits > cur && !c.max_residual_bits.compare_exchange_weak(cur, bits, std::memory_order_relaxed)) {
  }
}

}  // namespace detail

inline SimulationStats simulation_stats() {
  const auto& c = detail::stats_counters();
  return {c.simulations.load(), c.steps.load(), c.violations.load(),
          std::bit_cast<double>(c.max_residual_bits.load())};
}

inline void reset_simulation_stats() {
  auto& c = detail::stats_counters();
  c.simulations = 0;
  c.steps = 0;
  c.violations = 0;
  c.max_residual_bits = 0;
}

// ---------------------------------------------------------------------------
// Compiled circuit: folded elements over compacted unknowns.

inline constexpr std::size_t kGroundUnknown = std::numeric_limits<std::size_t>::max();

struct CircuitElement {
  ElementKind kind = ElementKind::Resistor;  // Resistor, Inductor or Capacitor
  double value = 0.0;
  double series_r = 0.0;
  std::size_t a = 0;  // unknown index or kGroundUnknown
  std::size_t b = 0;
};

struct CompiledCircuit {
  std::size_t node_unknowns = 0;  // the source branch current is unknown node_unknowns
  std::vector<CircuitElement> elements;
  std::size_t source_pos = kGroundUnknown, source_neg = kGroundUnknown;
  std::size_t load_pos = kGroundUnknown, load_neg = kGroundUnknown;
  double load_resistance = 1.0;
  SourceSignal signal;
  std::vector<std::size_t> unknown_of_vertex;  // kGroundUnknown for ground and dropped vertices

  std::size_t size() const noexcept { return node_unknowns + 1; }
  std::size_t source_branch() const noexcept { return node_unknowns; }
};

namespace detail {

struct FlatElement {
  ElementKind kind;
  double value;
  double series_r;
  std::size_t a, b;
  bool alive;
};

inline bool is_element(ElementKind k) noexcept { return !is_boundary(k); }

inline std::vector<FlatElement> fold_series(const ComponentGraph& g, bool fold) {
  std::vector<FlatElement> els;
  els.reserve(g.components.size());
  for (const auto& c : g.components) els.push_back({c.kind, c.value, 0.0, c.a, c.b, true});
  if (!fold) return els;

  std::vector<char> boundary(g.vertex_count, 0);
  std::vector<std::vector<std::size_t>> incident(g.vertex_count);
  for (std::size_t i = 0; i < els.size(); ++i) {
    if (is_boundary(els[i].kind)) boundary[els[i].a] = boundary[els[i].b] = 1;
    incident[els[i].a].push_back(i);
    incident[els[i].b].push_back(i);
  }
  for (std::size_t v = 0; v < g.vertex_count; ++v) {
    if (boundary[v]) continue;
    auto& inc = incident[v];
    std::erase_if(inc, [&](std::size_t e) { return !els[e].alive; });
    if (inc.size() != 2 || inc[0] == inc[1]) continue;
    const std::size_t e1 = std::min(inc[0], inc[1]), e2 = std::max(inc[0], inc[1]);
    if (!is_element(els[e1].kind) || !is_element(els[e2].kind)) continue;
    const bool r1 = els[e1].kind == ElementKind::Resistor, r2 = els[e2].kind == ElementKind::Resistor;
    if (!r1 && !r2) continue;
    const std::size_t keep = (r1 && !r2) ? e2 : e1;
    const std::size_t drop = keep == e1 ? e2 : e1;
    auto& x = els[keep];
    auto& r = els[drop];
    const std::size_t u = r.a == v ? r.b : r.a;
    x.series_r += r.value + r.series_r;
    (x.a == v ? x.a : x.b) = u;
    r.alive = false;
    inc.clear();
    for (auto& e : incident[u])
      if (e == drop) e = keep;
    if (x.a == x.b) x.alive = false;
  }
  std::erase_if(els, [](const FlatElement& e) { return !e.alive; });
  return els;
}

}  // namespace detail

// Folds series pairs (optionally), keeps only the part of the graph connected
// to ground and numbers the remaining non-ground vertices.
inline CompiledCircuit compile(const ComponentGraph& g, bool fold_series = true) {
  validate(g);
  const auto els = detail::fold_series(g, fold_series);
  const std::size_t ground = g.ground();

  std::vector<std::vector<std::size_t>> adj(g.vertex_count);
  for (const auto& e : els) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<char> reached(g.vertex_count, 0);
  std::queue<std::size_t> q;
  q.push(ground);
  reached[ground] = 1;
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto w : adj[v])
      if (!reached[w]) {
        reached[w] = 1;
        q.push(w);
      }
  }

  CompiledCircuit c;
  c.unknown_of_vertex.assign(g.vertex_count, kGroundUnknown);
  for (std::size_t v = 0; v < g.vertex_count; ++v)
    if (reached[v] && v != ground) c.unknown_of_vertex[v] = c.node_unknowns++;
  const auto& u = c.unknown_of_vertex;
  for (const auto& e : els) {
    if (!reached[e.a]) continue;
    switch (e.kind) {
      case ElementKind::Source:
        c.source_pos = u[e.a];
        c.source_neg = u[e.b];
        break;
      case ElementKind::Load:
        c.load_pos = u[e.a];
        c.load_neg = u[e.b];
        c.load_resistance = e.value;
        break;
      default: c.elements.push_back({e.kind, e.value, e.series_r, u[e.a], u[e.b]}); break;
    }
  }
  c.signal = g.signal;
  return c;
}

namespace detail {

// Companion conductance of a branch (element + series resistance) for step h.
inline double branch_conductance(const CircuitElement& e, double h, Integrator integ) {
  switch (e.kind) {
    case ElementKind::Resistor: return 1.0 / (e.value + e.series_r);
    case ElementKind::Capacitor: {
      const double gc = (integ == Integrator::Trapezoidal ? 2.0 : 1.0) * e.value / h;
      return gc / (1.0 + gc * e.series_r);
    }
    case ElementKind::Inductor: {
      const double gl = (integ == Integrator::Trapezoidal ? 0.5 : 1.0) * h / e.value;
      return gl / (1.0 + gl * e.series_r);
    }
    default: break;
  }
  return 0.0;
}

inline void stamp_conductance(Eigen::MatrixXd& m, std::size_t a, std::size_t b, double g) {
  if (a != kGroundUnknown) m(a, a) += g;
  if (b != kGroundUnknown) m(b, b) += g;
  if (a != kGroundUnknown && b != kGroundUnknown) {
    m(a, b) -= g;
    m(b, a) -= g;
  }
}

}  // namespace detail

// Modified nodal analysis matrix for one step size: node equations plus the
// source branch row.
inline Eigen::MatrixXd assemble_matrix(const CompiledCircuit& c, double h, Integrator integ) {
  const std::size_t n = c.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : c.elements) detail::stamp_conductance(m, e.a, e.b, detail::branch_conductance(e, h, integ));
  detail::stamp_conductance(m, c.load_pos, c.load_neg, 1.0 / c.load_resistance);
  const std::size_t k = c.source_branch();
  if (c.source_pos != kGroundUnknown) {
    m(c.source_pos, k) += 1.0;
    m(k, c.source_pos) += 1.0;
  }
  if (c.source_neg != kGroundUnknown) {
    m(c.source_neg, k) -= 1.0;
    m(k, c.source_neg) -= 1.0;
  }
  return m;
}

struct MnaSystem {
  Eigen::MatrixXd matrix;
  CompiledCircuit circuit;
};

inline MnaSystem assemble_stamps(const ComponentGraph& g, double dt, Integrator integ, bool fold = true) {
  CompiledCircuit c = compile(g, fold);
  Eigen::MatrixXd m = assemble_matrix(c, dt, integ);
  return {std::move(m), std::move(c)};
}

inline MnaSystem assemble_stamps(const DesignModel& model, double dt, Integrator integ, bool fold = true) {
  return assemble_stamps(to_component_graph(model), dt, integ, fold);
}

namespace detail {

struct Factorization {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::MatrixXd matrix;
  bool singular = false;
};

inline Factorization factorize(Eigen::MatrixXd m, double pivot_tolerance, bool check_pivots) {
  Factorization f;
  f.matrix = std::move(m);
  f.lu.compute(f.matrix);
  if (!check_pivots) return f;
  const double scale = f.matrix.cwiseAbs().maxCoeff();
  const auto diag = f.lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i)
    if (!(std::abs(diag[i]) > pivot_tolerance * scale)) f.singular = true;
  return f;
}

// Branch state carried between steps; for capacitors (v = capacitor voltage,
// i = branch current), for inductors (v = inductor voltage, i = current).
struct ReactiveState {
  double v = 0.0;
  double i = 0.0;
};

// Companion model of a reactive branch for one integrator: branch current is
// g*u + j with history current j = a*v + b*i from the previous state.
struct Companion {
  double g = 0.0;
  double a = 0.0;
  double b = 0.0;
};

inline Companion companion(const CircuitElement& e, double h, Integrator integ) {
  const double rs = e.series_r;
  const double g = branch_conductance(e, h, integ);
  if (e.kind == ElementKind::Capacitor) {
    if (integ == Integrator::Trapezoidal) return {g, -g, -g * h / (2.0 * e.value)};
    return {g, -g, 0.0};
  }
  if (e.kind == ElementKind::Inductor) {
    if (integ == Integrator::Trapezoidal) {
      const double gl = 0.5 * h / e.value;
      return {g, gl / (1.0 + gl * rs), 1.0 / (1.0 + gl * rs)};
    }
    return {g, 0.0, 1.0 / (1.0 + h / e.value * rs)};
  }
  return {g, 0.0, 0.0};
}

inline double history_current(const CircuitElement& e, const ReactiveState& s, double h, Integrator integ) {
  const auto k = companion(e, h, integ);
  return k.a * s.v + k.b * s.i;
}

inline double voltage(const Eigen::VectorXd& x, std::size_t a, std::size_t b) {
  const double va = a == kGroundUnknown ? 0.0 : x[static_cast<Eigen::Index>(a)];
  const double vb = b == kGroundUnknown ? 0.0 : x[static_cast<Eigen::Index>(b)];
  return va - vb;
}

}  // namespace detail

// Fixed-step transient run from rest (capacitor voltages and inductor currents
// zero). Sample 0 is the response just after the source switches on, computed
// with a backward-Euler step of dt/1000; the first full step is backward Euler
// and, for the trapezoidal integrator, the rest are trapezoidal.
inline SimResult transient(const CompiledCircuit& c, const SimConfig& cfg) {
  validate(cfg);
  SimResult res;
  const std::size_t count = cfg.sample_count();
  res.waveform.t0 = 0.0;
  res.waveform.dt = cfg.dt;
  res.waveform.samples.reserve(count);
  res.source_current.reserve(count);

  const double h = cfg.dt;
  auto first = detail::factorize(assemble_matrix(c, h, Integrator::BackwardEuler), cfg.pivot_tolerance, true);
  if (first.singular) {
    res.status = SimStatus::Singular;
    res.message = "MNA matrix pivot below tolerance";
    return res;
  }
  detail::Factorization rest;
  const bool trap = cfg.integrator == Integrator::Trapezoidal;
  if (trap) {
    rest = detail::factorize(assemble_matrix(c, h, Integrator::Trapezoidal), cfg.pivot_tolerance, true);
    if (rest.singular) {
      res.status = SimStatus::Singular;
      res.message = "MNA matrix pivot below tolerance";
      return res;
    }
  }
  auto init = detail::factorize(assemble_matrix(c, h * 1e-3, Integrator::BackwardEuler), 0.0, false);

  const auto n = static_cast<Eigen::Index>(c.size());
  const auto k = static_cast<Eigen::Index>(c.source_branch());
  Eigen::VectorXd rhs(n), x(n), r(n);
  std::vector<detail::ReactiveState> state(c.elements.size());
  std::vector<double> hist(c.elements.size(), 0.0);
  std::uint64_t steps = 0;
  bool violated = false;

  auto build_rhs = [&](double t) {
    rhs.setZero();
    for (std::size_t e = 0; e < c.elements.size(); ++e) {
      const double j = hist[e];
      if (j == 0.0) continue;
      if (c.elements[e].a != kGroundUnknown) rhs[static_cast<Eigen::Index>(c.elements[e].a)] -= j;
      if (c.elements[e].b != kGroundUnknown) rhs[static_cast<Eigen::Index>(c.elements[e].b)] += j;
    }
    rhs[k] = source_value(c.signal, t);
  };
  auto solve = [&](const detail::Factorization& f, bool check) -> bool {
    x = f.lu.solve(rhs);
    if (!x.allFinite()) return false;
    if (!check) return true;
    r.noalias() = f.matrix * x - rhs;
    double resid = r.cwiseAbs().maxCoeff();
    if (resid > cfg.kcl_tolerance) {  // one step of iterative refinement
      x -= f.lu.solve(r);
      r.noalias() = f.matrix * x - rhs;
      resid = r.cwiseAbs().maxCoeff();
    }
    res.max_kcl_residual = std::max(res.max_kcl_residual, resid);
    if (resid > cfg.kcl_tolerance) violated = true;
    ++steps;
    return true;
  };
  auto record = [&] {
    res.waveform.samples.push_back(detail::voltage(x, c.load_pos, c.load_neg));
    res.source_current.push_back(-x[k]);
  };
  auto fail = [&](SimStatus s, std::string msg) {
    res.status = s;
    res.message = std::move(msg);
    detail::record_simulation(steps, res.max_kcl_residual, violated);
    return res;
  };

  // Sample 0: states are zero, so no history currents.
  std::fill(hist.begin(), hist.end(), 0.0);
  build_rhs(0.0);
  if (!solve(init, false)) return fail(SimStatus::NonFinite, "non-finite solution at t=0");
  record();

  std::vector<std::size_t> reactive;
  for (std::size_t e = 0; e < c.elements.size(); ++e)
    if (c.elements[e].kind != ElementKind::Resistor) reactive.push_back(e);
  auto companions = [&](Integrator integ) {
    std::vector<detail::Companion> out(c.elements.size());
    for (std::size_t e : reactive) out[e] = detail::companion(c.elements[e], h, integ);
    return out;
  };
  const auto be = companions(Integrator::BackwardEuler);
  const auto tr = trap ? companions(Integrator::Trapezoidal) : be;

  for (std::size_t step = 1; step < count; ++step) {
    const Integrator integ = (trap && step > 1) ? Integrator::Trapezoidal : Integrator::BackwardEuler;
    const auto& comp = integ == Integrator::Trapezoidal ? tr : be;
    for (std::size_t e : reactive) hist[e] = comp[e].a * state[e].v + comp[e].b * state[e].i;
    build_rhs(static_cast<double>(step) * h);
    if (!solve(integ == Integrator::Trapezoidal ? rest : first, true))
      return fail(SimStatus::NonFinite, "non-finite solution at step " + std::to_string(step));
    for (std::size_t e : reactive) {
      const auto& el = c.elements[e];
      const double u = detail::voltage(x, el.a, el.b);
      const double i = comp[e].g * u + hist[e];
      state[e] = {u - el.series_r * i, i};
    }
    record();
  }
  if (violated) return fail(SimStatus::KclViolation, "KCL residual above tolerance");
  detail::record_simulation(steps, res.max_kcl_residual, false);
  return res;
}

inline SimResult transient(const ComponentGraph& g, const SimConfig& cfg) {
  return transient(compile(g, cfg.fold_series), cfg);
}

inline SimResult transient(const DesignModel& m, const SimConfig& cfg, const RealizeOptions& opt = {}) {
  return transient(to_component_graph(m, opt), cfg);
}

// ---------------------------------------------------------------------------
// Feasibility.

enum class Feasibility : std::uint8_t { Ok, Disconnected, Singular };

constexpr std::string_view to_string(Feasibility f) noexcept {
  switch (f) {
    case Feasibility::Ok: return "Ok";
    case Feasibility::Disconnected: return "Disconnected";
    case Feasibility::Singular: return "Singular";
  }
  return "?";
}

struct FeasibilityReport {
  Feasibility status = Feasibility::Ok;
  std::string reason;
  explicit operator bool() const noexcept { return status == Feasibility::Ok; }
};

// True when some path of non-boundary elements joins the source's positive
// terminal to the load's positive terminal.
inline bool boundary_connected(const ComponentGraph& g) {
  const std::size_t from = g.source().a, to = g.load().a;
  std::vector<std::vector<std::size_t>> adj(g.vertex_count);
  for (const auto& c : g.components) {
    if (is_boundary(c.kind)) continue;
    adj[c.a].push_back(c.b);
    adj[c.b].push_back(c.a);
  }
  std::vector<char> seen(g.vertex_count, 0);
  std::vector<std::size_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (auto w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  return false;
}

inline FeasibilityReport check_feasible(const ComponentGraph& g, const SimConfig& cfg = {}) {
  if (!boundary_connected(g)) return {Feasibility::Disconnected, "no element path from source to load"};
  const auto c = compile(g, cfg.fold_series);
  for (Integrator integ : {Integrator::BackwardEuler, cfg.integrator}) {
    const auto f = detail::factorize(assemble_matrix(c, cfg.dt, integ), cfg.pivot_tolerance, true);
    if (f.singular) return {Feasibility::Singular, "MNA matrix pivot below tolerance"};
  }
  return {};
}

inline FeasibilityReport check_feasible(const DesignModel& m, const SimConfig& cfg = {}) {
  return check_feasible(to_component_graph(m), cfg);
}

}  // namespace topoforge
