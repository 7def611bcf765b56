#pragma once

#include <array>
#include <compare>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "topoforge/error.hpp"
#include "topoforge/rng.hpp"
#include "topoforge/waveform.hpp"

namespace topoforge {

struct NodeId {
  std::size_t index = 0;
  friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;
};

// Node 0 is always the reference terminal of the boundary scenario.
inline constexpr NodeId kGround{0};

// ---------------------------------------------------------------------------
// Discrete universal-component modes.

enum class ModeTag : std::uint8_t { Open, Short, Resistor, Inductor, Capacitor };

inline constexpr std::array<ModeTag, 5> kAllModeTags = {ModeTag::Open, ModeTag::Short, ModeTag::Resistor,
                                                        ModeTag::Inductor, ModeTag::Capacitor};

constexpr bool carries_parameter(ModeTag t) noexcept {
  return t == ModeTag::Resistor || t == ModeTag::Inductor || t == ModeTag::Capacitor;
}

constexpr std::string_view to_string(ModeTag t) noexcept {
  switch (t) {
    case ModeTag::Open: return "open";
    case ModeTag::Short: return "short";
    case ModeTag::Resistor: return "resistor";
    case ModeTag::Inductor: return "inductor";
    case ModeTag::Capacitor: return "capacitor";
  }
  return "?";
}

inline ModeTag mode_tag_from_string(std::string_view s) {
  for (ModeTag t : kAllModeTags)
    if (to_string(t) == s) return t;
  throw MalformedInput("unknown mode '" + std::string(s) + "'");
}

class Mode {
 public:
  static Mode open() { return Mode(ModeTag::Open, 0.0); }
  static Mode short_circuit() { return Mode(ModeTag::Short, 0.0); }
  static Mode resistor(double ohms) { return make(ModeTag::Resistor, ohms); }
  static Mode inductor(double henries) { return make(ModeTag::Inductor, henries); }
  static Mode capacitor(double farads) { return make(ModeTag::Capacitor, farads); }

  static Mode make(ModeTag tag, double param = 0.0) {
    if (!carries_parameter(tag)) return Mode(tag, 0.0);
    if (!(param > 0.0) || !std::isfinite(param))
      throw std::invalid_argument("mode parameter must be positive and finite");
    return Mode(tag, param);
  }

  ModeTag tag() const noexcept { return tag_; }
  bool has_param() const noexcept { return carries_parameter(tag_); }
  std::optional<double> param() const noexcept {
    return has_param() ? std::optional<double>(param_) : std::nullopt;
  }
  double value() const {
    if (!has_param()) throw std::logic_error("mode has no parameter");
    return param_;
  }
  Mode with_param(double p) const { return make(tag_, p); }

  friend bool operator==(const Mode&, const Mode&) = default;

 private:
  Mode(ModeTag tag, double param) : tag_(tag), param_(param) {}
  ModeTag tag_;
  double param_;
};

// ---------------------------------------------------------------------------
// Relaxed universal component: four switched branches in parallel.

enum class Branch : std::uint8_t { Resistor = 0, Inductor = 1, Capacitor = 2, Short = 3 };

inline constexpr std::array<Branch, 4> kBranches = {Branch::Resistor, Branch::Inductor, Branch::Capacitor,
                                                    Branch::Short};

constexpr std::size_t index_of(Branch b) noexcept { return static_cast<std::size_t>(b); }
constexpr bool carries_parameter(Branch b) noexcept { return b != Branch::Short; }

constexpr std::string_view to_string(Branch b) noexcept {
  switch (b) {
    case Branch::Resistor: return "r";
    case Branch::Inductor: return "l";
    case Branch::Capacitor: return "c";
    case Branch::Short: return "short";
  }
  return "?";
}

struct EdgeState {
  double r = 1.0;  // ohms
  double l = 1.0;  // henries
  double c = 1.0;  // farads
  std::array<double, 4> s{0.5, 0.5, 0.5, 0.5};  // switch per Branch, in [0, 1]
  std::array<bool, 4> active{true, true, true, true};  // eliminated branches are inactive

  double& param(Branch b) {
    switch (b) {
      case Branch::Resistor: return r;
      case Branch::Inductor: return l;
      case Branch::Capacitor: return c;
      case Branch::Short: break;
    }
    throw std::logic_error("short branch has no parameter");
  }
  double param(Branch b) const { return const_cast<EdgeState*>(this)->param(b); }
  double& sw(Branch b) noexcept { return s[index_of(b)]; }
  double sw(Branch b) const noexcept { return s[index_of(b)]; }
  bool is_active(Branch b) const noexcept { return active[index_of(b)]; }

  std::size_t active_count() const noexcept {
    std::size_t n = 0;
    for (bool a : active) n += a ? 1 : 0;
    return n;
  }
  bool is_open() const noexcept { return active_count() == 0; }

  friend bool operator==(const EdgeState&, const EdgeState&) = default;
};

using EdgeConfig = std::variant<EdgeState, Mode>;

// ---------------------------------------------------------------------------
// Meta-topology.

struct GridEdge {
  std::size_t id = 0;
  NodeId a;
  NodeId b;
  friend bool operator==(const GridEdge&, const GridEdge&) = default;
};

struct Boundary {
  NodeId source_pos;
  NodeId source_neg = kGround;
  NodeId load_pos;
  NodeId load_neg = kGround;
  friend bool operator==(const Boundary&, const Boundary&) = default;
};

enum class GroundPlacement : std::uint8_t {
  Auto,      // Corner when rows >= 2, External for a single row
  Corner,    // ground is grid point (0, 0)
  External,  // ground is an extra terminal; grid points are numbered from 1
};

struct MetaTopology {
  std::size_t rows = 0;  // 0 for non-grid topologies
  std::size_t cols = 0;
  bool external_ground = false;
  std::size_t node_count = 0;  // all nodes, ground included
  std::vector<GridEdge> edges;
  Boundary boundary;

  std::size_t grid_points() const noexcept { return rows * cols; }
  std::size_t edge_count() const noexcept { return edges.size(); }
  NodeId grid_node(std::size_t row, std::size_t col) const {
    if (row >= rows || col >= cols) throw std::out_of_range("grid_node outside the grid");
    return NodeId{row * cols + col + (external_ground ? 1 : 0)};
  }

  friend bool operator==(const MetaTopology&, const MetaTopology&) = default;
};

inline void validate(const MetaTopology& t) {
  if (t.node_count < 2) throw MalformedInput("topology needs at least two nodes");
  for (std::size_t i = 0; i < t.edges.size(); ++i) {
    const auto& e = t.edges[i];
    if (e.id != i) throw MalformedInput("edge ids must be 0..n-1 in order");
    if (e.a.index >= t.node_count || e.b.index >= t.node_count)
      throw MalformedInput("edge " + std::to_string(i) + " references an unknown node");
    if (e.a == e.b) throw MalformedInput("edge " + std::to_string(i) + " is a self-loop");
  }
  const auto& bd = t.boundary;
  for (NodeId n : {bd.source_pos, bd.source_neg, bd.load_pos, bd.load_neg})
    if (n.index >= t.node_count) throw MalformedInput("boundary references an unknown node");
  if (bd.source_neg != kGround || bd.load_neg != kGround)
    throw MalformedInput("source and load negative terminals must be the ground node 0");
  if (bd.source_pos == kGround || bd.load_pos == kGround)
    throw MalformedInput("source and load positive terminals must differ from ground");
}

// Horizontal edges of a row come before the vertical edges leaving that row.
// Valid for every rows, cols >= 1.
inline std::vector<std::pair<std::size_t, std::size_t>> grid_edge_pairs(std::size_t rows, std::size_t cols) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) out.emplace_back(r * cols + c, r * cols + c + 1);
    if (r + 1 < rows)
      for (std::size_t c = 0; c < cols; ++c) out.emplace_back(r * cols + c, (r + 1) * cols + c);
  }
  return out;
}

// Full rows x cols grid. The source drives grid point (rows/2, 0) against
// ground and the load hangs from (rows/2, cols-1) to ground.
inline MetaTopology generate_grid(std::size_t rows, std::size_t cols,
                                  GroundPlacement ground = GroundPlacement::Auto) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw std::invalid_argument("grid needs rows*cols >= 2");
  if (cols < 2) throw std::invalid_argument("grid needs at least two columns");
  if (ground == GroundPlacement::Auto) ground = rows >= 2 ? GroundPlacement::Corner : GroundPlacement::External;
  if (ground == GroundPlacement::Corner && rows < 2)
    throw std::invalid_argument("corner ground needs at least two rows");

  MetaTopology t;
  t.rows = rows;
  t.cols = cols;
  t.external_ground = ground == GroundPlacement::External;
  const std::size_t offset = t.external_ground ? 1 : 0;
  t.node_count = rows * cols + offset;
  const auto pairs = grid_edge_pairs(rows, cols);
  t.edges.reserve(pairs.size());
  for (const auto& [a, b] : pairs) t.edges.push_back({t.edges.size(), NodeId{a + offset}, NodeId{b + offset}});
  t.boundary.source_pos = t.grid_node(rows / 2, 0);
  t.boundary.load_pos = t.grid_node(rows / 2, cols - 1);
  validate(t);
  return t;
}

// ---------------------------------------------------------------------------
// Design model.

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct ParameterBounds {
  Interval resistance{0.1, 1e5};
  Interval inductance{1e-6, 10.0};
  Interval capacitance{1e-9, 1e-1};

  const Interval& for_branch(Branch b) const {
    switch (b) {
      case Branch::Resistor: return resistance;
      case Branch::Inductor: return inductance;
      case Branch::Capacitor: return capacitance;
      case Branch::Short: break;
    }
    throw std::logic_error("short branch has no parameter bounds");
  }
  const Interval& for_mode(ModeTag t) const {
    switch (t) {
      case ModeTag::Resistor: return resistance;
      case ModeTag::Inductor: return inductance;
      case ModeTag::Capacitor: return capacitance;
      default: break;
    }
    throw std::logic_error("mode has no parameter bounds");
  }
  friend bool operator==(const ParameterBounds&, const ParameterBounds&) = default;
};

inline void validate(const ParameterBounds& b) {
  for (const Interval* i : {&b.resistance, &b.inductance, &b.capacitance})
    if (!(i->lo > 0.0) || !(i->hi >= i->lo) || !std::isfinite(i->hi))
      throw std::invalid_argument("parameter bounds need 0 < lo <= hi < inf");
}

// Source waveform, load and switch residual shared by every design on a grid.
struct Scenario {
  SourceSignal source = StepSource{};
  double load_resistance = 1.0;
  double epsilon = 1e-5;
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct DesignModel {
  MetaTopology topology;
  std::vector<EdgeConfig> edges;  // indexed by edge id
  Scenario scenario;

  friend bool operator==(const DesignModel&, const DesignModel&) = default;
};

inline void validate(const DesignModel& m) {
  validate(m.topology);
  if (m.edges.size() != m.topology.edges.size())
    throw MalformedInput("every topology edge needs exactly one state");
  const double eps = m.scenario.epsilon;
  if (!(eps > 0.0 && eps < 1.0)) throw MalformedInput("epsilon must lie in (0, 1)");
  if (!(m.scenario.load_resistance > 0.0) || !std::isfinite(m.scenario.load_resistance))
    throw MalformedInput("load resistance must be positive");
  if (const auto* w = std::get_if<Waveform>(&m.scenario.source)) validate(*w);
  for (const auto& cfg : m.edges) {
    if (const auto* st = std::get_if<EdgeState>(&cfg)) {
      for (double s : st->s)
        if (!(s >= 0.0 && s <= 1.0)) throw MalformedInput("switch values must lie in [0, 1]");
      for (double p : {st->r, st->l, st->c})
        if (!(p > 0.0) || !std::isfinite(p)) throw MalformedInput("edge parameters must be positive");
    }
  }
}

inline DesignModel make_uniform_model(const MetaTopology& topology, const EdgeConfig& state,
                                      Scenario scenario = {}) {
  DesignModel m{topology, std::vector<EdgeConfig>(topology.edges.size(), state), std::move(scenario)};
  return m;
}

// Number of free optimization variables: 3 parameters + 4 switches for a full
// relaxed edge (fewer once branches are eliminated), one parameter for each
// resistor/inductor/capacitor mode.
inline std::size_t variable_count(const EdgeConfig& cfg) {
  if (const auto* mode = std::get_if<Mode>(&cfg)) return mode->has_param() ? 1 : 0;
  const auto& st = std::get<EdgeState>(cfg);
  std::size_t n = 0;
  for (Branch b : kBranches)
    if (st.is_active(b)) n += carries_parameter(b) ? 2 : 1;
  return n;
}

inline std::size_t variable_count(const DesignModel& m) {
  std::size_t n = 0;
  for (const auto& cfg : m.edges) n += variable_count(cfg);
  return n;
}

inline bool is_relaxed(const DesignModel& m) {
  for (const auto& cfg : m.edges)
    if (std::holds_alternative<EdgeState>(cfg)) return true;
  return false;
}

// Flat physical vector in edge-id order; per active branch (parameter, switch),
// the short branch contributes its switch only.
inline std::vector<double> pack_variables(const DesignModel& m) {
  std::vector<double> v;
  v.reserve(variable_count(m));
  for (const auto& cfg : m.edges) {
    if (const auto* mode = std::get_if<Mode>(&cfg)) {
      if (mode->has_param()) v.push_back(mode->value());
      continue;
    }
    const auto& st = std::get<EdgeState>(cfg);
    for (Branch b : kBranches) {
      if (!st.is_active(b)) continue;
      if (carries_parameter(b)) v.push_back(st.param(b));
      v.push_back(st.sw(b));
    }
  }
  return v;
}

inline DesignModel unpack_variables(const DesignModel& m, std::span<const double> v) {
  if (v.size() != variable_count(m))
    throw std::invalid_argument("unpack_variables: expected " + std::to_string(variable_count(m)) +
                                " values, got " + std::to_string(v.size()));
  DesignModel out = m;
  std::size_t k = 0;
  auto take_param = [&] {
    const double p = v[k++];
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("unpack_variables: non-positive parameter");
    return p;
  };
  for (auto& cfg : out.edges) {
    if (auto* mode = std::get_if<Mode>(&cfg)) {
      if (mode->has_param()) *mode = mode->with_param(take_param());
      continue;
    }
    auto& st = std::get<EdgeState>(cfg);
    for (Branch b : kBranches) {
      if (!st.is_active(b)) continue;
      if (carries_parameter(b)) st.param(b) = take_param();
      const double s = v[k++];
      if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("unpack_variables: switch outside [0, 1]");
      st.sw(b) = s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random initial states.

inline double sample_parameter(Rng& rng, const Interval& range) { return log_uniform(rng, range.lo, range.hi); }

// Each edge gets one of the five modes uniformly; parameters are log-uniform.
inline DesignModel sample_random_states(const MetaTopology& topology, std::uint64_t seed,
                                        const ParameterBounds& bounds = {}, Scenario scenario = {}) {
  validate(bounds);
  Rng rng(seed);
  DesignModel m{topology, {}, std::move(scenario)};
  m.edges.reserve(topology.edges.size());
  for (std::size_t i = 0; i < topology.edges.size(); ++i) {
    const ModeTag tag = kAllModeTags[uniform_index(rng, kAllModeTags.size())];
    const double p = carries_parameter(tag) ? sample_parameter(rng, bounds.for_mode(tag)) : 0.0;
    m.edges.emplace_back(Mode::make(tag, p));
  }
  return m;
}

// Relaxed start: every branch active, switches at `switch_value`, parameters
// log-uniform within bounds.
inline DesignModel initialize_relaxed(const MetaTopology& topology, std::uint64_t seed,
                                      const ParameterBounds& bounds = {}, Scenario scenario = {},
                                      double switch_value = 0.5) {
  validate(bounds);
  Rng rng(seed);
  DesignModel m{topology, {}, std::move(scenario)};
  m.edges.reserve(topology.edges.size());
  for (std::size_t i = 0; i < topology.edges.size(); ++i) {
    EdgeState st;
    st.r = sample_parameter(rng, bounds.resistance);
    st.l = sample_parameter(rng, bounds.inductance);
    st.c = sample_parameter(rng, bounds.capacitance);
    st.s.fill(switch_value);
    m.edges.emplace_back(st);
  }
  return m;
}

// Relaxed model with uniformly random switches, for property tests and sweeps.
inline DesignModel sample_random_relaxed(const MetaTopology& topology, std::uint64_t seed,
                                         const ParameterBounds& bounds = {}, Scenario scenario = {}) {
  DesignModel m = initialize_relaxed(topology, seed, bounds, std::move(scenario));
  Rng rng(derive_seed(seed, 1));
  for (auto& cfg : m.edges)
    for (double& s : std::get<EdgeState>(cfg).s) s = uniform01(rng);
  return m;
}

struct ComponentCounts {
  std::size_t resistors = 0;
  std::size_t inductors = 0;
  std::size_t capacitors = 0;
  std::size_t total() const noexcept { return resistors + inductors + capacitors; }
  friend bool operator==(const ComponentCounts&, const ComponentCounts&) = default;
};

// Resistor/inductor/capacitor modes of a discrete design (shorts excluded).
inline ComponentCounts count_modes(const DesignModel& m) {
  ComponentCounts c;
  for (const auto& cfg : m.edges) {
    const auto* mode = std::get_if<Mode>(&cfg);
    if (!mode) continue;
    c.resistors += mode->tag() == ModeTag::Resistor;
    c.inductors += mode->tag() == ModeTag::Inductor;
    c.capacitors += mode->tag() == ModeTag::Capacitor;
  }
  return c;
}

}  // namespace topoforge
