#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "topoforge/circuit_model.hpp"
#include "topoforge/error.hpp"
#include "topoforge/waveform.hpp"

namespace topoforge {

// ---------------------------------------------------------------------------
// Continuous switch. v = R(s) i with R(s) = ((eps-1)s + 1) / ((1-eps)s + eps),
// written as ((1-s) + eps*s) / (s + eps*(1-s)) so that s = 1/2 gives exactly 1
// and s in {0, 1} give exactly 1/eps and eps.

inline void check_switch_domain(double s, double eps) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("switch value outside [0, 1]");
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("switch epsilon outside (0, 1)");
}

inline double switch_conductance(double s, double eps) {
  check_switch_domain(s, eps);
  return (s + eps * (1.0 - s)) / ((1.0 - s) + eps * s);
}

inline double switch_resistance(double s, double eps) {
  check_switch_domain(s, eps);
  return ((1.0 - s) + eps * s) / (s + eps * (1.0 - s));
}

// ---------------------------------------------------------------------------
// Component graph: vertices are connection points, edges are elements.

enum class ElementKind : std::uint8_t { Resistor, Inductor, Capacitor, Source, Load };

constexpr bool is_boundary(ElementKind k) noexcept { return k == ElementKind::Source || k == ElementKind::Load; }

constexpr std::string_view to_string(ElementKind k) noexcept {
  switch (k) {
    case ElementKind::Resistor: return "R";
    case ElementKind::Inductor: return "L";
    case ElementKind::Capacitor: return "C";
    case ElementKind::Source: return "source";
    case ElementKind::Load: return "load";
  }
  return "?";
}

inline ElementKind element_kind_from_string(std::string_view s) {
  for (ElementKind k : {ElementKind::Resistor, ElementKind::Inductor, ElementKind::Capacitor, ElementKind::Source,
                        ElementKind::Load})
    if (to_string(k) == s) return k;
  throw MalformedInput("unknown element type '" + std::string(s) + "'");
}

// a is the positive terminal for Source and Load.
struct Component {
  ElementKind kind = ElementKind::Resistor;
  double value = 0.0;  // ohms / henries / farads; load ohms; unused for the source
  std::size_t a = 0;
  std::size_t b = 0;
  friend bool operator==(const Component&, const Component&) = default;
};

struct ComponentGraph {
  std::size_t vertex_count = 0;
  std::vector<Component> components;
  SourceSignal signal = StepSource{};

  std::size_t add_vertex() { return vertex_count++; }
  void add(ElementKind kind, double value, std::size_t a, std::size_t b) {
    components.push_back({kind, value, a, b});
  }

  std::size_t index_of(ElementKind kind) const {
    for (std::size_t i = 0; i < components.size(); ++i)
      if (components[i].kind == kind) return i;
    throw MalformedInput("component graph has no " + std::string(to_string(kind)));
  }
  const Component& source() const { return components[index_of(ElementKind::Source)]; }
  const Component& load() const { return components[index_of(ElementKind::Load)]; }
  std::size_t ground() const { return source().b; }

  friend bool operator==(const ComponentGraph&, const ComponentGraph&) = default;
};

inline void validate(const ComponentGraph& g) {
  std::size_t sources = 0, loads = 0;
  for (const auto& c : g.components) {
    if (c.a >= g.vertex_count || c.b >= g.vertex_count) throw MalformedInput("component references unknown vertex");
    if (c.a == c.b) throw MalformedInput("component is a self-loop");
    sources += c.kind == ElementKind::Source;
    loads += c.kind == ElementKind::Load;
    if (c.kind != ElementKind::Source && (!(c.value > 0.0) || !std::isfinite(c.value)))
      throw MalformedInput("component values must be positive and finite");
  }
  if (sources != 1 || loads != 1) throw MalformedInput("component graph needs exactly one source and one load");
  if (g.source().b != g.load().b) throw MalformedInput("source and load must share the ground terminal");
  if (const auto* w = std::get_if<Waveform>(&g.signal)) validate(*w);
}

inline ComponentCounts count_components(const ComponentGraph& g) {
  ComponentCounts c;
  for (const auto& comp : g.components) {
    c.resistors += comp.kind == ElementKind::Resistor;
    c.inductors += comp.kind == ElementKind::Inductor;
    c.capacitors += comp.kind == ElementKind::Capacitor;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Realization: flatten a design model into ideal elements.

struct RealizeOptions {
  // Switches above this value are realized as the closed residual eps.
  double hard_close = 1.0 - 1e-12;
};

inline double realized_switch_resistance(double s, double eps, const RealizeOptions& opt) {
  return s > opt.hard_close ? eps : switch_resistance(s, eps);
}

// Every active switched branch becomes its element in series with the exact
// equivalent switch resistor (a fresh internal vertex sits between them); a
// short branch is the switch resistor alone. Discrete modes map directly, with
// Short as a resistor of eps ohms. Vertex ids 0..node_count-1 are the model's nodes.
inline ComponentGraph to_component_graph(const DesignModel& m, const RealizeOptions& opt = {}) {
  const double eps = m.scenario.epsilon;
  const auto& topo = m.topology;
  ComponentGraph g;
  g.vertex_count = topo.node_count;
  g.signal = m.scenario.source;
  g.add(ElementKind::Source, 0.0, topo.boundary.source_pos.index, topo.boundary.source_neg.index);
  for (std::size_t i = 0; i < topo.edges.size(); ++i) {
    const auto& e = topo.edges[i];
    const std::size_t a = e.a.index, b = e.b.index;
    if (const auto* mode = std::get_if<Mode>(&m.edges[i])) {
      switch (mode->tag()) {
        case ModeTag::Open: break;
        case ModeTag::Short: g.add(ElementKind::Resistor, eps, a, b); break;
        case ModeTag::Resistor: g.add(ElementKind::Resistor, mode->value(), a, b); break;
        case ModeTag::Inductor: g.add(ElementKind::Inductor, mode->value(), a, b); break;
        case ModeTag::Capacitor: g.add(ElementKind::Capacitor, mode->value(), a, b); break;
      }
      continue;
    }
    const auto& st = std::get<EdgeState>(m.edges[i]);
    for (Branch br : kBranches) {
      if (!st.is_active(br)) continue;
      const double rsw = realized_switch_resistance(st.sw(br), eps, opt);
      if (br == Branch::Short) {
        g.add(ElementKind::Resistor, rsw, a, b);
        continue;
      }
      const ElementKind kind = br == Branch::Resistor   ? ElementKind::Resistor
                               : br == Branch::Inductor ? ElementKind::Inductor
                                                        : ElementKind::Capacitor;
      const std::size_t mid = g.add_vertex();
      g.add(kind, st.param(br), a, mid);
      g.add(ElementKind::Resistor, rsw, mid, b);
    }
  }
  g.add(ElementKind::Load, m.scenario.load_resistance, topo.boundary.load_pos.index, topo.boundary.load_neg.index);
  return g;
}

}  // namespace topoforge
