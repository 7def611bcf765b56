#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "topoforge/circuit_model.hpp"
#include "topoforge/component_graph.hpp"
#include "topoforge/error.hpp"
#include "topoforge/waveform.hpp"

namespace topoforge {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kNetlistFormat = "topoforge-netlist/1";

namespace detail {

inline void require_keys(const Json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw MalformedInput(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw MalformedInput(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_field(const Json& j, const char* key, std::string_view where) {
  if (!j.contains(key)) throw MalformedInput(std::string(where) + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw MalformedInput(std::string(where) + ": bad value for '" + key + "'");
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, std::string_view where) {
  return j.contains(key) ? get_field<T>(j, key, where) : fallback;
}

inline Json signal_to_json(const SourceSignal& s) {
  if (const auto* step = std::get_if<StepSource>(&s))
    return Json{{"type", "step"}, {"amplitude", step->amplitude}, {"delay", step->delay}};
  const auto& w = std::get<Waveform>(s);
  return Json{{"type", "waveform"}, {"t0", w.t0}, {"dt", w.dt}, {"samples", w.samples}};
}

inline SourceSignal signal_from_json(const Json& j) {
  const std::string type = get_field<std::string>(j, "type", "source");
  if (type == "step") {
    require_keys(j, "source", {"type", "amplitude", "delay"});
    return StepSource{get_or(j, "amplitude", 1.0, "source"), get_or(j, "delay", 0.0, "source")};
  }
  if (type == "waveform") {
    require_keys(j, "source", {"type", "t0", "dt", "samples"});
    Waveform w{get_field<double>(j, "t0", "source"), get_field<double>(j, "dt", "source"),
               get_field<std::vector<double>>(j, "samples", "source")};
    try {
      validate(w);
    } catch (const std::exception& e) {
      throw MalformedInput(std::string("source waveform: ") + e.what());
    }
    return w;
  }
  throw MalformedInput("source: unknown type '" + type + "'");
}

inline Json edge_state_to_json(const EdgeState& st) {
  Json active = Json::array();
  for (bool a : st.active) active.push_back(a);
  return Json{{"r", st.r}, {"l", st.l}, {"c", st.c}, {"s", st.s}, {"active", active}};
}

inline EdgeState edge_state_from_json(const Json& j) {
  require_keys(j, "state", {"r", "l", "c", "s", "active"});
  EdgeState st;
  st.r = get_field<double>(j, "r", "state");
  st.l = get_field<double>(j, "l", "state");
  st.c = get_field<double>(j, "c", "state");
  const auto s = get_field<std::vector<double>>(j, "s", "state");
  if (s.size() != 4) throw MalformedInput("state: 's' needs four switch values (r, l, c, short)");
  std::copy(s.begin(), s.end(), st.s.begin());
  if (j.contains("active")) {
    const auto a = get_field<std::vector<bool>>(j, "active", "state");
    if (a.size() != 4) throw MalformedInput("state: 'active' needs four flags");
    std::copy(a.begin(), a.end(), st.active.begin());
  }
  return st;
}

}  // namespace detail

// Design netlist: the grid (or any meta-topology) with one state per edge.
inline Json design_to_json(const DesignModel& m) {
  const auto& t = m.topology;
  Json edges = Json::array();
  for (std::size_t i = 0; i < t.edges.size(); ++i) {
    Json e{{"id", i}, {"a", t.edges[i].a.index}, {"b", t.edges[i].b.index}};
    if (const auto* mode = std::get_if<Mode>(&m.edges[i])) {
      e["mode"] = std::string(to_string(mode->tag()));
      if (mode->has_param()) e["value"] = mode->value();
    } else {
      e["state"] = detail::edge_state_to_json(std::get<EdgeState>(m.edges[i]));
    }
    edges.push_back(std::move(e));
  }
  Json j{{"format", kNetlistFormat}, {"kind", "design"}};
  if (t.rows > 0) j["grid"] = Json{{"rows", t.rows}, {"cols", t.cols}, {"external_ground", t.external_ground}};
  j["nodes"] = t.node_count;
  j["edges"] = std::move(edges);
  j["boundary"] = Json{{"source_pos", t.boundary.source_pos.index},
                       {"source_neg", t.boundary.source_neg.index},
                       {"load_pos", t.boundary.load_pos.index},
                       {"load_neg", t.boundary.load_neg.index}};
  j["source"] = detail::signal_to_json(m.scenario.source);
  j["load_resistance"] = m.scenario.load_resistance;
  j["epsilon"] = m.scenario.epsilon;
  return j;
}

inline Json components_to_json(const ComponentGraph& g) {
  Json comps = Json::array();
  for (const auto& c : g.components) {
    Json e{{"type", std::string(to_string(c.kind))}, {"a", c.a}, {"b", c.b}};
    if (c.kind != ElementKind::Source) e["value"] = c.value;
    comps.push_back(std::move(e));
  }
  return Json{{"format", kNetlistFormat}, {"kind", "components"}, {"vertices", g.vertex_count},
              {"components", std::move(comps)}, {"source", detail::signal_to_json(g.signal)}};
}

inline DesignModel design_from_json(const Json& j) {
  detail::require_keys(j, "netlist",
                       {"format", "kind", "grid", "nodes", "edges", "boundary", "source", "load_resistance", "epsilon"});
  if (detail::get_field<std::string>(j, "format", "netlist") != kNetlistFormat)
    throw MalformedInput("netlist: unsupported format");
  if (detail::get_field<std::string>(j, "kind", "netlist") != "design") throw MalformedInput("netlist: not a design");
  DesignModel m;
  auto& t = m.topology;
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::require_keys(g, "grid", {"rows", "cols", "external_ground"});
    t.rows = detail::get_field<std::size_t>(g, "rows", "grid");
    t.cols = detail::get_field<std::size_t>(g, "cols", "grid");
    t.external_ground = detail::get_or(g, "external_ground", false, "grid");
  }
  t.node_count = detail::get_field<std::size_t>(j, "nodes", "netlist");
  const auto& edges = j.at("edges");
  if (!edges.is_array()) throw MalformedInput("netlist: 'edges' must be an array");
  for (const auto& e : edges) {
    detail::require_keys(e, "edge", {"id", "a", "b", "mode", "value", "state"});
    t.edges.push_back({detail::get_field<std::size_t>(e, "id", "edge"), NodeId{detail::get_field<std::size_t>(e, "a", "edge")},
                       NodeId{detail::get_field<std::size_t>(e, "b", "edge")}});
    if (e.contains("state") == e.contains("mode")) throw MalformedInput("edge: exactly one of 'mode' or 'state'");
    if (e.contains("state")) {
      m.edges.emplace_back(detail::edge_state_from_json(e.at("state")));
      continue;
    }
    const ModeTag tag = mode_tag_from_string(detail::get_field<std::string>(e, "mode", "edge"));
    if (carries_parameter(tag) != e.contains("value")) throw MalformedInput("edge: 'value' required exactly for R/L/C modes");
    try {
      m.edges.emplace_back(Mode::make(tag, detail::get_or(e, "value", 0.0, "edge")));
    } catch (const std::invalid_argument& ex) {
      throw MalformedInput(std::string("edge: ") + ex.what());
    }
  }
  const auto& b = j.at("boundary");
  detail::require_keys(b, "boundary", {"source_pos", "source_neg", "load_pos", "load_neg"});
  t.boundary.source_pos = NodeId{detail::get_field<std::size_t>(b, "source_pos", "boundary")};
  t.boundary.source_neg = NodeId{detail::get_or<std::size_t>(b, "source_neg", 0, "boundary")};
  t.boundary.load_pos = NodeId{detail::get_field<std::size_t>(b, "load_pos", "boundary")};
  t.boundary.load_neg = NodeId{detail::get_or<std::size_t>(b, "load_neg", 0, "boundary")};
  if (j.contains("source")) m.scenario.source = detail::signal_from_json(j.at("source"));
  m.scenario.load_resistance = detail::get_or(j, "load_resistance", 1.0, "netlist");
  m.scenario.epsilon = detail::get_or(j, "epsilon", 1e-5, "netlist");
  validate(m);
  return m;
}

inline ComponentGraph components_from_json(const Json& j) {
  detail::require_keys(j, "netlist", {"format", "kind", "vertices", "components", "source"});
  if (detail::get_field<std::string>(j, "format", "netlist") != kNetlistFormat)
    throw MalformedInput("netlist: unsupported format");
  if (detail::get_field<std::string>(j, "kind", "netlist") != "components")
    throw MalformedInput("netlist: not a component netlist");
  ComponentGraph g;
  g.vertex_count = detail::get_field<std::size_t>(j, "vertices", "netlist");
  const auto& comps = j.at("components");
  if (!comps.is_array()) throw MalformedInput("netlist: 'components' must be an array");
  for (const auto& c : comps) {
    detail::require_keys(c, "component", {"type", "value", "a", "b"});
    const auto kind = element_kind_from_string(detail::get_field<std::string>(c, "type", "component"));
    const double value = kind == ElementKind::Source ? 0.0 : detail::get_field<double>(c, "value", "component");
    g.add(kind, value, detail::get_field<std::size_t>(c, "a", "component"),
          detail::get_field<std::size_t>(c, "b", "component"));
  }
  if (j.contains("source")) g.signal = detail::signal_from_json(j.at("source"));
  validate(g);
  return g;
}

// Either kind of netlist; designs are realized into components.
struct Netlist {
  std::variant<DesignModel, ComponentGraph> content;

  bool is_design() const noexcept { return std::holds_alternative<DesignModel>(content); }
  ComponentGraph components() const {
    if (const auto* d = std::get_if<DesignModel>(&content)) return to_component_graph(*d);
    return std::get<ComponentGraph>(content);
  }
};

inline Netlist netlist_from_json(const Json& j) {
  if (!j.is_object()) throw MalformedInput("netlist: expected an object");
  const std::string kind = detail::get_field<std::string>(j, "kind", "netlist");
  if (kind == "design") return {design_from_json(j)};
  if (kind == "components") return {components_from_json(j)};
  throw MalformedInput("netlist: unknown kind '" + kind + "'");
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedInput(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path);
}

inline Netlist read_netlist_file(const std::string& path) { return netlist_from_json(read_json_file(path)); }

}  // namespace topoforge
