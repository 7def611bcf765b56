#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "topoforge/component_graph.hpp"
#include "topoforge/error.hpp"

namespace topoforge {

struct SimplifyThresholds {
  double r_short_below = 1e-4;   // resistors below this are contracted
  double c_open_below = 1e-12;   // capacitors below this are deleted
  double g_open_below = 1e-6;    // resistors above 1/g_open_below are deleted

  // r_short_below = 10 eps, g_open_below = eps / 10.
  static SimplifyThresholds for_epsilon(double eps) { return {10.0 * eps, 1e-12, eps / 10.0}; }
  friend bool operator==(const SimplifyThresholds&, const SimplifyThresholds&) = default;
};

inline void validate(const SimplifyThresholds& t) {
  if (!(t.r_short_below > 0.0) || !(t.c_open_below > 0.0) || !(t.g_open_below > 0.0))
    throw std::invalid_argument("simplify thresholds must be positive");
}

// Bridges of an undirected multigraph given as endpoint pairs; parallel edges
// are never bridges. Iterative, so deep graphs do not overflow the stack.
inline std::vector<bool> find_bridges(std::size_t vertex_count,
                                      const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(vertex_count);  // (neighbour, edge id)
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    if (a == b) continue;
    adj[a].emplace_back(b, e);
    adj[b].emplace_back(a, e);
  }
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> disc(vertex_count, kUnset), low(vertex_count, 0);
  std::vector<bool> bridge(edges.size(), false);
  std::size_t timer = 0;
  struct Frame {
    std::size_t v, parent_edge, next;
  };
  std::vector<Frame> stack;
  for (std::size_t root = 0; root < vertex_count; ++root) {
    if (disc[root] != kUnset) continue;
    disc[root] = low[root] = timer++;
    stack.push_back({root, kUnset, 0});
    while (!stack.empty()) {
      auto& f = stack.back();
      if (f.next < adj[f.v].size()) {
        const auto [w, e] = adj[f.v][f.next++];
        if (e == f.parent_edge) continue;
        if (disc[w] == kUnset) {
          disc[w] = low[w] = timer++;
          stack.push_back({w, e, 0});
        } else {
          low[f.v] = std::min(low[f.v], disc[w]);
        }
        continue;
      }
      const Frame done = f;
      stack.pop_back();
      if (!stack.empty()) {
        auto& p = stack.back();
        low[p.v] = std::min(low[p.v], low[done.v]);
        if (low[done.v] > disc[p.v]) bridge[done.parent_edge] = true;
      }
    }
  }
  return bridge;
}

namespace detail {

inline std::vector<char> boundary_vertices(const ComponentGraph& g) {
  std::vector<char> b(g.vertex_count, 0);
  for (const auto& c : g.components)
    if (is_boundary(c.kind)) b[c.a] = b[c.b] = 1;
  return b;
}

inline std::vector<char> reachable_from(const ComponentGraph& g, std::size_t start) {
  std::vector<std::vector<std::size_t>> adj(g.vertex_count);
  for (const auto& c : g.components) {
    adj[c.a].push_back(c.b);
    adj[c.b].push_back(c.a);
  }
  std::vector<char> seen(g.vertex_count, 0);
  std::vector<std::size_t> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  return seen;
}

}  // namespace detail

// Keeps the connected component that holds the source and load.
inline ComponentGraph remove_isolated(const ComponentGraph& g) {
  validate(g);
  const auto seen = detail::reachable_from(g, g.source().a);
  if (!seen[g.load().a] || !seen[g.load().b]) throw MalformedInput("source and load lie in different components");
  ComponentGraph out = g;
  std::erase_if(out.components, [&](const Component& c) { return !seen[c.a]; });
  return out;
}

// Deletes every non-boundary element that lies on no cycle, together with the
// parts it alone attached to the boundary.
inline ComponentGraph remove_dangling(const ComponentGraph& g) {
  ComponentGraph out = remove_isolated(g);
  while (true) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(out.components.size());
    for (const auto& c : out.components) pairs.emplace_back(c.a, c.b);
    const auto bridge = find_bridges(out.vertex_count, pairs);
    bool any = false;
    std::vector<Component> kept;
    kept.reserve(out.components.size());
    for (std::size_t i = 0; i < out.components.size(); ++i) {
      if (bridge[i] && !is_boundary(out.components[i].kind)) {
        any = true;
        continue;
      }
      kept.push_back(out.components[i]);
    }
    if (!any) return out;
    out.components = std::move(kept);
    out = remove_isolated(out);
  }
}

// Contracts tiny resistors, deletes tiny capacitors and huge resistors.
// A tiny resistor that would merge a source or load terminal with ground is kept.
inline ComponentGraph prune_degenerate(const ComponentGraph& g, const SimplifyThresholds& th = {}) {
  validate(g);
  validate(th);
  const auto boundary = detail::boundary_vertices(g);
  std::vector<std::size_t> parent(g.vertex_count);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  const std::size_t ground = find(g.ground());
  const std::size_t src = g.source().a, load = g.load().a;

  ComponentGraph out = g;
  std::vector<char> drop(g.components.size(), 0);
  for (std::size_t i = 0; i < g.components.size(); ++i) {
    const auto& c = g.components[i];
    if (c.kind == ElementKind::Capacitor && c.value < th.c_open_below) drop[i] = 1;
    if (c.kind == ElementKind::Resistor && c.value * th.g_open_below > 1.0) drop[i] = 1;
  }
  for (std::size_t i = 0; i < g.components.size(); ++i) {
    const auto& c = g.components[i];
    if (drop[i] || c.kind != ElementKind::Resistor || !(c.value < th.r_short_below)) continue;
    std::size_t a = find(c.a), b = find(c.b);
    const std::size_t gr = find(ground);
    const auto terminal = [&](std::size_t v) { return v == find(src) || v == find(load); };
    if ((a == gr && terminal(b)) || (b == gr && terminal(a))) continue;
    drop[i] = 1;
    if (a == b) continue;
    // Boundary vertices survive a contraction; otherwise the lower id does.
    if (boundary[b] && !boundary[a]) std::swap(a, b);
    if (!boundary[a] && !boundary[b] && b < a) std::swap(a, b);
    parent[b] = a;
  }
  std::vector<Component> kept;
  for (std::size_t i = 0; i < out.components.size(); ++i) {
    if (drop[i]) continue;
    Component c = out.components[i];
    c.a = find(c.a);
    c.b = find(c.b);
    if (c.a == c.b) continue;  // elements shorted out by a contraction
    kept.push_back(c);
  }
  out.components = std::move(kept);
  return out;
}

namespace detail {

inline double parallel_value(ElementKind k, double x, double y) {
  return k == ElementKind::Capacitor ? x + y : 1.0 / (1.0 / x + 1.0 / y);
}
inline double series_value(ElementKind k, double x, double y) {
  return k == ElementKind::Capacitor ? 1.0 / (1.0 / x + 1.0 / y) : x + y;
}

// Same-type elements on the same vertex pair collapse into the first one.
inline bool merge_parallel_once(ComponentGraph& g) {
  std::map<std::tuple<std::size_t, std::size_t, ElementKind>, std::size_t> first;
  std::vector<char> drop(g.components.size(), 0);
  bool changed = false;
  for (std::size_t i = 0; i < g.components.size(); ++i) {
    auto& c = g.components[i];
    if (is_boundary(c.kind)) continue;
    const auto key = std::make_tuple(std::min(c.a, c.b), std::max(c.a, c.b), c.kind);
    auto [it, inserted] = first.emplace(key, i);
    if (inserted) continue;
    auto& keep = g.components[it->second];
    keep.value = parallel_value(c.kind, keep.value, c.value);
    drop[i] = 1;
    changed = true;
  }
  if (changed) {
    std::size_t k = 0;
    std::erase_if(g.components, [&](const Component&) { return drop[k++] != 0; });
  }
  return changed;
}

// Two same-type elements meeting at an internal degree-2 vertex become one.
inline bool merge_series_once(ComponentGraph& g) {
  const auto boundary = boundary_vertices(g);
  std::vector<std::vector<std::size_t>> incident(g.vertex_count);
  for (std::size_t i = 0; i < g.components.size(); ++i) {
    incident[g.components[i].a].push_back(i);
    incident[g.components[i].b].push_back(i);
  }
  std::vector<char> drop(g.components.size(), 0), touched(g.components.size(), 0);
  bool changed = false;
  for (std::size_t v = 0; v < g.vertex_count; ++v) {
    if (boundary[v] || incident[v].size() != 2) continue;
    const std::size_t i = incident[v][0], j = incident[v][1];
    if (i == j || touched[i] || touched[j]) continue;
    auto& x = g.components[i];
    const auto& y = g.components[j];
    if (x.kind != y.kind || is_boundary(x.kind)) continue;
    const std::size_t u = x.a == v ? x.b : x.a;
    const std::size_t w = y.a == v ? y.b : y.a;
    if (u == w) continue;  // a two-element loop; left for the parallel and dangling passes
    x.value = series_value(x.kind, x.value, y.value);
    if (x.a == v) x.a = w;
    else x.b = w;
    drop[j] = 1;
    touched[i] = touched[j] = 1;
    changed = true;
  }
  if (changed) {
    std::size_t k = 0;
    std::erase_if(g.components, [&](const Component&) { return drop[k++] != 0; });
  }
  return changed;
}

}  // namespace detail

inline ComponentGraph merge_series_parallel(const ComponentGraph& g) {
  validate(g);
  ComponentGraph out = g;
  bool changed = true;
  while (changed) {
    changed = detail::merge_parallel_once(out);
    changed = detail::merge_series_once(out) || changed;
  }
  return out;
}

// Drops vertices no component touches; the rest keep their relative order.
inline ComponentGraph compact_vertices(const ComponentGraph& g) {
  std::vector<char> used(g.vertex_count, 0);
  for (const auto& c : g.components) used[c.a] = used[c.b] = 1;
  std::vector<std::size_t> map(g.vertex_count, 0);
  std::size_t n = 0;
  for (std::size_t v = 0; v < g.vertex_count; ++v)
    if (used[v]) map[v] = n++;
  ComponentGraph out = g;
  out.vertex_count = n;
  for (auto& c : out.components) {
    c.a = map[c.a];
    c.b = map[c.b];
  }
  return out;
}

// Runs all passes until none changes the graph, then compacts vertex ids.
inline ComponentGraph simplify_fixpoint(const ComponentGraph& g, const SimplifyThresholds& th = {},
                                        std::size_t* rounds = nullptr) {
  ComponentGraph cur = g;
  std::size_t n = 0;
  while (true) {
    ++n;
    ComponentGraph next = merge_series_parallel(prune_degenerate(remove_dangling(cur), th));
    if (next == cur) break;
    cur = std::move(next);
  }
  if (rounds) *rounds = n;
  return compact_vertices(cur);
}

inline std::string to_dot(const ComponentGraph& g, std::string_view name = "circuit") {
  std::ostringstream os;
  os << "graph " << name << " {\n";
  os << "  node [shape=circle, fontsize=10];\n";
  for (std::size_t v = 0; v < g.vertex_count; ++v) os << "  n" << v << " [label=\"" << v << "\"];\n";
  for (const auto& c : g.components) {
    os << "  n" << c.a << " -- n" << c.b << " [label=\"" << to_string(c.kind);
    if (c.kind != ElementKind::Source) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.6g", c.value);
      os << buf;
    }
    os << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace topoforge
