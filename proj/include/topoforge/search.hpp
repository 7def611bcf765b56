#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "topoforge/circuit_model.hpp"
#include "topoforge/error.hpp"
#include "topoforge/objective.hpp"
#include "topoforge/parallel.hpp"
#include "topoforge/powell.hpp"
#include "topoforge/rng.hpp"
#include "topoforge/simplify.hpp"
#include "topoforge/simulator.hpp"
#include "topoforge/waveform.hpp"

namespace topoforge {

namespace detail {

constexpr std::uint64_t mix(std::uint64_t h, std::uint64_t v) noexcept {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Structural tag of an edge; 0 means the edge is absent (Open).
inline std::uint64_t edge_tag(const EdgeConfig& cfg) {
  if (const auto* mode = std::get_if<Mode>(&cfg))
    return mode->tag() == ModeTag::Open ? 0 : 1 + static_cast<std::uint64_t>(mode->tag());
  const auto& st = std::get<EdgeState>(cfg);
  std::uint64_t mask = 0;
  for (Branch b : kBranches)
    if (st.is_active(b)) mask |= std::uint64_t{1} << index_of(b);
  return mask == 0 ? 0 : 16 + mask;
}

}  // namespace detail

// Parameter-blind digest of the mode-labelled multigraph, invariant under any
// relabelling of nodes that fixes ground, source and load terminals. Node
// labels start from the terminal role and are refined from neighbour labels
// and edge tags until the partition stops growing.
inline std::uint64_t canonical_hash(const DesignModel& m) {
  const auto& t = m.topology;
  const std::size_t n = t.node_count;
  struct Arc {
    std::size_t to;
    std::uint64_t tag;
  };
  std::vector<std::vector<Arc>> adj(n);
  for (std::size_t i = 0; i < t.edges.size(); ++i) {
    const std::uint64_t tag = detail::edge_tag(m.edges[i]);
    if (tag == 0) continue;
    adj[t.edges[i].a.index].push_back({t.edges[i].b.index, tag});
    adj[t.edges[i].b.index].push_back({t.edges[i].a.index, tag});
  }
  std::vector<std::uint64_t> label(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::uint64_t role = 0;
    if (v == t.boundary.source_neg.index || v == t.boundary.load_neg.index) role |= 1;
    if (v == t.boundary.source_pos.index) role |= 2;
    if (v == t.boundary.load_pos.index) role |= 4;
    label[v] = splitmix64(role + 1);
  }
  auto distinct = [](std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
  };
  std::size_t classes = distinct(label);
  std::vector<std::uint64_t> next(n), around;
  for (std::size_t round = 0; round < n; ++round) {
    for (std::size_t v = 0; v < n; ++v) {
      around.clear();
      for (const auto& arc : adj[v]) around.push_back(detail::mix(label[arc.to], arc.tag));
      std::sort(around.begin(), around.end());
      std::uint64_t h = detail::mix(label[v], around.size());
      for (auto x : around) h = detail::mix(h, x);
      next[v] = h;
    }
    label.swap(next);
    const std::size_t c = distinct(label);
    if (c == classes) break;
    classes = c;
  }
  std::vector<std::uint64_t> triples;
  for (std::size_t i = 0; i < t.edges.size(); ++i) {
    const std::uint64_t tag = detail::edge_tag(m.edges[i]);
    if (tag == 0) continue;
    const auto la = label[t.edges[i].a.index], lb = label[t.edges[i].b.index];
    triples.push_back(detail::mix(detail::mix(std::min(la, lb), std::max(la, lb)), tag));
  }
  std::sort(triples.begin(), triples.end());
  std::uint64_t h = splitmix64(triples.size());
  for (auto x : triples) h = detail::mix(h, x);
  return h;
}

// For every resistor, inductor or capacitor edge, in edge order, one child with
// that edge Short and one with it Open.
inline std::vector<DesignModel> mutate(const DesignModel& m) {
  std::vector<DesignModel> out;
  for (std::size_t i = 0; i < m.edges.size(); ++i) {
    const auto* mode = std::get_if<Mode>(&m.edges[i]);
    if (!mode || !mode->has_param()) continue;
    for (Mode repl : {Mode::short_circuit(), Mode::open()}) {
      DesignModel child = m;
      child.edges[i] = repl;
      out.push_back(std::move(child));
    }
  }
  return out;
}

// Discrete-design counterpart of the netlist passes: degenerate values become
// Short or Open, then edges on no cycle through the boundary become Open.
inline DesignModel simplify_modes(const DesignModel& m, const SimplifyThresholds& th = {}) {
  validate(th);
  DesignModel out = m;
  const auto& t = out.topology;
  for (auto& cfg : out.edges) {
    auto* mode = std::get_if<Mode>(&cfg);
    if (!mode) continue;
    if (mode->tag() == ModeTag::Resistor && mode->value() < th.r_short_below) *mode = Mode::short_circuit();
    else if (mode->tag() == ModeTag::Resistor && mode->value() * th.g_open_below > 1.0) *mode = Mode::open();
    else if (mode->tag() == ModeTag::Capacitor && mode->value() < th.c_open_below) *mode = Mode::open();
  }
  auto present = [&](std::size_t i) { return detail::edge_tag(out.edges[i]) != 0; };
  while (true) {
    // Boundary elements are appended after the grid edges.
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> edge_of;
    for (std::size_t i = 0; i < t.edges.size(); ++i)
      if (present(i)) {
        pairs.emplace_back(t.edges[i].a.index, t.edges[i].b.index);
        edge_of.push_back(i);
      }
    pairs.emplace_back(t.boundary.source_pos.index, t.boundary.source_neg.index);
    pairs.emplace_back(t.boundary.load_pos.index, t.boundary.load_neg.index);
    const auto bridge = find_bridges(t.node_count, pairs);

    std::vector<std::vector<std::size_t>> adj(t.node_count);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (k < edge_of.size() && bridge[k]) continue;
      adj[pairs[k].first].push_back(pairs[k].second);
      adj[pairs[k].second].push_back(pairs[k].first);
    }
    std::vector<char> seen(t.node_count, 0);
    std::vector<std::size_t> stack{t.boundary.source_pos.index};
    seen[stack.back()] = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    bool changed = false;
    for (std::size_t k = 0; k < edge_of.size(); ++k) {
      if (bridge[k] || !seen[pairs[k].first]) {
        out.edges[edge_of[k]] = Mode::open();
        changed = true;
      }
    }
    if (!changed) return out;
  }
}

struct Candidate {
  DesignModel model;
  double cost = kInfeasibleCost;
  double parent_cost = kInfeasibleCost;
  std::uint64_t structural_hash = 0;
};

struct SearchConfig {
  std::size_t n_s = 2000;
  std::size_t n_o = 8;
  double c_th = 0.1;
  std::uint64_t seed = 0;
  OptimizerConfig inner{150, 1e-8, 100000, 1e-6};
  ParameterBounds bounds;
  Scenario scenario;
  SimConfig sim;
  SimplifyThresholds thresholds;
  std::size_t max_generations = 100;
  std::size_t workers = 1;
  bool global_dedup = false;          // dedup against every earlier generation too
  std::size_t sample_attempts = 50;   // generation-0 draws allowed per requested topology
  const std::atomic<bool>* cancel = nullptr;
  // Called with each generation's population after it has been costed.
  std::function<void(std::size_t, const std::vector<Candidate>&)> on_generation;
};

inline void validate(const SearchConfig& c) {
  if (c.n_s == 0 || c.n_o == 0) throw std::invalid_argument("search: n_s and n_o must be positive");
  if (c.n_o > c.n_s) throw std::invalid_argument("search: n_o must not exceed n_s");
  if (!(c.c_th > 0.0)) throw std::invalid_argument("search: c_th must be positive");
  if (c.max_generations == 0 || c.workers == 0 || c.sample_attempts == 0)
    throw std::invalid_argument("search: budgets must be positive");
  validate(c.inner);
  validate(c.bounds);
  validate(c.sim);
  validate(c.thresholds);
}

struct GenerationRecord {
  std::size_t generation = 0;
  std::size_t population = 0;
  double best_cost = kInfeasibleCost;  // best optimized cost
  std::size_t best_components = 0;
  std::size_t accepted = 0;
  double seconds = 0.0;
};

enum class SearchExit : std::uint8_t { AboveThreshold, Exhausted, MaxGenerations, Cancelled };

constexpr std::string_view to_string(SearchExit e) noexcept {
  switch (e) {
    case SearchExit::AboveThreshold: return "above-threshold";
    case SearchExit::Exhausted: return "exhausted";
    case SearchExit::MaxGenerations: return "max-generations";
    case SearchExit::Cancelled: return "cancelled";
  }
  return "?";
}

struct SearchResult {
  std::vector<Candidate> accepted;  // optimized designs with cost <= c_th, best first
  std::vector<GenerationRecord> trace;
  SearchExit exit = SearchExit::AboveThreshold;
  std::size_t sampled = 0;  // generation-0 draws
};

// Optimizes the parameters of a discrete design against the target; returns
// the design unchanged when it has no parameters.
inline Candidate optimize_candidate(const Candidate& c, const Waveform& target, const SearchConfig& cfg) {
  Candidate out = c;
  if (variable_count(c.model) == 0) return out;
  const ParameterSpace space(c.model, cfg.bounds);
  const auto res = minimize(make_objective(space, target, 0.0, cfg.sim), space.initial_point(), cfg.inner);
  DesignModel best = space.model_at(res.x_star);
  const double cost = total_loss(best, target, 0.0, cfg.sim).requirements;
  if (cost <= c.cost) {
    out.model = std::move(best);
    out.cost = cost;
  }
  return out;
}

// Cost-guided random search. Generation 0 holds n_s distinct feasible random
// designs. Each generation is simulated, the n_o cheapest are optimized, and
// those at or below c_th become the accepted set, whose Short/Open mutants
// (filtered, simplified, deduplicated) form the next generation, capped at n_s
// by parent cost. The loop returns the previous accepted set as soon as no
// optimized design reaches c_th.
inline SearchResult run_search(const MetaTopology& meta, const Waveform& target, const SearchConfig& cfg) {
  validate(cfg);
  validate(meta);
  validate(target);
  SearchResult out;
  auto cancelled = [&] { return cfg.cancel && cfg.cancel->load(std::memory_order_relaxed); };

  std::vector<Candidate> population;
  std::unordered_set<std::uint64_t> seen;
  std::size_t disconnected = 0, singular = 0;
  const std::size_t attempts = cfg.sample_attempts * cfg.n_s;
  for (std::size_t k = 0; k < attempts && population.size() < cfg.n_s; ++k) {
    ++out.sampled;
    DesignModel m = sample_random_states(meta, derive_seed(cfg.seed, k), cfg.bounds, cfg.scenario);
    const auto fr = check_feasible(m, cfg.sim);
    if (!fr) {
      (fr.status == Feasibility::Disconnected ? disconnected : singular)++;
      continue;
    }
    const auto h = canonical_hash(m);
    if (!seen.insert(h).second) continue;
    population.push_back({std::move(m), kInfeasibleCost, kInfeasibleCost, h});
  }
  if (population.empty())
    throw InfeasibleDesign("no feasible topology in " + std::to_string(out.sampled) + " draws (" +
                           std::to_string(disconnected) + " disconnected, " + std::to_string(singular) + " singular)");
  if (!cfg.global_dedup) seen.clear();

  for (std::size_t gen = 0;; ++gen) {
    if (cancelled()) {
      out.exit = SearchExit::Cancelled;
      return out;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto costs = parallel_map(population.size(), cfg.workers, [&](std::size_t i) {
      return total_loss(population[i].model, target, 0.0, cfg.sim).requirements;
    });
    for (std::size_t i = 0; i < population.size(); ++i) {
      population[i].cost = costs[i];
      if (gen == 0) population[i].parent_cost = costs[i];
    }
    if (cfg.on_generation) cfg.on_generation(gen, population);
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return costs[a] != costs[b] ? costs[a] < costs[b] : a < b;
    });
    std::vector<std::size_t> top;
    for (std::size_t i : order) {
      if (top.size() == cfg.n_o || !std::isfinite(costs[i])) break;
      top.push_back(i);
    }
    auto optimized = parallel_map(top.size(), cfg.workers,
                                  [&](std::size_t k) { return optimize_candidate(population[top[k]], target, cfg); });
    // Optimization can reorder the shortlist; rank by optimized cost, then shortlist position.
    std::vector<std::size_t> rank(optimized.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(),
                     [&](std::size_t a, std::size_t b) { return optimized[a].cost < optimized[b].cost; });

    GenerationRecord rec;
    rec.generation = gen;
    rec.population = population.size();
    if (!rank.empty()) {
      rec.best_cost = optimized[rank.front()].cost;
      rec.best_components = count_modes(optimized[rank.front()].model).total();
    }
    std::vector<Candidate> accepted;
    for (std::size_t k : rank)
      if (optimized[k].cost <= cfg.c_th) accepted.push_back(optimized[k]);
    rec.accepted = accepted.size();
    if (accepted.empty()) {
      rec.seconds = detail::seconds_since(t0);
      out.trace.push_back(rec);
      out.exit = SearchExit::AboveThreshold;
      return out;
    }
    out.accepted = std::move(accepted);

    std::vector<Candidate> children;
    if (!cfg.global_dedup) seen.clear();
    for (const auto& p : out.accepted) seen.insert(p.structural_hash);
    for (const auto& p : out.accepted) {
      for (auto& child : mutate(p.model)) {
        DesignModel simplified = simplify_modes(child, cfg.thresholds);
        if (!check_feasible(simplified, cfg.sim)) continue;
        const auto h = canonical_hash(simplified);
        if (!seen.insert(h).second) continue;
        children.push_back({std::move(simplified), kInfeasibleCost, p.cost, h});
      }
    }
    rec.seconds = detail::seconds_since(t0);
    out.trace.push_back(rec);
    if (children.empty()) {
      out.exit = SearchExit::Exhausted;
      return out;
    }
    if (gen + 1 >= cfg.max_generations) {
      out.exit = SearchExit::MaxGenerations;
      return out;
    }
    if (children.size() > cfg.n_s) {
      std::stable_sort(children.begin(), children.end(),
                       [](const Candidate& a, const Candidate& b) { return a.parent_cost < b.parent_cost; });
      children.resize(cfg.n_s);
    }
    population = std::move(children);
  }
}

inline void write_search_trace(std::ostream& os, const std::vector<GenerationRecord>& trace) {
  os << "gen,best_cost,best_ncomponents,seconds\n";
  for (const auto& r : trace)
    os << r.generation << ',' << format_double(r.best_cost) << ',' << r.best_components << ','
       << format_double(r.seconds) << '\n';
}

}  // namespace topoforge
