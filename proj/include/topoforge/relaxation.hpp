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
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "topoforge/circuit_model.hpp"
#include "topoforge/component_graph.hpp"
#include "topoforge/error.hpp"
#include "topoforge/objective.hpp"
#include "topoforge/parallel.hpp"
#include "topoforge/powell.hpp"
#include "topoforge/simulator.hpp"
#include "topoforge/waveform.hpp"

namespace topoforge {

struct RelaxationConfig {
  double lambda0 = 0.0;  // 0 selects 1e-3 times the initial requirements cost
  double delta = 2.0;
  double switch_zero_threshold = 1e-2;
  // Largest relative rise of the requirements cost an elimination may cause
  // before branches are restored; matches one growth step of lambda.
  double elimination_tolerance = 1.0;
  std::size_t max_outer = 50;
  OptimizerConfig inner{150, 1e-8, 100000, 1e-6};
  double solution_tolerance = 1e-8;  // relative improvement at which a minimization stops
  ParameterBounds bounds;
  SimConfig sim;
  const std::atomic<bool>* cancel = nullptr;
};

inline void validate(const RelaxationConfig& c) {
  if (!(c.lambda0 >= 0.0) || !std::isfinite(c.lambda0)) throw std::invalid_argument("relaxation: lambda0 must be >= 0");
  if (!(c.delta > 1.0)) throw std::invalid_argument("relaxation: delta must exceed 1");
  if (!(c.switch_zero_threshold > 0.0 && c.switch_zero_threshold < 1.0))
    throw std::invalid_argument("relaxation: switch threshold must lie in (0, 1)");
  if (!(c.elimination_tolerance >= 0.0)) throw std::invalid_argument("relaxation: elimination tolerance must be >= 0");
  if (c.max_outer == 0) throw std::invalid_argument("relaxation: max_outer must be positive");
  if (!(c.solution_tolerance > 0.0)) throw std::invalid_argument("relaxation: solution tolerance must be positive");
  validate(c.inner);
  validate(c.bounds);
  validate(c.sim);
}

struct RelaxationRecord {
  std::size_t outer = 0;
  double lambda = 0.0;
  double cost = 0.0;           // requirements cost after this minimization
  std::size_t variables = 0;   // variables optimized in this iteration
  double seconds = 0.0;
  bool accepted = false;       // cost did not exceed the previous accepted cost
  std::size_t eliminated = 0;  // branches removed after this iteration
  std::size_t restored = 0;    // branches put back to keep the design feasible
};

struct RelaxationResult {
  DesignModel model;
  std::vector<RelaxationRecord> trace;  // regularized iterations followed by the polish (lambda = 0)
  double final_cost = kInfeasibleCost;
  std::size_t initial_variables = 0;
  std::size_t final_variables = 0;
  bool rejected = false;   // loop ended because the cost rose
  bool cancelled = false;
};

struct EliminationResult {
  DesignModel model;
  std::size_t eliminated = 0;
  std::size_t restored = 0;
};

// Deactivates every branch whose switch is below the threshold; an edge with
// no active branch becomes Open. When that leaves the design infeasible, or
// `acceptable` rejects it, the removed branches are restored one at a time,
// largest switch first, until it passes again.
inline EliminationResult eliminate_zero_switches(const DesignModel& m, double threshold, const SimConfig& sim = {},
                                                 const std::function<bool(const DesignModel&)>& acceptable = {}) {
  struct Removed {
    std::size_t edge;
    Branch branch;
    double s;
  };
  std::vector<Removed> removed;
  DesignModel out = m;
  for (std::size_t i = 0; i < out.edges.size(); ++i) {
    auto* st = std::get_if<EdgeState>(&out.edges[i]);
    if (!st) continue;
    for (Branch b : kBranches)
      if (st->is_active(b) && st->sw(b) < threshold) {
        st->active[index_of(b)] = false;
        removed.push_back({i, b, st->sw(b)});
      }
  }
  auto finish = [](DesignModel d) {
    for (auto& cfg : d.edges)
      if (const auto* st = std::get_if<EdgeState>(&cfg); st && st->is_open()) cfg = Mode::open();
    return d;
  };
  EliminationResult res{out, removed.size(), 0};
  if (removed.empty()) return res;
  std::stable_sort(removed.begin(), removed.end(), [](const Removed& x, const Removed& y) { return x.s > y.s; });
  std::size_t next = 0;
  auto passes = [&](const DesignModel& d) { return check_feasible(d, sim) && (!acceptable || acceptable(d)); };
  while (!passes(out)) {
    if (next == removed.size()) {
      if (!check_feasible(out, sim)) throw InfeasibleDesign("elimination rollback could not restore feasibility");
      break;
    }
    const auto& r = removed[next++];
    std::get<EdgeState>(out.edges[r.edge]).active[index_of(r.branch)] = true;
  }
  res.model = finish(std::move(out));
  res.restored = next;
  res.eliminated = removed.size() - next;
  return res;
}

// The ideal-element netlist of a relaxed design: each surviving branch in
// series with the switch's equivalent resistor.
inline ComponentGraph realize_switches(const DesignModel& m, const RealizeOptions& opt = {}) {
  return to_component_graph(m, opt);
}

namespace detail {

struct MinimizeOutcome {
  DesignModel model;
  double requirements;
};

inline MinimizeOutcome minimize_design(const DesignModel& m, const Waveform& target, double lambda,
                                       const RelaxationConfig& cfg) {
  const ParameterSpace space(m, cfg.bounds);
  auto f = make_objective(space, target, lambda, cfg.sim);
  OptimizerConfig inner = cfg.inner;
  inner.f_tolerance = cfg.solution_tolerance;
  const auto res = minimize(f, space.initial_point(), inner);
  DesignModel best = space.model_at(res.x_star);
  return {best, total_loss(best, target, 0.0, cfg.sim).requirements};
}

}  // namespace detail

// Continuous relaxation loop: minimize C + lambda*||s||_1, and while the
// requirements cost does not rise, grow lambda by delta and eliminate zero
// switches. Once it rises (or max_outer is reached) one last minimization of C
// alone starts from the current point and its result is returned.
inline RelaxationResult run_relaxation(const DesignModel& initial, const Waveform& target, const RelaxationConfig& cfg) {
  validate(cfg);
  validate(initial);
  validate(target);
  if (const auto fr = check_feasible(initial, cfg.sim); !fr)
    throw InfeasibleDesign("initial design is infeasible: " + std::string(to_string(fr.status)));
  const double c0 = total_loss(initial, target, 0.0, cfg.sim).requirements;
  if (!std::isfinite(c0)) throw InfeasibleDesign("initial design cannot be simulated");

  RelaxationResult out;
  out.initial_variables = variable_count(initial);
  double lambda = cfg.lambda0 > 0.0 ? cfg.lambda0 : 1e-3 * c0;
  double c_prev = std::numeric_limits<double>::infinity();
  DesignModel model = initial;
  auto cancelled = [&] { return cfg.cancel && cfg.cancel->load(std::memory_order_relaxed); };

  for (std::size_t outer = 0; outer < cfg.max_outer; ++outer) {
    if (cancelled()) {
      out.cancelled = true;
      break;
    }
    const auto t0 = std::chrono::steady_clock::now();
    RelaxationRecord rec;
    rec.outer = outer;
    rec.lambda = lambda;
    rec.variables = variable_count(model);
    auto step = detail::minimize_design(model, target, lambda, cfg);
    rec.cost = step.requirements;
    model = std::move(step.model);
    if (rec.cost <= c_prev) {
      rec.accepted = true;
      lambda *= cfg.delta;
      c_prev = rec.cost;
      const double limit = rec.cost * (1.0 + cfg.elimination_tolerance);
      auto elim = eliminate_zero_switches(model, cfg.switch_zero_threshold, cfg.sim, [&](const DesignModel& d) {
        return total_loss(d, target, 0.0, cfg.sim).requirements <= limit;
      });
      model = std::move(elim.model);
      rec.eliminated = elim.eliminated;
      rec.restored = elim.restored;
      rec.seconds = detail::seconds_since(t0);
      out.trace.push_back(rec);
      continue;
    }
    rec.seconds = detail::seconds_since(t0);
    out.trace.push_back(rec);
    out.rejected = true;
    break;
  }

  const auto t0 = std::chrono::steady_clock::now();
  RelaxationRecord polish;
  polish.outer = out.trace.size();
  polish.lambda = 0.0;
  polish.variables = variable_count(model);
  const double before = total_loss(model, target, 0.0, cfg.sim).requirements;
  if (out.cancelled) {
    polish.cost = before;
  } else {
    auto step = detail::minimize_design(model, target, 0.0, cfg);
    // Powell never returns a worse point than its start; keep that guarantee
    // explicit against re-simulation round-off.
    if (step.requirements <= before || !std::isfinite(before)) {
      model = std::move(step.model);
      polish.cost = step.requirements;
    } else {
      polish.cost = before;
    }
  }
  polish.accepted = true;
  polish.seconds = detail::seconds_since(t0);
  out.trace.push_back(polish);
  out.final_cost = polish.cost;
  out.final_variables = variable_count(model);
  out.model = std::move(model);
  return out;
}

// Seeds a fully relaxed design on the topology (switches 0.5, parameters
// log-uniform within bounds) and runs the loop.
inline RelaxationResult run_relaxation(const MetaTopology& topology, const Scenario& scenario, const Waveform& target,
                                       const RelaxationConfig& cfg, std::uint64_t seed) {
  return run_relaxation(initialize_relaxed(topology, seed, cfg.bounds, scenario), target, cfg);
}

inline void write_relaxation_trace(std::ostream& os, const std::vector<RelaxationRecord>& trace) {
  os << "outer,lambda,cost,nvars,seconds\n";
  for (const auto& r : trace)
    os << r.outer << ',' << format_double(r.lambda) << ',' << format_double(r.cost) << ',' << r.variables << ','
       << format_double(r.seconds) << '\n';
}

}  // namespace topoforge
