#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "topoforge/circuit_model.hpp"
#include "topoforge/simulator.hpp"
#include "topoforge/waveform.hpp"

namespace topoforge {

inline constexpr double kInfeasibleCost = std::numeric_limits<double>::infinity();

// Mean squared error over the overlap of the two waveforms. The target is
// linearly resampled onto the predicted grid when the sample spacing differs.
inline double requirements_cost(const Waveform& predicted, const Waveform& target) {
  if (predicted.samples.empty() || target.samples.empty()) throw std::invalid_argument("requirements_cost: empty waveform");
  if (std::abs(predicted.t0 - target.t0) > 1e-9 * std::max(predicted.dt, target.dt))
    throw std::invalid_argument("requirements_cost: waveforms must start at the same time");
  const bool same_grid = std::abs(predicted.dt - target.dt) <= 1e-12 * predicted.dt;
  const double t_last = target.t_end() + 1e-9 * target.dt;
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    double want;
    if (same_grid) {
      if (i >= target.size()) break;
      want = target.samples[i];
    } else {
      const double t = predicted.time(i);
      if (t > t_last) break;
      want = target.at(t);
    }
    const double d = predicted.samples[i] - want;
    acc += d * d;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("requirements_cost: waveforms do not overlap");
  return acc / static_cast<double>(n);
}

// L1 norm of the switch vector (active branches of relaxed edges).
inline double switch_l1(const DesignModel& m) {
  double acc = 0.0;
  for (const auto& cfg : m.edges)
    if (const auto* st = std::get_if<EdgeState>(&cfg))
      for (Branch b : kBranches)
        if (st->is_active(b)) acc += st->sw(b);
  return acc;
}

struct LossValue {
  double requirements = 0.0;
  double sparsity = 0.0;
  double total = 0.0;
  double lambda = 0.0;
  bool feasible() const noexcept { return std::isfinite(total); }
};

inline LossValue make_loss(double requirements, double sparsity, double lambda) {
  return {requirements, sparsity, requirements + lambda * sparsity, lambda};
}

// Simulates the model and combines the requirements cost with lambda*||s||_1.
// A model with no path from source to load, or one that cannot be simulated,
// gets requirements = total = +inf.
inline LossValue total_loss(const DesignModel& m, const Waveform& target, double lambda, const SimConfig& cfg) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("total_loss: lambda must be non-negative");
  const double sparsity = switch_l1(m);
  const auto graph = to_component_graph(m);
  if (!boundary_connected(graph)) return {kInfeasibleCost, sparsity, kInfeasibleCost, lambda};
  const auto sim = transient(graph, cfg);
  if (!sim.ok()) return {kInfeasibleCost, sparsity, kInfeasibleCost, lambda};
  return make_loss(requirements_cost(sim.waveform, target), sparsity, lambda);
}

// ---------------------------------------------------------------------------
// Box constraints a <= x <= b eliminated by x = a + (sin(y) + 1)(b - a)/2.

inline double box_transform(double y, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("box_transform: need a < b");
  const double x = a + (std::sin(y) + 1.0) * (b - a) / 2.0;
  return std::clamp(x, a, b);
}

// Principal-branch inverse, in [-pi/2, pi/2].
inline double inverse_box_transform(double x, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("inverse_box_transform: need a < b");
  if (!(x >= a && x <= b)) throw std::domain_error("inverse_box_transform: x outside [a, b]");
  const double u = std::clamp(2.0 * (x - a) / (b - a) - 1.0, -1.0, 1.0);
  return std::asin(u);
}

// Maps the packed physical variables of a model to unconstrained coordinates:
// parameters through log then the sine box, switches through the sine box on
// [0, 1]. A degenerate parameter range pins the value.
class ParameterSpace {
 public:
  ParameterSpace(const DesignModel& structure, const ParameterBounds& bounds) : structure_(structure) {
    for (const auto& cfg : structure.edges) {
      if (const auto* mode = std::get_if<Mode>(&cfg)) {
        if (mode->has_param()) add_param(bounds.for_mode(mode->tag()));
        continue;
      }
      const auto& st = std::get<EdgeState>(cfg);
      for (Branch b : kBranches) {
        if (!st.is_active(b)) continue;
        if (carries_parameter(b)) add_param(bounds.for_branch(b));
        kinds_.push_back(Kind::Switch);
        lo_.push_back(0.0);
        hi_.push_back(1.0);
      }
    }
  }

  std::size_t size() const noexcept { return kinds_.size(); }
  const DesignModel& structure() const noexcept { return structure_; }

  std::vector<double> to_physical(std::span<const double> y) const {
    if (y.size() != size()) throw std::invalid_argument("ParameterSpace: dimension mismatch");
    std::vector<double> x(size());
    for (std::size_t i = 0; i < size(); ++i) {
      if (lo_[i] == hi_[i]) {
        x[i] = lo_[i];
      } else if (kinds_[i] == Kind::Switch) {
        x[i] = box_transform(y[i], lo_[i], hi_[i]);
      } else {
        const double v = std::exp(box_transform(y[i], std::log(lo_[i]), std::log(hi_[i])));
        x[i] = std::clamp(v, lo_[i], hi_[i]);
      }
    }
    return x;
  }

  // Values outside the bounds are clamped first.
  std::vector<double> to_unconstrained(std::span<const double> x) const {
    if (x.size() != size()) throw std::invalid_argument("ParameterSpace: dimension mismatch");
    std::vector<double> y(size());
    for (std::size_t i = 0; i < size(); ++i) {
      if (lo_[i] == hi_[i]) {
        y[i] = 0.0;
        continue;
      }
      const double v = std::clamp(x[i], lo_[i], hi_[i]);
      y[i] = kinds_[i] == Kind::Switch ? inverse_box_transform(v, lo_[i], hi_[i])
                                       : inverse_box_transform(std::clamp(std::log(v), std::log(lo_[i]), std::log(hi_[i])),
                                                               std::log(lo_[i]), std::log(hi_[i]));
    }
    return y;
  }

  std::vector<double> initial_point() const { return to_unconstrained(pack_variables(structure_)); }

  DesignModel model_at(std::span<const double> y) const {
    const auto x = to_physical(y);
    return unpack_variables(structure_, x);
  }

 private:
  enum class Kind { Parameter, Switch };
  void add_param(const Interval& range) {
    kinds_.push_back(Kind::Parameter);
    lo_.push_back(range.lo);
    hi_.push_back(range.hi);
  }

  DesignModel structure_;
  std::vector<Kind> kinds_;
  std::vector<double> lo_, hi_;
};

// Objective in unconstrained coordinates: requirements + lambda*||s||_1, +inf
// when the model cannot be simulated.
inline std::function<double(std::span<const double>)> make_objective(const ParameterSpace& space,
                                                                      const Waveform& target, double lambda,
                                                                      const SimConfig& cfg) {
  return [&space, &target, lambda, cfg](std::span<const double> y) {
    const auto model = space.model_at(y);
    return total_loss(model, target, lambda, cfg).total;
  };
}

}  // namespace topoforge
