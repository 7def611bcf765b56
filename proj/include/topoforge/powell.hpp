#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "topoforge/error.hpp"

namespace topoforge {

struct OptimizerConfig {
  std::size_t max_iterations = 150;     // direction-set sweeps
  double f_tolerance = 1e-8;            // relative improvement per sweep
  std::size_t max_evaluations = 100000;
  double line_search_tolerance = 1e-6;  // relative step accuracy of the line search
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

inline void validate(const OptimizerConfig& c) {
  if (c.max_iterations == 0 || c.max_evaluations == 0) throw std::invalid_argument("optimizer budgets must be positive");
  if (!(c.f_tolerance > 0.0) || !(c.line_search_tolerance > 0.0))
    throw std::invalid_argument("optimizer tolerances must be positive");
}

struct OptimizerResult {
  std::vector<double> x_star;
  double f_star = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::vector<double> best_per_iteration;
};

struct LineMinimum {
  double step = 0.0;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

namespace detail {

inline constexpr double kGolden = 0.3819660112501051;  // 2 - phi
inline constexpr double kGrow = 1.618033988749895;     // phi
inline constexpr double kLineAbsTol = 1e-12;

inline double finite_or_inf(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

// Brent's minimization on [a, b] starting from the interior point x with
// known value fx. Non-finite values are treated as +inf; the parabolic step is
// only attempted when all three interpolation values are finite.
template <class F>
std::pair<double, double> brent(F&& f, double a, double b, double x, double fx, double tol, std::size_t max_iter = 100) {
  double w = x, v = x, fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + kLineAbsTol;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;
    bool golden = true;
    if (std::abs(e) > tol1 && std::isfinite(fx) && std::isfinite(fw) && std::isfinite(fv)) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (!(std::abs(p) >= std::abs(0.5 * q * etemp) || p <= q * (a - x) || p >= q * (b - x))) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = std::copysign(tol1, xm - x);
        golden = false;
      }
    }
    if (golden) {
      e = (x >= xm) ? a - x : b - x;
      d = kGolden * e;
    }
    const double u = std::abs(d) >= tol1 ? x + d : x + std::copysign(tol1, d);
    const double fu = finite_or_inf(f(u));
    if (fu <= fx) {
      (u >= x ? a : b) = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      (u < x ? a : b) = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return {x, fx};
}

struct Bracket {
  double lo, mid, hi;
  double flo, fmid, fhi;
};

// Expands from (0, step) until a bracketing triple a < b < c (in either
// orientation) with f(b) <= min(f(a), f(c)) is found.
template <class F>
Bracket bracket(F&& f, double f0, double step, std::size_t max_expand = 60) {
  double a = 0.0, fa = f0;
  double b = step, fb = finite_or_inf(f(b));
  if (fb > fa) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = b + kGrow * (b - a);
  double fc = finite_or_inf(f(c));
  for (std::size_t i = 0; i < max_expand && fb > fc; ++i) {
    double u = c + kGrow * (c - b);
    if (std::isfinite(fa) && std::isfinite(fb) && std::isfinite(fc)) {
      const double r = (b - a) * (fb - fc);
      const double q = (b - c) * (fb - fa);
      const double denom = 2.0 * std::copysign(std::max(std::abs(q - r), 1e-20), q - r);
      const double up = b - ((b - c) * q - (b - a) * r) / denom;
      const double ulim = b + 100.0 * (c - b);
      // Accept a parabolic extrapolation only if it lies beyond c and within ulim.
      if ((up - c) * (c - b) > 0.0 && (ulim - up) * (up - c) > 0.0) u = up;
    }
    const double fu = finite_or_inf(f(u));
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    c = u;
    fc = fu;
  }
  if (a > c) {
    std::swap(a, c);
    std::swap(fa, fc);
  }
  return {a, b, c, fa, fb, fc};
}

// Vertex of the parabola through three points, if it opens upward.
inline std::optional<double> parabola_vertex(double a, double fa, double b, double fb, double c, double fc) {
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fc)) return std::nullopt;
  const double r = (b - a) * (fb - fc);
  const double q = (b - c) * (fb - fa);
  const double denom = 2.0 * (q - r);
  if (!(denom < 0.0 || denom > 0.0)) return std::nullopt;
  const double u = b - ((b - c) * q - (b - a) * r) / denom;
  const double curvature = (fa - fb) / (a - b) - (fb - fc) / (b - c);
  if (!(curvature * (a - c) > 0.0) || !std::isfinite(u)) return std::nullopt;
  return u;
}

struct BudgetExhausted {};

inline constexpr double kDependenceRatio = 1e-8;

// True when the unit-normalized directions are close to linearly dependent.
inline bool nearly_dependent(const std::vector<std::vector<double>>& dirs) {
  const auto n = static_cast<Eigen::Index>(dirs.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& d = dirs[static_cast<std::size_t>(j)];
    const Eigen::Map<const Eigen::VectorXd> v(d.data(), n);
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) return true;
    m.col(j) = v / norm;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  const auto diag = qr.matrixQR().diagonal().cwiseAbs();
  return diag.minCoeff() < kDependenceRatio * diag.maxCoeff();
}

}  // namespace detail

// Minimizes f on [lo, hi]. A strictly monotone function yields the better
// endpoint. Non-finite values at the start point shrink the interval toward
// its centre (up to eight times) before giving up.
inline LineMinimum line_minimize(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-8) {
  if (!(lo < hi)) throw std::invalid_argument("line_minimize: need lo < hi");
  LineMinimum out;
  auto g = [&](double a) {
    ++out.evaluations;
    return detail::finite_or_inf(f(a));
  };
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double x0 = lo + detail::kGolden * (hi - lo);
    const double f0 = g(x0);
    if (!std::isfinite(f0)) {
      const double mid = 0.5 * (lo + hi), half = 0.25 * (hi - lo);
      lo = mid - half;
      hi = mid + half;
      continue;
    }
    auto [x, fx] = detail::brent(g, lo, hi, x0, f0, tol);
    out.step = x;
    out.value = fx;
    for (double end : {lo, hi}) {
      const double fe = g(end);
      if (fe < out.value) {
        out.step = end;
        out.value = fe;
      }
    }
    return out;
  }
  throw NumericFailure("line_minimize: objective non-finite throughout the bracket");
}

// Powell's conjugate-direction method. Each sweep line-minimizes along every
// direction, then along the net displacement, which replaces the direction of
// largest decrease. Learned directions are kept at the end of the set and
// searched last, so each displacement is conjugate to all of them and a
// quadratic is minimized after n sweeps. Every n sweeps a new cycle starts from
// the learned set, or from the axes if that set has become nearly dependent.
// Non-finite objective values count as +inf.
inline OptimizerResult minimize(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                                const OptimizerConfig& cfg = {}) {
  validate(cfg);
  const std::size_t n = x0.size();
  OptimizerResult res;
  res.x_star = x0;

  auto eval = [&](const std::vector<double>& x) {
    if (res.evaluations >= cfg.max_evaluations) throw detail::BudgetExhausted{};
    ++res.evaluations;
    const double v = detail::finite_or_inf(f(x));
    if (v < res.f_star) {
      res.f_star = v;
      res.x_star = x;
    }
    return v;
  };

  const double f0 = eval(x0);
  if (!std::isfinite(f0)) throw std::invalid_argument("minimize: objective is not finite at the start point");
  if (n == 0) {
    res.converged = true;
    return res;
  }

  std::vector<std::vector<double>> dirs;
  auto reset_dirs = [&] {
    dirs.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) dirs[i][i] = 1.0;
  };
  reset_dirs();

  std::vector<double> x = std::move(x0), trial(n);
  double fx = f0;

  // Moves x along d to the line minimum; x only changes on strict improvement.
  auto line_search = [&](const std::vector<double>& d) {
    auto along = [&](double alpha) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + alpha * d[i];
      return eval(trial);
    };
    const auto br = detail::bracket(along, fx, 1.0);
    auto [alpha, fa] = detail::brent(along, br.lo, br.hi, br.mid, br.fmid, cfg.line_search_tolerance);
    // Brent locates the minimum only to the resolution of f; on a locally
    // quadratic line the vertex through the wide bracket is sharper.
    if (const auto u = detail::parabola_vertex(br.lo, br.flo, br.mid, br.fmid, br.hi, br.fhi);
        u && *u > br.lo && *u < br.hi && *u != alpha) {
      const double fu = along(*u);
      if (fu <= fa) {
        alpha = *u;
        fa = fu;
      }
    }
    if (fa < fx) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * d[i];
      fx = fa;
    }
  };

  try {
    std::size_t learned = 0;  // conjugate directions occupy the last `learned` slots
    for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
      if (iter > 0 && iter % n == 0) {
        if (detail::nearly_dependent(dirs)) reset_dirs();
        learned = 0;
      }
      const double fstart = fx;
      const std::vector<double> xstart = x;
      double biggest = -1.0;
      std::size_t ibig = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double before = fx;
        line_search(dirs[i]);
        if (i < n - learned && before - fx > biggest) {
          biggest = before - fx;
          ibig = i;
        }
      }
      ++res.iterations;
      res.best_per_iteration.push_back(res.f_star);
      if (2.0 * (fstart - fx) <= cfg.f_tolerance * (std::abs(fstart) + std::abs(fx)) + 1e-300) {
        res.converged = true;
        break;
      }
      std::vector<double> displacement(n);
      for (std::size_t i = 0; i < n; ++i) displacement[i] = x[i] - xstart[i];
      line_search(displacement);
      if (learned < n) {
        dirs.erase(dirs.begin() + static_cast<std::ptrdiff_t>(ibig));
        dirs.push_back(std::move(displacement));
        ++learned;
      }
    }
  } catch (const detail::BudgetExhausted&) {
    res.best_per_iteration.push_back(res.f_star);
  }
  return res;
}

}  // namespace topoforge
