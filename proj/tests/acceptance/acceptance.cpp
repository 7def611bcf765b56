// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "commands.hpp"
#include "test_support.hpp"

using namespace topoforge;
using namespace topoforge::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double relative_deviation(const Waveform& a, const Waveform& b) {
  return max_abs_diff(a, b) / std::max(max_abs(a), 1e-300);
}

Waveform simulate_or_throw(const DesignModel& m, const SimConfig& cfg = {}) {
  auto r = transient(m, cfg);
  if (!r.ok()) throw Error("reference simulation failed");
  return r.waveform;
}

// 1. RC step response against 1 - exp(-t).
Outcome simulator_fidelity() {
  auto g = source_only(3);
  g.add(ElementKind::Resistor, 1.0, 1, 2);
  g.add(ElementKind::Capacitor, 1.0, 2, 0);
  g.add(ElementKind::Load, 1e12, 2, 0);
  SimConfig cfg;
  cfg.t_end = 5.0;
  cfg.dt = 1e-3;
  const auto t0 = Clock::now();
  const auto r = transient(g, cfg);
  const double secs = seconds_since(t0);
  if (!r.ok()) return {false, "simulation failed"};
  double err = 0.0;
  for (std::size_t i = 0; i < r.waveform.size(); ++i)
    err = std::max(err, std::abs(r.waveform.samples[i] - (1.0 - std::exp(-r.waveform.time(i)))));
  return {err <= 1e-3 && secs < 1.0, fmt("max error %.3g (<= 1e-3), runtime %.3g s (< 1 s)", err, secs)};
}

// 2. Realizing switches as resistors leaves the waveform unchanged.
Outcome lossless_realization() {
  double worst = 0.0;
  std::size_t failed = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto m = sample_random_relaxed(generate_grid(3, 3), seed);
    const auto a = transient(m, SimConfig{});
    const auto b = transient(realize_switches(m), SimConfig{});
    if (!a.ok() || !b.ok()) {
      ++failed;
      continue;
    }
    worst = std::max(worst, relative_deviation(a.waveform, b.waveform));
  }
  bool half = true;
  for (double eps : {1e-2, 1e-5, 1e-8, 1e-12, 0.3}) half = half && switch_conductance(0.5, eps) == 1.0;
  return {failed == 0 && worst <= 1e-12 && half,
          fmt("worst relative deviation %.3g (<= 1e-12) over 100 models, %zu failed, G(0.5) == 1: %s", worst, failed,
              half ? "yes" : "no")};
}

// 3. Powell on Rosenbrock and on random convex quadratics.
Outcome powell() {
  OptimizerConfig cfg;
  cfg.max_evaluations = 5000;
  cfg.f_tolerance = 1e-12;
  const auto rosen = [](std::span<const double> x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  const auto r = minimize(rosen, {-1.2, 1.0}, cfg);
  const double dist = std::max(std::abs(r.x_star[0] - 1.0), std::abs(r.x_star[1] - 1.0));
  const bool rosen_ok = dist <= 1e-6 && r.evaluations <= 5000;

  std::size_t non_monotone = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(derive_seed(seed, 3));
    const std::size_t n = 2 + seed % 9;
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1.0, 1.0);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
    Eigen::VectorXd eig(n), center(n);
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      eig[i] = log_uniform(rng, 0.1, 10.0);
      center[i] = uniform(rng, -5.0, 5.0);
    }
    const Eigen::MatrixXd a = q * eig.asDiagonal() * q.transpose();
    const auto f = [&](std::span<const double> x) {
      const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) - center;
      return 0.5 * d.dot(a * d);
    };
    const auto res = minimize(f, std::vector<double>(n, 0.0));
    for (std::size_t i = 1; i < res.best_per_iteration.size(); ++i)
      if (res.best_per_iteration[i] > res.best_per_iteration[i - 1]) ++non_monotone;
  }
  return {rosen_ok && non_monotone == 0,
          fmt("Rosenbrock distance %.3g (<= 1e-6) in %zu evaluations (<= 5000), %zu non-monotone steps over 50 "
              "quadratics",
              dist, r.evaluations, non_monotone)};
}

// 4. Algorithm 1 on the 2x3 reference RC.
Outcome relaxation() {
  const auto ref = reference_rc_2x3();
  const auto target = simulate_or_throw(ref);
  const double ms = target.mean_square();
  RelaxationConfig cfg;
  const auto t0 = Clock::now();
  double best = kInfeasibleCost;
  bool monotone = true, reduced = true;
  std::string runs;
  for (std::uint64_t i = 0; i < 8; ++i) {
    const auto r = run_relaxation(ref.topology, ref.scenario, target, cfg, derive_seed(1, i));
    best = std::min(best, r.final_cost);
    for (std::size_t k = 1; k < r.trace.size(); ++k) monotone = monotone && r.trace[k].variables <= r.trace[k - 1].variables;
    reduced = reduced && 2 * r.final_variables <= r.initial_variables;
    runs += fmt(" %.2g/%zu", r.final_cost / ms, r.final_variables);
  }
  const double secs = seconds_since(t0);
  const bool ok = best <= 1e-4 * ms && monotone && reduced && secs <= 600.0;
  return {ok, fmt("best cost %.3g x MS (<= 1e-4), variables non-increasing: %s, >= 50%% reduction: %s, %.0f s "
                  "(<= 600); runs cost/vars:%s",
                  best / ms, monotone ? "yes" : "no", reduced ? "yes" : "no", secs, runs.c_str())};
}

std::size_t simplified_count(const DesignModel& m) {
  return count_components(simplify_fixpoint(to_component_graph(m), SimplifyThresholds::for_epsilon(m.scenario.epsilon)))
      .total();
}

// 5. Algorithm 2 on the same target.
Outcome search() {
  const auto ref = reference_rc_2x3();
  const auto target = simulate_or_throw(ref);
  SearchConfig cfg;
  cfg.n_s = 2000;
  cfg.n_o = 8;
  cfg.c_th = 1e-3 * target.mean_square();
  cfg.seed = 1;
  cfg.scenario = ref.scenario;
  const auto t0 = Clock::now();
  const auto r = run_search(ref.topology, target, cfg);
  const double secs = seconds_since(t0);
  bool monotone = true;
  for (std::size_t i = 1; i + 1 < r.trace.size(); ++i) monotone = monotone && r.trace[i].best_cost <= r.trace[i - 1].best_cost;
  const std::size_t limit = 2 * simplified_count(ref);
  std::size_t components = 0;
  if (!r.accepted.empty()) components = simplified_count(r.accepted.front().model);
  const bool ok = !r.accepted.empty() && monotone && components <= limit;
  return {ok, fmt("%zu accepted, %zu generations (exit %s), trace non-increasing: %s, best design %zu components "
                  "(<= %zu), %.0f s",
                  r.accepted.size(), r.trace.size(), std::string(to_string(r.exit)).c_str(), monotone ? "yes" : "no",
                  components, limit, secs)};
}

// 6. Simplification keeps the load waveform and is idempotent.
Outcome simplification() {
  double worst = 0.0;
  std::size_t failed = 0, not_idempotent = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto g = realize_switches(sample_random_relaxed(generate_grid(4, 4), seed));
    const auto s = simplify_fixpoint(g);
    if (simplify_fixpoint(s) != s) ++not_idempotent;
    const auto a = transient(g, SimConfig{});
    const auto b = transient(s, SimConfig{});
    if (!a.ok() || !b.ok()) {
      ++failed;
      continue;
    }
    worst = std::max(worst, relative_deviation(a.waveform, b.waveform));
  }
  auto series = source_only(4);
  series.add(ElementKind::Resistor, 2.0, 1, 2);
  series.add(ElementKind::Resistor, 3.0, 2, 3);
  series.add(ElementKind::Load, 1.0, 3, 0);
  auto parallel = source_only(3);
  parallel.add(ElementKind::Resistor, 1.0, 1, 2);
  parallel.add(ElementKind::Capacitor, 1e-6, 2, 0);
  parallel.add(ElementKind::Capacitor, 2e-6, 2, 0);
  parallel.add(ElementKind::Load, 1.0, 2, 0);
  const auto value_of = [](const ComponentGraph& g, ElementKind k) {
    std::vector<double> v;
    for (const auto& c : g.components)
      if (c.kind == k) v.push_back(c.value);
    return v;
  };
  const auto rs = value_of(simplify_fixpoint(series), ElementKind::Resistor);
  const auto cs = value_of(simplify_fixpoint(parallel), ElementKind::Capacitor);
  const bool exact = rs == std::vector<double>{5.0} && cs.size() == 1 && std::abs(cs[0] - 3e-6) <= 1e-21;
  return {failed == 0 && worst <= 1e-6 && not_idempotent == 0 && exact,
          fmt("worst relative deviation %.3g (<= 1e-6) over 200 netlists, %zu failed, %zu not idempotent, "
              "2+3 ohm -> %g ohm, 1u||2u F -> %g F",
              worst, failed, not_idempotent, rs.empty() ? 0.0 : rs[0], cs.empty() ? 0.0 : cs[0])};
}

// 7. Structural hash against an exact isomorphism oracle on all 2x2 assignments.
using EdgeKey = std::tuple<std::size_t, std::size_t, int>;

std::vector<EdgeKey> canonical_form(const DesignModel& m) {
  const auto& t = m.topology;
  const auto& b = t.boundary;
  std::vector<std::size_t> internal;
  for (std::size_t v = 0; v < t.node_count; ++v)
    if (v != b.source_pos.index && v != b.source_neg.index && v != b.load_pos.index && v != b.load_neg.index)
      internal.push_back(v);
  auto images = internal;
  std::vector<EdgeKey> best;
  bool first = true;
  do {
    std::vector<std::size_t> perm(t.node_count);
    for (std::size_t v = 0; v < t.node_count; ++v) perm[v] = v;
    for (std::size_t k = 0; k < internal.size(); ++k) perm[internal[k]] = images[k];
    std::vector<EdgeKey> form;
    for (std::size_t i = 0; i < t.edges.size(); ++i) {
      const auto tag = std::get<Mode>(m.edges[i]).tag();
      if (tag == ModeTag::Open) continue;
      const auto x = perm[t.edges[i].a.index], y = perm[t.edges[i].b.index];
      form.emplace_back(std::min(x, y), std::max(x, y), static_cast<int>(tag));
    }
    std::sort(form.begin(), form.end());
    if (first || form < best) best = form;
    first = false;
  } while (std::next_permutation(images.begin(), images.end()));
  return best;
}

Outcome dedup() {
  const auto t = generate_grid(2, 2);
  std::size_t total = 1;
  for (std::size_t i = 0; i < t.edges.size(); ++i) total *= 5;
  std::map<std::uint64_t, std::vector<EdgeKey>> by_hash;
  std::map<std::vector<EdgeKey>, std::uint64_t> by_form;
  std::size_t false_merges = 0, splits = 0;
  for (std::size_t code = 0; code < total; ++code) {
    DesignModel m = make_uniform_model(t, Mode::open());
    std::size_t c = code;
    for (std::size_t i = 0; i < t.edges.size(); ++i, c /= 5) {
      const ModeTag tag = kAllModeTags[c % 5];
      m.edges[i] = Mode::make(tag, carries_parameter(tag) ? 1.0 : 0.0);
    }
    const auto h = canonical_hash(m);
    const auto form = canonical_form(m);
    const auto [hit, new_hash] = by_hash.emplace(h, form);
    if (!new_hash && hit->second != form) ++false_merges;
    const auto [fit, new_form] = by_form.emplace(form, h);
    if (!new_form && fit->second != h) ++splits;
  }
  return {false_merges == 0 && splits == 0,
          fmt("%zu assignments, %zu classes, %zu false merges (== 0), %zu split classes", total, by_form.size(),
              false_merges, splits)};
}

// 8. cmd_design twice with the same seed.
std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string strip_volatile(Json j) {
  j.erase("created");
  j.erase("wall_seconds");
  for (auto& run : j["runs"]) run.erase("wall_seconds");
  return j.dump();
}

std::string strip_seconds(const std::string& csv) {
  std::istringstream is(csv);
  std::string line, out;
  while (std::getline(is, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

// Lists every mismatch between the artifacts of two design output directories.
std::vector<std::string> compare_outputs(const fs::path& a, const fs::path& b) {
  std::vector<std::string> diffs;
  const auto ra = read_json_file((a / "report.json").string());
  const auto rb = read_json_file((b / "report.json").string());
  if (strip_volatile(ra) != strip_volatile(rb)) diffs.push_back("report.json");
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename().string();
    if (name == "report.json") continue;
    if (!fs::exists(b / name)) {
      diffs.push_back(name + " missing");
      continue;
    }
    const bool trace = name.ends_with("trace.csv");
    const auto x = slurp(entry.path()), y = slurp(b / name);
    if (trace ? strip_seconds(x) != strip_seconds(y) : x != y) diffs.push_back(name);
  }
  return diffs;
}

Outcome determinism() {
  const auto dir = scratch_dir("acceptance-determinism");
  const auto ref = reference_rc_2x3();
  write_csv_file((dir / "target.csv").string(), simulate_or_throw(ref));
  write_json_file((dir / "grid.json").string(), design_to_json(make_uniform_model(ref.topology, Mode::open(), ref.scenario)));
  std::ofstream(dir / "relax.json") << R"({"format": "topoforge-config/1", "runs": 3, "workers": 2,
    "optimizer": {"max_iterations": 40}, "relaxation": {"max_outer": 4}})";
  std::ofstream(dir / "search.json") << R"({"format": "topoforge-config/1", "workers": 2,
    "optimizer": {"max_iterations": 30}, "search": {"n_s": 60, "n_o": 4, "c_th_relative": 1e-2, "max_generations": 4}})";
  std::size_t files = 0;
  std::vector<std::string> diffs;
  for (const std::string algorithm : {"relax", "search"}) {
    for (const char* out : {"a", "b"}) {
      cli::DesignArgs args;
      args.algorithm = algorithm;
      args.netlist = (dir / "grid.json").string();
      args.target = (dir / "target.csv").string();
      args.config = (dir / (algorithm + ".json")).string();
      args.out_dir = (dir / (algorithm + "-" + out)).string();
      args.seed = 42;
      std::ostringstream log;
      if (const int code = cli::cmd_design(args, log); code != cli::kOk)
        return {false, fmt("design %s exited with %d", algorithm.c_str(), code)};
    }
    for (auto& d : compare_outputs(dir / (algorithm + "-a"), dir / (algorithm + "-b"))) diffs.push_back(algorithm + "/" + d);
    files += static_cast<std::size_t>(std::distance(fs::directory_iterator(dir / (algorithm + "-a")), {}));
  }
  std::string list;
  for (const auto& d : diffs) list += " " + d;
  return {diffs.empty(), fmt("%zu artifacts compared across relax and search, %zu differ%s", files, diffs.size(),
                             list.c_str())};
}

// 9. KCL residual over every simulation run above.
Outcome kcl() {
  const auto s = simulation_stats();
  return {s.max_kcl_residual <= 1e-9 && s.kcl_violations == 0,
          fmt("max residual %.3g (<= 1e-9) over %llu steps in %llu simulations, %llu violations", s.max_kcl_residual,
              static_cast<unsigned long long>(s.steps), static_cast<unsigned long long>(s.simulations),
              static_cast<unsigned long long>(s.kcl_violations))};
}

}  // namespace

int main() {
  reset_simulation_stats();
  const std::array<std::pair<const char*, std::function<Outcome()>>, 9> criteria{{
      {"simulator fidelity", simulator_fidelity},
      {"lossless switch realization", lossless_realization},
      {"powell", powell},
      {"relaxation desk scale", relaxation},
      {"search desk scale", search},
      {"simplification soundness", simplification},
      {"dedup correctness", dedup},
      {"determinism", determinism},
      {"kcl residual", kcl},
  }};
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s  %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
