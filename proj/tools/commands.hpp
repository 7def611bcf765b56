#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "topoforge/topoforge.hpp"

namespace topoforge::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kInfeasible = 2, kNumeric = 3 };

inline constexpr std::string_view kConfigFormat = "topoforge-config/1";
inline constexpr std::string_view kReportFormat = "topoforge-report/1";

// Set from the SIGINT handler; long runs stop at the next outer iteration or
// generation and write a partial report.
inline std::atomic<bool>& cancel_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

// Thrown for bad flags or configuration; maps to exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Run configuration (JSON, strict keys). Flags override file values.

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t runs = 1;
  std::optional<double> t_end, dt;  // default to the target's time grid
  SimConfig sim;
  ParameterBounds bounds;
  OptimizerConfig optimizer{150, 1e-8, 100000, 1e-6};
  RelaxationConfig relaxation;
  SearchConfig search;
  std::optional<double> c_th_relative;  // c_th as a multiple of the target mean square
  std::optional<SimplifyThresholds> simplify;  // defaults follow the design's epsilon
};

namespace detail {

using topoforge::detail::get_field;
using topoforge::detail::get_or;
using topoforge::detail::require_keys;

inline Interval interval_from_json(const Json& j, std::string_view where) {
  try {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2) throw UsageError(std::string(where) + ": expected [lo, hi]");
    return {v[0], v[1]};
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string(where) + ": expected [lo, hi]");
  }
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
  using namespace detail;
  RunConfig c;
  require_keys(j, "config",
               {"format", "seed", "workers", "runs", "simulation", "bounds", "optimizer", "relaxation", "search",
                "simplify"});
  if (get_field<std::string>(j, "format", "config") != kConfigFormat) throw UsageError("config: unsupported format");
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, "config");
  c.workers = get_or<std::size_t>(j, "workers", c.workers, "config");
  c.runs = get_or<std::size_t>(j, "runs", c.runs, "config");
  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    require_keys(s, "simulation", {"t_end", "dt", "integrator", "pivot_tolerance", "kcl_tolerance", "fold_series"});
    if (s.contains("t_end")) c.t_end = get_field<double>(s, "t_end", "simulation");
    if (s.contains("dt")) c.dt = get_field<double>(s, "dt", "simulation");
    if (s.contains("integrator")) c.sim.integrator = integrator_from_string(get_field<std::string>(s, "integrator", "simulation"));
    c.sim.pivot_tolerance = get_or(s, "pivot_tolerance", c.sim.pivot_tolerance, "simulation");
    c.sim.kcl_tolerance = get_or(s, "kcl_tolerance", c.sim.kcl_tolerance, "simulation");
    c.sim.fold_series = get_or(s, "fold_series", c.sim.fold_series, "simulation");
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    require_keys(b, "bounds", {"resistance", "inductance", "capacitance"});
    if (b.contains("resistance")) c.bounds.resistance = interval_from_json(b.at("resistance"), "bounds.resistance");
    if (b.contains("inductance")) c.bounds.inductance = interval_from_json(b.at("inductance"), "bounds.inductance");
    if (b.contains("capacitance")) c.bounds.capacitance = interval_from_json(b.at("capacitance"), "bounds.capacitance");
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    require_keys(o, "optimizer", {"max_iterations", "f_tolerance", "max_evaluations", "line_search_tolerance"});
    c.optimizer.max_iterations = get_or(o, "max_iterations", c.optimizer.max_iterations, "optimizer");
    c.optimizer.f_tolerance = get_or(o, "f_tolerance", c.optimizer.f_tolerance, "optimizer");
    c.optimizer.max_evaluations = get_or(o, "max_evaluations", c.optimizer.max_evaluations, "optimizer");
    c.optimizer.line_search_tolerance = get_or(o, "line_search_tolerance", c.optimizer.line_search_tolerance, "optimizer");
  }
  if (j.contains("relaxation")) {
    const auto& r = j.at("relaxation");
    require_keys(r, "relaxation", {"lambda0", "delta", "switch_zero_threshold", "elimination_tolerance", "max_outer",
                                      "solution_tolerance"});
    auto& x = c.relaxation;
    x.lambda0 = get_or(r, "lambda0", x.lambda0, "relaxation");
    x.delta = get_or(r, "delta", x.delta, "relaxation");
    x.switch_zero_threshold = get_or(r, "switch_zero_threshold", x.switch_zero_threshold, "relaxation");
    x.elimination_tolerance = get_or(r, "elimination_tolerance", x.elimination_tolerance, "relaxation");
    x.max_outer = get_or(r, "max_outer", x.max_outer, "relaxation");
    x.solution_tolerance = get_or(r, "solution_tolerance", x.solution_tolerance, "relaxation");
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    require_keys(s, "search",
                 {"n_s", "n_o", "c_th", "c_th_relative", "max_generations", "global_dedup", "sample_attempts"});
    auto& x = c.search;
    x.n_s = get_or(s, "n_s", x.n_s, "search");
    x.n_o = get_or(s, "n_o", x.n_o, "search");
    x.c_th = get_or(s, "c_th", x.c_th, "search");
    if (s.contains("c_th_relative")) {
      if (s.contains("c_th")) throw UsageError("search: give c_th or c_th_relative, not both");
      c.c_th_relative = get_field<double>(s, "c_th_relative", "search");
    }
    x.max_generations = get_or(s, "max_generations", x.max_generations, "search");
    x.global_dedup = get_or(s, "global_dedup", x.global_dedup, "search");
    x.sample_attempts = get_or(s, "sample_attempts", x.sample_attempts, "search");
  }
  if (j.contains("simplify")) {
    const auto& s = j.at("simplify");
    require_keys(s, "simplify", {"r_short_below", "c_open_below", "g_open_below"});
    SimplifyThresholds th;
    th.r_short_below = get_or(s, "r_short_below", th.r_short_below, "simplify");
    th.c_open_below = get_or(s, "c_open_below", th.c_open_below, "simplify");
    th.g_open_below = get_or(s, "g_open_below", th.g_open_below, "simplify");
    c.simplify = th;
  }
  return c;
}

inline RunConfig load_config(const std::optional<std::string>& path) {
  if (!path) return {};
  try {
    return parse_config(read_json_file(*path));
  } catch (const MalformedInput& e) {
    throw UsageError(e.what());
  }
}

// Effective configuration, echoed into reports.
inline Json config_to_json(const RunConfig& c, const SimConfig& sim, const SimplifyThresholds& th) {
  auto iv = [](const Interval& i) { return Json::array({i.lo, i.hi}); };
  const auto& r = c.relaxation;
  const auto& s = c.search;
  return Json{
      {"format", kConfigFormat},
      {"seed", c.seed},
      {"workers", c.workers},
      {"runs", c.runs},
      {"simulation",
       {{"t_end", sim.t_end},
        {"dt", sim.dt},
        {"integrator", std::string(to_string(sim.integrator))},
        {"pivot_tolerance", sim.pivot_tolerance},
        {"kcl_tolerance", sim.kcl_tolerance},
        {"fold_series", sim.fold_series}}},
      {"bounds",
       {{"resistance", iv(c.bounds.resistance)},
        {"inductance", iv(c.bounds.inductance)},
        {"capacitance", iv(c.bounds.capacitance)}}},
      {"optimizer",
       {{"max_iterations", c.optimizer.max_iterations},
        {"f_tolerance", c.optimizer.f_tolerance},
        {"max_evaluations", c.optimizer.max_evaluations},
        {"line_search_tolerance", c.optimizer.line_search_tolerance}}},
      {"relaxation",
       {{"lambda0", r.lambda0},
        {"delta", r.delta},
        {"switch_zero_threshold", r.switch_zero_threshold},
        {"elimination_tolerance", r.elimination_tolerance},
        {"max_outer", r.max_outer},
        {"solution_tolerance", r.solution_tolerance}}},
      {"search",
       {{"n_s", s.n_s},
        {"n_o", s.n_o},
        {"c_th", s.c_th},
        {"max_generations", s.max_generations},
        {"global_dedup", s.global_dedup},
        {"sample_attempts", s.sample_attempts}}},
      {"simplify", {{"r_short_below", th.r_short_below}, {"c_open_below", th.c_open_below}, {"g_open_below", th.g_open_below}}}};
}

inline SimConfig resolve_sim(const RunConfig& c, const Waveform* target) {
  SimConfig sim = c.sim;
  if (target) {
    sim.t_end = target->t_end();
    sim.dt = target->dt;
  }
  if (c.t_end) sim.t_end = *c.t_end;
  if (c.dt) sim.dt = *c.dt;
  try {
    validate(sim);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return sim;
}

inline std::string timestamp_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline Json counts_to_json(const ComponentCounts& c) {
  return Json{{"resistors", c.resistors}, {"inductors", c.inductors}, {"capacitors", c.capacitors}};
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Report validation: required fields, existing artifacts, consistent counts.

inline void validate_report(const Json& r, const fs::path& dir) {
  auto fail = [](const std::string& m) { throw Error("report: " + m); };
  if (!r.is_object() || r.value("format", "") != kReportFormat) fail("wrong format tag");
  for (const char* key : {"command", "algorithm", "created", "seed", "config", "inputs", "runs", "best_run",
                          "interrupted", "wall_seconds"})
    if (!r.contains(key)) fail(std::string("missing '") + key + "'");
  if (!r.at("runs").is_array()) fail("'runs' must be an array");
  auto check_netlist = [&](const Json& entry) {
    for (const char* key : {"netlist", "design"}) {
      if (!entry.contains(key)) fail(std::string("entry without '") + key + "'");
      if (!fs::exists(dir / entry.at(key).get<std::string>()))
        fail("missing artifact " + entry.at(key).get<std::string>());
    }
    const auto g = components_from_json(read_json_file((dir / entry.at("netlist").get<std::string>()).string()));
    if (counts_to_json(count_components(g)) != entry.at("components")) fail("component counts disagree with netlist");
  };
  for (const auto& run : r.at("runs")) {
    for (const char* key : {"index", "seed", "status", "trace"})
      if (!run.contains(key)) fail(std::string("run without '") + key + "'");
    if (!fs::exists(dir / run.at("trace").get<std::string>())) fail("missing trace " + run.at("trace").get<std::string>());
    const auto status = run.at("status").get<std::string>();
    if (status != "ok" && status != "failed" && status != "cancelled") fail("bad run status");
    if (run.contains("netlist")) check_netlist(run);
    if (run.contains("accepted"))
      for (const auto& a : run.at("accepted")) check_netlist(a);
  }
  const auto& best = r.at("best_run");
  if (!best.is_null() && (!best.is_number_unsigned() || best.get<std::size_t>() >= r.at("runs").size()))
    fail("best_run out of range");
}

// ---------------------------------------------------------------------------
// Commands.

struct GenGridArgs {
  std::size_t rows = 0, cols = 0;
  std::string out = "-";
  std::string ground = "auto";  // auto | corner | external
  std::string state = "relaxed";  // relaxed | short | open
  std::uint64_t seed = 0;
  double load_resistance = 1.0;
  double epsilon = 1e-5;
};

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") out << text;
  else write_text_file(path, text);
}

inline int cmd_gen_grid(const GenGridArgs& a, std::ostream& out) {
  GroundPlacement g;
  if (a.ground == "auto") g = GroundPlacement::Auto;
  else if (a.ground == "corner") g = GroundPlacement::Corner;
  else if (a.ground == "external") g = GroundPlacement::External;
  else throw UsageError("unknown ground placement '" + a.ground + "'");
  MetaTopology topo;
  try {
    topo = generate_grid(a.rows, a.cols, g);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Scenario sc{StepSource{}, a.load_resistance, a.epsilon};
  DesignModel m;
  if (a.state == "relaxed") m = initialize_relaxed(topo, a.seed, {}, sc);
  else if (a.state == "short") m = make_uniform_model(topo, Mode::short_circuit(), sc);
  else if (a.state == "open") m = make_uniform_model(topo, Mode::open(), sc);
  else throw UsageError("unknown edge state '" + a.state + "'");
  try {
    validate(m);
  } catch (const MalformedInput& e) {
    throw UsageError(e.what());
  }
  emit(a.out, design_to_json(m).dump(2) + "\n", out);
  return kOk;
}

struct SimulateArgs {
  std::string netlist;
  std::string out = "-";
  std::optional<std::string> config;
  std::optional<double> t_end, dt;
  std::optional<std::string> integrator;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig c = load_config(a.config);
  if (a.t_end) c.t_end = a.t_end;
  if (a.dt) c.dt = a.dt;
  if (a.integrator) c.sim.integrator = integrator_from_string(*a.integrator);
  const SimConfig sim = resolve_sim(c, nullptr);
  const Netlist n = read_netlist_file(a.netlist);
  const ComponentGraph g = n.components();
  if (const auto fr = check_feasible(g, sim); !fr) {
    err << "infeasible: " << to_string(fr.status) << " (" << fr.reason << ")\n";
    return kInfeasible;
  }
  const auto res = transient(g, sim);
  if (res.status == SimStatus::Singular) {
    err << "infeasible: Singular (" << res.message << ")\n";
    return kInfeasible;
  }
  if (!res.ok()) {
    err << "numeric failure: " << to_string(res.status) << " (" << res.message << ")\n";
    return kNumeric;
  }
  emit(a.out, to_csv(res.waveform), out);
  return kOk;
}

struct SimplifyArgs {
  std::string netlist;
  std::string out = "-";
  std::optional<std::string> config;
  std::optional<double> r_short_below, c_open_below, g_open_below;
};

inline SimplifyThresholds resolve_thresholds(const RunConfig& c, double epsilon) {
  return c.simplify ? *c.simplify : SimplifyThresholds::for_epsilon(epsilon);
}

inline int cmd_simplify(const SimplifyArgs& a, std::ostream& out) {
  const RunConfig c = load_config(a.config);
  const Netlist n = read_netlist_file(a.netlist);
  const double eps = n.is_design() ? std::get<DesignModel>(n.content).scenario.epsilon : 1e-5;
  SimplifyThresholds th = resolve_thresholds(c, eps);
  if (a.r_short_below) th.r_short_below = *a.r_short_below;
  if (a.c_open_below) th.c_open_below = *a.c_open_below;
  if (a.g_open_below) th.g_open_below = *a.g_open_below;
  const ComponentGraph g = simplify_fixpoint(n.components(), th);
  emit(a.out, components_to_json(g).dump(2) + "\n", out);
  return kOk;
}

struct ExportDotArgs {
  std::string netlist;
  std::string out = "-";
};

inline int cmd_export_dot(const ExportDotArgs& a, std::ostream& out) {
  const Netlist n = read_netlist_file(a.netlist);
  emit(a.out, to_dot(n.components()), out);
  return kOk;
}

struct DesignArgs {
  std::string algorithm;  // relax | search
  std::string netlist;
  std::string target;
  std::string out_dir = ".";
  std::optional<std::string> config;
  std::optional<std::size_t> runs, workers;
  std::optional<std::uint64_t> seed;
};

namespace detail {

struct DesignArtifacts {
  Json entry;
  double cost = kInfeasibleCost;
};

inline std::string numbered(std::string_view stem, std::size_t i, std::string_view ext) {
  std::ostringstream os;
  os << stem << '-' << std::setw(3) << std::setfill('0') << i << ext;
  return os.str();
}

// Writes the design netlist and its realized, simplified components netlist.
inline Json export_design(const DesignModel& m, const SimplifyThresholds& th, const fs::path& dir,
                          const std::string& design_file, const std::string& netlist_file) {
  write_json_file((dir / design_file).string(), design_to_json(m));
  const ComponentGraph simplified = simplify_fixpoint(to_component_graph(m), th);
  write_json_file((dir / netlist_file).string(), components_to_json(simplified));
  const auto counts = count_components(simplified);
  return Json{{"design", design_file},
              {"netlist", netlist_file},
              {"components", counts_to_json(counts)},
              {"total_components", counts.total()}};
}

inline Json cost_json(double c) { return std::isfinite(c) ? Json(c) : Json(nullptr); }

}  // namespace detail

inline int cmd_design(const DesignArgs& a, std::ostream& log) {
  const auto t_start = std::chrono::steady_clock::now();
  RunConfig c = load_config(a.config);
  if (a.runs) c.runs = *a.runs;
  if (a.workers) c.workers = *a.workers;
  if (a.seed) c.seed = *a.seed;
  if (c.runs == 0 || c.workers == 0) throw UsageError("runs and workers must be positive");
  if (a.algorithm != "relax" && a.algorithm != "search") throw UsageError("algorithm must be relax or search");

  const Netlist n = read_netlist_file(a.netlist);
  if (!n.is_design()) throw UsageError("design needs a design netlist (kind \"design\")");
  const DesignModel base = std::get<DesignModel>(n.content);
  Waveform target;
  try {
    target = read_csv_file(a.target);
  } catch (const std::exception& e) {
    throw UsageError(std::string("target: ") + e.what());
  }
  if (target.t0 != 0.0) throw UsageError("target must start at t = 0");
  const SimConfig sim = resolve_sim(c, &target);
  const SimplifyThresholds th = resolve_thresholds(c, base.scenario.epsilon);
  const double target_ms = target.mean_square();

  const fs::path dir = a.out_dir;
  fs::create_directories(dir);

  Json runs = Json::array();
  std::optional<std::size_t> best;
  double best_cost = kInfeasibleCost;
  bool interrupted = false;

  if (a.algorithm == "relax") {
    RelaxationConfig rc = c.relaxation;
    rc.inner = c.optimizer;
    rc.bounds = c.bounds;
    rc.sim = sim;
    rc.cancel = &cancel_flag();
    try {
      validate(rc);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    auto results = parallel_map(c.runs, c.workers, [&](std::size_t i) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::uint64_t seed = derive_seed(c.seed, i);
      Json entry{{"index", i}, {"seed", seed}, {"trace", detail::numbered("relax", i, "-trace.csv")}};
      detail::DesignArtifacts art;
      std::vector<RelaxationRecord> trace;
      try {
        auto res = run_relaxation(base.topology, base.scenario, target, rc, seed);
        trace = res.trace;
        entry["status"] = res.cancelled ? "cancelled" : "ok";
        entry["final_cost"] = detail::cost_json(res.final_cost);
        entry["initial_variables"] = res.initial_variables;
        entry["final_variables"] = res.final_variables;
        entry["outer_iterations"] = res.trace.size() - 1;
        entry.update(detail::export_design(res.model, th, dir, detail::numbered("relax", i, "-design.json"),
                                           detail::numbered("relax", i, "-netlist.json")));
        art.cost = res.final_cost;
      } catch (const std::exception& e) {
        entry["status"] = "failed";
        entry["error"] = e.what();
      }
      std::ostringstream csv;
      write_relaxation_trace(csv, trace);
      write_text_file(dir / entry.at("trace").get<std::string>(), csv.str());
      entry["wall_seconds"] = topoforge::detail::seconds_since(t0);
      art.entry = std::move(entry);
      return art;
    });
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      if (r.entry.at("status") == "cancelled") interrupted = true;
      if (r.entry.at("status") != "failed" && r.cost < best_cost) {
        best_cost = r.cost;
        best = i;
      }
      log << "run " << i << ": " << r.entry.at("status").get<std::string>();
      if (std::isfinite(r.cost)) log << " cost " << r.cost;
      if (r.entry.contains("error")) log << " (" << r.entry.at("error").get<std::string>() << ")";
      log << '\n';
      runs.push_back(r.entry);
    }
  } else {
    SearchConfig sc = c.search;
    sc.seed = c.seed;
    sc.inner = c.optimizer;
    sc.bounds = c.bounds;
    sc.scenario = base.scenario;
    sc.sim = sim;
    sc.thresholds = th;
    sc.workers = c.workers;
    sc.cancel = &cancel_flag();
    if (c.c_th_relative) sc.c_th = *c.c_th_relative * target_ms;
    try {
      validate(sc);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const auto t0 = std::chrono::steady_clock::now();
    Json entry{{"index", 0}, {"seed", c.seed}, {"trace", "search-trace.csv"}};
    std::vector<GenerationRecord> trace;
    try {
      auto res = run_search(base.topology, target, sc);
      trace = res.trace;
      interrupted = res.exit == SearchExit::Cancelled;
      entry["status"] = interrupted ? "cancelled" : "ok";
      entry["exit"] = std::string(to_string(res.exit));
      entry["generations"] = res.trace.size();
      entry["sampled"] = res.sampled;
      entry["c_th"] = sc.c_th;
      Json accepted = Json::array();
      for (std::size_t k = 0; k < res.accepted.size(); ++k) {
        Json e{{"rank", k}, {"cost", res.accepted[k].cost}};
        e.update(detail::export_design(res.accepted[k].model, th, dir, detail::numbered("accepted", k, "-design.json"),
                                       detail::numbered("accepted", k, "-netlist.json")));
        accepted.push_back(std::move(e));
      }
      if (!res.accepted.empty()) {
        entry["final_cost"] = res.accepted.front().cost;
        entry["components"] = accepted.front().at("components");
        best_cost = res.accepted.front().cost;
        best = 0;
      } else {
        entry["final_cost"] = nullptr;
      }
      entry["accepted"] = std::move(accepted);
    } catch (const InfeasibleDesign& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
    }
    std::ostringstream csv;
    write_search_trace(csv, trace);
    write_text_file(dir / "search-trace.csv", csv.str());
    entry["wall_seconds"] = topoforge::detail::seconds_since(t0);
    log << "search: " << entry.at("status").get<std::string>();
    if (entry.contains("accepted")) log << ", " << entry.at("accepted").size() << " accepted";
    if (entry.contains("error")) log << " (" << entry.at("error").get<std::string>() << ")";
    log << '\n';
    runs.push_back(std::move(entry));
  }

  Json report{{"format", kReportFormat},
              {"command", "design"},
              {"algorithm", a.algorithm},
              {"created", timestamp_utc()},
              {"seed", c.seed},
              {"config", config_to_json(c, sim, th)},
              {"inputs",
               {{"netlist", fs::path(a.netlist).filename().string()},
                {"target", fs::path(a.target).filename().string()},
                {"target_mean_square", target_ms}}},
              {"runs", std::move(runs)},
              {"best_run", best ? Json(*best) : Json(nullptr)},
              {"best_cost", detail::cost_json(best_cost)},
              {"interrupted", interrupted},
              {"wall_seconds", topoforge::detail::seconds_since(t_start)}};
  write_json_file((dir / "report.json").string(), report);
  validate_report(report, dir);
  if (!best) {
    log << "no run produced a design\n";
    return kInfeasible;
  }
  return kOk;
}

// Runs a command and maps exceptions to exit codes.
template <class F>
int guarded(F&& f, std::ostream& err) {
  try {
    return f();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const MalformedInput& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InfeasibleDesign& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kNumeric;
  }
}

}  // namespace topoforge::cli
