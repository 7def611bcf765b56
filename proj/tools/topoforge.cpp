#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

extern "C" void on_interrupt(int) { topoforge::cli::cancel_flag().store(true); }

}  // namespace

int main(int argc, char** argv) {
  using namespace topoforge::cli;
  CLI::App app{"topoforge: analog circuit topology synthesis on switched component grids"};
  app.require_subcommand(1);

  GenGridArgs grid;
  auto* gen = app.add_subcommand("gen-grid", "write a grid design netlist");
  gen->add_option("rows", grid.rows, "grid rows")->required();
  gen->add_option("cols", grid.cols, "grid columns")->required();
  gen->add_option("-o,--out", grid.out, "output file ('-' for stdout)");
  gen->add_option("--ground", grid.ground, "ground placement: auto, corner or external");
  gen->add_option("--state", grid.state, "initial edge state: relaxed, short or open");
  gen->add_option("--seed", grid.seed, "seed for relaxed parameter values");
  gen->add_option("--load", grid.load_resistance, "load resistance in ohms");
  gen->add_option("--epsilon", grid.epsilon, "switch residual");

  SimulateArgs sim;
  auto* simc = app.add_subcommand("simulate", "simulate a netlist and write the load voltage as CSV");
  simc->add_option("netlist", sim.netlist, "netlist JSON")->required();
  simc->add_option("-o,--out", sim.out, "output CSV ('-' for stdout)");
  simc->add_option("--config", sim.config, "run configuration JSON");
  simc->add_option("--t-end", sim.t_end, "simulated time in seconds");
  simc->add_option("--dt", sim.dt, "time step in seconds");
  simc->add_option("--integrator", sim.integrator, "be or trap");

  DesignArgs design;
  auto* des = app.add_subcommand("design", "synthesize a design against a target waveform");
  des->add_option("algorithm", design.algorithm, "relax or search")->required()->check(CLI::IsMember({"relax", "search"}));
  des->add_option("--netlist", design.netlist, "grid design netlist JSON")->required();
  des->add_option("--target", design.target, "target waveform CSV (t,v)")->required();
  des->add_option("--out-dir", design.out_dir, "directory for the report and artifacts");
  des->add_option("--config", design.config, "run configuration JSON");
  des->add_option("--runs", design.runs, "independent relaxation runs");
  des->add_option("--workers", design.workers, "worker threads");
  des->add_option("--seed", design.seed, "master seed");

  SimplifyArgs simp;
  auto* spc = app.add_subcommand("simplify", "simplify a netlist to a minimal component netlist");
  spc->add_option("netlist", simp.netlist, "netlist JSON")->required();
  spc->add_option("-o,--out", simp.out, "output netlist ('-' for stdout)");
  spc->add_option("--config", simp.config, "run configuration JSON");
  spc->add_option("--r-short-below", simp.r_short_below, "contract resistors below this value");
  spc->add_option("--c-open-below", simp.c_open_below, "delete capacitors below this value");
  spc->add_option("--g-open-below", simp.g_open_below, "delete resistors with conductance below this value");

  ExportDotArgs dot;
  auto* dotc = app.add_subcommand("export-dot", "write a netlist as a Graphviz graph");
  dotc->add_option("netlist", dot.netlist, "netlist JSON")->required();
  dotc->add_option("-o,--out", dot.out, "output file ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  std::signal(SIGINT, on_interrupt);
  return guarded(
      [&] {
        if (*gen) return cmd_gen_grid(grid, std::cout);
        if (*simc) return cmd_simulate(sim, std::cout, std::cerr);
        if (*des) return cmd_design(design, std::cerr);
        if (*spc) return cmd_simplify(simp, std::cout);
        return cmd_export_dot(dot, std::cout);
      },
      std::cerr);
}
