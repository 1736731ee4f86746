// Scenario-driven front end: simulate | verify | converge | flock | stability.
// Exit codes: 0 pass, 1 property violation, 2 usage or configuration error.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stickyalign/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"entropic sticky-particle solver for the 1D Euler-alignment system"};
  app.require_subcommand(1);

  std::string config_path;
  stickyalign::CliOverrides ov;
  double T = 0.0, dt_max = 0.0;
  int N = 0;
  std::vector<int> Ns;
  std::string mode, out;
  std::vector<double> snapshots;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "scenario JSON file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--T", T, "final time");
    sub->add_option("--N", N, "particle count");
    sub->add_option("--Ns", Ns, "particle counts for the rate study");
    sub->add_option("--mode", mode, "flux discretization: sample | average");
    sub->add_option("--dt-max", dt_max, "maximum integrator step");
    sub->add_option("--snapshots", snapshots, "snapshot times");
  };

  CLI::App* sim = app.add_subcommand("simulate", "run the sticky-particle dynamics");
  CLI::App* ver = app.add_subcommand("verify", "simulate and check the entropy conditions");
  CLI::App* con = app.add_subcommand("converge", "self-convergence rate study");
  CLI::App* flo = app.add_subcommand("flock", "flocking diagnostics");
  CLI::App* sta = app.add_subcommand("stability", "L1 stability bound check");
  for (CLI::App* sub : {sim, ver, con, flo, sta}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->count("--T") || ver->count("--T") || con->count("--T") || flo->count("--T") ||
        sta->count("--T"))
      ov.T = T;
    if (sim->count("--dt-max") || ver->count("--dt-max") || con->count("--dt-max") ||
        flo->count("--dt-max") || sta->count("--dt-max"))
      ov.dt_max = dt_max;
    if (!out.empty()) ov.out = out;
    if (!mode.empty()) ov.mode = mode;
    if (N > 0) ov.N = N;
    if (!Ns.empty()) ov.Ns = Ns;
    if (!snapshots.empty()) ov.snapshots = snapshots;

    const stickyalign::ScenarioConfig cfg = stickyalign::load_scenario(config_path, ov);
    if (sim->parsed()) return stickyalign::cmd_simulate(cfg);
    if (ver->parsed()) return stickyalign::cmd_verify(cfg);
    if (con->parsed()) return stickyalign::cmd_converge(cfg);
    if (flo->parsed()) return stickyalign::cmd_flock(cfg);
    if (sta->parsed()) return stickyalign::cmd_stability(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
