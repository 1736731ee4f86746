#pragma once

#include <vector>

#include "stickyalign/dynamics.hpp"
#include "stickyalign/initial_data.hpp"

namespace stickyalign {

// Flocking diagnostics per snapshot: support diameter D, velocity variation V,
// Lyapunov value E = Phi(D) + V, and the fast-alignment envelope.
struct FlockingReport {
  std::vector<double> t, D, V, E, envelope;
  double D0 = 0.0, V0 = 0.0, E0 = 0.0;
  bool threshold_holds = false;
  double D_bar = kInf;        // Phi^{-1}(E0) when the threshold holds
  double decay_rate = 0.0;    // phi(D_bar)
};

FlockingReport flocking_report(const SimulationTrace& trace, const CommunicationKernel& kernel);

struct RateTable {
  std::vector<int> Ns;
  std::vector<double> probes;
  std::vector<std::vector<double>> w1;  // [Ns index][probe index]
  std::vector<double> fitted_slope;     // per probe, two smallest N discarded
  double gamma_theory = 0.0;            // min{ kernel s, velocity Hoelder beta }
};

// Self-convergence of the sticky-particle solution against an N_ref-particle
// reference (N_ref >= 8 max Ns).  Member runs execute concurrently.
RateTable convergence_study(const InitialData& data, const CommunicationKernel& kernel,
                            std::vector<int> Ns, int N_ref, std::vector<double> probes,
                            FluxMode mode, double dt_max);

// Worst violation over the probes of
// ||M - M~||_L1(t) - ||M0 - M~0||_L1 - t |A - A~|_Lip.
struct StabilityResult {
  std::vector<double> probes;
  std::vector<double> l1;
  std::vector<double> bound;
  double initial_gap = 0.0;
  double flux_lip_gap = 0.0;
  double worst_violation = -kInf;
};

StabilityResult stability_study(const DiscretizedProblem& p1, const DiscretizedProblem& p2,
                                const CommunicationKernel& kernel, double T,
                                std::vector<double> probes, double dt_max);

// Strong-flocking Cauchy estimate: envelope (2 V0 / phi(D_bar)) exp(-phi(D_bar) t1)
// minus W1 of the Galilean-shifted densities at t1 and t2.  Requires the
// flocking threshold; snapshots at t1 and t2 must exist in the trace.
double strong_flocking_gap(const SimulationTrace& trace, const CommunicationKernel& kernel,
                           double t1, double t2);

double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace stickyalign
