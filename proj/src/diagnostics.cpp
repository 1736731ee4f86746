#include "stickyalign/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stickyalign {

namespace {

const Snapshot& snapshot_at(const SimulationTrace& trace, double t) {
  for (const Snapshot& s : trace.snapshots)
    if (std::fabs(s.t - t) <= 1e-12 * (1.0 + std::fabs(t))) return s;
  throw std::invalid_argument("no snapshot at requested time");
}

}  // namespace

FlockingReport flocking_report(const SimulationTrace& trace, const CommunicationKernel& kernel) {
  if (trace.snapshots.empty()) throw std::invalid_argument("empty trace");
  FlockingReport rep;
  for (const Snapshot& s : trace.snapshots) {
    rep.t.push_back(s.t);
    rep.D.push_back(s.state.x.back() - s.state.x.front());
    const auto [lo, hi] = std::minmax_element(s.v.begin(), s.v.end());
    rep.V.push_back(*hi - *lo);
    rep.E.push_back(kernel.phi_primitive(rep.D.back()) + rep.V.back());
  }
  rep.D0 = rep.D.front();
  rep.V0 = rep.V.front();
  rep.E0 = rep.E.front();
  rep.threshold_holds = kernel.flocking_threshold_holds(rep.D0, rep.V0);
  if (rep.threshold_holds) {
    rep.D_bar = kernel.phi_primitive_inverse(rep.E0);
    if (rep.D_bar > 0.0)
      rep.decay_rate = kernel.phi(rep.D_bar);
    else
      rep.decay_rate = kernel.bounded() ? kernel.phi(0.0) : 0.0;  // D_bar=0 forces V0=0
  }
  for (double t : rep.t)
    rep.envelope.push_back(rep.threshold_holds ? rep.V0 * std::exp(-rep.decay_rate * t) : kInf);
  return rep;
}

double fit_loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RateTable convergence_study(const InitialData& data, const CommunicationKernel& kernel,
                            std::vector<int> Ns, int N_ref, std::vector<double> probes,
                            FluxMode mode, double dt_max) {
  if (Ns.size() < 3) throw std::invalid_argument("convergence study needs at least three N");
  std::sort(Ns.begin(), Ns.end());
  if (N_ref < 8 * Ns.back())
    throw std::invalid_argument("reference resolution must be at least 8x the largest N");
  std::sort(probes.begin(), probes.end());
  if (probes.empty() || probes.front() < 0.0)
    throw std::invalid_argument("probe times must be nonnegative");

  RateTable table;
  table.Ns = Ns;
  table.probes = probes;
  table.gamma_theory = std::min(kernel.holder_exponent(), data.holder_beta);

  SimulateOptions ref_opt;
  ref_opt.T = probes.back();
  ref_opt.snapshot_times = probes;
  ref_opt.dt_max = dt_max;
  ref_opt.policy = ExecPolicy::Parallel;
  const DiscretizedProblem ref = discretize_problem(data, kernel, N_ref, mode);
  const SimulationTrace ref_trace =
      simulate(ref.disc.masses, ref.disc.nodes, ref.flux.slopes(), false, kernel, ref_opt);
  std::vector<StepCDF> ref_cdf;
  for (double t : probes) ref_cdf.push_back(cdf(snapshot_at(ref_trace, t).state.measure()));

  table.w1.assign(Ns.size(), std::vector<double>(probes.size(), 0.0));
  bool failed = false;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(Ns.size()); ++i) {
    try {
      SimulateOptions opt = ref_opt;
      opt.policy = ExecPolicy::Serial;
      const DiscretizedProblem p = discretize_problem(data, kernel, Ns[i], mode);
      const SimulationTrace tr =
          simulate(p.disc.masses, p.disc.nodes, p.flux.slopes(), false, kernel, opt);
      for (std::size_t j = 0; j < probes.size(); ++j)
        table.w1[i][j] = l1_distance(cdf(snapshot_at(tr, probes[j]).state.measure()), ref_cdf[j]);
    } catch (...) {
#pragma omp critical
      failed = true;
    }
  }
  if (failed) throw std::runtime_error("a member run of the convergence study failed");

  // pre-asymptotic: discard the two smallest N before fitting
  const std::size_t skip = 2;
  for (std::size_t j = 0; j < probes.size(); ++j) {
    std::vector<double> xs, ys;
    for (std::size_t i = skip; i < Ns.size(); ++i) {
      xs.push_back(static_cast<double>(Ns[i]));
      ys.push_back(std::max(table.w1[i][j], 1e-300));
    }
    table.fitted_slope.push_back(fit_loglog_slope(xs, ys));
  }
  return table;
}

StabilityResult stability_study(const DiscretizedProblem& p1, const DiscretizedProblem& p2,
                                const CommunicationKernel& kernel, double T,
                                std::vector<double> probes, double dt_max) {
  std::sort(probes.begin(), probes.end());
  if (!probes.empty() && probes.back() > T)
    throw std::invalid_argument("stability probes must lie within [0, T]");

  SimulateOptions opt;
  opt.T = T;
  opt.snapshot_times = probes;
  opt.dt_max = dt_max;
  const SimulationTrace tr1 =
      simulate(p1.disc.masses, p1.disc.nodes, p1.flux.slopes(), false, kernel, opt);
  const SimulationTrace tr2 =
      simulate(p2.disc.masses, p2.disc.nodes, p2.flux.slopes(), false, kernel, opt);

  StabilityResult res;
  res.probes = probes;
  res.initial_gap = l1_distance(cdf(DiscreteMeasure(p1.disc.nodes, p1.disc.masses)),
                                cdf(DiscreteMeasure(p2.disc.nodes, p2.disc.masses)));
  res.flux_lip_gap = flux_lipschitz_gap(p1.flux, p2.flux);
  for (double t : probes) {
    const double d = l1_distance(cdf(snapshot_at(tr1, t).state.measure()),
                                 cdf(snapshot_at(tr2, t).state.measure()));
    res.l1.push_back(d);
    res.bound.push_back(res.initial_gap + t * res.flux_lip_gap);
    res.worst_violation = std::max(res.worst_violation, d - res.bound.back());
  }
  return res;
}

double strong_flocking_gap(const SimulationTrace& trace, const CommunicationKernel& kernel,
                           double t1, double t2) {
  if (!(t2 >= t1)) throw std::invalid_argument("strong flocking gap needs t2 >= t1");
  const FlockingReport rep = flocking_report(trace, kernel);
  if (!rep.threshold_holds)
    throw std::domain_error("flocking threshold fails; the Cauchy envelope is undefined");

  // Galilean shift to zero mean momentum
  const Snapshot& s0 = trace.snapshots.front();
  long double p = 0.0L;
  for (std::size_t k = 0; k < s0.state.size(); ++k)
    p += static_cast<long double>(s0.state.m[k]) * s0.v[k];
  const double pbar = static_cast<double>(p);

  auto shifted = [&](double t) {
    const Snapshot& s = snapshot_at(trace, t);
    std::vector<double> x(s.state.x);
    for (double& xi : x) xi -= pbar * t;
    return cdf(DiscreteMeasure(x, s.state.m));
  };
  const double measured = l1_distance(shifted(t1), shifted(t2));
  const double envelope =
      rep.V0 > 0.0 ? (2.0 * rep.V0 / rep.decay_rate) * std::exp(-rep.decay_rate * t1) : 0.0;
  return envelope - measured;
}

}  // namespace stickyalign
