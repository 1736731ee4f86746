#include "stickyalign/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stickyalign/balance_law.hpp"

namespace stickyalign {

using nlohmann::json;

namespace {

CommunicationKernel kernel_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "zero") return CommunicationKernel::zero();
  if (family == "constant") return CommunicationKernel::constant(j.at("c").get<double>());
  if (family == "algebraic_tail")
    return CommunicationKernel::algebraic_tail(j.at("beta").get<double>());
  if (family == "compact_tent")
    return CommunicationKernel::compact_tent(j.at("width").get<double>(),
                                             j.at("height").get<double>());
  if (family == "weakly_singular")
    return CommunicationKernel::weakly_singular(j.at("c_s").get<double>(),
                                                j.at("s").get<double>());
  throw std::invalid_argument("unknown kernel family: " + family);
}

InitialData initial_from_json(const json& j) {
  InitialData data;
  const json& d = j.at("density");
  const std::string type = d.at("type").get<std::string>();
  if (type == "atoms") {
    std::vector<std::pair<double, double>> atoms;
    for (const auto& a : d.at("atoms"))
      atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const auto& p, const auto& q) { return p.first < q.first; });
    std::vector<double> x, m;
    for (const auto& [xi, mi] : atoms) {
      x.push_back(xi);
      m.push_back(mi);
    }
    data.atoms = DiscreteMeasure(std::move(x), std::move(m));
  } else if (type == "piecewise_constant") {
    std::vector<std::array<double, 3>> pieces;
    for (const auto& p : d.at("pieces"))
      pieces.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
    if (pieces.empty()) throw std::invalid_argument("piecewise density needs pieces");
    double total = 0.0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const auto& [a, b, h] = pieces[i];
      if (!(b > a) || !(h > 0.0)) throw std::invalid_argument("density pieces need b > a, h > 0");
      if (i > 0 && a < pieces[i - 1][1])
        throw std::invalid_argument("density pieces must be disjoint and ordered");
      total += h * (b - a);
    }
    std::vector<double> kx, km;
    double acc = -0.5;
    kx.push_back(pieces.front()[0]);
    km.push_back(acc);
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const auto& [a, b, h] = pieces[i];
      if (kx.back() != a) {  // vacuum gap: flat segment
        kx.push_back(a);
        km.push_back(acc);
      }
      acc += h * (b - a) / total;
      kx.push_back(b);
      km.push_back(i + 1 == pieces.size() ? 0.5 : acc);
    }
    data.continuum = PiecewiseLinearCDF(std::move(kx), std::move(km));
  } else if (type == "cdf_samples") {
    std::vector<double> kx, km;
    for (const auto& k : d.at("knots")) {
      kx.push_back(k.at(0).get<double>());
      km.push_back(k.at(1).get<double>());
    }
    data.continuum = PiecewiseLinearCDF(std::move(kx), std::move(km));
  } else {
    throw std::invalid_argument("unknown density type: " + type);
  }

  const json& v = j.at("velocity");
  const std::string vtype = v.at("type").get<std::string>();
  if (vtype == "per_atom") {
    data.velocity.type = VelocitySpec::Type::PerAtom;
    for (const auto& val : v.at("values")) data.velocity.per_atom.push_back(val.get<double>());
  } else if (vtype == "constant") {
    data.velocity.type = VelocitySpec::Type::Constant;
    data.velocity.c0 = v.at("value").get<double>();
  } else if (vtype == "linear") {
    data.velocity.type = VelocitySpec::Type::Linear;
    data.velocity.c1 = v.at("slope").get<double>();
    data.velocity.c0 = v.value("intercept", 0.0);
  } else if (vtype == "sinusoid") {
    data.velocity.type = VelocitySpec::Type::Sinusoid;
    data.velocity.amplitude = v.at("amplitude").get<double>();
    data.velocity.frequency = v.at("frequency").get<double>();
    data.velocity.phase = v.value("phase", 0.0);
  } else {
    throw std::invalid_argument("unknown velocity type: " + vtype);
  }
  data.holder_beta = j.value("holder_beta", 1.0);
  if (!(data.holder_beta > 0.0) || data.holder_beta > 1.0)
    throw std::invalid_argument("holder_beta must lie in (0, 1]");
  return data;
}

}  // namespace

CommunicationKernel kernel_from_json_text(const std::string& text) {
  return kernel_from_json(json::parse(text));
}

ScenarioConfig load_scenario(const std::string& path, const CliOverrides& ov) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  in >> j;

  ScenarioConfig cfg;
  cfg.echo = j.dump();
  cfg.kernel = kernel_from_json(j.at("kernel"));
  if (j.contains("initial_file")) {
    std::ifstream fin(j.at("initial_file").get<std::string>());
    if (!fin) throw std::runtime_error("cannot open initial data file");
    json ji;
    fin >> ji;
    cfg.initial = initial_from_json(ji);
  } else {
    cfg.initial = initial_from_json(j.at("initial"));
  }
  cfg.N = j.value("N", 0);
  if (j.contains("Ns")) for (const auto& n : j.at("Ns")) cfg.Ns.push_back(n.get<int>());
  cfg.N_ref = j.value("N_ref", 0);
  cfg.T = j.value("T", 1.0);
  if (j.contains("snapshots"))
    for (const auto& t : j.at("snapshots")) cfg.snapshot_times.push_back(t.get<double>());
  cfg.snapshot_count = j.value("snapshot_count", 21);
  cfg.dt_max = j.value("dt_max", 0.01);
  const std::string mode = j.value("mode", "sample");
  if (mode == "sample")
    cfg.mode = FluxMode::Sample;
  else if (mode == "average")
    cfg.mode = FluxMode::Average;
  else
    throw std::invalid_argument("mode must be sample or average");
  if (j.contains("probe_times"))
    for (const auto& t : j.at("probe_times")) cfg.probe_times.push_back(t.get<double>());
  cfg.seed = j.value("seed", 0);
  cfg.out_dir = j.value("out", "out");
  cfg.require_threshold = j.value("require_threshold", true);
  cfg.inject_non_entropic = j.value("inject_non_entropic", false);
  if (j.contains("initial_b")) cfg.initial_b = initial_from_json(j.at("initial_b"));
  if (j.contains("flux_shift")) cfg.flux_shift = j.at("flux_shift").get<double>();

  if (ov.T) cfg.T = *ov.T;
  if (ov.dt_max) cfg.dt_max = *ov.dt_max;
  if (ov.N) cfg.N = *ov.N;
  if (ov.Ns) cfg.Ns = *ov.Ns;
  if (ov.out) cfg.out_dir = *ov.out;
  if (ov.snapshots) cfg.snapshot_times = *ov.snapshots;
  if (ov.mode) {
    if (*ov.mode == "sample")
      cfg.mode = FluxMode::Sample;
    else if (*ov.mode == "average")
      cfg.mode = FluxMode::Average;
    else
      throw std::invalid_argument("mode must be sample or average");
  }

  if (!(cfg.T > 0.0)) throw std::invalid_argument("T must be positive");
  if (!(cfg.dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
  if (cfg.N < 0) throw std::invalid_argument("N must be at least 1");
  // a -T override may shorten the run below configured snapshot times
  std::erase_if(cfg.snapshot_times, [&](double t) { return t < 0.0 || t > cfg.T; });
  std::erase_if(cfg.probe_times, [&](double t) { return t < 0.0 || t > cfg.T; });
  return cfg;
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

int resolved_N(const ScenarioConfig& cfg) {
  if (cfg.N > 0) return cfg.N;
  if (cfg.initial.atomic()) return static_cast<int>(cfg.initial.atoms->size());
  throw std::invalid_argument("N is required for non-atomic initial data");
}

std::vector<double> snapshot_schedule(const ScenarioConfig& cfg) {
  if (!cfg.snapshot_times.empty()) return cfg.snapshot_times;
  std::vector<double> times;
  const int n = std::max(2, cfg.snapshot_count);
  for (int i = 0; i < n; ++i) times.push_back(cfg.T * i / (n - 1));
  return times;
}

std::ofstream open_csv(const ScenarioConfig& cfg, const std::string& name,
                       const std::string& header) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(std::filesystem::path(cfg.out_dir) / name);
  if (!out) throw std::runtime_error("cannot open output file " + name);
  out << header << "\n";
  return out;
}

SimulationTrace run_scenario(const ScenarioConfig& cfg, const DiscretizedProblem& p,
                             MergeObserver observer = {}) {
  SimulateOptions opt;
  opt.T = cfg.T;
  opt.snapshot_times = snapshot_schedule(cfg);
  opt.dt_max = cfg.dt_max;
  opt.on_merge = std::move(observer);
  SimulationTrace tr =
      simulate(p.disc.masses, p.disc.nodes, p.flux.slopes(), false, cfg.kernel, opt);
  tr.config_echo = cfg.echo;
  return tr;
}

void write_trace_files(const ScenarioConfig& cfg, const SimulationTrace& tr) {
  auto trace = open_csv(cfg, "trace.csv", "t,cluster_index,x,m,psi,v");
  for (const Snapshot& s : tr.snapshots)
    for (std::size_t k = 0; k < s.state.size(); ++k)
      trace << csv_num(s.t) << ',' << k << ',' << csv_num(s.state.x[k]) << ','
            << csv_num(s.state.m[k]) << ',' << csv_num(s.state.psi[k]) << ','
            << csv_num(s.v[k]) << "\n";

  auto events = open_csv(cfg, "events.csv", "t,members,psi_post,v_post");
  for (const CollisionEvent& e : tr.events)
    events << csv_num(e.t) << ',' << e.lo << '-' << e.hi << ',' << csv_num(e.post_psi) << ','
           << csv_num(e.post_v) << "\n";

  auto fields = open_csv(cfg, "fields.csv", "t,cluster_index,x,rho_mass,momentum");
  for (const Snapshot& s : tr.snapshots)
    for (std::size_t k = 0; k < s.state.size(); ++k)
      fields << csv_num(s.t) << ',' << k << ',' << csv_num(s.state.x[k]) << ','
             << csv_num(s.state.m[k]) << ',' << csv_num(s.state.m[k] * s.v[k]) << "\n";
}

}  // namespace

int cmd_simulate(const ScenarioConfig& cfg) {
  const DiscretizedProblem p = discretize_problem(cfg.initial, cfg.kernel, resolved_N(cfg), cfg.mode);
  const SimulationTrace tr = run_scenario(cfg, p);
  write_trace_files(cfg, tr);
  return 0;
}

int cmd_verify(const ScenarioConfig& cfg) {
  const DiscretizedProblem p = discretize_problem(cfg.initial, cfg.kernel, resolved_N(cfg), cfg.mode);

  std::vector<ShockRecord> records;
  auto observer = [&](const ClusterState& post, CollisionEvent& ev) {
    std::vector<ShockRecord> rs = verify_state(post, p.flux, cfg.kernel);
    for (const ShockRecord& r : rs) {
      const auto [lo, hi] = post.members[r.cluster];
      if (lo == ev.lo && hi == ev.hi) ev.oleinik_margin = r.oleinik_margin;
    }
    records.insert(records.end(), rs.begin(), rs.end());
  };
  const SimulationTrace tr = run_scenario(cfg, p, observer);
  for (const Snapshot& s : tr.snapshots) {
    std::vector<ShockRecord> rs = verify_state(s.state, p.flux, cfg.kernel);
    records.insert(records.end(), rs.begin(), rs.end());
  }
  if (cfg.inject_non_entropic && tr.snapshots.back().state.size() >= 2) {
    const ClusterState& fin = tr.snapshots.back().state;
    const ClusterState forced =
        force_merge_chain(fin, 0, static_cast<int>(fin.size()) - 1);
    std::vector<ShockRecord> rs = verify_state(forced, p.flux, cfg.kernel);
    records.insert(records.end(), rs.begin(), rs.end());
  }

  auto out = open_csv(cfg, "verify.csv", "t,cluster,rh_residual,oleinik_margin,M_left,M_right,sigma");
  double worst_rh = 0.0, worst_margin = kInf;
  const ShockRecord* offender = nullptr;
  for (const ShockRecord& r : records) {
    out << csv_num(r.t) << ',' << r.cluster << ',' << csv_num(r.rh_residual) << ','
        << csv_num(r.oleinik_margin) << ',' << csv_num(r.M_left) << ',' << csv_num(r.M_right)
        << ',' << csv_num(r.sigma) << "\n";
    if (std::fabs(r.rh_residual) > worst_rh) {
      worst_rh = std::fabs(r.rh_residual);
      if (worst_rh > 1e-8) offender = &r;
    }
    if (r.oleinik_margin < worst_margin) {
      worst_margin = r.oleinik_margin;
      if (worst_margin < -1e-10) offender = &r;
    }
  }
  if (worst_rh > 1e-8 || worst_margin < -1e-10) {
    std::cerr << "entropy violation: worst rh_residual " << worst_rh << ", worst oleinik margin "
              << worst_margin;
    if (offender)
      std::cerr << " (t=" << offender->t << ", cluster " << offender->cluster << ")";
    std::cerr << "\n";
    return 1;
  }
  return 0;
}

int cmd_converge(const ScenarioConfig& cfg) {
  if (cfg.Ns.empty() || cfg.N_ref <= 0 || cfg.probe_times.empty())
    throw std::invalid_argument("converge needs Ns, N_ref and probe_times");

  auto disc_csv = open_csv(cfg, "discretization.csv", "N,l1_cdf_gap,linf_inverse_gap");
  for (int n : cfg.Ns) {
    const Discretization d = discretize_density(cfg.initial, n);
    disc_csv << n << ',' << csv_num(d.l1_cdf_gap) << ',' << csv_num(d.linf_inverse_gap) << "\n";
  }

  const RateTable table = convergence_study(cfg.initial, cfg.kernel, cfg.Ns, cfg.N_ref,
                                            cfg.probe_times, cfg.mode, cfg.dt_max);
  auto out = open_csv(cfg, "rate.csv", "N,t,w1_error,fitted_slope,gamma_theory");
  for (std::size_t i = 0; i < table.Ns.size(); ++i)
    for (std::size_t j = 0; j < table.probes.size(); ++j)
      out << table.Ns[i] << ',' << csv_num(table.probes[j]) << ',' << csv_num(table.w1[i][j])
          << ',' << csv_num(table.fitted_slope[j]) << ',' << csv_num(table.gamma_theory) << "\n";

  for (double s : table.fitted_slope) {
    if (!(s <= -0.8 * table.gamma_theory)) {
      std::cerr << "convergence slope " << s << " misses the target "
                << -0.8 * table.gamma_theory << "\n";
      return 1;
    }
  }
  return 0;
}

int cmd_flock(const ScenarioConfig& cfg) {
  const DiscretizedProblem p = discretize_problem(cfg.initial, cfg.kernel, resolved_N(cfg), cfg.mode);
  const SimulationTrace tr = run_scenario(cfg, p);
  const FlockingReport rep = flocking_report(tr, cfg.kernel);

  auto out = open_csv(cfg, "flocking.csv", "t,D,V,E,envelope");
  for (std::size_t i = 0; i < rep.t.size(); ++i)
    out << csv_num(rep.t[i]) << ',' << csv_num(rep.D[i]) << ',' << csv_num(rep.V[i]) << ','
        << csv_num(rep.E[i]) << ',' << csv_num(rep.envelope[i]) << "\n";

  if (!rep.threshold_holds && cfg.require_threshold) {
    std::cerr << "flocking threshold fails: sup Phi <= Phi(D0) + V0\n";
    return 1;
  }
  for (std::size_t i = 1; i < rep.E.size(); ++i) {
    if (rep.E[i] > rep.E[i - 1] + 1e-8) {
      std::cerr << "Lyapunov value increased at t=" << rep.t[i] << "\n";
      return 1;
    }
  }
  if (rep.threshold_holds) {
    for (std::size_t i = 0; i < rep.t.size(); ++i) {
      if (rep.D[i] > rep.D_bar + 1e-8) {
        std::cerr << "diameter bound violated at t=" << rep.t[i] << "\n";
        return 1;
      }
      if (rep.V[i] > rep.envelope[i] * (1.0 + 1e-6)) {
        std::cerr << "alignment envelope violated at t=" << rep.t[i] << "\n";
        return 1;
      }
    }
  }
  return 0;
}

int cmd_stability(const ScenarioConfig& cfg) {
  if (cfg.probe_times.empty()) throw std::invalid_argument("stability needs probe_times");
  const int N = resolved_N(cfg);
  const DiscretizedProblem p1 = discretize_problem(cfg.initial, cfg.kernel, N, cfg.mode);
  DiscretizedProblem p2 = p1;
  if (cfg.flux_shift) {
    std::vector<double> slopes = p1.flux.slopes();
    for (double& s : slopes) s += *cfg.flux_shift;
    p2.flux = PiecewiseLinearFlux(p1.disc.masses, slopes);
    p2.v0 = initial_velocities(p2.flux, p2.disc.nodes, p2.disc.masses, cfg.kernel);
  } else if (cfg.initial_b) {
    p2 = discretize_problem(*cfg.initial_b, cfg.kernel, N, cfg.mode);
  } else {
    throw std::invalid_argument("stability needs initial_b or flux_shift");
  }

  const StabilityResult res =
      stability_study(p1, p2, cfg.kernel, cfg.T, cfg.probe_times, cfg.dt_max);
  auto out = open_csv(cfg, "stability.csv", "t,l1_gap,initial_gap,flux_lip_gap,bound,violation");
  for (std::size_t i = 0; i < res.probes.size(); ++i)
    out << csv_num(res.probes[i]) << ',' << csv_num(res.l1[i]) << ','
        << csv_num(res.initial_gap) << ',' << csv_num(res.flux_lip_gap) << ','
        << csv_num(res.bound[i]) << ',' << csv_num(res.l1[i] - res.bound[i]) << "\n";

  if (res.worst_violation > 1e-8) {
    std::cerr << "stability bound violated by " << res.worst_violation << "\n";
    return 1;
  }
  return 0;
}

}  // namespace stickyalign
