#include "stickyalign/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stickyalign/pairwise.hpp"

namespace stickyalign {

double ClusterState::momentum_psi() const {
  long double s = 0.0L;
  for (std::size_t k = 0; k < m.size(); ++k)
    s += static_cast<long double>(m[k]) * static_cast<long double>(psi[k]);
  return static_cast<double>(s);
}

std::vector<double> velocity_from_psi(const ClusterState& state, const CommunicationKernel& kernel,
                                      ExecPolicy policy) {
  std::vector<double> conv(state.size());
  convolve_primitive_at(state.x, state.m, kernel, state.x, conv, policy);
  std::vector<double> v(state.size());
  for (std::size_t k = 0; k < state.size(); ++k) v[k] = state.psi[k] - conv[k];
  return v;
}

double merge_epsilon(double a, double b) {
  return 1e-12 * (1.0 + std::max(std::fabs(a), std::fabs(b)));
}

namespace {

// field of the reduced system: positions move, psi frozen
void psi_field(const std::vector<double>& pos, const std::vector<double>& m,
               const std::vector<double>& psi, const CommunicationKernel& kernel,
               ExecPolicy policy, std::vector<double>& out) {
  convolve_primitive_at(pos, m, kernel, pos, out, policy);
  for (std::size_t k = 0; k < pos.size(); ++k) out[k] = psi[k] - out[k];
}

double cubic_pos(const std::array<double, 4>& c, double t) {
  return c[0] + t * (c[1] + t * (c[2] + t * c[3]));
}
double cubic_vel(const std::array<double, 4>& c, double t) {
  return c[1] + t * (2.0 * c[2] + t * 3.0 * c[3]);
}

// Earliest tau in (lo, hi] with g(tau) <= eps for a cubic gap g, assuming
// g(lo) > eps.  Splits at the extrema of g and bisects the first monotone
// piece that dips below the threshold.
std::optional<double> earliest_below(const std::array<double, 4>& g, double eps, double lo,
                                     double hi, double tol) {
  double brk[4] = {lo, hi, hi, hi};
  int nb = 2;
  const double a = 3.0 * g[3], b = 2.0 * g[2], c = g[1];
  if (a != 0.0) {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double r : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)})
        if (r > lo && r < hi) brk[nb++] = r;
    }
  } else if (b != 0.0) {
    const double r = -c / b;
    if (r > lo && r < hi) brk[nb++] = r;
  }
  std::sort(brk, brk + nb);
  for (int i = 0; i + 1 < nb; ++i) {
    double p = brk[i], q = brk[i + 1];
    if (q <= p) continue;
    if (cubic_pos(g, p) <= eps) return p;
    if (cubic_pos(g, q) > eps) continue;
    while (q - p > tol) {
      const double mid = 0.5 * (p + q);
      (cubic_pos(g, mid) <= eps ? q : p) = mid;
    }
    return q;
  }
  return std::nullopt;
}

}  // namespace

TrialStep rk4_trial(const ClusterState& state, const std::vector<double>& v_at_x,
                    const CommunicationKernel& kernel, double h, ExecPolicy policy) {
  const std::size_t K = state.size();
  std::vector<double> y(K), k2(K), k3(K), k4(K);
  const std::vector<double>& k1 = v_at_x;
  for (std::size_t i = 0; i < K; ++i) y[i] = state.x[i] + 0.5 * h * k1[i];
  psi_field(y, state.m, state.psi, kernel, policy, k2);
  for (std::size_t i = 0; i < K; ++i) y[i] = state.x[i] + 0.5 * h * k2[i];
  psi_field(y, state.m, state.psi, kernel, policy, k3);
  for (std::size_t i = 0; i < K; ++i) y[i] = state.x[i] + h * k3[i];
  psi_field(y, state.m, state.psi, kernel, policy, k4);

  TrialStep trial;
  trial.t0 = state.t;
  trial.h = h;
  trial.coef.resize(K);
  for (std::size_t i = 0; i < K; ++i) {
    const double x1 = state.x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    const double d = x1 - state.x[i];
    trial.coef[i] = {state.x[i], k1[i], (3.0 * d - (2.0 * k1[i] + k4[i]) * h) / (h * h),
                     (-2.0 * d + (k1[i] + k4[i]) * h) / (h * h * h)};
  }
  return trial;
}

StepOutcome step(const ClusterState& state, const CommunicationKernel& kernel, double dt_max) {
  if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
  std::vector<double> v = velocity_from_psi(state, kernel);
  double dt = dt_max;
  if (state.size() > 1) {
    double min_gap = kInf, max_closing = 0.0;
    for (std::size_t k = 0; k + 1 < state.size(); ++k) {
      min_gap = std::min(min_gap, state.x[k + 1] - state.x[k]);
      max_closing = std::max(max_closing, v[k] - v[k + 1]);
    }
    if (max_closing > 0.0) dt = std::min(dt_max, 0.5 * min_gap / max_closing);
  }
  TrialStep trial = rk4_trial(state, v, kernel, dt, ExecPolicy::Serial);
  StepOutcome out;
  out.dt = dt;
  out.state = state;
  out.state.t = state.t + dt;
  for (std::size_t k = 0; k < state.size(); ++k) out.state.x[k] = cubic_pos(trial.coef[k], dt);
  out.ordering_ok = true;
  for (std::size_t k = 0; k + 1 < state.size(); ++k)
    if (out.state.x[k + 1] - out.state.x[k] <= merge_epsilon(out.state.x[k], out.state.x[k + 1]))
      out.ordering_ok = false;
  return out;
}

std::optional<CollisionHit> locate_collision(const ClusterState& state, const TrialStep& trial) {
  const std::size_t K = trial.coef.size();
  const double tol = 1e-12 * (1.0 + std::fabs(trial.t0) + trial.h);
  double best = kInf;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    std::array<double, 4> g;
    for (int c = 0; c < 4; ++c) g[c] = trial.coef[k + 1][c] - trial.coef[k][c];
    const double eps = merge_epsilon(state.x[k], state.x[k + 1]);
    if (auto tau = earliest_below(g, eps, 0.0, trial.h, tol)) best = std::min(best, *tau);
  }
  if (best == kInf) return std::nullopt;
  CollisionHit hit;
  hit.t_hit = trial.t0 + best;
  int run_start = -1;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const double gap = trial.pos(k + 1, best) - trial.pos(k, best);
    if (gap <= merge_epsilon(state.x[k], state.x[k + 1])) {
      if (run_start < 0) run_start = static_cast<int>(k);
    } else if (run_start >= 0) {
      hit.chains.emplace_back(run_start, static_cast<int>(k));
      run_start = -1;
    }
  }
  if (run_start >= 0) hit.chains.emplace_back(run_start, static_cast<int>(K - 1));
  return hit;
}

ClusterState force_merge_chain(const ClusterState& state, int lo, int hi) {
  if (lo < 0 || hi >= static_cast<int>(state.size()) || lo >= hi)
    throw std::invalid_argument("merge needs a chain of at least two clusters");
  long double M = 0.0L, P = 0.0L, X = 0.0L;
  for (int k = lo; k <= hi; ++k) {
    M += state.m[k];
    P += static_cast<long double>(state.m[k]) * state.psi[k];
    X += static_cast<long double>(state.m[k]) * state.x[k];
  }
  ClusterState out;
  out.t = state.t;
  const std::size_t K = state.size() - (hi - lo);
  out.x.reserve(K);
  out.m.reserve(K);
  out.psi.reserve(K);
  out.members.reserve(K);
  for (int k = 0; k < lo; ++k) {
    out.x.push_back(state.x[k]);
    out.m.push_back(state.m[k]);
    out.psi.push_back(state.psi[k]);
    out.members.push_back(state.members[k]);
  }
  out.x.push_back(static_cast<double>(X / M));
  out.m.push_back(static_cast<double>(M));
  out.psi.push_back(static_cast<double>(P / M));
  out.members.emplace_back(state.members[lo].first, state.members[hi].second);
  for (int k = hi + 1; k < static_cast<int>(state.size()); ++k) {
    out.x.push_back(state.x[k]);
    out.m.push_back(state.m[k]);
    out.psi.push_back(state.psi[k]);
    out.members.push_back(state.members[k]);
  }
  return out;
}

ClusterState merge(const ClusterState& state, int lo, int hi) {
  if (lo < 0 || hi >= static_cast<int>(state.size()) || lo >= hi)
    throw std::invalid_argument("merge needs a chain of at least two clusters");
  const double span = state.x[hi] - state.x[lo];
  if (span > 1e-6 * (1.0 + std::fabs(state.x[hi])))
    throw std::logic_error("merge requires coincident positions");
  return force_merge_chain(state, lo, hi);
}

namespace {

struct Group {
  int a, b;  // run of trial clusters, inclusive
  double mass;
  double psi;
  std::array<double, 4> cubic;
  std::pair<int, int> members;
};

ClusterState state_from_groups(const std::vector<Group>& groups, double t0, double tau) {
  ClusterState st;
  st.t = t0 + tau;
  st.x.reserve(groups.size());
  st.m.reserve(groups.size());
  st.psi.reserve(groups.size());
  st.members.reserve(groups.size());
  for (const Group& g : groups) {
    st.x.push_back(cubic_pos(g.cubic, tau));
    st.m.push_back(g.mass);
    st.psi.push_back(g.psi);
    st.members.push_back(g.members);
  }
  return st;
}

}  // namespace

SimulationTrace simulate(const std::vector<double>& masses, const std::vector<double>& positions,
                         const std::vector<double>& psi_or_v, bool values_are_velocities,
                         const CommunicationKernel& kernel, const SimulateOptions& opt) {
  const std::size_t N = masses.size();
  if (N == 0 || positions.size() != N || psi_or_v.size() != N)
    throw std::invalid_argument("simulate needs matching nonempty masses/positions/values");
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!std::isfinite(masses[i]) || !std::isfinite(positions[i]) || !std::isfinite(psi_or_v[i]))
      throw std::invalid_argument("simulate inputs must be finite");
    if (!(masses[i] > 0.0)) throw std::invalid_argument("masses must be positive");
    if (i > 0 && positions[i] < positions[i - 1])
      throw std::invalid_argument("positions must be sorted");
    total += masses[i];
  }
  if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("total mass must be 1");
  if (!(opt.T >= 0.0) || !(opt.dt_max > 0.0))
    throw std::invalid_argument("simulate needs T >= 0 and dt_max > 0");

  ClusterState st;
  st.t = 0.0;
  st.x = positions;
  st.m = masses;
  st.members.reserve(N);
  for (std::size_t i = 0; i < N; ++i)
    st.members.emplace_back(static_cast<int>(i), static_cast<int>(i));
  if (values_are_velocities) {
    std::vector<double> conv(N);
    convolve_primitive_at(st.x, st.m, kernel, st.x, conv, opt.policy);
    st.psi.resize(N);
    for (std::size_t i = 0; i < N; ++i) st.psi[i] = psi_or_v[i] + conv[i];
  } else {
    st.psi = psi_or_v;
  }

  SimulationTrace trace;
  trace.T = opt.T;
  const double S0 = st.momentum_psi();
  auto update_drift = [&]() {
    const double d = std::fabs(st.momentum_psi() - S0) / std::max(1.0, std::fabs(S0));
    trace.conservation_drift = std::max(trace.conservation_drift, d);
  };

  // particles sharing a position at t=0 belong to the same initial cluster
  {
    bool coincident = false;
    for (std::size_t k = 0; k + 1 < st.size(); ++k)
      if (st.x[k + 1] - st.x[k] <= merge_epsilon(st.x[k], st.x[k + 1])) coincident = true;
    if (coincident) {
      std::vector<double> v = velocity_from_psi(st, kernel, opt.policy);
      for (int k = static_cast<int>(st.size()) - 2; k >= 0; --k) {
        if (!(st.x[k + 1] - st.x[k] <= merge_epsilon(st.x[k], st.x[k + 1]))) continue;
        int hi = k + 1;
        while (k > 0 && st.x[k] - st.x[k - 1] <= merge_epsilon(st.x[k - 1], st.x[k])) --k;
        CollisionEvent ev;
        ev.t = 0.0;
        ev.lo = st.members[k].first;
        ev.hi = st.members[hi].second;
        long double P = 0.0L, Vm = 0.0L, M = 0.0L;
        for (int j = k; j <= hi; ++j) {
          ev.pre_m.push_back(st.m[j]);
          ev.pre_psi.push_back(st.psi[j]);
          ev.pre_v.push_back(v[j]);
          M += st.m[j];
          P += static_cast<long double>(st.m[j]) * st.psi[j];
          Vm += static_cast<long double>(st.m[j]) * v[j];
        }
        ev.post_psi = static_cast<double>(P / M);
        ev.post_v = static_cast<double>(Vm / M);
        st = merge(st, k, hi);
        v = velocity_from_psi(st, kernel, opt.policy);
        if (opt.on_merge) opt.on_merge(st, ev);
        trace.events.push_back(std::move(ev));
      }
      update_drift();
    }
  }

  std::vector<double> times{0.0, opt.T};
  for (double s : opt.snapshot_times) {
    if (s < 0.0 || s > opt.T) throw std::invalid_argument("snapshot time outside [0, T]");
    times.push_back(s);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  auto record = [&](double t) {
    Snapshot s;
    s.t = t;
    s.state = st;
    s.v = velocity_from_psi(st, kernel, opt.policy);
    trace.snapshots.push_back(std::move(s));
  };
  record(0.0);

  for (std::size_t ti = 1; ti < times.size(); ++ti) {
    const double t_next = times[ti];
    while (st.t < t_next - 1e-15 * (1.0 + t_next)) {
      const double h = std::min(opt.dt_max, t_next - st.t);
      const double t0 = st.t;
      std::vector<double> v0 = velocity_from_psi(st, kernel, opt.policy);
      TrialStep trial = rk4_trial(st, v0, kernel, h, opt.policy);

      std::vector<Group> groups(st.size());
      for (std::size_t k = 0; k < st.size(); ++k)
        groups[k] = {static_cast<int>(k), static_cast<int>(k), st.m[k], st.psi[k],
                     trial.coef[k],       st.members[k]};

      const double tol = 1e-12 * (1.0 + std::fabs(t0) + h);
      double tau = 0.0;
      bool merged_any = false;
      while (groups.size() > 1) {
        // earliest gap crossing among adjacent groups in (tau, h]
        double best = kInf;
        for (std::size_t k = 0; k + 1 < groups.size(); ++k) {
          std::array<double, 4> g;
          for (int c = 0; c < 4; ++c) g[c] = groups[k + 1].cubic[c] - groups[k].cubic[c];
          const double eps =
              merge_epsilon(cubic_pos(groups[k].cubic, tau), cubic_pos(groups[k + 1].cubic, tau));
          if (auto hit = earliest_below(g, eps, tau, h, tol)) best = std::min(best, *hit);
        }
        if (best == kInf) break;
        tau = best;

        // all coincident adjacent pairs at tau merge as maximal chains
        std::vector<char> close(groups.size() - 1, 0);
        for (std::size_t k = 0; k + 1 < groups.size(); ++k) {
          const double xa = cubic_pos(groups[k].cubic, tau);
          const double xb = cubic_pos(groups[k + 1].cubic, tau);
          close[k] = xb - xa <= merge_epsilon(xa, xb) ? 1 : 0;
        }
        std::vector<Group> next;
        next.reserve(groups.size());
        std::size_t k = 0;
        while (k < groups.size()) {
          std::size_t j = k;
          while (j + 1 < groups.size() && close[j]) ++j;
          if (j == k) {
            next.push_back(groups[k]);
            ++k;
            continue;
          }
          CollisionEvent ev;
          ev.t = t0 + tau;
          ev.lo = groups[k].members.first;
          ev.hi = groups[j].members.second;
          long double M = 0.0L, P = 0.0L, Vm = 0.0L;
          std::array<long double, 4> comb{0.0L, 0.0L, 0.0L, 0.0L};
          for (std::size_t q = k; q <= j; ++q) {
            const Group& g = groups[q];
            ev.pre_m.push_back(g.mass);
            ev.pre_psi.push_back(g.psi);
            ev.pre_v.push_back(cubic_vel(g.cubic, tau));
            M += g.mass;
            P += static_cast<long double>(g.mass) * g.psi;
            Vm += static_cast<long double>(g.mass) * cubic_vel(g.cubic, tau);
            for (int c = 0; c < 4; ++c) comb[c] += static_cast<long double>(g.mass) * g.cubic[c];
          }
          Group merged;
          merged.a = groups[k].a;
          merged.b = groups[j].b;
          merged.mass = static_cast<double>(M);
          merged.psi = static_cast<double>(P / M);
          for (int c = 0; c < 4; ++c) merged.cubic[c] = static_cast<double>(comb[c] / M);
          merged.members = {groups[k].members.first, groups[j].members.second};
          ev.post_psi = merged.psi;
          ev.post_v = static_cast<double>(Vm / M);
          next.push_back(merged);
          // remaining groups to the right are appended below; build the
          // observer state from what the full group list looks like now
          std::vector<Group> full = next;
          for (std::size_t q = j + 1; q < groups.size(); ++q) full.push_back(groups[q]);
          if (opt.on_merge) {
            ClusterState post = state_from_groups(full, t0, tau);
            opt.on_merge(post, ev);
          }
          trace.events.push_back(std::move(ev));
          k = j + 1;
          merged_any = true;
        }
        groups = std::move(next);
      }

      st = state_from_groups(groups, t0, h);
      for (std::size_t k = 0; k + 1 < st.size(); ++k)
        if (!(st.x[k + 1] > st.x[k]))
          throw std::logic_error("ordering violated after event processing");
      if (merged_any) update_drift();
    }
    st.t = t_next;
    record(t_next);
  }
  update_drift();
  return trace;
}

ReferenceTrajectory direct_cs_reference(std::vector<double> masses, std::vector<double> positions,
                                        std::vector<double> velocities,
                                        const CommunicationKernel& kernel, double T, double dt,
                                        const std::vector<double>& sample_times) {
  if (!kernel.bounded())
    throw std::invalid_argument("direct reference supports bounded kernels only");
  const std::size_t N = masses.size();
  if (positions.size() != N || velocities.size() != N || N == 0)
    throw std::invalid_argument("reference needs matching nonempty inputs");

  std::vector<double> xx = positions, vv = velocities, mm = masses;
  ReferenceTrajectory out;
  std::vector<double> samples = sample_times;
  std::sort(samples.begin(), samples.end());

  auto rhs = [&](const std::vector<double>& x, const std::vector<double>& v,
                 std::vector<double>& av) {
    const std::size_t K = x.size();
    for (std::size_t i = 0; i < K; ++i) {
      double a = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        if (x[j] == x[i]) continue;
        a += mm[j] * kernel.phi(x[j] - x[i]) * (v[j] - v[i]);
      }
      av[i] = a;
    }
  };

  auto rk4 = [&](std::vector<double>& x, std::vector<double>& v, double h) {
    const std::size_t K = x.size();
    std::vector<double> ax1(K), ax2(K), ax3(K), ax4(K);
    std::vector<double> xv(K), vv2(K);
    rhs(x, v, ax1);
    for (std::size_t i = 0; i < K; ++i) {
      xv[i] = x[i] + 0.5 * h * v[i];
      vv2[i] = v[i] + 0.5 * h * ax1[i];
    }
    std::vector<double> k2v = vv2;
    rhs(xv, vv2, ax2);
    std::vector<double> xv3(K), vv3(K);
    for (std::size_t i = 0; i < K; ++i) {
      xv3[i] = x[i] + 0.5 * h * k2v[i];
      vv3[i] = v[i] + 0.5 * h * ax2[i];
    }
    rhs(xv3, vv3, ax3);
    std::vector<double> xv4(K), vv4(K);
    for (std::size_t i = 0; i < K; ++i) {
      xv4[i] = x[i] + h * vv3[i];
      vv4[i] = v[i] + h * ax3[i];
    }
    rhs(xv4, vv4, ax4);
    for (std::size_t i = 0; i < K; ++i) {
      const double nx = x[i] + h / 6.0 * (v[i] + 2.0 * k2v[i] + 2.0 * vv3[i] + vv4[i]);
      const double nv = v[i] + h / 6.0 * (ax1[i] + 2.0 * ax2[i] + 2.0 * ax3[i] + ax4[i]);
      x[i] = nx;
      v[i] = nv;
    }
  };

  auto contact = [&](const std::vector<double>& x) {
    for (std::size_t k = 0; k + 1 < x.size(); ++k)
      if (x[k + 1] - x[k] <= merge_epsilon(x[k], x[k + 1])) return true;
    return false;
  };

  auto merge_pass = [&](double t) {
    for (int k = static_cast<int>(xx.size()) - 2; k >= 0; --k) {
      if (!(xx[k + 1] - xx[k] <= merge_epsilon(xx[k], xx[k + 1]))) continue;
      int hi = k + 1;
      while (k > 0 && xx[k] - xx[k - 1] <= merge_epsilon(xx[k - 1], xx[k])) --k;
      double M = 0.0, X = 0.0, V = 0.0;
      for (int j = k; j <= hi; ++j) {
        M += mm[j];
        X += mm[j] * xx[j];
        V += mm[j] * vv[j];
      }
      xx[k] = X / M;
      vv[k] = V / M;
      mm[k] = M;
      xx.erase(xx.begin() + k + 1, xx.begin() + hi + 1);
      vv.erase(vv.begin() + k + 1, vv.begin() + hi + 1);
      mm.erase(mm.begin() + k + 1, mm.begin() + hi + 1);
      if (!out.first_collision_time) out.first_collision_time = t;
    }
  };

  double t = 0.0;
  std::size_t si = 0;
  merge_pass(0.0);
  auto record_if_due = [&]() {
    while (si < samples.size() && samples[si] <= t + 1e-15 * (1.0 + t)) {
      out.times.push_back(samples[si]);
      out.x.push_back(xx);
      out.v.push_back(vv);
      out.m.push_back(mm);
      ++si;
    }
  };
  record_if_due();
  while (t < T - 1e-15 * (1.0 + T)) {
    double h = std::min(dt, T - t);
    if (si < samples.size()) h = std::min(h, samples[si] - t);
    std::vector<double> x1 = xx, v1 = vv;
    rk4(x1, v1, h);
    if (contact(x1)) {
      // bisect the substep length to land on the first contact
      double lo = 0.0, hi2 = h;
      for (int it = 0; it < 60 && hi2 - lo > 1e-13 * (1.0 + t); ++it) {
        const double mid = 0.5 * (lo + hi2);
        std::vector<double> xm = xx, vm = vv;
        rk4(xm, vm, mid);
        (contact(xm) ? hi2 : lo) = mid;
      }
      std::vector<double> xm = xx, vm = vv;
      rk4(xm, vm, hi2);
      xx = xm;
      vv = vm;
      t += hi2;
      merge_pass(t);
    } else {
      xx = x1;
      vv = v1;
      t += h;
    }
    record_if_due();
  }
  return out;
}

}  // namespace stickyalign
