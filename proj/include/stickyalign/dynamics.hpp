#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stickyalign/kernel.hpp"
#include "stickyalign/measures.hpp"

namespace stickyalign {

// Live sticky-particle configuration.  psi values are conserved between
// collisions; member ranges index the original particles and only grow.
struct ClusterState {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> m;
  std::vector<double> psi;
  std::vector<std::pair<int, int>> members;  // inclusive original-index ranges

  std::size_t size() const { return x.size(); }
  DiscreteMeasure measure() const { return DiscreteMeasure(x, m); }
  double momentum_psi() const;  // sum m_k psi_k, conserved exactly
};

struct CollisionEvent {
  double t = 0.0;
  int lo = 0, hi = 0;  // merged original-particle range
  std::vector<double> pre_m, pre_psi, pre_v;
  double post_psi = 0.0, post_v = 0.0;
  double oleinik_margin = std::numeric_limits<double>::quiet_NaN();  // filled by verification
};

struct Snapshot {
  double t = 0.0;
  ClusterState state;
  std::vector<double> v;
};

struct SimulationTrace {
  std::vector<Snapshot> snapshots;
  std::vector<CollisionEvent> events;
  double T = 0.0;
  double conservation_drift = 0.0;  // max relative drift of sum m psi
  std::string config_echo;
};

// v_k = psi_k - sum_j m_j Phi(x_k - x_j).  The only place velocities are
// computed; the (possibly singular) phi itself is never evaluated.
std::vector<double> velocity_from_psi(const ClusterState& state, const CommunicationKernel& kernel,
                                      ExecPolicy policy = ExecPolicy::Serial);

// relative coincidence threshold for a gap between positions a and b
double merge_epsilon(double a, double b);

// One classical RK4 advance with psi frozen and the gap-limited time step
// dt = min(dt_max, 0.5 * min_gap / max_closing).  ordering_ok = false signals
// a crossing overshoot; the caller then locates the collision.
struct StepOutcome {
  ClusterState state;
  double dt = 0.0;
  bool ordering_ok = true;
};
StepOutcome step(const ClusterState& state, const CommunicationKernel& kernel, double dt_max);

// Dense output of one RK4 trial: cubic Hermite per cluster on [0, h], built
// from the endpoint positions and the first/last stage slopes.
struct TrialStep {
  double t0 = 0.0, h = 0.0;
  std::vector<std::array<double, 4>> coef;  // x(tau) = c0 + c1 t + c2 t^2 + c3 t^3

  double pos(std::size_t k, double tau) const {
    const auto& c = coef[k];
    return c[0] + tau * (c[1] + tau * (c[2] + tau * c[3]));
  }
  double vel(std::size_t k, double tau) const {
    const auto& c = coef[k];
    return c[1] + tau * (2.0 * c[2] + tau * 3.0 * c[3]);
  }
};
TrialStep rk4_trial(const ClusterState& state, const std::vector<double>& v_at_x,
                    const CommunicationKernel& kernel, double h, ExecPolicy policy);

// Earliest time in (0, h] at which a gap closes below the merge threshold,
// located by bisection on the dense interpolant; returns all adjacent chains
// coincident at that time.
struct CollisionHit {
  double t_hit = 0.0;                         // absolute time
  std::vector<std::pair<int, int>> chains;    // cluster-index ranges, inclusive
};
std::optional<CollisionHit> locate_collision(const ClusterState& state, const TrialStep& trial);

// Barycentric chain merge of clusters [lo, hi]; preserves sum m psi exactly.
// merge() requires coincident positions; the force_ variant does not and
// exists for adversarial verification tests.
ClusterState merge(const ClusterState& state, int lo, int hi);
ClusterState force_merge_chain(const ClusterState& state, int lo, int hi);

using MergeObserver = std::function<void(const ClusterState& post, CollisionEvent& ev)>;

struct SimulateOptions {
  double T = 1.0;
  std::vector<double> snapshot_times;  // t=0 and t=T are always recorded
  double dt_max = 0.01;
  ExecPolicy policy = ExecPolicy::Parallel;
  MergeObserver on_merge;  // invoked immediately after every merge
};

SimulationTrace simulate(const std::vector<double>& masses, const std::vector<double>& positions,
                         const std::vector<double>& psi_or_v, bool values_are_velocities,
                         const CommunicationKernel& kernel, const SimulateOptions& opt);

// Brute-force oracle in (x, v) variables with explicit pairwise sticking;
// bounded kernels only, small N.  Fixed-step RK4 with bisected collision
// times.  Used for cross-validation, never on the production path.
struct ReferenceTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> x, v, m;
  std::optional<double> first_collision_time;
};
ReferenceTrajectory direct_cs_reference(std::vector<double> masses, std::vector<double> positions,
                                        std::vector<double> velocities,
                                        const CommunicationKernel& kernel, double T, double dt,
                                        const std::vector<double>& sample_times);

}  // namespace stickyalign
