#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "stickyalign/dynamics.hpp"

using namespace stickyalign;

namespace {

ClusterState make_state(std::vector<double> x, std::vector<double> m, std::vector<double> psi) {
  ClusterState st;
  st.x = std::move(x);
  st.m = std::move(m);
  st.psi = std::move(psi);
  for (std::size_t i = 0; i < st.x.size(); ++i)
    st.members.emplace_back(static_cast<int>(i), static_cast<int>(i));
  return st;
}

struct RandomConfig {
  std::vector<double> x, m, v;
};

RandomConfig random_config(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> X(-2.0, 2.0);
  std::uniform_real_distribution<double> V(-1.5, 1.5);
  std::uniform_real_distribution<double> M(0.2, 1.0);
  RandomConfig c;
  for (int i = 0; i < n; ++i) {
    c.x.push_back(X(rng));
    c.v.push_back(V(rng));
    c.m.push_back(M(rng));
  }
  std::sort(c.x.begin(), c.x.end());
  double total = 0.0;
  for (double m : c.m) total += m;
  for (double& m : c.m) m /= total;
  return c;
}

}  // namespace

TEST_CASE("velocity from psi") {
  // phi = 0: v = psi
  auto st = make_state({-1.0, 1.0}, {0.5, 0.5}, {0.4, -0.2});
  auto v = velocity_from_psi(st, CommunicationKernel::zero());
  CHECK(v[0] == 0.4);
  CHECK(v[1] == -0.2);

  // constant(1) symmetric pair with psi = 0: v = (+1, -1)
  auto st2 = make_state({-1.0, 1.0}, {0.5, 0.5}, {0.0, 0.0});
  auto v2 = velocity_from_psi(st2, CommunicationKernel::constant(1.0));
  CHECK(v2[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(v2[1] == doctest::Approx(-1.0).epsilon(1e-15));

  // single cluster: v = psi for any kernel
  auto st3 = make_state({0.3}, {1.0}, {2.2});
  CHECK(velocity_from_psi(st3, CommunicationKernel::weakly_singular(1.0, 0.5))[0] == 2.2);
}

TEST_CASE("step: free streaming is exact") {
  // psi = v for phi = 0; RK4 reproduces linear motion exactly
  auto st = make_state({-1.0, 1.0}, {0.5, 0.5}, {1.0, -1.0});
  const StepOutcome out = step(st, CommunicationKernel::zero(), 0.5);
  CHECK(out.dt == doctest::Approx(0.5));
  CHECK(out.state.x[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(out.state.x[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out.ordering_ok);
}

TEST_CASE("step: all-to-all pair decays exponentially") {
  // gap obeys g' = -g; one RK4 step of h reproduces the stability polynomial
  // R(h) = 1 - h + h^2/2 - h^3/6 + h^4/24 exactly, and the closed form up to
  // the O(h^5) truncation
  auto st = make_state({-1.0, 1.0}, {0.5, 0.5}, {0.0, 0.0});
  const double h = 0.1;
  const StepOutcome out = step(st, CommunicationKernel::constant(1.0), h);
  const double gap = out.state.x[1] - out.state.x[0];
  const double R = 1.0 - h + h * h / 2 - h * h * h / 6 + h * h * h * h / 24;
  CHECK(gap == doctest::Approx(2.0 * R).epsilon(1e-14));
  CHECK(gap == doctest::Approx(2.0 * std::exp(-h)).epsilon(0.0).scale(1.0).epsilon(3e-7));
}

TEST_CASE("step: gap-limited dt") {
  // closing speed 2, gap 2 -> dt = min(dt_max, 0.5 * 2/2)
  auto st = make_state({-1.0, 1.0}, {0.5, 0.5}, {1.0, -1.0});
  const StepOutcome out = step(st, CommunicationKernel::zero(), 10.0);
  CHECK(out.dt == doctest::Approx(0.5));
  CHECK(out.ordering_ok);

  // single cluster: linear motion at psi
  auto st2 = make_state({1.0}, {1.0}, {0.7});
  const StepOutcome out2 = step(st2, CommunicationKernel::algebraic_tail(2.0), 5.0);
  CHECK(out2.dt == 5.0);
  CHECK(out2.state.x[0] == doctest::Approx(1.0 + 3.5).epsilon(1e-14));
}

TEST_CASE("locate collision: kinematics") {
  auto st = make_state({-1.0, 1.0}, {0.5, 0.5}, {1.0, -1.0});
  const auto k = CommunicationKernel::zero();
  const auto v = velocity_from_psi(st, k);
  const TrialStep trial = rk4_trial(st, v, k, 1.5, ExecPolicy::Serial);
  const auto hit = locate_collision(st, trial);
  REQUIRE(hit.has_value());
  CHECK(hit->t_hit == doctest::Approx(1.0).epsilon(1e-10));
  REQUIRE(hit->chains.size() == 1);
  CHECK(hit->chains[0] == std::pair<int, int>(0, 1));

  // three clusters meeting symmetrically at the origin
  auto st3 = make_state({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25}, {1.0, 0.0, -1.0});
  const auto v3 = velocity_from_psi(st3, k);
  const TrialStep t3 = rk4_trial(st3, v3, k, 1.5, ExecPolicy::Serial);
  const auto hit3 = locate_collision(st3, t3);
  REQUIRE(hit3.has_value());
  CHECK(hit3->t_hit == doctest::Approx(1.0).epsilon(1e-10));
  REQUIRE(hit3->chains.size() == 1);
  CHECK(hit3->chains[0] == std::pair<int, int>(0, 2));

  // no sign change, no event
  auto st4 = make_state({-1.0, 1.0}, {0.5, 0.5}, {-1.0, 1.0});
  const auto v4 = velocity_from_psi(st4, k);
  const TrialStep t4 = rk4_trial(st4, v4, k, 1.5, ExecPolicy::Serial);
  CHECK_FALSE(locate_collision(st4, t4).has_value());
}

TEST_CASE("merge rules") {
  auto st = make_state({0.0, 0.0}, {0.5, 0.5}, {1.0, -1.0});
  const ClusterState m1 = merge(st, 0, 1);
  CHECK(m1.size() == 1);
  CHECK(m1.psi[0] == 0.0);
  CHECK(m1.members[0] == std::pair<int, int>(0, 1));

  // direct weighted average
  auto st2 = make_state({1.0, 1.0}, {1.0 / 3, 2.0 / 3}, {3.0, 0.0});
  const ClusterState m2 = merge(st2, 0, 1);
  CHECK(m2.psi[0] == doctest::Approx(1.0).epsilon(1e-15));

  // merging preserves sum m psi to machine precision
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    RandomConfig c = random_config(rng, 6);
    std::fill(c.x.begin(), c.x.end(), 0.5);  // coincident chain
    auto st3 = make_state(c.x, c.m, c.v);
    const double before = st3.momentum_psi();
    const ClusterState m3 = merge(st3, 1, 4);
    CHECK(m3.momentum_psi() == doctest::Approx(before).epsilon(1e-15));
  }

  CHECK_THROWS_AS(merge(make_state({0.0, 5.0}, {0.5, 0.5}, {0.0, 0.0}), 0, 1), std::logic_error);
  CHECK_NOTHROW(force_merge_chain(make_state({0.0, 5.0}, {0.5, 0.5}, {0.0, 0.0}), 0, 1));
}

TEST_CASE("simulate: pressureless pair") {
  SimulateOptions opt;
  opt.T = 2.0;
  opt.snapshot_times = {0.5, 1.0, 1.5};
  opt.dt_max = 0.05;
  const auto tr = simulate({0.5, 0.5}, {-1.0, 1.0}, {1.0, -1.0}, true,
                           CommunicationKernel::zero(), opt);
  REQUIRE(tr.events.size() == 1);
  CHECK(tr.events[0].t == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tr.events[0].post_v == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  const Snapshot& last = tr.snapshots.back();
  CHECK(last.state.size() == 1);
  CHECK(last.state.x[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(tr.conservation_drift <= 1e-13);
  // merged cluster stays put afterwards
  for (const Snapshot& s : tr.snapshots)
    if (s.t > 1.0) CHECK(std::fabs(s.state.x[0]) <= 1e-9);
}

TEST_CASE("simulate: all-to-all pair never collides") {
  SimulateOptions opt;
  opt.T = 1.0;
  opt.snapshot_times = {0.25, 0.5, 0.75};
  opt.dt_max = 0.01;
  const auto tr = simulate({0.5, 0.5}, {-1.0, 1.0}, {0.0, 0.0}, false,
                           CommunicationKernel::constant(1.0), opt);
  CHECK(tr.events.empty());
  for (const Snapshot& s : tr.snapshots) {
    const double gap = s.state.x[1] - s.state.x[0];
    CHECK(gap == doctest::Approx(2.0 * std::exp(-s.t)).epsilon(1e-6));
  }
}

TEST_CASE("simulate: single particle straight line") {
  SimulateOptions opt;
  opt.T = 5.0;
  opt.dt_max = 0.5;
  const auto tr = simulate({1.0}, {0.2}, {0.9}, false,
                           CommunicationKernel::weakly_singular(1.0, 0.5), opt);
  CHECK(tr.events.empty());
  CHECK(tr.snapshots.back().state.x[0] == doctest::Approx(0.2 + 0.9 * 5.0).epsilon(1e-12));
}

TEST_CASE("simulate: initially coincident particles merge at t=0") {
  SimulateOptions opt;
  opt.T = 0.5;
  opt.dt_max = 0.05;
  const auto tr = simulate({0.25, 0.25, 0.5}, {0.0, 0.0, 1.0}, {1.0, -1.0, 0.0}, false,
                           CommunicationKernel::zero(), opt);
  REQUIRE_FALSE(tr.events.empty());
  CHECK(tr.events[0].t == 0.0);
  CHECK(tr.snapshots.front().state.size() == 2);
  CHECK(tr.snapshots.front().state.psi[0] == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("simulate invariants on random configurations") {
  std::mt19937_64 rng(29);
  const std::vector<CommunicationKernel> kernels{
      CommunicationKernel::zero(), CommunicationKernel::constant(0.8),
      CommunicationKernel::algebraic_tail(2.0), CommunicationKernel::compact_tent(1.0, 1.0),
      CommunicationKernel::weakly_singular(1.0, 0.5)};
  for (int trial = 0; trial < 10; ++trial) {
    const auto& kernel = kernels[trial % kernels.size()];
    RandomConfig c = random_config(rng, 12);
    SimulateOptions opt;
    opt.T = 1.5;
    opt.dt_max = 0.02;
    for (int i = 0; i <= 6; ++i) opt.snapshot_times.push_back(opt.T * i / 6.0);
    const auto tr = simulate(c.m, c.x, c.v, true, kernel, opt);

    // exact conservation of sum m psi
    CHECK(tr.conservation_drift <= 1e-13);

    const auto& s0 = tr.snapshots.front();
    const double psi_lip = *std::max_element(s0.state.psi.begin(), s0.state.psi.end(),
                                             [](double a, double b) {
                                               return std::fabs(a) < std::fabs(b);
                                             });
    const double R0 = std::max(std::fabs(c.x.front()), std::fabs(c.x.back()));
    const double speed_bound = std::fabs(psi_lip) + kernel.phi_primitive(2.0 * R0);

    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
      const Snapshot& s = tr.snapshots[i];
      // order preservation and contiguous nested member ranges
      for (std::size_t k = 0; k + 1 < s.state.size(); ++k) {
        CHECK(s.state.x[k + 1] > s.state.x[k]);
        CHECK(s.state.members[k + 1].first == s.state.members[k].second + 1);
      }
      // support bound R(T) = R0 + T (|A|_Lip + Phi(2 R0))
      const double RT = R0 + s.t * speed_bound + 1e-9;
      CHECK(s.state.x.front() >= -RT);
      CHECK(s.state.x.back() <= RT);
      // maximum principle against every earlier snapshot
      for (std::size_t j = 0; j < i; ++j) {
        const auto [lo, hi] =
            std::minmax_element(tr.snapshots[j].v.begin(), tr.snapshots[j].v.end());
        for (double v : s.v) {
          CHECK(v >= *lo - 1e-9);
          CHECK(v <= *hi + 1e-9);
        }
      }
      // time regularity: W1 distance between snapshots grows at most linearly
      for (std::size_t j = 0; j < i; ++j) {
        const double d =
            wasserstein1(s.state.measure(), tr.snapshots[j].state.measure());
        CHECK(d <= speed_bound * (s.t - tr.snapshots[j].t) + 1e-8);
      }
    }

    // barycentric ordering: pre-merge psi nonincreasing left to right
    for (const CollisionEvent& ev : tr.events) {
      for (std::size_t q = 0; q + 1 < ev.pre_psi.size(); ++q)
        CHECK(ev.pre_psi[q] >= ev.pre_psi[q + 1] - 1e-10);
      // momentum conservation at the collision
      long double pm = 0.0L, mm = 0.0L;
      for (std::size_t q = 0; q < ev.pre_m.size(); ++q) {
        pm += static_cast<long double>(ev.pre_m[q]) * ev.pre_v[q];
        mm += ev.pre_m[q];
      }
      CHECK(ev.post_v == doctest::Approx(static_cast<double>(pm / mm)).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("direct reference: free streaming and maximum principle") {
  const auto zero = CommunicationKernel::zero();
  const auto ref = direct_cs_reference({0.5, 0.5}, {-1.0, 1.0}, {0.5, 0.7}, zero, 1.0, 1e-3,
                                       {0.5, 1.0});
  REQUIRE(ref.times.size() == 2);
  CHECK(ref.x[1][0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(ref.x[1][1] == doctest::Approx(1.7).epsilon(1e-12));
  CHECK_FALSE(ref.first_collision_time.has_value());

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    RandomConfig c = random_config(rng, 6);
    const auto k = CommunicationKernel::algebraic_tail(2.0);
    const auto r = direct_cs_reference(c.m, c.x, c.v, k, 1.0, 1e-3, {0.25, 0.5, 1.0});
    const double vmin = *std::min_element(c.v.begin(), c.v.end());
    const double vmax = *std::max_element(c.v.begin(), c.v.end());
    for (const auto& vs : r.v)
      for (double v : vs) {
        CHECK(v >= vmin - 1e-9);
        CHECK(v <= vmax + 1e-9);
      }
  }
  CHECK_THROWS(direct_cs_reference({1.0}, {0.0}, {0.0},
                                   CommunicationKernel::weakly_singular(1.0, 0.5), 1.0, 1e-3, {}));
}

TEST_CASE("oracle equivalence: reduced form vs direct reference") {
  // positions agree up to the first collision and the collision times match
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 5; ++trial) {
    RandomConfig c = random_config(rng, 5);
    const auto k = trial % 2 ? CommunicationKernel::constant(1.0)
                             : CommunicationKernel::algebraic_tail(2.0);
    SimulateOptions opt;
    opt.T = 1.0;
    opt.dt_max = 0.005;
    opt.snapshot_times = {0.1, 0.2};
    const auto tr = simulate(c.m, c.x, c.v, true, k, opt);
    const auto ref = direct_cs_reference(c.m, c.x, c.v, k, 1.0, 2e-5, {0.1, 0.2});

    double t_first_sim = kInf, t_first_ref = kInf;
    for (const auto& ev : tr.events)
      if (ev.t > 0.0) {
        t_first_sim = ev.t;
        break;
      }
    if (ref.first_collision_time) t_first_ref = *ref.first_collision_time;
    if (std::isfinite(t_first_sim) || std::isfinite(t_first_ref))
      CHECK(std::fabs(t_first_sim - t_first_ref) <= 1e-6);

    for (std::size_t s = 0; s < ref.times.size(); ++s) {
      if (ref.times[s] >= std::min(t_first_sim, t_first_ref)) break;
      const Snapshot* snap = nullptr;
      for (const auto& sn : tr.snapshots)
        if (std::fabs(sn.t - ref.times[s]) < 1e-12) snap = &sn;
      REQUIRE(snap != nullptr);
      REQUIRE(snap->state.size() == ref.x[s].size());
      for (std::size_t i = 0; i < ref.x[s].size(); ++i)
        CHECK(snap->state.x[i] == doctest::Approx(ref.x[s][i]).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("simulate input validation") {
  SimulateOptions opt;
  opt.T = 1.0;
  CHECK_THROWS(simulate({0.5, 0.5}, {1.0, -1.0}, {0.0, 0.0}, false,
                        CommunicationKernel::zero(), opt));  // unsorted
  CHECK_THROWS(simulate({0.5, 0.6}, {-1.0, 1.0}, {0.0, 0.0}, false,
                        CommunicationKernel::zero(), opt));  // mass not 1
  CHECK_THROWS(simulate({1.0}, {std::nan("")}, {0.0}, false, CommunicationKernel::zero(), opt));
}
