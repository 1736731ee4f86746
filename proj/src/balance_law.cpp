#include "stickyalign/balance_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stickyalign/pairwise.hpp"

namespace stickyalign {

StepCDF reconstruct_M(const ClusterState& state) { return cdf(state.measure()); }

double StepFunction::at(double q) const {
  const auto it = std::upper_bound(x.begin(), x.end(), q);
  return v[static_cast<std::size_t>(it - x.begin())];
}

namespace {

// flux breakpoints must match the original mass partition of the state
void check_partition(const ClusterState& state, const PiecewiseLinearFlux& flux) {
  if (state.members.empty() ||
      static_cast<std::size_t>(state.members.back().second + 1) != flux.pieces())
    throw std::invalid_argument("flux partition does not match the state's original particles");
  for (std::size_t k = 0; k < state.size(); ++k) {
    const auto [lo, hi] = state.members[k];
    const double mass = flux.theta()[hi + 1] - flux.theta()[lo];
    if (std::fabs(mass - state.m[k]) > 1e-9)
      throw std::invalid_argument("cluster mass inconsistent with flux partition");
  }
}

}  // namespace

StepFunction reconstruct_Q(const ClusterState& state, const PiecewiseLinearFlux& flux) {
  check_partition(state, flux);
  StepFunction q;
  q.x = state.x;
  q.v.resize(state.size() + 1);
  q.v[0] = flux.value_at_breakpoint(0);  // A_N(-1/2)
  for (std::size_t k = 0; k < state.size(); ++k)
    q.v[k + 1] = q.v[k] + state.m[k] * state.psi[k];
  return q;
}

HydroFields reconstruct_fields(const ClusterState& state, const CommunicationKernel& kernel) {
  HydroFields f{state.measure(), {}};
  const std::vector<double> v = velocity_from_psi(state, kernel);
  f.momentum.resize(state.size());
  for (std::size_t k = 0; k < state.size(); ++k) f.momentum[k] = state.m[k] * v[k];
  return f;
}

double rankine_hugoniot_residual(const ClusterState& state, const PiecewiseLinearFlux& flux,
                                 const CommunicationKernel& kernel, int cluster) {
  check_partition(state, flux);
  const std::vector<double> v = velocity_from_psi(state, kernel);
  const double conv = conv_phi_M(state.measure(), kernel, state.x[cluster]);
  const auto [lo, hi] = state.members[cluster];
  const double jump_A = flux.value_at_breakpoint(hi + 1) - flux.value_at_breakpoint(lo);
  const double jump_M = flux.theta()[hi + 1] - flux.theta()[lo];
  return (v[cluster] + conv) - jump_A / jump_M;
}

double oleinik_margin(const ClusterState& state, const PiecewiseLinearFlux& flux,
                      const CommunicationKernel& kernel, int cluster) {
  check_partition(state, flux);
  const auto [lo, hi] = state.members[cluster];
  if (lo == hi) return kInf;
  const std::vector<double> v = velocity_from_psi(state, kernel);
  const double conv = conv_phi_M(state.measure(), kernel, state.x[cluster]);
  const double speed = v[cluster] + conv;
  const double m_left = flux.theta()[lo];
  const double a_left = flux.value_at_breakpoint(lo);
  double margin = kInf;
  for (int j = lo + 1; j <= hi; ++j) {
    const double chord =
        (flux.value_at_breakpoint(j) - a_left) / (flux.theta()[j] - m_left);
    margin = std::min(margin, chord - speed);
  }
  return margin;
}

std::vector<ShockRecord> verify_state(const ClusterState& state, const PiecewiseLinearFlux& flux,
                                      const CommunicationKernel& kernel) {
  check_partition(state, flux);
  const std::size_t K = state.size();
  std::vector<double> conv(K);
  convolve_primitive_at(state.x, state.m, kernel, state.x, conv, ExecPolicy::Serial);
  std::vector<ShockRecord> records(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto [lo, hi] = state.members[k];
    ShockRecord& r = records[k];
    r.t = state.t;
    r.cluster = static_cast<int>(k);
    r.x = state.x[k];
    r.sigma = state.psi[k] - conv[k];
    r.M_left = flux.theta()[lo];
    r.M_right = flux.theta()[hi + 1];
    r.conv = conv[k];
    const double jump_A = flux.value_at_breakpoint(hi + 1) - flux.value_at_breakpoint(lo);
    r.rh_residual = (r.sigma + r.conv) - jump_A / (r.M_right - r.M_left);
    if (lo == hi) {
      r.oleinik_margin = kInf;
    } else {
      const double speed = r.sigma + r.conv;
      const double a_left = flux.value_at_breakpoint(lo);
      double margin = kInf;
      for (int j = lo + 1; j <= hi; ++j)
        margin = std::min(margin,
                          (flux.value_at_breakpoint(j) - a_left) / (flux.theta()[j] - r.M_left) -
                              speed);
      r.oleinik_margin = margin;
    }
  }
  return records;
}

}  // namespace stickyalign
