#pragma once

#include <vector>

#include "stickyalign/dynamics.hpp"
#include "stickyalign/initial_data.hpp"

namespace stickyalign {

// Shock data at one cluster of the reconstructed solution M_N.
struct ShockRecord {
  double t = 0.0;
  int cluster = 0;
  double x = 0.0;
  double sigma = 0.0;   // shock speed = cluster velocity
  double M_left = 0.0;  // theta_{i_*-1}
  double M_right = 0.0; // theta_{i^*}
  double conv = 0.0;    // (phi*M_N)(x)
  double rh_residual = 0.0;
  double oleinik_margin = 0.0;
};

// M_N(x,t) = -1/2 + sum m_k H(x - x_k)
StepCDF reconstruct_M(const ClusterState& state);

// Right-continuous step function with K breakpoints and K+1 values.
struct StepFunction {
  std::vector<double> x;
  std::vector<double> v;
  double at(double q) const;
};

// A_N(-1/2) + sum m_k psi_k(t) H(x - x_k); equals A_N(M_N(x)) pointwise.
StepFunction reconstruct_Q(const ClusterState& state, const PiecewiseLinearFlux& flux);

// rho_N = sum m_k delta(x - x_k); P_N carries atom weights m_k v_k.
struct HydroFields {
  DiscreteMeasure rho;
  std::vector<double> momentum;
};
HydroFields reconstruct_fields(const ClusterState& state, const CommunicationKernel& kernel);

// (v_k + (phi*M_N)(x_k)) - [[A_N(M_N)]]/[[M_N]] across the shock at cluster k.
double rankine_hugoniot_residual(const ClusterState& state, const PiecewiseLinearFlux& flux,
                                 const CommunicationKernel& kernel, int cluster);

// min over interior breakpoints of the Oleinik chord inequality slack;
// +inf for single-member clusters.  Entropy requires a nonnegative margin.
double oleinik_margin(const ClusterState& state, const PiecewiseLinearFlux& flux,
                      const CommunicationKernel& kernel, int cluster);

// RH residual and Oleinik margin for every cluster of a state.
std::vector<ShockRecord> verify_state(const ClusterState& state, const PiecewiseLinearFlux& flux,
                                      const CommunicationKernel& kernel);

}  // namespace stickyalign
