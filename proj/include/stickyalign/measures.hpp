#pragma once

#include <utility>
#include <vector>

#include "stickyalign/kernel.hpp"
#include "stickyalign/pairwise.hpp"

namespace stickyalign {

// Atomic probability measure.  Atoms sorted by position; coincident positions
// are allowed (they arise from merged clusters and from t=0 data), masses are
// strictly positive and sum to 1 within 1e-12.
struct DiscreteMeasure {
  std::vector<double> x;
  std::vector<double> m;

  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<double> positions, std::vector<double> masses);

  std::size_t size() const { return x.size(); }
  double support_radius() const;  // max |x_i|
};

// Piecewise-constant, right-continuous, nondecreasing CDF shifted by -1/2:
// value theta_k on [x_k, x_{k+1}), theta_0 = -1/2 left of x_1, +1/2 at and
// right of x_K.  Jumps are strictly positive.
class StepCDF {
public:
  StepCDF(std::vector<double> breakpoints, std::vector<double> values);

  double value(double x) const;
  // inf{ x : M(x) >= m } for m in (-1/2, 1/2]; domain error outside.
  double generalized_inverse(double m) const;

  const std::vector<double>& breakpoints() const { return x_; }
  const std::vector<double>& values() const { return theta_; }

private:
  std::vector<double> x_;      // size K, strictly increasing
  std::vector<double> theta_;  // size K+1, strictly increasing, -1/2 .. +1/2
};

StepCDF cdf(const DiscreteMeasure& mu);

// Exact L1 distance between two step CDFs (merged breakpoint grid).
double l1_distance(const StepCDF& a, const StepCDF& b);

// W1(mu, nu) = ||M - N||_L1 on the line.
double wasserstein1(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// (phi * M)(x) = (Phi * rho)(x) = sum_j m_j Phi(x - x_j), exact atom sum.
double conv_phi_M(const DiscreteMeasure& mu, const CommunicationKernel& kernel, double x);

// Batched variant used by verification loops.
std::vector<double> conv_phi_M_at(const DiscreteMeasure& mu, const CommunicationKernel& kernel,
                                  const std::vector<double>& query,
                                  ExecPolicy policy = ExecPolicy::Serial);

}  // namespace stickyalign
