#include "stickyalign/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stickyalign {

DiscreteMeasure::DiscreteMeasure(std::vector<double> positions, std::vector<double> masses)
    : x(std::move(positions)), m(std::move(masses)) {
  if (x.size() != m.size() || x.empty())
    throw std::invalid_argument("measure needs matching nonempty positions and masses");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !(m[i] > 0.0))
      throw std::invalid_argument("measure atoms must be finite with positive mass");
    if (i > 0 && x[i] < x[i - 1]) throw std::invalid_argument("measure atoms must be sorted");
    total += m[i];
  }
  if (std::fabs(total - 1.0) > 1e-12)
    throw std::invalid_argument("measure mass must be 1 within 1e-12");
}

double DiscreteMeasure::support_radius() const {
  return std::max(std::fabs(x.front()), std::fabs(x.back()));
}

StepCDF::StepCDF(std::vector<double> breakpoints, std::vector<double> values)
    : x_(std::move(breakpoints)), theta_(std::move(values)) {
  if (x_.empty() || theta_.size() != x_.size() + 1)
    throw std::invalid_argument("step cdf needs K breakpoints and K+1 values");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("breakpoints must strictly increase");
  for (std::size_t i = 1; i < theta_.size(); ++i)
    if (!(theta_[i] > theta_[i - 1])) throw std::invalid_argument("values must strictly increase");
  if (std::fabs(theta_.front() + 0.5) > 1e-12 || std::fabs(theta_.back() - 0.5) > 1e-12)
    throw std::invalid_argument("step cdf must run from -1/2 to 1/2");
  theta_.front() = -0.5;
  theta_.back() = 0.5;
}

double StepCDF::value(double x) const {
  // right-continuous: value at x_k is theta_k
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  return theta_[static_cast<std::size_t>(it - x_.begin())];
}

double StepCDF::generalized_inverse(double m) const {
  if (!(m > -0.5) || !(m <= 0.5))
    throw std::domain_error("generalized inverse defined on (-1/2, 1/2]");
  // smallest k >= 1 with theta_k >= m
  const auto it = std::lower_bound(theta_.begin() + 1, theta_.end(), m);
  return x_[static_cast<std::size_t>(it - theta_.begin()) - 1];
}

StepCDF cdf(const DiscreteMeasure& mu) {
  std::vector<double> bp;
  std::vector<double> theta{-0.5};
  double acc = -0.5;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    acc += mu.m[i];
    if (!bp.empty() && mu.x[i] == bp.back()) {
      theta.back() = acc;  // aggregate coincident atoms
    } else {
      bp.push_back(mu.x[i]);
      theta.push_back(acc);
    }
  }
  theta.back() = 0.5;
  return StepCDF(std::move(bp), std::move(theta));
}

double l1_distance(const StepCDF& a, const StepCDF& b) {
  const auto& xa = a.breakpoints();
  const auto& xb = b.breakpoints();
  const auto& va = a.values();
  const auto& vb = b.values();
  double total = 0.0;
  std::size_t i = 0, j = 0;
  double prev = std::min(xa.front(), xb.front());
  // walk the merged grid; both CDFs agree (at -1/2 or +1/2) outside it
  while (i < xa.size() || j < xb.size()) {
    double next;
    if (j == xb.size() || (i < xa.size() && xa[i] <= xb[j]))
      next = xa[i];
    else
      next = xb[j];
    total += std::fabs(va[i] - vb[j]) * (next - prev);
    if (i < xa.size() && xa[i] == next) ++i;
    if (j < xb.size() && xb[j] == next) ++j;
    prev = next;
  }
  return total;
}

double wasserstein1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return l1_distance(cdf(mu), cdf(nu));
}

double conv_phi_M(const DiscreteMeasure& mu, const CommunicationKernel& kernel, double x) {
  double s = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j)
    s += mu.m[j] * kernel.phi_primitive(x - mu.x[j]);
  return s;
}

std::vector<double> conv_phi_M_at(const DiscreteMeasure& mu, const CommunicationKernel& kernel,
                                  const std::vector<double>& query, ExecPolicy policy) {
  std::vector<double> out(query.size());
  convolve_primitive_at(mu.x, mu.m, kernel, query, out, policy);
  return out;
}

}  // namespace stickyalign
