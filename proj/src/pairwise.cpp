#include "stickyalign/pairwise.hpp"

#include <cmath>
#include <cstddef>

namespace stickyalign {

namespace {

// PhiAbs must return Phi(r) for r >= 0; oddness is applied via the sign of dx
// so that Phi(-r) == -Phi(r) holds bitwise inside the sums.
template <class PhiAbs>
void conv_loop(std::span<const double> x, std::span<const double> m,
               std::span<const double> q, std::span<double> out, bool parallel,
               PhiAbs phi_abs) {
  const std::ptrdiff_t nq = static_cast<std::ptrdiff_t>(q.size());
  const std::ptrdiff_t na = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (parallel && nq > 1)
  for (std::ptrdiff_t i = 0; i < nq; ++i) {
    const double qi = q[i];
    double s = 0.0;
    for (std::ptrdiff_t j = 0; j < na; ++j) {
      const double dx = qi - x[j];
      const double p = phi_abs(std::fabs(dx));
      s += m[j] * (dx < 0.0 ? -p : p);
    }
    out[i] = s;
  }
}

}  // namespace

void convolve_primitive_at(std::span<const double> x, std::span<const double> m,
                           const CommunicationKernel& kernel,
                           std::span<const double> q, std::span<double> out,
                           ExecPolicy policy) {
  const bool par = policy == ExecPolicy::Parallel;
  const double a = kernel.param_a();
  const double b = kernel.param_b();
  switch (kernel.family()) {
    case KernelFamily::Zero:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.0;
      return;
    case KernelFamily::Constant:
      conv_loop(x, m, q, out, par, [a](double r) { return a * r; });
      return;
    case KernelFamily::AlgebraicTail:
      if (a == 2.0) {
        conv_loop(x, m, q, out, par, [](double r) { return std::atan(r); });
      } else if (a == 1.0) {
        conv_loop(x, m, q, out, par, [](double r) { return std::asinh(r); });
      } else if (a == 3.0) {
        conv_loop(x, m, q, out, par, [](double r) { return r / std::sqrt(1.0 + r * r); });
      } else {
        conv_loop(x, m, q, out, par,
                  [&kernel](double r) { return kernel.phi_primitive(r); });
      }
      return;
    case KernelFamily::CompactTent:
      conv_loop(x, m, q, out, par, [a, b](double r) {
        return r >= a ? 0.5 * b * a : b * (r - r * r / (2.0 * a));
      });
      return;
    case KernelFamily::WeaklySingular:
      if (b == 0.5) {
        const double c2 = 2.0 * a;
        conv_loop(x, m, q, out, par, [c2](double r) { return c2 * std::sqrt(r); });
      } else {
        const double cs = a / b;
        conv_loop(x, m, q, out, par, [cs, b](double r) { return cs * std::pow(r, b); });
      }
      return;
  }
}

void convolve_primitive_at_reference(std::span<const double> x, std::span<const double> m,
                                     const CommunicationKernel& kernel,
                                     std::span<const double> q, std::span<double> out) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      s += m[j] * kernel.phi_primitive(q[i] - x[j]);
    }
    out[i] = s;
  }
}

}  // namespace stickyalign
