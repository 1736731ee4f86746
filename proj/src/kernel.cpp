#include "stickyalign/kernel.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <stdexcept>

namespace stickyalign {

namespace {

bool is_integer(double x) { return x == std::nearbyint(x) && std::fabs(x) < 1e9; }

// I(kappa, r) = int_0^r (1+y^2)^(-kappa/2) dy for r >= 0, any real kappa.
// Integer kappa reduces to elementary functions; non-integer kappa > 1 is an
// incomplete beta (substitute u = y^2/(1+y^2)); kappa < 1 is raised by the
// two-step index relation until the beta representation applies.
double alg_I(double kappa, double r) {
  if (r == 0.0) return 0.0;
  if (kappa == 0.0) return r;
  if (kappa == 1.0) return std::asinh(r);
  if (kappa == 2.0) return std::atan(r);
  if (kappa == 3.0) return r / std::sqrt(1.0 + r * r);
  if (is_integer(kappa)) {
    if (kappa > 3.0) {
      // I_k = [ r (1+r^2)^(-(k-2)/2) + (k-3) I_{k-2} ] / (k-2)
      return (r * std::pow(1.0 + r * r, -0.5 * (kappa - 2.0)) +
              (kappa - 3.0) * alg_I(kappa - 2.0, r)) /
             (kappa - 2.0);
    }
    // kappa <= -1: raise by two.  I_k = [ k I_{k+2} - r (1+r^2)^(-k/2) ] / (k-1)
    return (kappa * alg_I(kappa + 2.0, r) - r * std::pow(1.0 + r * r, -0.5 * kappa)) /
           (kappa - 1.0);
  }
  if (kappa > 1.0) {
    const double u = r * r / (1.0 + r * r);
    return 0.5 * boost::math::beta(0.5, 0.5 * (kappa - 1.0), u);
  }
  return (kappa * alg_I(kappa + 2.0, r) - r * std::pow(1.0 + r * r, -0.5 * kappa)) /
         (kappa - 1.0);
}

}  // namespace

CommunicationKernel CommunicationKernel::zero() {
  return {KernelFamily::Zero, 0.0, 0.0};
}

CommunicationKernel CommunicationKernel::constant(double c) {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw std::invalid_argument("constant kernel requires c >= 0");
  return {KernelFamily::Constant, c, 0.0};
}

CommunicationKernel CommunicationKernel::algebraic_tail(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("algebraic tail kernel requires beta > 0");
  return {KernelFamily::AlgebraicTail, beta, 0.0};
}

CommunicationKernel CommunicationKernel::compact_tent(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0))
    throw std::invalid_argument("compact tent kernel requires positive width and height");
  return {KernelFamily::CompactTent, width, height};
}

CommunicationKernel CommunicationKernel::weakly_singular(double c_s, double s) {
  if (!(c_s > 0.0) || !(s > 0.0) || !(s < 1.0))
    throw std::invalid_argument("weakly singular kernel requires c_s > 0 and s in (0,1)");
  return {KernelFamily::WeaklySingular, c_s, s};
}

double CommunicationKernel::phi(double r) const {
  r = std::fabs(r);
  switch (family_) {
    case KernelFamily::Zero:
      return 0.0;
    case KernelFamily::Constant:
      return a_;
    case KernelFamily::AlgebraicTail:
      return std::pow(1.0 + r * r, -0.5 * a_);
    case KernelFamily::CompactTent:
      return r >= a_ ? 0.0 : b_ * (1.0 - r / a_);
    case KernelFamily::WeaklySingular:
      if (r == 0.0)
        throw std::domain_error("weakly singular phi undefined at r = 0; use phi_primitive");
      return a_ * std::pow(r, b_ - 1.0);
  }
  return 0.0;
}

double CommunicationKernel::phi_primitive(double r) const {
  const double ar = std::fabs(r);
  double v = 0.0;
  switch (family_) {
    case KernelFamily::Zero:
      return 0.0;
    case KernelFamily::Constant:
      return a_ * r;
    case KernelFamily::AlgebraicTail:
      v = alg_I(a_, ar);
      break;
    case KernelFamily::CompactTent:
      v = ar >= a_ ? 0.5 * b_ * a_ : b_ * (ar - ar * ar / (2.0 * a_));
      break;
    case KernelFamily::WeaklySingular:
      v = (a_ / b_) * std::pow(ar, b_);
      break;
  }
  return r < 0.0 ? -v : v;
}

// J1 = int_0^R r phi(r) dr and J2 = int_0^R r^2 phi(r) dr, elementary per family.
namespace {

double moment1(KernelFamily f, double a, double b, double R) {
  switch (f) {
    case KernelFamily::Zero:
      return 0.0;
    case KernelFamily::Constant:
      return 0.5 * a * R * R;
    case KernelFamily::AlgebraicTail:
      if (a == 2.0) return 0.5 * std::log1p(R * R);
      return (std::pow(1.0 + R * R, 0.5 * (2.0 - a)) - 1.0) / (2.0 - a);
    case KernelFamily::CompactTent: {
      const double r = std::min(R, a);
      return b * (r * r / 2.0 - r * r * r / (3.0 * a));
    }
    case KernelFamily::WeaklySingular:
      return a * std::pow(R, b + 1.0) / (b + 1.0);
  }
  return 0.0;
}

double moment2(KernelFamily f, double a, double b, double R) {
  switch (f) {
    case KernelFamily::Zero:
      return 0.0;
    case KernelFamily::Constant:
      return a * R * R * R / 3.0;
    case KernelFamily::AlgebraicTail:
      // int r^2 (1+r^2)^(-a/2) = I_{a-2} - I_a
      return alg_I(a - 2.0, R) - alg_I(a, R);
    case KernelFamily::CompactTent: {
      const double r = std::min(R, a);
      return b * (r * r * r / 3.0 - r * r * r * r / (4.0 * a));
    }
    case KernelFamily::WeaklySingular:
      return a * std::pow(R, b + 2.0) / (b + 2.0);
  }
  return 0.0;
}

}  // namespace

double CommunicationKernel::phi_double_primitive(double r) const {
  const double R = std::fabs(r);
  // int_0^R Phi = R Phi(R) - int_0^R r phi(r) dr
  return R * phi_primitive(R) - moment1(family_, a_, b_, R);
}

double CommunicationKernel::phi_triple_primitive(double r) const {
  const double R = std::fabs(r);
  const double v = R * phi_double_primitive(R) - 0.5 * R * R * phi_primitive(R) +
                   0.5 * moment2(family_, a_, b_, R);
  return r < 0.0 ? -v : v;
}

double CommunicationKernel::sup_phi_primitive() const {
  switch (family_) {
    case KernelFamily::Zero:
      return 0.0;
    case KernelFamily::Constant:
      return a_ > 0.0 ? kInf : 0.0;
    case KernelFamily::AlgebraicTail:
      if (a_ <= 1.0) return kInf;
      // int_0^inf (1+r^2)^(-beta/2) = B(1/2, (beta-1)/2) / 2
      return 0.5 * std::beta(0.5, 0.5 * (a_ - 1.0));
    case KernelFamily::CompactTent:
      return 0.5 * a_ * b_;
    case KernelFamily::WeaklySingular:
      return kInf;
  }
  return 0.0;
}

bool CommunicationKernel::fat_tail() const {
  switch (family_) {
    case KernelFamily::Zero:
      return false;
    case KernelFamily::Constant:
      return a_ > 0.0;
    case KernelFamily::AlgebraicTail:
      return a_ <= 1.0;
    case KernelFamily::CompactTent:
      return false;
    case KernelFamily::WeaklySingular:
      return true;
  }
  return false;
}

double CommunicationKernel::phi_primitive_inverse(double y) const {
  if (!(y >= 0.0)) throw std::domain_error("phi_primitive_inverse requires y >= 0");
  if (y == 0.0) return 0.0;
  switch (family_) {
    case KernelFamily::Zero:
      return kInf;
    case KernelFamily::Constant:
      return a_ > 0.0 ? y / a_ : kInf;
    case KernelFamily::CompactTent: {
      const double cap = 0.5 * a_ * b_;
      if (y > cap) return kInf;
      if (y == cap) return a_;  // Phi attains its sup at the tent edge
      return a_ - std::sqrt(a_ * a_ - 2.0 * a_ * y / b_);
    }
    case KernelFamily::WeaklySingular:
      return std::pow(b_ * y / a_, 1.0 / b_);
    case KernelFamily::AlgebraicTail: {
      if (a_ == 1.0) return std::sinh(y);
      if (a_ == 2.0) return y < M_PI_2 ? std::tan(y) : kInf;
      if (a_ == 3.0) return y < 1.0 ? y / std::sqrt(1.0 - y * y) : kInf;
      const double sup = sup_phi_primitive();
      if (y >= sup) return kInf;  // strictly increasing, sup not attained
      // monotone bisection, relative tolerance 1e-12
      double hi = 1.0;
      while (phi_primitive(hi) < y) {
        hi *= 2.0;
        if (hi > 1e300) return kInf;
      }
      double lo = 0.0;
      while (hi - lo > 1e-12 * (1.0 + hi)) {
        const double mid = 0.5 * (lo + hi);
        (phi_primitive(mid) >= y ? hi : lo) = mid;
      }
      return hi;
    }
  }
  return kInf;
}

bool CommunicationKernel::flocking_threshold_holds(double D0, double V0) const {
  const double sup = sup_phi_primitive();
  if (sup == kInf) return true;
  return sup > phi_primitive(std::fabs(D0)) + V0;
}

double CommunicationKernel::lipschitz_on_positive() const {
  switch (family_) {
    case KernelFamily::Zero:
    case KernelFamily::Constant:
      return 0.0;
    case KernelFamily::AlgebraicTail: {
      // |phi'| = beta r (1+r^2)^(-beta/2-1), maximized at r = 1/sqrt(beta+1)
      const double r = 1.0 / std::sqrt(a_ + 1.0);
      return a_ * r * std::pow(1.0 + r * r, -0.5 * a_ - 1.0);
    }
    case KernelFamily::CompactTent:
      return b_ / a_;
    case KernelFamily::WeaklySingular:
      return kInf;
  }
  return 0.0;
}

double CommunicationKernel::holder_exponent() const {
  return family_ == KernelFamily::WeaklySingular ? b_ : 1.0;
}

}  // namespace stickyalign
