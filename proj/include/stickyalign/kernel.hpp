#pragma once

#include <limits>

namespace stickyalign {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class KernelFamily { Zero, Constant, AlgebraicTail, CompactTent, WeaklySingular };

// Communication protocol phi: nonnegative, even, radially decreasing, locally
// integrable.  A closed enumeration of families, each with an analytic odd
// antiderivative Phi (and its further primitives).  Immutable after
// construction; safe to evaluate concurrently.
class CommunicationKernel {
public:
  static CommunicationKernel zero();
  static CommunicationKernel constant(double c);
  // phi(r) = (1 + r^2)^(-beta/2), beta > 0
  static CommunicationKernel algebraic_tail(double beta);
  // phi(r) = h * (1 - |r|/w) on |r| <= w, zero beyond
  static CommunicationKernel compact_tent(double width, double height);
  // phi(r) = c_s * |r|^(s-1), s in (0,1); integrable singularity at 0
  static CommunicationKernel weakly_singular(double c_s, double s);

  KernelFamily family() const { return family_; }
  double param_a() const { return a_; }  // c | beta | width | c_s
  double param_b() const { return b_; }  // height | s

  // phi(|r|); for WeaklySingular r = 0 is a domain error (use Phi instead).
  double phi(double r) const;

  // Phi(r) = int_0^r phi; odd, nondecreasing, continuous, Phi(0) = 0.
  double phi_primitive(double r) const;

  // Phi2(r) = int_0^r Phi; even.  Phi3(r) = int_0^r Phi2; odd.
  // Used for exact convolutions against piecewise-constant densities.
  double phi_double_primitive(double r) const;
  double phi_triple_primitive(double r) const;

  // inf{ R >= 0 : Phi(R) >= y }; +inf when y exceeds sup Phi.
  double phi_primitive_inverse(double y) const;

  double sup_phi_primitive() const;
  bool fat_tail() const;  // int_1^inf phi = inf
  bool flocking_threshold_holds(double D0, double V0) const;

  bool bounded() const { return family_ != KernelFamily::WeaklySingular; }
  // Lipschitz seminorm of phi on (0, inf); informational.
  double lipschitz_on_positive() const;
  // Exponent s with phi(x) <= c |x|^(s-1) near 0: s for WeaklySingular, 1 otherwise.
  double holder_exponent() const;

private:
  CommunicationKernel(KernelFamily f, double a, double b) : family_(f), a_(a), b_(b) {}

  KernelFamily family_;
  double a_ = 0.0;
  double b_ = 0.0;
};

}  // namespace stickyalign
