#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stickyalign/kernel.hpp"
#include "stickyalign/measures.hpp"

namespace stickyalign {

// Continuum CDF M0 for densities with piecewise-constant Lebesgue part:
// continuous, piecewise linear between knots, from -1/2 to +1/2.  Flat runs
// are vacuum.  Also the normalized form of tabulated cdf_samples input.
class PiecewiseLinearCDF {
public:
  PiecewiseLinearCDF(std::vector<double> knots_x, std::vector<double> knots_m);

  double value(double x) const;
  // left-continuous generalized inverse inf{x : M(x) >= m}, m in (-1/2, 1/2]
  double inverse(double m) const;
  // inf{x : M(x) > m}, m in [-1/2, 1/2); right edge of the flat run at level m
  double inverse_right(double m) const;

  double support_left() const { return xl_; }
  double support_right() const { return xr_; }
  double diameter() const { return xr_ - xl_; }

  const std::vector<double>& knots_x() const { return x_; }
  const std::vector<double>& knots_m() const { return m_; }

  // Exact integral of |M0 - S| for a step CDF S.
  double l1_distance_to(const StepCDF& s) const;

private:
  std::vector<double> x_;
  std::vector<double> m_;
  double xl_ = 0.0, xr_ = 0.0;
};

struct VelocitySpec {
  enum class Type { PerAtom, Constant, Linear, Sinusoid };
  Type type = Type::Constant;
  std::vector<double> per_atom;  // one value per density atom
  double c0 = 0.0;               // Constant: value; Linear: intercept
  double c1 = 0.0;               // Linear: slope
  double amplitude = 0.0, frequency = 0.0, phase = 0.0;  // A sin(2 pi f x + p)

  double eval(double x) const;
  // exact int_a^b u0(x) dx for the functional forms
  double integral(double a, double b) const;
};

// Initial data (rho0, u0): density either atomic or continuum
// piecewise-constant; velocity a functional form or per-atom values.
struct InitialData {
  std::optional<DiscreteMeasure> atoms;          // exactly one of these two
  std::optional<PiecewiseLinearCDF> continuum;   // is set
  VelocitySpec velocity;
  double holder_beta = 1.0;

  bool atomic() const { return atoms.has_value(); }
  double support_diameter() const;
  double support_radius() const;
};

// Output of the vacuum-aware quantile construction: nodes x_i, masses m_i,
// and companions x*_i with 0 < x_i - x*_i <= D0/N (continuum case).
struct Discretization {
  std::vector<double> nodes;
  std::vector<double> masses;
  std::vector<double> companions;
  double l1_cdf_gap = 0.0;        // ||M0 - M0_N||_L1, exact
  double linf_inverse_gap = 0.0;  // ||(M0)^-1 - (M0_N)^-1||_inf, exact
};

Discretization discretize_density(const InitialData& data, int N);

// Flux A_N: continuous piecewise linear on [-1/2,1/2], breakpoints theta_i,
// slope psi_i on (theta_{i-1}, theta_i), A(-1/2) = 0.
class PiecewiseLinearFlux {
public:
  PiecewiseLinearFlux(std::vector<double> masses, std::vector<double> slopes);

  double eval(double m) const;
  double lipschitz() const;
  std::size_t pieces() const { return slopes_.size(); }
  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& slopes() const { return slopes_; }
  // A(theta_i) from stored prefix sums (exact breakpoint values)
  double value_at_breakpoint(std::size_t i) const { return values_[i]; }

private:
  std::vector<double> theta_;   // size N+1
  std::vector<double> slopes_;  // size N
  std::vector<double> values_;  // size N+1
};

// Exact Lipschitz seminorm of A - A~ over the common breakpoint refinement.
double flux_lipschitz_gap(const PiecewiseLinearFlux& a, const PiecewiseLinearFlux& b);

enum class FluxMode { Sample, Average };

// psi0(x) = u0(x) + (Phi * rho0)(x), with the convolution in closed form.
double psi0_eval(const InitialData& data, const CommunicationKernel& kernel, double x);

// Quantile function a(m) = psi0((M0)^-1(m)) and its exact integral; the flux
// A(m) = int_{-1/2}^m a.
double quantile_a(const InitialData& data, const CommunicationKernel& kernel, double m);
double quantile_a_integral(const InitialData& data, const CommunicationKernel& kernel,
                           double m0, double m1);

// Slopes psi_i: Sample evaluates psi0 at the nodes, Average uses the
// mass-averaged flux increment (1/m_i) int a dm over (theta_{i-1}, theta_i].
PiecewiseLinearFlux discretize_flux(const InitialData& data, const CommunicationKernel& kernel,
                                    const Discretization& disc, FluxMode mode);

// v_i = psi_i - sum_j m_j Phi(x_i - x_j)
std::vector<double> initial_velocities(const PiecewiseLinearFlux& flux,
                                       const std::vector<double>& nodes,
                                       const std::vector<double>& masses,
                                       const CommunicationKernel& kernel);

// Discretize + flux + velocities in one step; the common entry point for the
// CLI and the studies.
struct DiscretizedProblem {
  Discretization disc;
  PiecewiseLinearFlux flux;
  std::vector<double> v0;
};

DiscretizedProblem discretize_problem(const InitialData& data, const CommunicationKernel& kernel,
                                      int N, FluxMode mode);

}  // namespace stickyalign
