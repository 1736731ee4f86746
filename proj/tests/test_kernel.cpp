#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stickyalign/kernel.hpp"

using namespace stickyalign;

namespace {

// test-only quadrature oracle for Phi = int_0^r phi; integrand smooth away
// from 0, so composite Simpson on a fine grid is an independent check
double simpson_phi_primitive(const CommunicationKernel& k, double r, int n = 20000) {
  if (r == 0.0) return 0.0;
  const double sign = r < 0.0 ? -1.0 : 1.0;
  r = std::fabs(r);
  if (k.family() == KernelFamily::WeaklySingular) {
    const double s = k.param_b();
    const double cs = k.param_a();
    // int_0^r cs y^(s-1) dy = (cs/s) r^s exactly after substituting u = y^s
    return sign * (cs / s) * std::pow(r, s);
  }
  const double h = r / n;
  double acc = k.phi(0.0) + k.phi(r);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * k.phi(i * h);
  return sign * acc * h / 3.0;
}

std::vector<CommunicationKernel> bounded_families() {
  return {CommunicationKernel::zero(),
          CommunicationKernel::constant(1.0),
          CommunicationKernel::constant(0.3),
          CommunicationKernel::algebraic_tail(1.0),
          CommunicationKernel::algebraic_tail(2.0),
          CommunicationKernel::algebraic_tail(3.0),
          CommunicationKernel::algebraic_tail(5.0),
          CommunicationKernel::algebraic_tail(0.7),
          CommunicationKernel::algebraic_tail(2.6),
          CommunicationKernel::compact_tent(1.0, 1.0),
          CommunicationKernel::compact_tent(2.5, 0.4)};
}

std::vector<CommunicationKernel> all_families() {
  auto ks = bounded_families();
  ks.push_back(CommunicationKernel::weakly_singular(1.0, 0.5));
  ks.push_back(CommunicationKernel::weakly_singular(0.8, 0.25));
  return ks;
}

}  // namespace

TEST_CASE("phi point values") {
  CHECK(CommunicationKernel::constant(1.0).phi(3.5) == 1.0);
  CHECK(CommunicationKernel::weakly_singular(1.0, 0.5).phi(4.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(CommunicationKernel::algebraic_tail(2.0).phi(1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(CommunicationKernel::weakly_singular(1.0, 0.5).phi(0.0), std::domain_error);
}

TEST_CASE("phi primitive closed forms") {
  CHECK(CommunicationKernel::constant(1.0).phi_primitive(2.0) == 2.0);
  // 2 sqrt(4) by symbolic integration of |r|^(-1/2)
  CHECK(CommunicationKernel::weakly_singular(1.0, 0.5).phi_primitive(4.0) ==
        doctest::Approx(4.0).epsilon(1e-14));
  CHECK(CommunicationKernel::algebraic_tail(1.0).phi_primitive(1.0) ==
        doctest::Approx(std::asinh(1.0)).epsilon(1e-14));
  for (const auto& k : all_families()) CHECK(k.phi_primitive(0.0) == 0.0);
}

TEST_CASE("phi primitive vs quadrature oracle") {
  for (const auto& k : all_families()) {
    for (double r : {0.1, 0.5, 1.0, 2.0, 7.3}) {
      const double got = k.phi_primitive(r);
      const double want = simpson_phi_primitive(k, r);
      // the oracle itself carries Simpson error near the tent kink
      CHECK(got == doctest::Approx(want).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("second and third primitives vs quadrature of the first") {
  // Phi2' = Phi and Phi3' = Phi2, checked by Simpson on the analytic Phi
  for (const auto& k : all_families()) {
    for (double r : {0.4, 1.7, 3.0}) {
      const int n = 4000;
      const double h = r / n;
      double acc2 = k.phi_primitive(0.0) + k.phi_primitive(r);
      double acc3 = k.phi_double_primitive(0.0) + k.phi_double_primitive(r);
      for (int i = 1; i < n; ++i) {
        acc2 += (i % 2 ? 4.0 : 2.0) * k.phi_primitive(i * h);
        acc3 += (i % 2 ? 4.0 : 2.0) * k.phi_double_primitive(i * h);
      }
      // Simpson degrades to O(h^1.5) at the sqrt-type singularity of Phi
      const double tol = k.family() == KernelFamily::WeaklySingular ? 1e-4 : 1e-8;
      CHECK(k.phi_double_primitive(r) ==
            doctest::Approx(acc2 * h / 3.0).epsilon(tol).scale(1.0));
      CHECK(k.phi_triple_primitive(r) ==
            doctest::Approx(acc3 * h / 3.0).epsilon(tol).scale(1.0));
    }
  }
}

TEST_CASE("oddness, evenness and monotonicity on random grids") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(-8.0, 8.0);
  for (const auto& k : all_families()) {
    double prev_r = 0.0, prev_v = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double r = U(rng);
      CHECK(k.phi_primitive(-r) == -k.phi_primitive(r));
      CHECK(std::fabs(k.phi_primitive(r)) == k.phi_primitive(std::fabs(r)));
      CHECK(k.phi_double_primitive(-r) == k.phi_double_primitive(r));
      CHECK(k.phi_triple_primitive(-r) == -k.phi_triple_primitive(r));
      const double ar = std::fabs(r);
      const double v = k.phi_primitive(ar);
      if (ar >= prev_r) CHECK(v >= prev_v - 1e-15);
      prev_r = ar;
      prev_v = v;
    }
  }
}

TEST_CASE("finite difference consistency of Phi with phi") {
  // (Phi(r+h) - Phi(r))/h -> phi(r) with O(h) error at continuity points
  for (const auto& k : bounded_families()) {
    for (double r : {0.3, 1.1, 2.2}) {
      double err_prev = kInf;
      for (double h : {1e-4, 1e-5}) {
        const double fd = (k.phi_primitive(r + h) - k.phi_primitive(r)) / h;
        const double err = std::fabs(fd - k.phi(r));
        CHECK(err <= 5.0 * h + 1e-12);
        CHECK(err <= err_prev + 1e-9);
        err_prev = err;
      }
    }
  }
}

TEST_CASE("primitive inverse") {
  CHECK(CommunicationKernel::constant(1.0).phi_primitive_inverse(4.0) ==
        doctest::Approx(4.0).epsilon(1e-14));
  CHECK(CommunicationKernel::zero().phi_primitive_inverse(0.1) == kInf);
  for (const auto& k : all_families()) CHECK(k.phi_primitive_inverse(0.0) == 0.0);

  // right-inverse property: Phi(Phi^{-1}(y)) >= y - 1e-10 when finite
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 3.0);
  for (const auto& k : all_families()) {
    for (int i = 0; i < 100; ++i) {
      const double y = U(rng);
      const double r = k.phi_primitive_inverse(y);
      if (std::isfinite(r)) CHECK(k.phi_primitive(r) >= y - 1e-10);
    }
  }
  // tent saturates: sup attained exactly at the edge
  const auto tent = CommunicationKernel::compact_tent(1.0, 1.0);
  CHECK(tent.phi_primitive_inverse(0.5) == doctest::Approx(1.0));
  CHECK(tent.phi_primitive_inverse(0.6) == kInf);
}

TEST_CASE("flocking threshold") {
  CHECK(CommunicationKernel::constant(1.0).flocking_threshold_holds(2.0, 2.0));
  CHECK_FALSE(CommunicationKernel::zero().flocking_threshold_holds(1.0, 1.0));
  // tent with sup Phi = 1/2: Phi(0.5) = 0.375 and 0.375 + 0.4 > 0.5
  const auto tent = CommunicationKernel::compact_tent(1.0, 1.0);
  CHECK(tent.phi_primitive(0.5) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK_FALSE(tent.flocking_threshold_holds(0.5, 0.4));
  CHECK(tent.flocking_threshold_holds(0.1, 0.05));
  // fat tails always hold
  CHECK(CommunicationKernel::weakly_singular(1.0, 0.5).flocking_threshold_holds(100.0, 100.0));
  CHECK(CommunicationKernel::algebraic_tail(1.0).flocking_threshold_holds(50.0, 50.0));
  CHECK_FALSE(CommunicationKernel::algebraic_tail(3.0).fat_tail());
  CHECK(CommunicationKernel::algebraic_tail(0.8).fat_tail());
}

TEST_CASE("invalid parameters rejected") {
  CHECK_THROWS(CommunicationKernel::weakly_singular(1.0, 1.0));
  CHECK_THROWS(CommunicationKernel::weakly_singular(-1.0, 0.5));
  CHECK_THROWS(CommunicationKernel::algebraic_tail(0.0));
  CHECK_THROWS(CommunicationKernel::compact_tent(0.0, 1.0));
}
