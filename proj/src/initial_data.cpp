#include "stickyalign/initial_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace stickyalign {

PiecewiseLinearCDF::PiecewiseLinearCDF(std::vector<double> knots_x, std::vector<double> knots_m)
    : x_(std::move(knots_x)), m_(std::move(knots_m)) {
  if (x_.size() != m_.size() || x_.size() < 2)
    throw std::invalid_argument("cdf needs at least two knots");
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!std::isfinite(x_[i]) || !std::isfinite(m_[i]))
      throw std::invalid_argument("cdf knots must be finite");
    if (i > 0 && !(x_[i] > x_[i - 1]))
      throw std::invalid_argument("cdf knots must strictly increase in x");
    if (i > 0 && m_[i] < m_[i - 1]) throw std::invalid_argument("cdf must be nondecreasing");
  }
  if (std::fabs(m_.front() + 0.5) > 1e-9 || std::fabs(m_.back() - 0.5) > 1e-9)
    throw std::invalid_argument("cdf must run from -1/2 to 1/2");
  m_.front() = -0.5;
  m_.back() = 0.5;
  std::size_t l = 0;
  while (m_[l + 1] == -0.5) ++l;
  std::size_t r = x_.size() - 1;
  while (m_[r - 1] == 0.5) --r;
  xl_ = x_[l];
  xr_ = x_[r];
  if (!(xr_ > xl_)) throw std::invalid_argument("cdf carries no mass");
}

double PiecewiseLinearCDF::value(double x) const {
  if (x <= x_.front()) return -0.5;
  if (x >= x_.back()) return 0.5;
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - x_.begin());
  const double t = (x - x_[k - 1]) / (x_[k] - x_[k - 1]);
  return m_[k - 1] + t * (m_[k] - m_[k - 1]);
}

double PiecewiseLinearCDF::inverse(double m) const {
  if (!(m > -0.5) || !(m <= 0.5))
    throw std::domain_error("generalized inverse defined on (-1/2, 1/2]");
  const auto it = std::lower_bound(m_.begin(), m_.end(), m);
  const std::size_t k = static_cast<std::size_t>(it - m_.begin());
  if (m_[k] == m) {
    // first knot at this level; the rise into it may start earlier
    std::size_t j = k;
    while (j > 0 && m_[j - 1] == m) --j;
    if (j == 0 || m_[j] > m) return x_[j];
    // interpolate inside the rising segment ending at knot j
    const double t = (m - m_[j - 1]) / (m_[j] - m_[j - 1]);
    return x_[j - 1] + t * (x_[j] - x_[j - 1]);
  }
  const double t = (m - m_[k - 1]) / (m_[k] - m_[k - 1]);
  return x_[k - 1] + t * (x_[k] - x_[k - 1]);
}

double PiecewiseLinearCDF::inverse_right(double m) const {
  if (!(m >= -0.5) || !(m < 0.5))
    throw std::domain_error("inverse_right defined on [-1/2, 1/2)");
  const auto it = std::upper_bound(m_.begin(), m_.end(), m);
  const std::size_t k = static_cast<std::size_t>(it - m_.begin());  // first knot > m
  if (m_[k - 1] == m) return x_[k - 1];
  const double t = (m - m_[k - 1]) / (m_[k] - m_[k - 1]);
  return x_[k - 1] + t * (x_[k] - x_[k - 1]);
}

double PiecewiseLinearCDF::l1_distance_to(const StepCDF& s) const {
  std::vector<double> grid;
  grid.reserve(x_.size() + s.breakpoints().size());
  grid.insert(grid.end(), x_.begin(), x_.end());
  grid.insert(grid.end(), s.breakpoints().begin(), s.breakpoints().end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double total = 0.0;
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    const double p = grid[g], q = grid[g + 1];
    const double c = s.value(p);  // constant on [p, q)
    const double d1 = value(p) - c;
    const double d2 = value(q) - c;
    if (d1 * d2 >= 0.0) {
      total += 0.5 * (std::fabs(d1) + std::fabs(d2)) * (q - p);
    } else {
      total += 0.5 * (q - p) * (d1 * d1 + d2 * d2) / std::fabs(d1 - d2);
    }
  }
  return total;
}

double VelocitySpec::eval(double x) const {
  switch (type) {
    case Type::Constant:
      return c0;
    case Type::Linear:
      return c1 * x + c0;
    case Type::Sinusoid:
      return amplitude * std::sin(2.0 * M_PI * frequency * x + phase);
    case Type::PerAtom:
      throw std::logic_error("per-atom velocities have no pointwise functional form");
  }
  return 0.0;
}

double VelocitySpec::integral(double a, double b) const {
  switch (type) {
    case Type::Constant:
      return c0 * (b - a);
    case Type::Linear:
      return 0.5 * c1 * (b * b - a * a) + c0 * (b - a);
    case Type::Sinusoid: {
      const double w = 2.0 * M_PI * frequency;
      if (w == 0.0) return 0.0;
      return -(amplitude / w) * (std::cos(w * b + phase) - std::cos(w * a + phase));
    }
    case Type::PerAtom:
      throw std::logic_error("per-atom velocities cannot be integrated in x");
  }
  return 0.0;
}

double InitialData::support_diameter() const {
  if (atomic()) return atoms->x.back() - atoms->x.front();
  return continuum->diameter();
}

double InitialData::support_radius() const {
  if (atomic()) return atoms->support_radius();
  return std::max(std::fabs(continuum->support_left()), std::fabs(continuum->support_right()));
}

namespace {

double linf_inverse_gap_steps(const StepCDF& a, const StepCDF& b) {
  std::vector<double> levels;
  levels.insert(levels.end(), a.values().begin() + 1, a.values().end());
  levels.insert(levels.end(), b.values().begin() + 1, b.values().end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  double sup = 0.0;
  for (double lv : levels)
    sup = std::max(sup, std::fabs(a.generalized_inverse(lv) - b.generalized_inverse(lv)));
  return sup;
}

Discretization discretize_atomic(const DiscreteMeasure& mu, int N) {
  Discretization d;
  if (static_cast<std::size_t>(N) >= mu.size()) {
    // exact representation, particle-level (coincident positions retained)
    d.nodes = mu.x;
    d.masses = mu.m;
    d.companions = mu.x;
    return d;
  }
  // plain quantile rule with equal masses 1/N
  const StepCDF M = cdf(mu);
  for (int i = 1; i <= N; ++i) {
    const double theta = -0.5 + static_cast<double>(i) / N;
    d.nodes.push_back(M.generalized_inverse(theta));
    d.masses.push_back(1.0 / N);
    d.companions.push_back(d.nodes.back());
  }
  const StepCDF MN = cdf(DiscreteMeasure(d.nodes, d.masses));
  d.l1_cdf_gap = l1_distance(M, MN);
  d.linf_inverse_gap = linf_inverse_gap_steps(M, MN);
  return d;
}

Discretization discretize_continuum(const PiecewiseLinearCDF& M, int N) {
  const double xl = M.support_left();
  const double xr = M.support_right();
  const double D = M.diameter();
  const auto& kx = M.knots_x();
  const auto& km = M.knots_m();

  // large internal vacuum intervals: maximal flat runs longer than D/N
  std::vector<std::pair<double, double>> vac;
  {
    std::size_t i = 0;
    while (i + 1 < kx.size()) {
      if (km[i + 1] == km[i] && kx[i] >= xl && kx[i] < xr) {
        std::size_t j = i;
        while (j + 1 < kx.size() && km[j + 1] == km[j]) ++j;
        const double a = kx[i], b = std::min(kx[j], xr);
        if (a > xl && b < xr && b - a > D / N) vac.emplace_back(a, b);
        i = j;
      } else {
        ++i;
      }
    }
  }
  const int K = static_cast<int>(vac.size());

  // complement blocks [s_i, e_i] and their collapsed start offsets
  std::vector<double> bs, be, bc;  // block start, end, collapsed start
  {
    double cur = xl, off = 0.0;
    for (const auto& [a, b] : vac) {
      bs.push_back(cur);
      be.push_back(a);
      bc.push_back(off);
      off += a - cur;
      cur = b;
    }
    bs.push_back(cur);
    be.push_back(xr);
    bc.push_back(off);
  }
  const double L = bc.back() + (be.back() - bs.back());

  // collapsed images of the vacuum left endpoints (set S^1)
  std::vector<double> vac_img;
  for (std::size_t k = 0; k < vac.size(); ++k) vac_img.push_back(bc[k] + (vac[k].first - bs[k]));

  // equally spaced base nodes in [0, L]; perturb any node colliding with an
  // image of S^1 rightward by a quarter of the smaller adjacent gap
  const int nb = N - K;
  const double spacing = L / nb;
  std::vector<double> u(nb);
  for (int i = 0; i < nb; ++i) u[i] = (i + 1) * L / nb;
  for (int i = 0; i < nb; ++i) {
    for (int guard = 0; guard < 8; ++guard) {
      if (!std::binary_search(vac_img.begin(), vac_img.end(), u[i])) break;
      const double gl = i == 0 ? u[i] : u[i] - u[i - 1];
      const double gr = i + 1 == nb ? spacing : u[i + 1] - u[i];
      u[i] += std::min(gl, gr) / 4.0;
    }
  }

  // map back and merge with S^1
  std::vector<double> nodes;
  nodes.reserve(N);
  for (double uk : u) {
    const auto it = std::upper_bound(bc.begin(), bc.end(), uk);
    const std::size_t blk = static_cast<std::size_t>(it - bc.begin()) - 1;
    nodes.push_back(bs[blk] + (uk - bc[blk]));
  }
  for (const auto& [a, b] : vac) nodes.push_back(a);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  // masses from CDF levels; drop nodes whose quantile interval carries none
  Discretization d;
  double prev_level = -0.5;
  for (double xn : nodes) {
    const double level = M.value(xn);
    if (level > prev_level) {
      d.nodes.push_back(xn);
      d.masses.push_back(level - prev_level);
      d.companions.push_back(M.inverse_right(prev_level));
      prev_level = level;
    }
  }
  d.masses.back() += 0.5 - prev_level;  // snap total mass exactly to 1

  const StepCDF MN = cdf(DiscreteMeasure(d.nodes, d.masses));
  d.l1_cdf_gap = M.l1_distance_to(MN);
  double sup = 0.0;
  for (std::size_t i = 0; i < d.nodes.size(); ++i)
    sup = std::max(sup, d.nodes[i] - d.companions[i]);
  d.linf_inverse_gap = sup;
  return d;
}

}  // namespace

Discretization discretize_density(const InitialData& data, int N) {
  if (N < 1) throw std::invalid_argument("N must be at least 1");
  if (data.atomic()) return discretize_atomic(*data.atoms, N);
  return discretize_continuum(*data.continuum, N);
}

PiecewiseLinearFlux::PiecewiseLinearFlux(std::vector<double> masses, std::vector<double> slopes)
    : slopes_(std::move(slopes)) {
  if (masses.empty() || masses.size() != slopes_.size())
    throw std::invalid_argument("flux needs one slope per mass");
  theta_.resize(masses.size() + 1);
  values_.resize(masses.size() + 1);
  theta_[0] = -0.5;
  values_[0] = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0.0)) throw std::invalid_argument("flux masses must be positive");
    if (!std::isfinite(slopes_[i])) throw std::invalid_argument("flux slopes must be finite");
    theta_[i + 1] = theta_[i] + masses[i];
    values_[i + 1] = values_[i] + masses[i] * slopes_[i];
  }
  if (std::fabs(theta_.back() - 0.5) > 1e-9)
    throw std::invalid_argument("flux masses must sum to 1");
  theta_.back() = 0.5;
}

double PiecewiseLinearFlux::eval(double m) const {
  if (m < -0.5 - 1e-12 || m > 0.5 + 1e-12)
    throw std::domain_error("flux argument outside [-1/2, 1/2]");
  m = std::clamp(m, -0.5, 0.5);
  const auto it = std::upper_bound(theta_.begin(), theta_.end(), m);
  std::size_t i = static_cast<std::size_t>(it - theta_.begin());
  if (i > 0 && theta_[i - 1] == m) return values_[i - 1];
  if (i == theta_.size()) return values_.back();
  return values_[i - 1] + (m - theta_[i - 1]) * slopes_[i - 1];
}

double PiecewiseLinearFlux::lipschitz() const {
  double l = 0.0;
  for (double s : slopes_) l = std::max(l, std::fabs(s));
  return l;
}

double flux_lipschitz_gap(const PiecewiseLinearFlux& a, const PiecewiseLinearFlux& b) {
  const auto& ta = a.theta();
  const auto& tb = b.theta();
  double gap = 0.0;
  std::size_t i = 1, j = 1;
  double prev = -0.5;
  while (i < ta.size() && j < tb.size()) {
    const double next = std::min(ta[i], tb[j]);
    if (next > prev) gap = std::max(gap, std::fabs(a.slopes()[i - 1] - b.slopes()[j - 1]));
    if (ta[i] == next) ++i;
    if (tb[j] == next) ++j;
    prev = next;
  }
  return gap;
}

namespace {

// density pieces (l, r, h) of a piecewise-linear CDF: the rising segments
std::vector<std::array<double, 3>> density_pieces(const PiecewiseLinearCDF& M) {
  std::vector<std::array<double, 3>> pieces;
  const auto& kx = M.knots_x();
  const auto& km = M.knots_m();
  for (std::size_t i = 0; i + 1 < kx.size(); ++i) {
    if (km[i + 1] > km[i])
      pieces.push_back({kx[i], kx[i + 1], (km[i + 1] - km[i]) / (kx[i + 1] - kx[i])});
  }
  return pieces;
}

double conv_continuum(const PiecewiseLinearCDF& M, const CommunicationKernel& kernel, double x) {
  double s = 0.0;
  for (const auto& [l, r, h] : density_pieces(M))
    s += h * (kernel.phi_double_primitive(x - l) - kernel.phi_double_primitive(x - r));
  return s;
}

// int_a^b (Phi * rho)(x) dx in closed form via the third primitive
double conv_continuum_integral(const PiecewiseLinearCDF& M, const CommunicationKernel& kernel,
                               double a, double b) {
  double s = 0.0;
  for (const auto& [l, r, h] : density_pieces(M)) {
    s += h * ((kernel.phi_triple_primitive(b - l) - kernel.phi_triple_primitive(a - l)) -
              (kernel.phi_triple_primitive(b - r) - kernel.phi_triple_primitive(a - r)));
  }
  return s;
}

// psi0 of the atom with quantile index i (per particle, not per position)
double atomic_psi(const InitialData& data, const CommunicationKernel& kernel, std::size_t i) {
  const DiscreteMeasure& mu = *data.atoms;
  const double u = data.velocity.type == VelocitySpec::Type::PerAtom
                       ? data.velocity.per_atom.at(i)
                       : data.velocity.eval(mu.x[i]);
  return u + conv_phi_M(mu, kernel, mu.x[i]);
}

}  // namespace

double psi0_eval(const InitialData& data, const CommunicationKernel& kernel, double x) {
  if (data.atomic())
    return data.velocity.eval(x) + conv_phi_M(*data.atoms, kernel, x);
  return data.velocity.eval(x) + conv_continuum(*data.continuum, kernel, x);
}

double quantile_a(const InitialData& data, const CommunicationKernel& kernel, double m) {
  if (!(m > -0.5) || !(m <= 0.5)) throw std::domain_error("quantile defined on (-1/2, 1/2]");
  if (data.atomic()) {
    const DiscreteMeasure& mu = *data.atoms;
    double acc = -0.5;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      acc += mu.m[i];
      if (m <= acc || i + 1 == mu.size()) return atomic_psi(data, kernel, i);
    }
  }
  return psi0_eval(data, kernel, data.continuum->inverse(m));
}

double quantile_a_integral(const InitialData& data, const CommunicationKernel& kernel,
                           double m0, double m1) {
  if (!(m1 >= m0)) throw std::invalid_argument("integral needs m1 >= m0");
  if (data.atomic()) {
    const DiscreteMeasure& mu = *data.atoms;
    double acc = -0.5, total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double lo = acc;
      acc += mu.m[i];
      const double a = std::max(lo, m0), b = std::min(acc, m1);
      if (b > a) total += (b - a) * atomic_psi(data, kernel, i);
    }
    return total;
  }
  const PiecewiseLinearCDF& M = *data.continuum;
  if (m1 == m0) return 0.0;
  const double xa = M.inverse_right(std::max(m0, -0.5));
  const double xb = M.inverse(m1);
  double total = 0.0;
  for (const auto& [l, r, h] : density_pieces(M)) {
    const double a = std::max(l, xa), b = std::min(r, xb);
    if (b > a)
      total += h * (data.velocity.integral(a, b) + conv_continuum_integral(M, kernel, a, b));
  }
  return total;
}

PiecewiseLinearFlux discretize_flux(const InitialData& data, const CommunicationKernel& kernel,
                                    const Discretization& disc, FluxMode mode) {
  const std::size_t n = disc.nodes.size();
  std::vector<double> slopes(n);
  if (mode == FluxMode::Sample) {
    if (data.atomic()) {
      double acc = -0.5;
      for (std::size_t i = 0; i < n; ++i) {
        acc += disc.masses[i];
        slopes[i] = quantile_a(data, kernel, std::min(acc, 0.5));
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) slopes[i] = psi0_eval(data, kernel, disc.nodes[i]);
    }
  } else {
    double acc = -0.5;
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = acc;
      acc += disc.masses[i];
      const double hi = i + 1 == n ? 0.5 : acc;
      slopes[i] = quantile_a_integral(data, kernel, lo, hi) / disc.masses[i];
    }
  }
  return PiecewiseLinearFlux(disc.masses, slopes);
}

std::vector<double> initial_velocities(const PiecewiseLinearFlux& flux,
                                       const std::vector<double>& nodes,
                                       const std::vector<double>& masses,
                                       const CommunicationKernel& kernel) {
  std::vector<double> conv(nodes.size());
  convolve_primitive_at(nodes, masses, kernel, nodes, conv, ExecPolicy::Parallel);
  std::vector<double> v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = flux.slopes()[i] - conv[i];
  return v;
}

DiscretizedProblem discretize_problem(const InitialData& data, const CommunicationKernel& kernel,
                                      int N, FluxMode mode) {
  if (data.velocity.type == VelocitySpec::Type::PerAtom) {
    if (!data.atomic())
      throw std::invalid_argument("per-atom velocities require atomic density");
    if (data.velocity.per_atom.size() != data.atoms->size())
      throw std::invalid_argument("per-atom velocities must match atom count");
  }
  Discretization disc = discretize_density(data, N);
  PiecewiseLinearFlux flux = discretize_flux(data, kernel, disc, mode);
  std::vector<double> v0 = initial_velocities(flux, disc.nodes, disc.masses, kernel);
  return {std::move(disc), std::move(flux), std::move(v0)};
}

}  // namespace stickyalign
