#pragma once

#include <cmath>
#include <numbers>
#include <string_view>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "donorline/error.hpp"
#include "donorline/minimize.hpp"
#include "donorline/registry.hpp"
#include "donorline/units.hpp"

namespace donorline {

enum class CarrierKind { d0_electron, d0x_electron, d0x_hole };

constexpr std::string_view to_string(CarrierKind k) noexcept {
  switch (k) {
    case CarrierKind::d0_electron: return "d0_electron";
    case CarrierKind::d0x_electron: return "d0x_electron";
    case CarrierKind::d0x_hole: return "d0x_hole";
  }
  return "?";
}

/// Radial envelope of one carrier:
///   |Psi(r)|^2 = norm * r^(2 power) * exp(-2 r / length) * L(r)^2
/// where L is the generalized Laguerre factor of the hole radial function
/// (identically 1 for every node-free state).
struct CarrierEnvelope {
  CarrierKind kind = CarrierKind::d0_electron;
  double power = 0.0;      // radial exponent of Psi
  double length = 1.0;     // decay length of Psi, nm
  double norm = 1.0;       // so that 4 pi int r^2 |Psi|^2 dr = 1
  int radial_nodes = 0;    // Laguerre degree
  double laguerre_alpha = 0.0;

  /// Probability density in nm^-3. r >= 0.
  double density(double r) const {
    double value = norm * std::exp(-2.0 * r / length);
    if (power != 0.0) value *= std::pow(r, 2.0 * power);
    if (radial_nodes > 0) {
      const double l = laguerre(2.0 * r / length);
      value *= l * l;
    }
    return value;
  }

  /// Same shape with every length multiplied by `factor` (renormalized).
  CarrierEnvelope scaled(double factor) const {
    CarrierEnvelope out = *this;
    out.length *= factor;
    out.norm /= std::pow(factor, 3.0 + 2.0 * power);
    return out;
  }

  double laguerre(double x) const {
    double prev = 1.0;
    if (radial_nodes == 0) return prev;
    double cur = 1.0 + laguerre_alpha - x;
    for (int k = 1; k < radial_nodes; ++k) {
      const double next = ((2.0 * k + 1.0 + laguerre_alpha - x) * cur - (k + laguerre_alpha) * prev) / (k + 1.0);
      prev = cur;
      cur = next;
    }
    return cur;
  }
};

inline double envelope_density(const CarrierEnvelope& e, double r) { return e.density(r); }

/// Neutral-donor electron with a central-cell corrected hydrogenic envelope
/// r^(n-1) exp(-r/a).
struct DonorState {
  double a_nm = 0.0;             // envelope decay length
  double n = 1.0;                // central-cell exponent
  double hydrogenic_mev = 0.0;   // E_H
  double binding_mev = 0.0;      // E_b
  double mean_radius_nm = 0.0;   // <r>
  double bohr_radius_nm = 0.0;   // a_D = 2 <r> / 3

  CarrierEnvelope envelope() const {
    CarrierEnvelope e;
    e.kind = CarrierKind::d0_electron;
    e.power = n - 1.0;
    e.length = a_nm;
    e.norm = 1.0 / (4.0 * std::numbers::pi * std::tgamma(2.0 * n + 1.0) * std::pow(a_nm / 2.0, 2.0 * n + 1.0));
    return e;
  }
};

inline double hydrogenic_binding_mev(const MaterialParams& p) {
  return p.electron_mass / (p.dielectric * p.dielectric) * constants::rydberg_mev;
}

inline DonorState solve_donor(const MaterialParams& p) {
  DonorState s;
  s.binding_mev = p.donor_binding_mev;
  s.hydrogenic_mev = hydrogenic_binding_mev(p);
  s.a_nm = std::sqrt(constants::hbar2_over_2m0 / (p.electron_mass * p.donor_binding_mev));
  s.n = std::sqrt(s.hydrogenic_mev / p.donor_binding_mev);
  s.mean_radius_nm = 0.5 * s.a_nm * (2.0 * s.n + 1.0);
  s.bohr_radius_nm = 2.0 * s.mean_radius_nm / 3.0;
  return s;
}

/// Kratzer fit constants for the hole potential of the bound exciton.
inline constexpr double kratzer_s = 1.0136;
inline constexpr double kratzer_t = 1.337;

struct ExcitonState {
  double electron_radius_nm = 0.0;  // a_e
  double b_nm = 0.0;                // Kratzer length, t a_e
  double depth_mev = 0.0;           // Kratzer D
  double lambda = 0.0;              // Lambda_{n_h l_h}
  double hole_decay_per_nm = 0.0;   // epsilon
  double hole_energy_mev = 0.0;     // E_{h, n_h l_h}
  double total_energy_mev = 0.0;    // E(a_e) at the minimum, band-gap offset dropped
  int n_h = 0;
  int l_h = 0;
  double s = kratzer_s;
  double t = kratzer_t;
  double hole_mass = 0.0;

  /// Both D0X electrons share this 1s orbital.
  CarrierEnvelope electron_envelope() const {
    CarrierEnvelope e;
    e.kind = CarrierKind::d0x_electron;
    e.length = electron_radius_nm;
    e.norm = 1.0 / (std::numbers::pi * std::pow(electron_radius_nm, 3));
    return e;
  }

  CarrierEnvelope hole_envelope() const;
};

/// Dimensionless Kratzer coupling 2 m b^2 D / hbar^2.
inline double kratzer_coupling(double depth_mev, double b_nm, double mass) {
  return mass * b_nm * b_nm * depth_mev / constants::hbar2_over_2m0;
}

/// Closed-form Kratzer rovibrational level E(nu, J) in meV; `mass` in m_0.
inline double rovib_energy(double depth_mev, double b_nm, double mass, int nu, int j) {
  if (nu < 0 || j < 0 || !(b_nm > 0) || !(mass > 0) || depth_mev < 0) {
    throw Error(ErrorCode::InvalidArgument, "rovib_energy: invalid arguments");
  }
  const double g = kratzer_coupling(depth_mev, b_nm, mass);
  const double denom = (nu + 0.5) + std::sqrt((j + 0.5) * (j + 0.5) + g);
  return -g * depth_mev / (denom * denom);
}

/// Numerically normalizes an envelope shape on [0, 30 * length]
/// (adaptive Gauss-Kronrod, relative tolerance 1e-12).
inline double normalize_numerically(CarrierEnvelope& e) {
  e.norm = 1.0;
  const double upper = 30.0 * e.length;
  auto integrand = [&](double r) { return 4.0 * std::numbers::pi * r * r * e.density(r); };
  double error = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, upper, 20, 1e-12, &error);
  e.norm = 1.0 / integral;
  return integral;
}

inline CarrierEnvelope ExcitonState::hole_envelope() const {
  CarrierEnvelope e;
  e.kind = CarrierKind::d0x_hole;
  e.radial_nodes = n_h;
  // Psi ~ r^(Lambda - n_h) exp(-eps r) L_{n_h}^{2(Lambda - n_h) + 1}(2 eps r); for
  // n_h = 0 this is r^Lambda exp(-eps r).
  e.power = lambda - n_h;
  e.laguerre_alpha = 2.0 * e.power + 1.0;
  e.length = 1.0 / hole_decay_per_nm;
  normalize_numerically(e);
  return e;
}

/// Bound-exciton energy E(a_e) (two 1s electrons + Kratzer hole), without the
/// constant 2 E_g.
inline double exciton_energy(const MaterialParams& p, const DonorState& donor, double a_e, int n_h, int l_h) {
  const double a_d = donor.bohr_radius_nm;
  const double r_d = constants::coulomb_mev_nm / (2.0 * p.dielectric * a_d);
  const double x = a_d / a_e;
  const double ratio = p.hole_mass / p.electron_mass;
  const double s = kratzer_s, t = kratzer_t;
  const double root = std::sqrt((l_h + 0.5) * (l_h + 0.5) + s * t * t * (a_e / a_d) * ratio);
  const double denom = n_h + 0.5 + root;
  return 2.0 * r_d * (x * x - 11.0 / 8.0 * x) - 2.0 * r_d * (s * s * t * t / 2.0 * ratio / (denom * denom));
}

struct ExcitonSearch {
  double lo_nm = 0.3;
  double hi_nm = 6.0;
  double xtol_nm = 1e-4;
};

inline ExcitonState solve_exciton(const MaterialParams& p, int n_h = 0, int l_h = 0, ExcitonSearch search = {}) {
  if (n_h < 0 || l_h < 0) throw Error(ErrorCode::InvalidArgument, "hole quantum numbers must be >= 0");
  const DonorState donor = solve_donor(p);
  const auto min = minimize_bracketed([&](double a) { return exciton_energy(p, donor, a, n_h, l_h); },
                                      search.lo_nm, search.hi_nm, search.xtol_nm);
  ExcitonState x;
  x.n_h = n_h;
  x.l_h = l_h;
  x.hole_mass = p.hole_mass;
  x.electron_radius_nm = min.x;
  x.total_energy_mev = min.value;
  x.b_nm = kratzer_t * min.x;
  x.depth_mev = kratzer_s * constants::coulomb_mev_nm / (2.0 * p.dielectric * min.x);
  const double g = kratzer_coupling(x.depth_mev, x.b_nm, p.hole_mass);
  x.lambda = -0.5 + n_h + std::sqrt((l_h + 0.5) * (l_h + 0.5) + g);
  x.hole_energy_mev = -g * x.depth_mev / ((1.0 + x.lambda) * (1.0 + x.lambda));
  x.hole_decay_per_nm = std::sqrt(-p.hole_mass * x.hole_energy_mev / constants::hbar2_over_2m0);
  return x;
}

}  // namespace donorline
