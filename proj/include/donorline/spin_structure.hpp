#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "donorline/carrier_states.hpp"
#include "donorline/error.hpp"
#include "donorline/lattice.hpp"
#include "donorline/registry.hpp"
#include "donorline/units.hpp"

namespace donorline {

enum class Geometry { Voigt, Faraday };

constexpr std::string_view to_string(Geometry g) noexcept { return g == Geometry::Voigt ? "Voigt" : "Faraday"; }

inline Geometry parse_geometry(std::string_view s) {
  if (s == "Voigt" || s == "voigt") return Geometry::Voigt;
  if (s == "Faraday" || s == "faraday") return Geometry::Faraday;
  throw Error(ErrorCode::ConfigError, "unknown geometry '" + std::string(s) + "'");
}

inline constexpr double max_field_t = 12.0;
inline constexpr double default_electron_g = 1.97;

/// Hole g-factor defaults for the two field geometries.
constexpr double default_hole_g(Geometry g) noexcept { return g == Geometry::Voigt ? 0.3 : -1.2; }

struct ZeemanScheme {
  double g_e = default_electron_g;
  double g_h = default_hole_g(Geometry::Voigt);
  double field_t = 0.0;
  Geometry geometry = Geometry::Voigt;
  /// Strong:weak branching in Faraday geometry.
  double faraday_branching = 0.99;
};

struct ZeemanTransition {
  std::string label;
  double offset_ghz = 0.0;  // relative to the zero-field line
  std::string polarization;
  double strength = 0.0;
};

struct ZeemanLevels {
  double electron_splitting_ghz = 0.0;  // g_e mu_B B / h
  double hole_splitting_ghz = 0.0;
  std::array<ZeemanTransition, 4> transitions;
};

/// Four-level scheme: D0 spin states e(+/-) = +/- g_e mu_B B / 2h and D0X hole
/// states h(+/-). V lines end on h(+), H lines on h(-); the arrow names the
/// D0 spin state.
inline ZeemanLevels zeeman_transitions(const ZeemanScheme& s) {
  if (!(std::abs(s.field_t) <= max_field_t)) {
    throw Error(ErrorCode::InvalidArgument, "|B| must be <= " + std::to_string(max_field_t) + " T");
  }
  ZeemanLevels out;
  out.electron_splitting_ghz = s.g_e * constants::bohr_magneton_ghz_per_t * s.field_t;
  out.hole_splitting_ghz = s.g_h * constants::bohr_magneton_ghz_per_t * s.field_t;
  const double e_up = 0.5 * out.electron_splitting_ghz, e_dn = -e_up;
  const double h_up = 0.5 * out.hole_splitting_ghz, h_dn = -h_up;

  const bool faraday = s.geometry == Geometry::Faraday;
  const double strong = faraday ? s.faraday_branching : 0.5;
  const double weak = faraday ? 1.0 - s.faraday_branching : 0.5;
  out.transitions = {{{"V_up", h_up - e_up, faraday ? "sigma-" : "V", weak},
                      {"V_down", h_up - e_dn, faraday ? "sigma+" : "V", strong},
                      {"H_up", h_dn - e_up, faraday ? "sigma-" : "H", strong},
                      {"H_down", h_dn - e_dn, faraday ? "sigma+" : "H", weak}}};
  return out;
}

/// Separation of the two strong Faraday lines, |g_e + g_h| mu_B B / h.
inline double exciton_splitting_ghz(double g_eh, double field_t) {
  return std::abs(g_eh) * constants::bohr_magneton_ghz_per_t * field_t;
}

struct Zn67 {
  double nuclear_spin = 2.5;
  double moment_nuclear_magnetons = 0.874;
  double abundance = 0.041;
};

struct HyperfineParams {
  double a_mhz = 0.0;        // donor contact constant
  double nuclear_spin = 0.0; // donor nucleus
  Zn67 zn67;
  double u2 = 1.0;           // Bloch density ratio at the Zn site
  double g_e = default_electron_g;

  void validate() const {
    if (a_mhz < 0) throw Error(ErrorCode::InvalidArgument, "A must be >= 0");
    const double twice = 2.0 * nuclear_spin;
    if (nuclear_spin < 0 || std::abs(twice - std::round(twice)) > 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "2I must be a non-negative integer");
    }
  }
};

inline HyperfineParams hyperfine_params(Donor d) {
  const DonorOptics o = donor_optics(d);
  HyperfineParams p;
  p.a_mhz = o.hyperfine_a_mhz;
  p.nuclear_spin = o.nuclear_spin;
  return p;
}

struct HyperfineDispersion {
  double sum_psi4_nm6 = 0.0;        // sum over Zn sites of |Psi|^4
  double tail_fraction = 0.0;       // continuum estimate beyond the cutoff
  double field_dispersion_t = 0.0;  // Delta_B
  double linewidth_mhz = 0.0;       // Gaussian FWHM in frequency
};

/// Tolerated relative change of sum |Psi|^4 from the region beyond the cutoff.
inline constexpr double max_truncation = 0.01;

/// Gaussian exp(-B^2/Delta_B^2) of the 67Zn Overhauser field; linewidth is its
/// FWHM 2 sqrt(ln 2) Delta_B times g_e mu_B / h.
inline HyperfineDispersion hyperfine_dispersion(const CarrierEnvelope& envelope, const LatticeEnvironment& env,
                                                const HyperfineParams& p, double zn_sites_per_nm3) {
  if (env.count(Element::Zn) == 0) throw Error(ErrorCode::EnvironmentMismatch, "environment has no Zn sites");
  HyperfineDispersion out;
  for (const auto& s : env.sites) {
    if (s.element != Element::Zn) continue;
    const double d = envelope.density(s.distance);
    out.sum_psi4_nm6 += d * d;
  }
  auto integrand = [&](double r) {
    const double d = envelope.density(r);
    return 4.0 * std::numbers::pi * r * r * d * d;
  };
  const double upper = env.cutoff_nm + 40.0 * envelope.length;
  const double tail = zn_sites_per_nm3 * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                                             integrand, env.cutoff_nm, upper, 15, 1e-10);
  out.tail_fraction = out.sum_psi4_nm6 > 0 ? tail / out.sum_psi4_nm6 : 0.0;
  if (out.tail_fraction > max_truncation) {
    throw Error(ErrorCode::EnvironmentTooSmall, "cutoff " + std::to_string(env.cutoff_nm) + " nm misses " +
                                                    std::to_string(100.0 * out.tail_fraction) + "% of sum |Psi|^4");
  }
  const Zn67& z = p.zn67;
  const double sqrt_sum_m3 = std::sqrt(z.abundance * out.sum_psi4_nm6) * 1e27;
  out.field_dispersion_t = codata::vacuum_permeability * z.moment_nuclear_magnetons * codata::nuclear_magneton /
                           p.g_e * std::sqrt(32.0 / 27.0) * std::sqrt((z.nuclear_spin + 1.0) / z.nuclear_spin) *
                           p.u2 * sqrt_sum_m3;
  out.linewidth_mhz = 2.0 * std::sqrt(std::log(2.0)) * p.g_e * constants::bohr_magneton_ghz_per_t *
                      out.field_dispersion_t * 1e3;
  return out;
}

/// Convenience overload: D0 envelope of (ZnO, donor) on the given environment.
inline HyperfineDispersion hyperfine_dispersion(const MaterialParams& m, const LatticeEnvironment& env,
                                                const HyperfineParams& p) {
  return hyperfine_dispersion(solve_donor(m).envelope(), env, p, 0.5 * atomic_density(m.lattice));
}

inline constexpr double calibration_linewidth_mhz = 22.0;

/// u2 such that (ZnO, Al) evaluates to 22 MHz on `env`.
inline double calibrate_u2(const LatticeEnvironment& env, double target_mhz = calibration_linewidth_mhz) {
  const MaterialParams al = material_params(Material::ZnO, Donor::Al);
  HyperfineParams unit = hyperfine_params(Donor::Al);
  unit.u2 = 1.0;
  return target_mhz / hyperfine_dispersion(al, env, unit).linewidth_mhz;
}

enum class HyperfineRegime { zero_field, intermediate, high_field };

constexpr std::string_view to_string(HyperfineRegime r) noexcept {
  switch (r) {
    case HyperfineRegime::zero_field: return "zero_field";
    case HyperfineRegime::intermediate: return "intermediate";
    case HyperfineRegime::high_field: return "high_field";
  }
  return "?";
}

struct HyperfineSplitting {
  double zero_field_separation_mhz = 0.0;  // A sqrt(1/4 + I(I+1))
  int high_field_lines = 1;                // 2I + 1 per electron Zeeman level
  double high_field_spacing_mhz = 0.0;     // A / 2
  double zeeman_mhz = 0.0;                 // g_e mu_B B / h
  HyperfineRegime regime = HyperfineRegime::zero_field;
};

/// Limiting-regime summary; the regime compares g_e mu_B B / h with A (a
/// decade either side counts as a limit).
inline HyperfineSplitting hyperfine_splitting(const HyperfineParams& p, double field_t) {
  p.validate();
  if (field_t < 0) throw Error(ErrorCode::InvalidArgument, "B must be >= 0");
  HyperfineSplitting out;
  const double i = p.nuclear_spin;
  out.zero_field_separation_mhz = p.a_mhz * std::sqrt(0.25 + i * (i + 1.0));
  out.high_field_lines = static_cast<int>(std::lround(2.0 * i)) + 1;
  out.high_field_spacing_mhz = 0.5 * p.a_mhz;
  out.zeeman_mhz = p.g_e * constants::bohr_magneton_ghz_per_t * field_t * 1e3;
  if (p.a_mhz == 0.0) {
    out.regime = field_t > 0 ? HyperfineRegime::high_field : HyperfineRegime::zero_field;
  } else if (out.zeeman_mhz < 0.1 * p.a_mhz) {
    out.regime = HyperfineRegime::zero_field;
  } else if (out.zeeman_mhz > 10.0 * p.a_mhz) {
    out.regime = HyperfineRegime::high_field;
  } else {
    out.regime = HyperfineRegime::intermediate;
  }
  return out;
}

inline nlohmann::json to_json(const ZeemanLevels& z) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& tr : z.transitions) {
    t.push_back({{"label", tr.label}, {"offset_GHz", tr.offset_ghz}, {"polarization", tr.polarization},
                 {"strength", tr.strength}});
  }
  return {{"electron_splitting_GHz", z.electron_splitting_ghz},
          {"hole_splitting_GHz", z.hole_splitting_ghz},
          {"transitions", t}};
}

inline nlohmann::json to_json(const HyperfineSplitting& h) {
  return {{"zero_field_separation_MHz", h.zero_field_separation_mhz},
          {"high_field_lines", h.high_field_lines},
          {"high_field_spacing_MHz", h.high_field_spacing_mhz},
          {"zeeman_MHz", h.zeeman_mhz},
          {"regime", std::string(to_string(h.regime))}};
}

inline nlohmann::json to_json(const HyperfineDispersion& d) {
  return {{"sum_psi4_nm-6", d.sum_psi4_nm6},
          {"tail_fraction", d.tail_fraction},
          {"field_dispersion_T", d.field_dispersion_t},
          {"linewidth_MHz", d.linewidth_mhz}};
}

}  // namespace donorline
