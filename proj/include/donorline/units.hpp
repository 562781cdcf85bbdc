#pragma once

#include <numbers>
#include <string>
#include <string_view>

#include "donorline/error.hpp"

namespace donorline {

// CODATA 2018. Everything derived below is computed from this table only.
namespace codata {
inline constexpr double planck = 6.62607015e-34;            // J s
inline constexpr double hbar = planck / (2.0 * std::numbers::pi);
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double boltzmann = 1.380649e-23;             // J/K
inline constexpr double electron_mass = 9.1093837015e-31;     // kg
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double vacuum_permeability = 1.25663706212e-6;  // N/A^2
inline constexpr double bohr_magneton = 9.2740100783e-24;     // J/T
inline constexpr double nuclear_magneton = 5.0507837461e-27;  // J/T
inline constexpr double rydberg_energy_ev = 13.605693122994;  // eV
inline constexpr double speed_of_light = 299792458.0;         // m/s
}  // namespace codata

// Canonical internal units: meV, nm, GHz, K.
namespace constants {
inline constexpr double joule_per_mev = codata::elementary_charge * 1e-3;
/// E/h for E = 1 meV, in GHz.
inline constexpr double ghz_per_mev = joule_per_mev / codata::planck * 1e-9;
/// k_B in meV/K.
inline constexpr double boltzmann_mev_per_k = codata::boltzmann / joule_per_mev;
inline constexpr double rydberg_mev = codata::rydberg_energy_ev * 1e3;
/// hbar^2 / (2 m_0) in meV nm^2.
inline constexpr double hbar2_over_2m0 =
    codata::hbar * codata::hbar / (2.0 * codata::electron_mass) / joule_per_mev * 1e18;
/// e^2 / (4 pi eps_0) in meV nm.
inline constexpr double coulomb_mev_nm = codata::elementary_charge * codata::elementary_charge /
                                         (4.0 * std::numbers::pi * codata::vacuum_permittivity) /
                                         joule_per_mev * 1e9;
/// mu_B / h in GHz/T.
inline constexpr double bohr_magneton_ghz_per_t = codata::bohr_magneton / codata::planck * 1e-9;
}  // namespace constants

enum class Unit { meV, GHz, K, nm, T, ns, per_cm3, dimensionless };

constexpr std::string_view to_string(Unit u) noexcept {
  switch (u) {
    case Unit::meV: return "meV";
    case Unit::GHz: return "GHz";
    case Unit::K: return "K";
    case Unit::nm: return "nm";
    case Unit::T: return "T";
    case Unit::ns: return "ns";
    case Unit::per_cm3: return "cm^-3";
    case Unit::dimensionless: return "1";
  }
  return "?";
}

inline Unit parse_unit(std::string_view s) {
  for (Unit u : {Unit::meV, Unit::GHz, Unit::K, Unit::nm, Unit::T, Unit::ns, Unit::per_cm3,
                 Unit::dimensionless}) {
    if (s == to_string(u)) return u;
  }
  if (s == "cm-3" || s == "per_cm3") return Unit::per_cm3;
  if (s.empty() || s == "dimensionless") return Unit::dimensionless;
  throw Error(ErrorCode::UnitError, "unknown unit '" + std::string(s) + "'");
}

struct Quantity {
  double value = 0.0;
  Unit unit = Unit::dimensionless;
};

namespace detail {
constexpr bool is_energy_like(Unit u) noexcept {
  return u == Unit::meV || u == Unit::GHz || u == Unit::K;
}
// Factor taking one `u` into meV.
constexpr double to_mev_factor(Unit u) noexcept {
  switch (u) {
    case Unit::GHz: return 1.0 / constants::ghz_per_mev;
    case Unit::K: return constants::boltzmann_mev_per_k;
    default: return 1.0;
  }
}
}  // namespace detail

/// meV <-> GHz through E = h nu, meV <-> K through E = k_B T; every other unit
/// converts only to itself.
inline Quantity convert(Quantity q, Unit target) {
  if (q.unit == target) return q;
  if (detail::is_energy_like(q.unit) && detail::is_energy_like(target)) {
    const double mev = q.value * detail::to_mev_factor(q.unit);
    return {mev / detail::to_mev_factor(target), target};
  }
  throw Error(ErrorCode::IncompatibleUnits, "cannot convert " + std::string(to_string(q.unit)) +
                                                " to " + std::string(to_string(target)));
}

inline double mev_to_ghz(double mev) { return mev * constants::ghz_per_mev; }
inline double ghz_to_mev(double ghz) { return ghz / constants::ghz_per_mev; }

}  // namespace donorline
