#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "donorline/error.hpp"

namespace donorline {

enum class Material { ZnO, Si };
enum class Donor { Al, Ga, In, P };
enum class Element { Zn, O, Si };
enum class Crystal { wurtzite, diamond };

constexpr std::string_view to_string(Material m) noexcept { return m == Material::ZnO ? "ZnO" : "Si"; }
constexpr std::string_view to_string(Donor d) noexcept {
  switch (d) {
    case Donor::Al: return "Al";
    case Donor::Ga: return "Ga";
    case Donor::In: return "In";
    case Donor::P: return "P";
  }
  return "?";
}
constexpr std::string_view to_string(Element e) noexcept {
  switch (e) {
    case Element::Zn: return "Zn";
    case Element::O: return "O";
    case Element::Si: return "Si";
  }
  return "?";
}

inline Material parse_material(std::string_view s) {
  if (s == "ZnO") return Material::ZnO;
  if (s == "Si") return Material::Si;
  throw Error(ErrorCode::ConfigError, "unknown material '" + std::string(s) + "'");
}

inline Donor parse_donor(std::string_view s) {
  for (Donor d : {Donor::Al, Donor::Ga, Donor::In, Donor::P}) {
    if (s == to_string(d)) return d;
  }
  throw Error(ErrorCode::UnknownDonor, "unknown donor '" + std::string(s) + "'");
}

/// Mass is the mass number, used directly as amu for isotope mass differences.
struct Isotope {
  int mass_number = 0;
  double abundance = 0.0;
};

struct ElementIsotopes {
  Element element{};
  double de_dm_mev_per_amu = 0.0;   // environmental dE_{D0X}/dM
  std::vector<Isotope> isotopes;    // ascending mass, lightest first

  double lightest_mass() const { return isotopes.front().mass_number; }
};

struct LatticeConstants {
  Crystal crystal = Crystal::wurtzite;
  double a_nm = 0.0;
  double c_nm = 0.0;  // wurtzite only
  double u = 0.0;     // wurtzite internal parameter
};

/// Donor-atom isotope substitution constants (masses in amu).
struct ImpurityIsotopes {
  double reference_mass = 0.0;
  double lightest_mass = 0.0;
  double mass_difference = 0.0;
};

struct MaterialParams {
  Material material = Material::ZnO;
  Donor donor = Donor::Al;
  double electron_mass = 0.0;    // m_e / m_0
  double hole_mass = 0.0;        // m_h / m_0
  double dielectric = 0.0;       // eps / eps_0
  double donor_binding_mev = 0.0;
  double debye_energy_mev = 0.0;
  double band_shift_fraction_valence = 0.0;
  double band_shift_fraction_conduction = 0.0;
  double gap_slope_high_t = 0.0;  // (dE_g / d(kT)) at high temperature, dimensionless
  double impurity_sphere_nm = 0.2;
  double default_cutoff_nm = 10.0;
  std::vector<ElementIsotopes> elements;
  LatticeConstants lattice;
  std::optional<ImpurityIsotopes> impurity_isotopes;

  const ElementIsotopes& element(Element e) const {
    auto it = std::find_if(elements.begin(), elements.end(),
                           [e](const ElementIsotopes& x) { return x.element == e; });
    if (it == elements.end()) {
      throw Error(ErrorCode::InvalidArgument,
                  "no isotope table for element " + std::string(to_string(e)));
    }
    return *it;
  }
};

/// Throws InvalidArgument when a registry entry (possibly overridden) breaks
/// the physical invariants.
inline void validate(const MaterialParams& p) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (!(p.electron_mass > 0 && p.hole_mass > 0 && p.dielectric > 0 && p.donor_binding_mev > 0 &&
        p.debye_energy_mev > 0)) {
    fail("masses, dielectric constant and energies must be positive");
  }
  if (std::abs(p.band_shift_fraction_valence + p.band_shift_fraction_conduction - 1.0) > 1e-12) {
    fail("valence and conduction band shift fractions must sum to 1");
  }
  if (!(p.lattice.a_nm > 0) || (p.lattice.crystal == Crystal::wurtzite && !(p.lattice.c_nm > 0))) {
    fail("lattice constants must be positive");
  }
  for (const auto& el : p.elements) {
    double sum = 0.0;
    int previous = 0;
    for (const auto& iso : el.isotopes) {
      if (iso.abundance < 0 || iso.mass_number <= previous) {
        fail("isotope table of " + std::string(to_string(el.element)) + " is malformed");
      }
      previous = iso.mass_number;
      sum += iso.abundance;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      fail("abundances of " + std::string(to_string(el.element)) + " do not sum to 1");
    }
  }
}

namespace registry {

inline ElementIsotopes zinc() {
  return {Element::Zn, 0.41, {{64, 0.486}, {66, 0.279}, {67, 0.041}, {68, 0.188}, {70, 0.006}}};
}
inline ElementIsotopes oxygen() {
  return {Element::O, 3.12, {{16, 0.9975}, {17, 0.0005}, {18, 0.002}}};
}
inline ElementIsotopes silicon() {
  return {Element::Si, 1.02, {{28, 0.922}, {29, 0.047}, {30, 0.031}}};
}

// Literature lattice constants (not part of the optical data set).
inline LatticeConstants zno_lattice() { return {Crystal::wurtzite, 0.3250, 0.5207, 0.382}; }
inline LatticeConstants si_lattice() { return {Crystal::diamond, 0.5431, 0.0, 0.0}; }

}  // namespace registry

inline MaterialParams material_params(Material material, Donor donor) {
  MaterialParams p;
  p.material = material;
  p.donor = donor;
  if (material == Material::ZnO) {
    p.electron_mass = 0.27;
    p.hole_mass = 0.59;
    p.dielectric = 8.2;
    p.debye_energy_mev = 35.8;
    p.band_shift_fraction_valence = 0.8;
    p.band_shift_fraction_conduction = 0.2;
    p.gap_slope_high_t = 3.24;
    p.impurity_sphere_nm = 0.2;
    p.default_cutoff_nm = 10.0;
    p.elements = {registry::zinc(), registry::oxygen()};
    p.lattice = registry::zno_lattice();
    switch (donor) {
      case Donor::Al: p.donor_binding_mev = 51.5; break;
      case Donor::Ga:
        p.donor_binding_mev = 54.6;
        p.impurity_isotopes = ImpurityIsotopes{69.0, 71.0, 2.0};
        break;
      case Donor::In:
        p.donor_binding_mev = 63.2;
        p.impurity_isotopes = ImpurityIsotopes{113.0, 115.0, 2.0};
        break;
      default:
        throw Error(ErrorCode::UnknownDonor,
                    std::string(to_string(donor)) + " is not a supported donor in ZnO");
    }
  } else {
    if (donor != Donor::P) {
      throw Error(ErrorCode::UnknownDonor,
                  std::string(to_string(donor)) + " is not a supported donor in Si");
    }
    p.electron_mass = 0.26;
    p.hole_mass = 0.33;
    p.dielectric = 11.7;
    p.donor_binding_mev = 45.59;
    p.debye_energy_mev = 55.7;  // T_D = 645 K, literature; unused for P (single isotope)
    p.band_shift_fraction_valence = 0.75;
    p.band_shift_fraction_conduction = 0.25;
    p.gap_slope_high_t = 0.0;
    p.impurity_sphere_nm = 0.2;
    p.default_cutoff_nm = 12.0;
    p.elements = {registry::silicon()};
    p.lattice = registry::si_lattice();
  }
  return p;
}

/// Linewidth model dnu0 + a N_ph(T).
struct ThermalModel {
  double dnu0_ghz = 0.0;  // temperature-independent linewidth
  double a_ghz = 0.0;     // phonon scaling factor
  double de_mev = 0.0;    // D0X - D0X* splitting
};

/// Donor-specific optical data for ZnO donors.
struct DonorOptics {
  ThermalModel thermal;
  double radiative_linewidth_ghz = 0.0;
  double lifetime_total_ns = 0.0;
  double lifetime_zpl_ns = 0.0;
  double hyperfine_a_mhz = 0.0;
  double nuclear_spin = 0.0;
  double wavelength_nm = 0.0;  // vacuum D0X transition wavelength (literature)

  double zpl_fraction() const { return lifetime_total_ns / lifetime_zpl_ns; }
};

inline DonorOptics donor_optics(Donor donor) {
  switch (donor) {
    case Donor::Al: return {{7.4, 110.0, 1.26}, 0.5, 0.86, 0.95, 1.45, 2.5, 368.92};
    case Donor::Ga: return {{11.8, 99.0, 1.46}, 0.4, 1.06, 1.18, 11.5, 1.5, 369.03};
    case Donor::In: return {{6.5, 59.0, 2.05}, 0.1, 1.35, 1.52, 100.0, 4.5, 369.37};
    default:
      throw Error(ErrorCode::UnknownDonor,
                  "no optical data for donor " + std::string(to_string(donor)));
  }
}

/// Applies a JSON override block to a registry entry. Recognised keys:
/// electron_mass, hole_mass, dielectric, donor_binding_meV, debye_energy_meV,
/// band_shift_fraction_valence, dE_dM (object keyed by element), lattice
/// (a_nm, c_nm, u), default_cutoff_nm, impurity_sphere_nm. Unknown keys are
/// rejected.
inline void apply_overrides(MaterialParams& p, const nlohmann::json& block) {
  if (!block.is_object()) throw Error(ErrorCode::ConfigError, "override block must be an object");
  auto number = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorCode::ConfigError, "override '" + key + "' must be a number");
    return v.get<double>();
  };
  for (const auto& [key, value] : block.items()) {
    if (key == "electron_mass") p.electron_mass = number(value, key);
    else if (key == "hole_mass") p.hole_mass = number(value, key);
    else if (key == "dielectric") p.dielectric = number(value, key);
    else if (key == "donor_binding_meV") p.donor_binding_mev = number(value, key);
    else if (key == "debye_energy_meV") p.debye_energy_mev = number(value, key);
    else if (key == "default_cutoff_nm") p.default_cutoff_nm = number(value, key);
    else if (key == "impurity_sphere_nm") p.impurity_sphere_nm = number(value, key);
    else if (key == "band_shift_fraction_valence") {
      p.band_shift_fraction_valence = number(value, key);
      p.band_shift_fraction_conduction = 1.0 - p.band_shift_fraction_valence;
    } else if (key == "dE_dM") {
      if (!value.is_object()) throw Error(ErrorCode::ConfigError, "dE_dM must be an object");
      for (const auto& [sym, v] : value.items()) {
        auto it = std::find_if(p.elements.begin(), p.elements.end(),
                               [&](const ElementIsotopes& e) { return to_string(e.element) == sym; });
        if (it == p.elements.end()) throw Error(ErrorCode::ConfigError, "dE_dM: unknown element " + sym);
        it->de_dm_mev_per_amu = number(v, "dE_dM." + sym);
      }
    } else if (key == "lattice") {
      if (!value.is_object()) throw Error(ErrorCode::ConfigError, "lattice must be an object");
      for (const auto& [lk, lv] : value.items()) {
        if (lk == "a_nm") p.lattice.a_nm = number(lv, lk);
        else if (lk == "c_nm") p.lattice.c_nm = number(lv, lk);
        else if (lk == "u") p.lattice.u = number(lv, lk);
        else throw Error(ErrorCode::ConfigError, "unknown lattice override '" + lk + "'");
      }
    } else {
      throw Error(ErrorCode::ConfigError, "unknown registry override '" + key + "'");
    }
  }
  try {
    validate(p);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("override rejected: ") + e.what());
  }
}

}  // namespace donorline
