#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "donorline/error.hpp"
#include "donorline/registry.hpp"
#include "donorline/rng.hpp"

namespace donorline {

using Vec3 = std::array<double, 3>;

struct Site {
  Element element{};
  Vec3 position{};  // nm, impurity at the origin
  double distance = 0.0;
};

/// Sites around a substitutional impurity at the origin; the impurity site
/// itself is not listed. Sites are ordered by distance.
struct LatticeEnvironment {
  Crystal crystal = Crystal::wurtzite;
  double cutoff_nm = 0.0;
  Vec3 impurity_position{0.0, 0.0, 0.0};
  std::vector<Site> sites;

  std::size_t count(Element e) const {
    return static_cast<std::size_t>(std::count_if(
        sites.begin(), sites.end(), [e](const Site& s) { return s.element == e; }));
  }
};

/// Isotope masses (amu, mass numbers) parallel to LatticeEnvironment::sites.
struct IsotopeAssignment {
  std::vector<double> masses;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline constexpr std::size_t default_max_sites = 40'000'000;

/// Atoms per nm^3 for the given lattice.
inline double atomic_density(const LatticeConstants& lc) {
  if (lc.crystal == Crystal::wurtzite) {
    const double cell = std::sqrt(3.0) / 2.0 * lc.a_nm * lc.a_nm * lc.c_nm;
    return 4.0 / cell;
  }
  return 8.0 / (lc.a_nm * lc.a_nm * lc.a_nm);
}

inline LatticeEnvironment generate_sites(const LatticeConstants& lc, double cutoff_nm,
                                         std::size_t max_sites = default_max_sites) {
  if (!(cutoff_nm > 0)) throw Error(ErrorCode::InvalidArgument, "cutoff must be positive");
  const double expected = atomic_density(lc) * 4.0 / 3.0 * std::numbers::pi * std::pow(cutoff_nm, 3);
  if (expected > static_cast<double>(max_sites)) {
    throw Error(ErrorCode::CutoffTooLarge, "cutoff " + std::to_string(cutoff_nm) + " nm needs ~" +
                                               std::to_string(static_cast<long long>(expected)) +
                                               " sites (bound " + std::to_string(max_sites) + ")");
  }

  struct BasisAtom {
    Element element;
    Vec3 frac;
  };
  std::vector<BasisAtom> basis;
  std::array<Vec3, 3> cell{};
  // Tolerance on the cutoff so symmetry-equivalent sites sit on the same side of it.
  const double reach = cutoff_nm * (1.0 + 1e-12);

  if (lc.crystal == Crystal::wurtzite) {
    const double a = lc.a_nm, c = lc.c_nm, u = lc.u;
    cell = {Vec3{a, 0.0, 0.0}, Vec3{-a / 2.0, a * std::sqrt(3.0) / 2.0, 0.0}, Vec3{0.0, 0.0, c}};
    basis = {{Element::Zn, {0.0, 0.0, 0.0}},
             {Element::Zn, {1.0 / 3.0, 2.0 / 3.0, 0.5}},
             {Element::O, {0.0, 0.0, u}},
             {Element::O, {1.0 / 3.0, 2.0 / 3.0, 0.5 + u}}};
  } else {
    const double a = lc.a_nm;
    cell = {Vec3{a, 0.0, 0.0}, Vec3{0.0, a, 0.0}, Vec3{0.0, 0.0, a}};
    for (const Vec3& f : {Vec3{0, 0, 0}, Vec3{0, 0.5, 0.5}, Vec3{0.5, 0, 0.5}, Vec3{0.5, 0.5, 0}}) {
      basis.push_back({Element::Si, f});
      basis.push_back({Element::Si, {f[0] + 0.25, f[1] + 0.25, f[2] + 0.25}});
    }
  }

  // In-plane cell vectors of the hexagonal cell are 60/120 degrees apart, so the
  // index range must cover cutoff / (a sin 60).
  const double in_plane = lc.crystal == Crystal::wurtzite ? lc.a_nm * std::sqrt(3.0) / 2.0 : lc.a_nm;
  const double axial = lc.crystal == Crystal::wurtzite ? lc.c_nm : lc.a_nm;
  const int n_ab = static_cast<int>(std::ceil(cutoff_nm / in_plane)) + 2;
  const int n_c = static_cast<int>(std::ceil(cutoff_nm / axial)) + 2;

  LatticeEnvironment env;
  env.crystal = lc.crystal;
  env.cutoff_nm = cutoff_nm;
  env.sites.reserve(static_cast<std::size_t>(expected * 1.1) + 16);
  for (int i = -n_ab; i <= n_ab; ++i) {
    for (int j = -n_ab; j <= n_ab; ++j) {
      for (int k = -n_c; k <= n_c; ++k) {
        for (const auto& b : basis) {
          const double fi = i + b.frac[0], fj = j + b.frac[1], fk = k + b.frac[2];
          Vec3 p{};
          for (int d = 0; d < 3; ++d) p[d] = fi * cell[0][d] + fj * cell[1][d] + fk * cell[2][d];
          const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
          if (r < 1e-9 || r > reach) continue;
          env.sites.push_back({b.element, p, r});
        }
      }
    }
  }
  std::stable_sort(env.sites.begin(), env.sites.end(),
                   [](const Site& x, const Site& y) { return x.distance < y.distance; });
  return env;
}

inline LatticeEnvironment generate_sites(const MaterialParams& params, double cutoff_nm,
                                         std::size_t max_sites = default_max_sites) {
  return generate_sites(params.lattice, cutoff_nm, max_sites);
}

namespace detail {
/// Picks an isotope index by inverse CDF; `u` in [0, 1).
inline std::size_t pick_isotope(const ElementIsotopes& table, double u) {
  double cumulative = 0.0;
  for (std::size_t k = 0; k + 1 < table.isotopes.size(); ++k) {
    cumulative += table.isotopes[k].abundance;
    if (u < cumulative) return k;
  }
  return table.isotopes.size() - 1;
}
}  // namespace detail

/// Independent natural-abundance draw for every site; stream `stream` of `seed`.
inline IsotopeAssignment sample_isotopes(const LatticeEnvironment& env, const MaterialParams& params,
                                         std::uint64_t seed, std::uint64_t stream = 0) {
  std::vector<const ElementIsotopes*> tables;
  for (Element e : {Element::Zn, Element::O, Element::Si}) {
    auto it = std::find_if(params.elements.begin(), params.elements.end(),
                           [e](const ElementIsotopes& t) { return t.element == e; });
    tables.push_back(it == params.elements.end() ? nullptr : &*it);
  }
  StreamRng rng(seed, stream);
  IsotopeAssignment out;
  out.seed = seed;
  out.stream = stream;
  out.masses.reserve(env.sites.size());
  for (const auto& s : env.sites) {
    const ElementIsotopes* t = tables[static_cast<std::size_t>(s.element)];
    if (t == nullptr) {
      throw Error(ErrorCode::InvalidArgument,
                  "no abundance table for " + std::string(to_string(s.element)));
    }
    out.masses.push_back(t->isotopes[detail::pick_isotope(*t, rng.uniform())].mass_number);
  }
  return out;
}

/// Debug export: element, x, y, z, distance (nm).
inline void write_sites_csv(std::ostream& os, const LatticeEnvironment& env) {
  os << "element,x (nm),y (nm),z (nm),distance (nm)\n";
  os.precision(10);
  for (const auto& s : env.sites) {
    os << to_string(s.element) << ',' << s.position[0] << ',' << s.position[1] << ','
       << s.position[2] << ',' << s.distance << '\n';
  }
}

}  // namespace donorline
