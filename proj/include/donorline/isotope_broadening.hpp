#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "donorline/carrier_states.hpp"
#include "donorline/error.hpp"
#include "donorline/lattice.hpp"
#include "donorline/registry.hpp"
#include "donorline/rng.hpp"
#include "donorline/units.hpp"

namespace donorline {

struct SiteShift {
  int mass_number = 0;
  double w_valence_mev = 0.0;
  double w_conduction_mev = 0.0;
};

/// Per element, per isotope band-edge shifts relative to the lightest isotope.
struct SiteShiftTable {
  struct Entry {
    Element element{};
    std::vector<SiteShift> isotopes;
  };
  std::vector<Entry> elements;

  const SiteShift& lookup(Element e, double mass) const {
    for (const auto& entry : elements) {
      if (entry.element != e) continue;
      for (const auto& iso : entry.isotopes) {
        if (std::abs(iso.mass_number - mass) < 1e-9) return iso;
      }
    }
    throw Error(ErrorCode::EnvironmentMismatch, "mass " + std::to_string(mass) + " is not an isotope of " +
                                                    std::string(to_string(e)));
  }
};

/// W_{i,c} = S_c * dM * dE/dM.
inline SiteShiftTable site_shift_table(const MaterialParams& p) {
  SiteShiftTable table;
  for (const auto& el : p.elements) {
    SiteShiftTable::Entry entry{el.element, {}};
    const double lightest = el.lightest_mass();
    for (const auto& iso : el.isotopes) {
      const double dm = iso.mass_number - lightest;
      entry.isotopes.push_back({iso.mass_number, p.band_shift_fraction_valence * dm * el.de_dm_mev_per_amu,
                                p.band_shift_fraction_conduction * dm * el.de_dm_mev_per_amu});
    }
    table.elements.push_back(std::move(entry));
  }
  return table;
}

/// Site weights |Psi(r_i)|^2 normalized to 1 over the sites of each element.
struct EnvelopeWeights {
  std::vector<double> d0_electron;
  std::vector<double> d0x_electron;
  std::vector<double> d0x_hole;
};

inline EnvelopeWeights envelope_weights(const LatticeEnvironment& env, const CarrierEnvelope& d0,
                                        const CarrierEnvelope& d0x_e, const CarrierEnvelope& d0x_h) {
  EnvelopeWeights w;
  const std::size_t n = env.sites.size();
  w.d0_electron.resize(n);
  w.d0x_electron.resize(n);
  w.d0x_hole.resize(n);
  double totals[3][3] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = env.sites[i];
    const auto el = static_cast<std::size_t>(s.element);
    w.d0_electron[i] = d0.density(s.distance);
    w.d0x_electron[i] = d0x_e.density(s.distance);
    w.d0x_hole[i] = d0x_h.density(s.distance);
    totals[0][el] += w.d0_electron[i];
    totals[1][el] += w.d0x_electron[i];
    totals[2][el] += w.d0x_hole[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto el = static_cast<std::size_t>(env.sites[i].element);
    w.d0_electron[i] /= totals[0][el];
    w.d0x_electron[i] /= totals[1][el];
    w.d0x_hole[i] /= totals[2][el];
  }
  return w;
}

/// Energy shifts of one isotope configuration, meV.
struct StateShifts {
  double d0_electron_mev = 0.0;
  double d0x_electron_mev = 0.0;  // per electron; the D0X holds two
  double d0x_hole_mev = 0.0;

  double d0_mev() const { return d0_electron_mev; }
  double d0x_mev() const { return 2.0 * d0x_electron_mev + d0x_hole_mev; }
  double transition_mev() const { return d0x_mev() - d0_mev(); }
  double transition_ghz() const { return mev_to_ghz(transition_mev()); }
};

inline StateShifts transition_shifts(const LatticeEnvironment& env, const EnvelopeWeights& w,
                                     const IsotopeAssignment& assignment, const SiteShiftTable& table) {
  if (assignment.masses.size() != env.sites.size() || w.d0_electron.size() != env.sites.size()) {
    throw Error(ErrorCode::EnvironmentMismatch, "assignment/weights do not match the environment");
  }
  StateShifts out;
  for (std::size_t i = 0; i < env.sites.size(); ++i) {
    const SiteShift& shift = table.lookup(env.sites[i].element, assignment.masses[i]);
    out.d0_electron_mev += w.d0_electron[i] * shift.w_conduction_mev;
    out.d0x_electron_mev += w.d0x_electron[i] * shift.w_conduction_mev;
    out.d0x_hole_mev += w.d0x_hole[i] * shift.w_valence_mev;
  }
  return out;
}

/// Transition shift (GHz) of one isotope configuration: electrons see the
/// conduction-band W, the hole the valence-band W.
inline double transition_shift(const LatticeEnvironment& env, const IsotopeAssignment& assignment,
                               const CarrierEnvelope& d0, const CarrierEnvelope& d0x_e,
                               const CarrierEnvelope& d0x_h, const SiteShiftTable& table) {
  if (assignment.masses.size() != env.sites.size()) {
    throw Error(ErrorCode::EnvironmentMismatch, "assignment has " + std::to_string(assignment.masses.size()) +
                                                    " sites, environment has " +
                                                    std::to_string(env.sites.size()));
  }
  return transition_shifts(env, envelope_weights(env, d0, d0x_e, d0x_h), assignment, table).transition_ghz();
}

struct BroadeningResult {
  std::vector<double> transition_ghz;  // one per sample
  std::vector<double> d0_ghz;
  std::vector<double> d0x_ghz;
  double mean_ghz = 0.0;
  double std_ghz = 0.0;
  double fwhm_ghz = 0.0;
  std::size_t site_count = 0;
  double cutoff_nm = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr double gaussian_fwhm_per_sigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

struct BroadeningOptions {
  std::size_t samples = 2000;
  double cutoff_nm = 0.0;  // 0 selects the material default
  std::uint64_t seed = 1;
  unsigned threads = 0;    // 0 selects hardware concurrency
};

/// Correlated Monte Carlo: each sample draws one isotope environment that the
/// D0 and D0X states share. Sample k always uses stream k of `seed`, so the
/// result does not depend on the thread count.
inline BroadeningResult broadening_distribution(const MaterialParams& p, const BroadeningOptions& opt) {
  if (opt.samples < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 samples");
  const double cutoff = opt.cutoff_nm > 0 ? opt.cutoff_nm : p.default_cutoff_nm;
  const LatticeEnvironment env = generate_sites(p, cutoff);
  const DonorState donor = solve_donor(p);
  const ExcitonState exciton = solve_exciton(p);
  const EnvelopeWeights w =
      envelope_weights(env, donor.envelope(), exciton.electron_envelope(), exciton.hole_envelope());
  const SiteShiftTable table = site_shift_table(p);

  // Flattened per-element lookup: cumulative abundance and W per isotope.
  struct Lookup {
    std::vector<double> cdf, wc, wv;
  };
  std::vector<Lookup> lookups(3);
  for (const auto& el : p.elements) {
    auto& l = lookups[static_cast<std::size_t>(el.element)];
    double c = 0.0;
    for (std::size_t k = 0; k < el.isotopes.size(); ++k) {
      c += el.isotopes[k].abundance;
      l.cdf.push_back(k + 1 == el.isotopes.size() ? 2.0 : c);
      const SiteShift& s = table.lookup(el.element, el.isotopes[k].mass_number);
      l.wc.push_back(s.w_conduction_mev);
      l.wv.push_back(s.w_valence_mev);
    }
  }
  std::vector<const Lookup*> site_lookup(env.sites.size());
  for (std::size_t i = 0; i < env.sites.size(); ++i) {
    const auto& l = lookups[static_cast<std::size_t>(env.sites[i].element)];
    if (l.cdf.empty()) throw Error(ErrorCode::InvalidArgument, "missing abundance table");
    site_lookup[i] = &l;
  }

  BroadeningResult r;
  r.site_count = env.sites.size();
  r.cutoff_nm = cutoff;
  r.seed = opt.seed;
  r.transition_ghz.resize(opt.samples);
  r.d0_ghz.resize(opt.samples);
  r.d0x_ghz.resize(opt.samples);

  auto run_sample = [&](std::size_t k) {
    StreamRng rng(opt.seed, k);
    StateShifts s;
    for (std::size_t i = 0; i < env.sites.size(); ++i) {
      const Lookup& l = *site_lookup[i];
      const double u = rng.uniform();
      std::size_t idx = 0;
      while (u >= l.cdf[idx]) ++idx;
      s.d0_electron_mev += w.d0_electron[i] * l.wc[idx];
      s.d0x_electron_mev += w.d0x_electron[i] * l.wc[idx];
      s.d0x_hole_mev += w.d0x_hole[i] * l.wv[idx];
    }
    r.transition_ghz[k] = s.transition_ghz();
    r.d0_ghz[k] = mev_to_ghz(s.d0_mev());
    r.d0x_ghz[k] = mev_to_ghz(s.d0x_mev());
  };

  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, opt.samples));
  if (threads <= 1) {
    for (std::size_t k = 0; k < opt.samples; ++k) run_sample(k);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t k = t; k < opt.samples; k += threads) run_sample(k);
      });
    }
  }

  double sum = 0.0;
  for (double v : r.transition_ghz) sum += v;
  r.mean_ghz = sum / static_cast<double>(opt.samples);
  double ss = 0.0;
  for (double v : r.transition_ghz) ss += (v - r.mean_ghz) * (v - r.mean_ghz);
  r.std_ghz = std::sqrt(ss / static_cast<double>(opt.samples - 1));
  r.fwhm_ghz = gaussian_fwhm_per_sigma * r.std_ghz;
  return r;
}

/// (sample_index, dE_D0, dE_D0X, dE_transition), all GHz.
inline void write_distribution_csv(std::ostream& os, const BroadeningResult& r) {
  os << "sample_index,dE_D0 (GHz),dE_D0X (GHz),dE_transition (GHz)\n";
  os.precision(12);
  for (std::size_t k = 0; k < r.transition_ghz.size(); ++k) {
    os << k << ',' << r.d0_ghz[k] << ',' << r.d0x_ghz[k] << ',' << r.transition_ghz[k] << '\n';
  }
}

/// Shift from swapping the donor atom between its two stable isotopes.
struct ImpurityShift {
  double d0_electron_mev = 0.0;
  double d0x_electron_mev = 0.0;
  double d0x_hole_mev = 0.0;
  double transition_mev = 0.0;
  double transition_ghz = 0.0;
  double p_d0_electron = 0.0;  // volume per atom x mean density inside the sphere
  double p_d0x_electron = 0.0;
  double p_d0x_hole = 0.0;
};

/// Mean of the envelope density inside a sphere of radius `radius_nm` at the
/// impurity, times the volume per atom.
inline double central_cell_weight(const CarrierEnvelope& e, double radius_nm, double volume_per_atom) {
  auto integrand = [&](double r) { return 4.0 * std::numbers::pi * r * r * e.density(r); };
  const double inside =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, radius_nm, 15, 1e-12);
  const double sphere = 4.0 / 3.0 * std::numbers::pi * radius_nm * radius_nm * radius_nm;
  return volume_per_atom * inside / sphere;
}

/// Heine-Henry donor-isotope shift per carrier; electrons carry 1/4 and the
/// hole 3/4 of the force-constant reduction. Zero for single-isotope donors.
inline ImpurityShift impurity_isotope_shift(const MaterialParams& p, const DonorState& d0, const ExcitonState& d0x) {
  ImpurityShift out;
  if (!p.impurity_isotopes) return out;
  const auto& m = *p.impurity_isotopes;
  const double volume_per_atom = 1.0 / atomic_density(p.lattice);
  out.p_d0_electron = central_cell_weight(d0.envelope(), p.impurity_sphere_nm, volume_per_atom);
  out.p_d0x_electron = central_cell_weight(d0x.electron_envelope(), p.impurity_sphere_nm, volume_per_atom);
  out.p_d0x_hole = central_cell_weight(d0x.hole_envelope(), p.impurity_sphere_nm, volume_per_atom);

  const double prefactor = 2.0 * p.debye_energy_mev / 5.0 * std::sqrt(m.reference_mass / m.lightest_mass) *
                           (m.mass_difference / m.lightest_mass) * p.gap_slope_high_t;
  constexpr double electron_share = 0.25;
  constexpr double hole_share = 0.75;
  out.d0_electron_mev = prefactor * electron_share * out.p_d0_electron;
  out.d0x_electron_mev = prefactor * electron_share * out.p_d0x_electron;
  out.d0x_hole_mev = prefactor * hole_share * out.p_d0x_hole;
  out.transition_mev = 2.0 * out.d0x_electron_mev + out.d0x_hole_mev - out.d0_electron_mev;
  out.transition_ghz = mev_to_ghz(out.transition_mev);
  return out;
}

}  // namespace donorline
