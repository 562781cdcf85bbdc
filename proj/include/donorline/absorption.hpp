#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <json.hpp>

#include "donorline/error.hpp"
#include "donorline/lineshape.hpp"
#include "donorline/spectrum.hpp"
#include "donorline/units.hpp"

namespace donorline {

inline constexpr double default_saturation_od = 11.0;
inline constexpr double detector_ceiling_od = 11.5;

struct TransmissionSetup {
  double thickness_cm = 0.03;
  double reflectance = 0.24;
  /// Transmissions below this are flagged saturated; default is the level
  /// where OD reaches the detector ceiling.
  std::optional<double> noise_floor;

  double single_face() const { return 1.0 - reflectance; }
  double floor() const {
    return noise_floor ? *noise_floor : single_face() * single_face() * std::exp(-detector_ceiling_od);
  }
  void validate() const {
    if (!(reflectance > 0 && reflectance < 1)) throw Error(ErrorCode::InvalidArgument, "reflectance must be in (0, 1)");
    if (!(thickness_cm > 0)) throw Error(ErrorCode::InvalidArgument, "thickness must be positive");
  }
};

struct OdSpectrum {
  Spectrum od;
  std::vector<bool> saturated;

  std::size_t saturated_count() const {
    std::size_t n = 0;
    for (bool b : saturated) n += b;
    return n;
  }
};

/// OD = ln(T_F^2 / T) pointwise.
inline OdSpectrum optical_depth(const Spectrum& transmission, const TransmissionSetup& setup) {
  setup.validate();
  transmission.validate();
  const double tf2 = setup.single_face() * setup.single_face();
  const double floor = setup.floor();
  OdSpectrum out;
  out.od = transmission;
  out.od.y_label = "OD";
  out.od.sigma.clear();
  for (std::size_t i = 0; i < transmission.size(); ++i) {
    const double t = transmission.y[i];
    if (!(t > 0 && t <= 1)) {
      throw Error(ErrorCode::NonPhysicalTransmission,
                  "transmission " + std::to_string(t) + " at point " + std::to_string(i) + " is outside (0, 1]");
    }
    out.od.y[i] = std::log(tf2 / t);
    // dOD = dT / T
    if (transmission.has_sigma()) out.od.sigma.push_back(transmission.sigma[i] / t);
    out.saturated.push_back(t < floor);
  }
  return out;
}

/// Inverse map T = T_F^2 exp(-OD).
inline double transmission_from_od(double od, const TransmissionSetup& setup) {
  const double tf = setup.single_face();
  return tf * tf * std::exp(-od);
}

struct OdPeakFit {
  double peak_od = 0.0;
  double peak_od_sigma = 0.0;
  std::size_t points_used = 0;
  std::size_t points_excluded = 0;
  VoigtFit fit;
};

/// Voigt fit of the wings (OD < saturation_od) with the total FWHM held at
/// `fixed_total_fwhm`; returns the extrapolated peak OD.
inline OdPeakFit fit_od_peak(const Spectrum& od, double fixed_total_fwhm, double saturation_od = default_saturation_od,
                             const std::vector<bool>& saturated = {}) {
  od.validate();
  if (!(fixed_total_fwhm > 0)) throw Error(ErrorCode::InvalidArgument, "fixed FWHM must be positive");
  Spectrum wings;
  wings.x_unit = od.x_unit;
  wings.y_label = od.y_label;
  for (std::size_t i = 0; i < od.size(); ++i) {
    const bool flagged = i < saturated.size() && saturated[i];
    if (flagged || !(od.y[i] < saturation_od)) continue;
    wings.x.push_back(od.x[i]);
    wings.y.push_back(od.y[i]);
    if (od.has_sigma()) wings.sigma.push_back(od.sigma[i]);
  }
  if (wings.size() < 5) {
    throw Error(ErrorCode::InsufficientWingData,
                std::to_string(wings.size()) + " unsaturated points, need at least 5");
  }
  OdPeakFit out;
  out.points_used = wings.size();
  out.points_excluded = od.size() - wings.size();

  VoigtConstraints c;
  c.total_fwhm = fixed_total_fwhm;
  std::optional<VoigtParams> init;
  if (out.points_excluded > 0) {
    // Centre on the excluded block; scale the area to the strongest wing point.
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < od.size(); ++i) {
      const bool flagged = i < saturated.size() && saturated[i];
      if (flagged || !(od.y[i] < saturation_od)) {
        lo = std::min(lo, od.x[i]);
        hi = std::max(hi, od.x[i]);
      }
    }
    VoigtParams p;
    p.center = 0.5 * (lo + hi);
    p.fwhm_lorentzian = 0.5 * fixed_total_fwhm;
    p.fwhm_gaussian = gaussian_for_total_fwhm(fixed_total_fwhm, p.fwhm_lorentzian);
    const std::size_t n = wings.size();
    p.baseline = std::min(wings.y.front(), wings.y[n - 1]);
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (wings.y[i] > wings.y[best]) best = i;
    }
    const double prof = voigt_profile(wings.x[best] - p.center, p.fwhm_gaussian, p.fwhm_lorentzian);
    p.amplitude = std::max(wings.y[best] - p.baseline, 1e-12) / prof;
    init = p;
  }
  out.fit = fit_voigt(wings, init, c);
  out.peak_od = out.fit.peak_value;
  out.peak_od_sigma = out.fit.peak_value_sigma;
  return out;
}

/// Radiative lifetime of the zero-phonon line.
inline double zpl_lifetime(double tau_total_ns, double zpl_fraction) {
  if (!(zpl_fraction > 0 && zpl_fraction <= 1)) throw Error(ErrorCode::InvalidArgument, "ZPL fraction must be in (0, 1]");
  if (!(tau_total_ns > 0)) throw Error(ErrorCode::InvalidArgument, "lifetime must be positive");
  return tau_total_ns / zpl_fraction;
}

struct DensityInputs {
  double degeneracy_ratio = 1.0;  // g_D0 / g_D0X
  double refractive_index = 2.4;
  double wavelength_nm = 369.0;
  double tau_rad_ns = 1.0;
  double thickness_cm = 0.03;

  void validate() const {
    if (!(degeneracy_ratio > 0 && refractive_index > 0 && wavelength_nm > 0 && tau_rad_ns > 0 && thickness_cm > 0)) {
      throw Error(ErrorCode::InvalidArgument, "density inputs must all be positive");
    }
  }
  /// N / integral(alpha dnu): 8 pi g (n / lambda)^2 tau, in cm^-2 s.
  double prefactor() const {
    const double lambda_cm = wavelength_nm * 1e-7;
    const double ratio = refractive_index / lambda_cm;
    return 8.0 * std::numbers::pi * degeneracy_ratio * ratio * ratio * tau_rad_ns * 1e-9;
  }
};

struct DensityResult {
  double density_cm3 = 0.0;
  double integrated_alpha = 0.0;  // cm^-1 Hz
  double tail_fraction = 0.0;     // estimated area outside the window
};

/// Lorentzian-tail bound on the area beyond the window, relative to the area inside.
inline double coverage_tail_fraction(const Spectrum& od_ghz, double area_od_ghz) {
  if (!(area_od_ghz > 0)) return 0.0;
  double sw = 0.0, sxw = 0.0;
  for (std::size_t i = 0; i < od_ghz.size(); ++i) {
    const double w = std::max(0.0, od_ghz.y[i]);
    sw += w;
    sxw += w * od_ghz.x[i];
  }
  const double c = sxw / sw;
  const double tail = std::max(0.0, od_ghz.y.front()) * std::abs(od_ghz.x.front() - c) +
                      std::max(0.0, od_ghz.y.back()) * std::abs(od_ghz.x.back() - c);
  return tail / area_od_ghz;
}

/// Donor density from an OD spectrum (abscissa GHz or meV): trapezoidal
/// integral of alpha = OD / d over frequency.
inline DensityResult donor_density(const Spectrum& od, const DensityInputs& in, bool check_coverage = true) {
  od.validate();
  in.validate();
  if (od.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 points to integrate");
  const Spectrum s = od.with_abscissa(Unit::GHz);
  double area = 0.0;  // OD * GHz
  for (std::size_t i = 1; i < s.size(); ++i) area += 0.5 * (s.y[i] + s.y[i - 1]) * (s.x[i] - s.x[i - 1]);
  DensityResult out;
  out.tail_fraction = coverage_tail_fraction(s, area);
  if (check_coverage && out.tail_fraction > 0.02) {
    throw Error(ErrorCode::IncompleteCoverage, "peak truncated: tails hold ~" +
                                                   std::to_string(100.0 * out.tail_fraction) + "% of the area");
  }
  out.integrated_alpha = area * 1e9 / in.thickness_cm;
  out.density_cm3 = in.prefactor() * out.integrated_alpha;
  return out;
}

inline nlohmann::json to_json(const DensityInputs& in) {
  return {{"degeneracy_ratio", in.degeneracy_ratio}, {"refractive_index", in.refractive_index},
          {"wavelength_nm", in.wavelength_nm},       {"tau_rad_ns", in.tau_rad_ns},
          {"thickness_cm", in.thickness_cm}};
}

}  // namespace donorline
