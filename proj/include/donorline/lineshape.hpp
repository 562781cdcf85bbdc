#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <json.hpp>

#include "donorline/error.hpp"
#include "donorline/least_squares.hpp"
#include "donorline/spectrum.hpp"
#include "donorline/units.hpp"

namespace donorline {

inline constexpr double fwhm_per_sigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

/// Faddeeva function w(x + iy), y >= 0, via Humlicek's four-region rational
/// approximation (relative accuracy ~1e-4).
inline std::complex<double> faddeeva_humlicek(double x, double y) {
  using C = std::complex<double>;
  const C t(y, -x);
  const double s = std::abs(x) + y;
  if (s >= 15.0) return t * 0.5641896 / (0.5 + t * t);
  if (s >= 5.5) {
    const C u = t * t;
    return t * (1.410474 + u * 0.5641896) / (0.75 + u * (3.0 + u));
  }
  if (y >= 0.195 * std::abs(x) - 0.176) {
    return (16.4955 + t * (20.20933 + t * (11.96482 + t * (3.778987 + t * 0.5642236)))) /
           (16.4955 + t * (38.82363 + t * (39.27121 + t * (21.69274 + t * (6.699398 + t)))));
  }
  const C u = t * t;
  return std::exp(u) -
         t * (36183.31 - u * (3321.9905 - u * (1540.787 - u * (219.0313 - u * (35.76683 - u * (1.320522 - u * 0.56419)))))) /
             (32066.6 - u * (24322.84 - u * (9022.228 - u * (2186.181 - u * (364.2191 - u * (61.57037 - u * (1.841439 - u)))))));
}

/// Unit-area Voigt profile centred at 0 with Gaussian FWHM `g` and Lorentzian FWHM `l`.
inline double voigt_profile(double x, double g, double l) {
  g = std::abs(g);
  l = std::abs(l);
  if (g == 0.0 && l == 0.0) return x == 0.0 ? INFINITY : 0.0;
  if (l <= 1e-12 * g) {
    const double sigma = g / fwhm_per_sigma;
    return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  }
  const double gamma = 0.5 * l;
  if (g <= 1e-12 * l) return gamma / (std::numbers::pi * (x * x + gamma * gamma));
  const double sigma = g / fwhm_per_sigma;
  const double scale = sigma * std::numbers::sqrt2;
  return faddeeva_humlicek(x / scale, gamma / scale).real() / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

struct VoigtParams {
  double center = 0.0;
  double fwhm_gaussian = 1.0;
  double fwhm_lorentzian = 1.0;
  double amplitude = 1.0;  // integrated area
  double baseline = 0.0;
};

inline double voigt_value(const VoigtParams& p, double x) {
  return p.baseline + p.amplitude * voigt_profile(x - p.center, p.fwhm_gaussian, p.fwhm_lorentzian);
}

inline double voigt_peak_height(const VoigtParams& p) {
  return p.amplitude * voigt_profile(0.0, p.fwhm_gaussian, p.fwhm_lorentzian);
}

/// Approximate total FWHM L/2 + sqrt(L^2/4 + G^2).
inline double whiting_combine(double fwhm_lorentzian, double fwhm_gaussian) {
  if (fwhm_lorentzian < 0 || fwhm_gaussian < 0) throw Error(ErrorCode::InvalidArgument, "widths must be >= 0");
  return 0.5 * fwhm_lorentzian + std::sqrt(0.25 * fwhm_lorentzian * fwhm_lorentzian + fwhm_gaussian * fwhm_gaussian);
}

/// Gaussian FWHM that combines with `fwhm_lorentzian` into `total`.
inline double whiting_invert(double total, double fwhm_lorentzian) {
  if (fwhm_lorentzian < 0 || total < fwhm_lorentzian) {
    throw Error(ErrorCode::InconsistentWidths, "total width " + std::to_string(total) +
                                                   " is below the Lorentzian width " + std::to_string(fwhm_lorentzian));
  }
  return std::sqrt(total * (total - fwhm_lorentzian));
}

/// Exact full width at half maximum of the Voigt profile (numerical).
inline double voigt_fwhm(double g, double l) {
  g = std::abs(g);
  l = std::abs(l);
  if (g == 0.0 && l == 0.0) return 0.0;
  const double half = 0.5 * voigt_profile(0.0, g, l);
  auto f = [&](double x) { return voigt_profile(x, g, l) - half; };
  double hi = g + l;
  while (f(hi) > 0) hi *= 2.0;
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, 0.0, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return r.first + r.second;  // 2 * half-width
}

/// Gaussian FWHM giving an exact total Voigt FWHM `total` with Lorentzian FWHM `l`.
inline double gaussian_for_total_fwhm(double total, double l) {
  l = std::abs(l);
  if (l > total) throw Error(ErrorCode::InconsistentWidths, "Lorentzian width exceeds the total width");
  if (l == total) return 0.0;
  auto f = [&](double g) { return voigt_fwhm(g, l) - total; };
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, 0.0, total, boost::math::tools::eps_tolerance<double>(48), iters);
  return 0.5 * (r.first + r.second);
}

/// Named parameters, 1-sigma uncertainties and covariance of a fit.
struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> sigmas;
  std::vector<bool> fixed;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;

  std::size_t index(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (names[k] == name) return k;
    }
    throw Error(ErrorCode::InvalidArgument, "no fit parameter named " + name);
  }
  double value(const std::string& name) const { return values[index(name)]; }
  double sigma(const std::string& name) const { return sigmas[index(name)]; }

  Eigen::MatrixXd correlation() const {
    const auto n = covariance.rows();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d = std::sqrt(covariance(i, i) * covariance(j, j));
        c(i, j) = d > 0 ? covariance(i, j) / d : (i == j ? 1.0 : 0.0);
      }
    }
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["parameters"] = nlohmann::json::object();
    j["sigmas"] = nlohmann::json::object();
    for (std::size_t k = 0; k < names.size(); ++k) {
      j["parameters"][names[k]] = values[k];
      j["sigmas"][names[k]] = sigmas[k];
    }
    j["parameter_order"] = names;
    const Eigen::MatrixXd c = correlation();
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < c.cols(); ++k) row.push_back(c(i, k));
      rows.push_back(row);
    }
    j["correlation"] = rows;
    j["residual_norm"] = residual_norm;
    j["chi2"] = chi2;
    j["dof"] = dof;
    j["n_iterations"] = iterations;
    return j;
  }
};

struct VoigtConstraints {
  std::optional<double> fwhm_gaussian;
  std::optional<double> fwhm_lorentzian;
  /// Exact total FWHM; the Lorentzian share stays free and the Gaussian width follows.
  std::optional<double> total_fwhm;
  std::optional<double> baseline;
};

struct VoigtFit {
  VoigtParams params;
  FitResult fit;
  double total_fwhm = 0.0;        // exact FWHM of the fitted profile
  double total_fwhm_sigma = 0.0;
  double whiting_fwhm = 0.0;
  double peak_height = 0.0;
  double peak_height_sigma = 0.0;
  double peak_value = 0.0;  // baseline + peak height
  double peak_value_sigma = 0.0;
};

namespace detail {

/// Baseline, centre and width guesses from the data: edge baseline, centroid
/// of the baseline-subtracted signal, half-maximum crossing width.
inline VoigtParams voigt_initial_guess(const Spectrum& s) {
  const std::size_t n = s.size();
  const std::size_t edge = std::max<std::size_t>(1, n / 10);
  double base = 0.0;
  for (std::size_t i = 0; i < edge; ++i) base += s.y[i] + s.y[n - 1 - i];
  base /= 2.0 * static_cast<double>(edge);
  base = std::min(base, *std::min_element(s.y.begin(), s.y.end()) + 0.5 * (base - *std::min_element(s.y.begin(), s.y.end())));

  const auto peak_it = std::max_element(s.y.begin(), s.y.end());
  const std::size_t peak = static_cast<std::size_t>(peak_it - s.y.begin());
  const double height = *peak_it - base;
  double sw = 0.0, sxw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::max(0.0, s.y[i] - base - 0.5 * height);
    sw += w;
    sxw += w * s.x[i];
  }
  const double center = sw > 0 ? sxw / sw : s.x[peak];
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && s.y[lo] - base > 0.5 * height) --lo;
  while (hi + 1 < n && s.y[hi] - base > 0.5 * height) ++hi;
  double width = s.x[hi] - s.x[lo];
  if (!(width > 0)) width = (s.x.back() - s.x.front()) / 10.0;

  VoigtParams p;
  p.center = center;
  p.baseline = base;
  p.fwhm_gaussian = 0.7 * width;
  p.fwhm_lorentzian = 0.5 * width;
  p.amplitude = height / voigt_profile(0.0, p.fwhm_gaussian, p.fwhm_lorentzian);
  return p;
}

}  // namespace detail

/// Weighted nonlinear least-squares Voigt fit. Uniform weights when the
/// spectrum carries no sigmas (covariance then scaled by the reduced chi^2).
inline VoigtFit fit_voigt(const Spectrum& s, std::optional<VoigtParams> init = std::nullopt,
                          const VoigtConstraints& constraints = {}, const LeastSquaresOptions& options = {}) {
  s.validate();
  if (s.size() < 5) throw Error(ErrorCode::DegenerateData, "need at least 5 points, got " + std::to_string(s.size()));
  const auto [ymin, ymax] = std::minmax_element(s.y.begin(), s.y.end());
  if (!(*ymax > *ymin)) throw Error(ErrorCode::DegenerateData, "spectrum is flat");
  if (constraints.total_fwhm && (constraints.fwhm_gaussian || constraints.fwhm_lorentzian)) {
    throw Error(ErrorCode::InvalidArgument, "total FWHM constraint excludes component constraints");
  }

  // Work relative to the window midpoint so steps and the initial guess do not
  // depend on the absolute frequency.
  const double ref = 0.5 * (s.x.front() + s.x.back());
  Spectrum local = s;
  for (double& x : local.x) x -= ref;
  VoigtParams start = detail::voigt_initial_guess(local);
  if (init) {
    start = *init;
    start.center -= ref;
  }
  if (constraints.fwhm_gaussian) start.fwhm_gaussian = *constraints.fwhm_gaussian;
  if (constraints.fwhm_lorentzian) start.fwhm_lorentzian = *constraints.fwhm_lorentzian;
  if (constraints.baseline) start.baseline = *constraints.baseline;
  const bool total_mode = constraints.total_fwhm.has_value();
  const double total = total_mode ? *constraints.total_fwhm : 0.0;
  if (total_mode) {
    if (!(total > 0)) throw Error(ErrorCode::InvalidArgument, "total FWHM must be positive");
    start.fwhm_lorentzian = std::clamp(start.fwhm_lorentzian, 0.05 * total, 0.95 * total);
    start.fwhm_gaussian = gaussian_for_total_fwhm(total, start.fwhm_lorentzian);
    if (!init) {
      const double height = *ymax - start.baseline;
      start.amplitude = height / voigt_profile(0.0, start.fwhm_gaussian, start.fwhm_lorentzian);
    }
  }

  // Parameter vector: centre - ref, G, L, amplitude, baseline.
  auto unpack = [&](const Eigen::VectorXd& v) {
    VoigtParams p{v[0], std::abs(v[1]), std::abs(v[2]), v[3], v[4]};
    if (total_mode) p.fwhm_gaussian = gaussian_for_total_fwhm(total, p.fwhm_lorentzian);
    return p;
  };
  auto residuals = [&](const Eigen::VectorXd& v) {
    const VoigtParams p = unpack(v);
    Eigen::VectorXd r(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d = voigt_value(p, local.x[i]) - s.y[i];
      r[static_cast<Eigen::Index>(i)] = s.has_sigma() ? d / s.sigma[i] : d;
    }
    return r;
  };
  Eigen::VectorXd v(5);
  v << start.center, start.fwhm_gaussian, start.fwhm_lorentzian, start.amplitude, start.baseline;
  std::vector<bool> free{true, !constraints.fwhm_gaussian && !total_mode, !constraints.fwhm_lorentzian, true,
                         !constraints.baseline};
  auto project = [&](Eigen::VectorXd& x) {
    x[1] = std::abs(x[1]);
    x[2] = std::abs(x[2]);
    if (total_mode) x[2] = std::min(x[2], total);
    x[3] = std::max(x[3], 0.0);
  };
  LeastSquaresOptions opt = options;
  opt.scale_covariance = !s.has_sigma();
  if (opt.parameter_scale.empty()) {
    const double width = std::max(start.fwhm_gaussian + start.fwhm_lorentzian, 1e-9 * (s.x.back() - s.x.front()));
    opt.parameter_scale = {width, width, width, std::max(std::abs(start.amplitude), 1e-300), *ymax - *ymin};
  }
  const LeastSquaresResult ls = levenberg_marquardt(residuals, v, free, opt, project);

  VoigtFit out;
  out.params = unpack(ls.params);
  out.params.center += ref;
  out.fit.names = {"center", "fwhm_gaussian", "fwhm_lorentzian", "amplitude", "baseline"};
  out.fit.values = {out.params.center, out.params.fwhm_gaussian, out.params.fwhm_lorentzian, out.params.amplitude,
                    out.params.baseline};
  out.fit.fixed = {false, !free[1], !free[2], false, !free[4]};
  out.fit.covariance = ls.covariance;
  out.fit.chi2 = ls.chi2;
  out.fit.residual_norm = std::sqrt(ls.chi2);
  out.fit.dof = ls.dof;
  out.fit.iterations = ls.iterations;

  // Derived quantities: propagate the covariance through numerical gradients.
  auto propagate = [&](auto&& fn) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(5);
    for (Eigen::Index k = 0; k < 5; ++k) {
      if (!free[static_cast<std::size_t>(k)]) continue;
      const double h = 1e-6 * std::max(std::abs(ls.params[k]), 1e-3);
      Eigen::VectorXd hi = ls.params, lo = ls.params;
      hi[k] += h;
      lo[k] -= h;
      grad[k] = (fn(unpack(hi)) - fn(unpack(lo))) / (2.0 * h);
    }
    return std::sqrt(std::max(0.0, grad.dot(ls.covariance * grad)));
  };
  if (total_mode) {
    // G follows L; its uncertainty comes from L.
    Eigen::MatrixXd cov = ls.covariance;
    const double h = 1e-6 * std::max(ls.params[2], 1e-3);
    Eigen::VectorXd hi = ls.params, lo = ls.params;
    hi[2] += h;
    lo[2] = std::max(0.0, lo[2] - h);
    const double dg = (unpack(hi).fwhm_gaussian - unpack(lo).fwhm_gaussian) / (hi[2] - lo[2]);
    out.fit.covariance(1, 1) = dg * dg * cov(2, 2);
    for (Eigen::Index k = 0; k < 5; ++k) {
      if (k == 1) continue;
      out.fit.covariance(1, k) = out.fit.covariance(k, 1) = dg * cov(2, k);
    }
  }
  out.fit.sigmas.resize(5);
  for (Eigen::Index k = 0; k < 5; ++k) out.fit.sigmas[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, out.fit.covariance(k, k)));

  out.total_fwhm = voigt_fwhm(out.params.fwhm_gaussian, out.params.fwhm_lorentzian);
  out.total_fwhm_sigma = total_mode ? 0.0 : propagate([](const VoigtParams& p) { return voigt_fwhm(p.fwhm_gaussian, p.fwhm_lorentzian); });
  out.whiting_fwhm = whiting_combine(out.params.fwhm_lorentzian, out.params.fwhm_gaussian);
  out.peak_height = voigt_peak_height(out.params);
  out.peak_height_sigma = propagate([](const VoigtParams& p) { return voigt_peak_height(p); });
  out.peak_value = out.peak_height + out.params.baseline;
  out.peak_value_sigma = propagate([](const VoigtParams& p) { return voigt_peak_height(p) + p.baseline; });
  return out;
}

inline nlohmann::json to_json(const VoigtFit& f) {
  nlohmann::json j = f.fit.to_json();
  j["total_fwhm"] = f.total_fwhm;
  j["total_fwhm_sigma"] = f.total_fwhm_sigma;
  j["whiting_fwhm"] = f.whiting_fwhm;
  j["peak_height"] = f.peak_height;
  j["peak_height_sigma"] = f.peak_height_sigma;
  j["peak_value"] = f.peak_value;
  j["peak_value_sigma"] = f.peak_value_sigma;
  return j;
}

/// Excitation-power modulation f(E) = c + A sin(2 pi v E + phi), E in meV.
struct OscillationParams {
  double c = 0.58;
  double amplitude = 0.07;
  double frequency_per_mev = 1.0 / 0.18;
  double phase = 0.0;

  double factor(double e_mev) const {
    return c + amplitude * std::sin(2.0 * std::numbers::pi * frequency_per_mev * e_mev + phase);
  }
};

/// Divides every intensity (and sigma) by f(E).
inline Spectrum oscillation_correct(const Spectrum& s, const OscillationParams& p = {}) {
  s.validate();
  Spectrum out = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double e = convert({s.x[i], s.x_unit}, Unit::meV).value;
    const double f = p.factor(e);
    if (!(f > 0)) {
      throw Error(ErrorCode::CorrectionSingular,
                  "correction factor " + std::to_string(f) + " at E = " + std::to_string(e) + " meV");
    }
    out.y[i] = s.y[i] / f;
    if (s.has_sigma()) out.sigma[i] = s.sigma[i] / f;
  }
  out.notes.push_back("oscillation_correct c=" + std::to_string(p.c) + " A=" + std::to_string(p.amplitude) +
                      " v=" + std::to_string(p.frequency_per_mev) + "/meV phi=" + std::to_string(p.phase));
  return out;
}

}  // namespace donorline
