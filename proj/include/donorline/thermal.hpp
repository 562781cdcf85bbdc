#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "donorline/error.hpp"
#include "donorline/least_squares.hpp"
#include "donorline/registry.hpp"
#include "donorline/units.hpp"

namespace donorline {

/// Temperatures below this evaluate the Bose factor as 0.
inline constexpr double bose_floor_k = 0.05;

inline double bose_occupation(double de_mev, double t_k) {
  if (t_k < bose_floor_k) return 0.0;
  const double x = de_mev / (constants::boltzmann_mev_per_k * t_k);
  if (x > 700.0) return 0.0;
  return 1.0 / std::expm1(x);
}

/// Linewidth Dnu0 + a N_ph(T), GHz.
inline double thermal_linewidth(const ThermalModel& m, double t_k) {
  if (!(t_k > 0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  return m.dnu0_ghz + m.a_ghz * bose_occupation(m.de_mev, t_k);
}

/// Temperature-dependent part only, GHz.
inline double thermal_term(const ThermalModel& m, double t_k) { return thermal_linewidth(m, t_k) - m.dnu0_ghz; }

/// Temperature where the thermal term equals `dnu_rad_ghz`.
inline double crossing_temperature(const ThermalModel& m, double dnu_rad_ghz) {
  if (!(dnu_rad_ghz > 0)) throw Error(ErrorCode::InvalidArgument, "radiative linewidth must be positive");
  if (!(m.a_ghz > 0) || !(m.de_mev > 0)) throw Error(ErrorCode::InvalidArgument, "model needs a > 0 and dE > 0");
  return m.de_mev / constants::boltzmann_mev_per_k / std::log1p(m.a_ghz / dnu_rad_ghz);
}

struct TemperaturePoint {
  double t_k = 0.0;
  double fwhm_ghz = 0.0;
  std::optional<double> sigma_ghz;
};

struct ThermalFit {
  ThermalModel model;
  double sigma_dnu0 = 0.0;
  double sigma_a = 0.0;
  double sigma_de = 0.0;  // 0 when dE was held fixed
  double chi2 = 0.0;
  int dof = 0;
  bool de_fitted = false;
  std::vector<double> residuals;  // data - model, GHz
};

/// Least squares of Dnu0 and a with dE fixed (linear problem); `fit_de`
/// additionally frees dE (nonlinear, started from the given value).
inline ThermalFit fit_thermal(const std::vector<TemperaturePoint>& points, double de_mev, bool fit_de = false) {
  const std::size_t n_par = fit_de ? 3 : 2;
  if (points.size() < 3 || points.size() <= n_par) {
    throw Error(ErrorCode::InsufficientData, "need more than " + std::to_string(n_par) + " points, got " +
                                                 std::to_string(points.size()));
  }
  if (!(de_mev > 0)) throw Error(ErrorCode::InvalidArgument, "dE must be positive");
  bool weighted = true;
  for (const auto& p : points) {
    if (!(p.t_k > 0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
    if (!p.sigma_ghz) weighted = false;
    else if (!(*p.sigma_ghz > 0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
  }
  auto weight = [&](const TemperaturePoint& p) { return weighted ? 1.0 / *p.sigma_ghz : 1.0; };
  const auto n = static_cast<Eigen::Index>(points.size());

  ThermalFit out;
  out.de_fitted = fit_de;
  if (!fit_de) {
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = points[static_cast<std::size_t>(i)];
      const double w = weight(p);
      a(i, 0) = w;
      a(i, 1) = w * bose_occupation(de_mev, p.t_k);
      b[i] = w * p.fwhm_ghz;
    }
    const Eigen::MatrixXd ata = a.transpose() * a;
    if (std::abs(ata.determinant()) <= 1e-14 * ata.squaredNorm()) {
      throw Error(ErrorCode::DegenerateData, "temperatures do not separate the two terms");
    }
    const Eigen::VectorXd x = ata.ldlt().solve(a.transpose() * b);
    out.chi2 = (a * x - b).squaredNorm();
    out.dof = static_cast<int>(n - 2);
    Eigen::MatrixXd cov = ata.inverse();
    if (!weighted) cov *= out.chi2 / out.dof;
    out.model = {x[0], x[1], de_mev};
    out.sigma_dnu0 = std::sqrt(cov(0, 0));
    out.sigma_a = std::sqrt(cov(1, 1));
  } else {
    auto residuals = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd r(n);
      const ThermalModel m{v[0], v[1], v[2]};
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        r[i] = weight(p) * (thermal_linewidth(m, p.t_k) - p.fwhm_ghz);
      }
      return r;
    };
    // Start from the fixed-dE solution.
    const ThermalFit seed = fit_thermal(points, de_mev, false);
    Eigen::VectorXd v(3);
    v << seed.model.dnu0_ghz, seed.model.a_ghz, de_mev;
    LeastSquaresOptions opt;
    opt.scale_covariance = !weighted;
    const auto ls = levenberg_marquardt(residuals, v, {true, true, true}, opt,
                                        [](Eigen::VectorXd& x) { x[2] = std::max(x[2], 1e-6); });
    out.model = {ls.params[0], ls.params[1], ls.params[2]};
    out.chi2 = ls.chi2;
    out.dof = ls.dof;
    out.sigma_dnu0 = std::sqrt(ls.covariance(0, 0));
    out.sigma_a = std::sqrt(ls.covariance(1, 1));
    out.sigma_de = std::sqrt(ls.covariance(2, 2));
  }
  for (const auto& p : points) out.residuals.push_back(p.fwhm_ghz - thermal_linewidth(out.model, p.t_k));
  return out;
}

inline nlohmann::json to_json(const ThermalModel& m) {
  return {{"dnu0_GHz", m.dnu0_ghz}, {"a_GHz", m.a_ghz}, {"dE_meV", m.de_mev}};
}

inline nlohmann::json to_json(const ThermalFit& f) {
  nlohmann::json j = to_json(f.model);
  j["sigma_dnu0_GHz"] = f.sigma_dnu0;
  j["sigma_a_GHz"] = f.sigma_a;
  j["dE_fitted"] = f.de_fitted;
  if (f.de_fitted) j["sigma_dE_meV"] = f.sigma_de;
  j["chi2"] = f.chi2;
  j["dof"] = f.dof;
  j["residuals_GHz"] = f.residuals;
  return j;
}

}  // namespace donorline
