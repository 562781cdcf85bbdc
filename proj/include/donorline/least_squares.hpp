#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "donorline/error.hpp"

namespace donorline {

struct LeastSquaresOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-8;  // on the parameter step
  double initial_lambda = 1e-3;
  /// Scale the covariance by the reduced chi^2 (use when residuals are not
  /// already divided by known uncertainties).
  bool scale_covariance = true;
  /// Typical magnitude per parameter; sets the floor of both the relative
  /// step test and the finite-difference step. Empty: 1e-3 for all.
  std::vector<double> parameter_scale;
};

struct LeastSquaresResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // zero rows/columns for fixed parameters
  double chi2 = 0.0;
  int iterations = 0;
  int dof = 0;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) with a central-difference
/// Jacobian. `residuals(p)` returns the weighted residual vector; parameters
/// with `free[k] == false` stay at their start values. `project` may clamp a
/// trial point back into the feasible set.
template <class Residuals>
LeastSquaresResult levenberg_marquardt(Residuals&& residuals, Eigen::VectorXd start, const std::vector<bool>& free,
                                       const LeastSquaresOptions& opt = {},
                                       const std::function<void(Eigen::VectorXd&)>& project = {}) {
  const Eigen::Index n_par = start.size();
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0; k < n_par; ++k) {
    if (free[static_cast<std::size_t>(k)]) idx.push_back(k);
  }
  const auto n_free = static_cast<Eigen::Index>(idx.size());
  auto scale = [&](Eigen::Index k) {
    return opt.parameter_scale.empty() ? 1e-3 : std::abs(opt.parameter_scale[static_cast<std::size_t>(k)]);
  };

  auto jacobian = [&](const Eigen::VectorXd& p, Eigen::Index n_res) {
    Eigen::MatrixXd j(n_res, n_free);
    for (Eigen::Index c = 0; c < n_free; ++c) {
      const Eigen::Index k = idx[static_cast<std::size_t>(c)];
      const double h = 1e-6 * std::max(std::abs(p[k]), scale(k));
      Eigen::VectorXd hi = p, lo = p;
      hi[k] += h;
      lo[k] -= h;
      j.col(c) = (residuals(hi) - residuals(lo)) / (2.0 * h);
    }
    return j;
  };

  Eigen::VectorXd p = std::move(start);
  if (project) project(p);
  Eigen::VectorXd r = residuals(p);
  const Eigen::Index n_res = r.size();
  if (n_res <= n_free) throw Error(ErrorCode::InsufficientData, "fewer residuals than free parameters");
  double chi2 = r.squaredNorm();
  double lambda = opt.initial_lambda;
  int iter = 0;
  bool converged = n_free == 0;

  for (; iter < opt.max_iterations && !converged; ++iter) {
    const Eigen::MatrixXd j = jacobian(p, n_res);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd grad = j.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index c = 0; c < n_free; ++c) a(c, c) += lambda * std::max(jtj(c, c), 1e-300);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      Eigen::VectorXd trial = p;
      for (Eigen::Index c = 0; c < n_free; ++c) trial[idx[static_cast<std::size_t>(c)]] += step[c];
      if (project) project(trial);
      const Eigen::VectorXd r_trial = residuals(trial);
      const double chi2_trial = r_trial.squaredNorm();
      if (std::isfinite(chi2_trial) && chi2_trial <= chi2) {
        double rel = 0.0;
        for (Eigen::Index k : idx) rel = std::max(rel, std::abs(trial[k] - p[k]) / std::max({std::abs(p[k]), scale(k), 1e-300}));
        const bool flat = chi2 - chi2_trial <= 1e-15 * std::max(chi2, 1e-300);
        p = trial;
        r = r_trial;
        chi2 = chi2_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel < opt.relative_tolerance || (flat && rel < 1e3 * opt.relative_tolerance)) converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    // No downhill step at any damping: p is a minimum to working precision.
    if (!accepted) converged = true;
  }
  if (!converged) throw Error(ErrorCode::FitDiverged, "no convergence after " + std::to_string(iter) + " iterations");

  LeastSquaresResult out;
  out.params = p;
  out.chi2 = chi2;
  out.iterations = iter;
  out.dof = static_cast<int>(n_res - n_free);
  out.covariance = Eigen::MatrixXd::Zero(n_par, n_par);
  if (n_free > 0) {
    const Eigen::MatrixXd j = jacobian(p, n_res);
    Eigen::MatrixXd cov = (j.transpose() * j).completeOrthogonalDecomposition().pseudoInverse();
    if (opt.scale_covariance && out.dof > 0) cov *= chi2 / out.dof;
    for (Eigen::Index a = 0; a < n_free; ++a) {
      for (Eigen::Index b = 0; b < n_free; ++b) {
        out.covariance(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) = cov(a, b);
      }
    }
  }
  return out;
}

}  // namespace donorline
