#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "donorline/lineshape.hpp"
#include "donorline/thermal.hpp"
#include "oracles.hpp"

using namespace donorline;

namespace {

constexpr double pi = std::numbers::pi;

using oracle::convolution_oracle;

Spectrum synthetic(const VoigtParams& p, double lo, double hi, double step) {
  Spectrum s;
  for (double x = lo; x <= hi + 1e-9; x += step) {
    s.x.push_back(x);
    s.y.push_back(voigt_value(p, x));
  }
  return s;
}

void add_noise(Spectrum& s, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& y : s.y) y += noise(rng);
}

}  // namespace

TEST(VoigtProfile, MatchesConvolutionOracleAcrossWidthGrid) {
  const double widths[] = {0.5, 1.0, 2.0, 5.0, 10.0, 20.0};
  for (double g : widths) {
    for (double l : widths) {
      const double peak = convolution_oracle(0.0, g, l);
      for (double u : {0.0, 0.3, 0.7, 1.0, 1.5, 3.0, 8.0}) {
        const double x = u * (g + l);
        EXPECT_NEAR(voigt_profile(x, g, l), convolution_oracle(x, g, l), 0.005 * peak)
            << "G=" << g << " L=" << l << " x=" << x;
      }
    }
  }
}

TEST(VoigtProfile, UnitGaussianAndLorentzianWidthsAtCentre) {
  EXPECT_NEAR(voigt_profile(0.0, 1.0, 1.0), convolution_oracle(0.0, 1.0, 1.0), 0.005 * convolution_oracle(0.0, 1.0, 1.0));
}

TEST(VoigtProfile, PureLimits) {
  const double g = 3.0, sigma = g / fwhm_per_sigma;
  VoigtParams p{10.0, g, 0.0, 4.0, 1.5};
  EXPECT_DOUBLE_EQ(voigt_value(p, 10.0), 1.5 + 4.0 / (sigma * std::sqrt(2.0 * pi)));
  const double l = 2.0;
  for (double x : {0.0, 0.4, 3.0}) {
    EXPECT_DOUBLE_EQ(voigt_profile(x, 0.0, l), (l / 2) / (pi * (x * x + l * l / 4)));
  }
}

TEST(VoigtProfile, UnitArea) {
  for (auto [g, l] : {std::pair{1.0, 0.5}, std::pair{2.0, 2.0}, std::pair{0.5, 4.0}}) {
    // Lorentzian tails beyond +-X hold (2/pi) atan(gamma/X) of the area.
    const double span = 4000.0, h = 0.005;
    double sum = 0.0;
    for (double x = -span; x < span; x += h) sum += voigt_profile(x + 0.5 * h, g, l) * h;
    const double tail = 2.0 / pi * std::atan(0.5 * l / span);
    EXPECT_NEAR(sum + tail, 1.0, 2e-4) << g << " " << l;
  }
}

TEST(Whiting, ReferenceDecompositions) {
  EXPECT_NEAR(whiting_invert(7.0, 3.9), 4.6, 0.1);
  EXPECT_NEAR(whiting_invert(4.2, 3.9), 1.1, 0.1);
  EXPECT_DOUBLE_EQ(whiting_combine(0.0, 2.5), 2.5);
  EXPECT_DOUBLE_EQ(whiting_invert(3.0, 3.0), 0.0);
}

TEST(Whiting, CombineAndInvertAreMutualInverses) {
  for (double l = 0.0; l <= 20.0; l += 0.7) {
    for (double g = 0.0; g <= 20.0; g += 0.9) {
      const double total = whiting_combine(l, g);
      EXPECT_NEAR(whiting_invert(total, l), g, 1e-9 * std::max(1.0, g));
      EXPECT_NEAR(whiting_combine(l, whiting_invert(total, l)), total, 1e-9 * total);
    }
  }
}

TEST(Whiting, InconsistentWidths) {
  try {
    whiting_invert(3.0, 3.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InconsistentWidths);
  }
  EXPECT_THROW(gaussian_for_total_fwhm(3.0, 3.5), Error);
}

TEST(VoigtFwhm, ExactLimitsAndWhitingAgreement) {
  EXPECT_NEAR(voigt_fwhm(4.0, 0.0), 4.0, 1e-12);
  EXPECT_NEAR(voigt_fwhm(0.0, 4.0), 4.0, 1e-12);
  double worst = 0.0;
  for (double g = 0.5; g <= 20.0; g += 0.5) {
    for (double l = 0.5; l <= 20.0; l += 0.5) {
      const double exact = voigt_fwhm(g, l);
      // Half maximum reached at half the exact FWHM.
      EXPECT_NEAR(voigt_profile(0.5 * exact, g, l), 0.5 * voigt_profile(0.0, g, l), 1e-10 * voigt_profile(0.0, g, l));
      worst = std::max(worst, std::abs(whiting_combine(l, g) - exact) / exact);
    }
  }
  // The closed form is accurate to about 1.2% over this grid.
  EXPECT_LT(worst, 0.013);
}

TEST(VoigtFwhm, GaussianForTotalInvertsExactWidth) {
  for (double l : {0.0, 1.0, 3.9, 6.0}) {
    const double g = gaussian_for_total_fwhm(7.0, l);
    EXPECT_NEAR(voigt_fwhm(g, l), 7.0, 1e-9);
  }
}

TEST(FitVoigt, NoiselessRoundTrip) {
  const VoigtParams truth{812345.25, 4.6, 3.9, 120.0, 2.0};
  const auto fit = fit_voigt(synthetic(truth, truth.center - 40, truth.center + 40, 0.25));
  EXPECT_NEAR(fit.params.center, truth.center, 1e-6 * 10.0);
  EXPECT_NEAR(fit.params.fwhm_gaussian, truth.fwhm_gaussian, 1e-6 * truth.fwhm_gaussian);
  EXPECT_NEAR(fit.params.fwhm_lorentzian, truth.fwhm_lorentzian, 1e-6 * truth.fwhm_lorentzian);
  EXPECT_NEAR(fit.params.amplitude, truth.amplitude, 1e-6 * truth.amplitude);
  EXPECT_NEAR(fit.params.baseline, truth.baseline, 1e-6 * truth.amplitude);
  EXPECT_NEAR(fit.total_fwhm, voigt_fwhm(4.6, 3.9), 1e-6 * fit.total_fwhm);
  EXPECT_NEAR(fit.fit.value("fwhm_gaussian"), fit.params.fwhm_gaussian, 0.0);
}

TEST(FitVoigt, Snr20RecoversTotalFwhmOnAverage) {
  const double l = 3.0, g = gaussian_for_total_fwhm(7.0, l);
  const VoigtParams truth{0.0, g, l, 1.0, 0.0};
  const double noise = voigt_peak_height(truth) / 20.0;
  std::mt19937_64 rng(2024);
  double sum = 0.0;
  const int draws = 100;
  for (int k = 0; k < draws; ++k) {
    auto s = synthetic(truth, -30, 30, 0.5);
    add_noise(s, noise, rng);
    sum += fit_voigt(s).total_fwhm;
  }
  EXPECT_NEAR(sum / draws, 7.0, 0.07);
}

TEST(FitVoigt, PleSamplingGivesTenthGhzUncertainty) {
  // 7.1 GHz line sampled every 0.5 GHz at SNR 60 (0.1 GHz needs about SNR 50);
  // the reported sigma must also match the scatter over repeated noise draws.
  const double l = 3.9, g = gaussian_for_total_fwhm(7.1, l);
  const VoigtParams truth{0.0, g, l, 1.0, 0.0};
  const double noise = voigt_peak_height(truth) / 60.0;
  std::mt19937_64 rng(7);
  const int draws = 100;
  double sum = 0.0, sum2 = 0.0, sigma_sum = 0.0;
  for (int k = 0; k < draws; ++k) {
    auto s = synthetic(truth, -25, 25, 0.5);
    add_noise(s, noise, rng);
    const auto fit = fit_voigt(s);
    sum += fit.total_fwhm;
    sum2 += fit.total_fwhm * fit.total_fwhm;
    sigma_sum += fit.total_fwhm_sigma;
  }
  const double mean = sum / draws;
  const double scatter = std::sqrt((sum2 - draws * mean * mean) / (draws - 1));
  EXPECT_NEAR(mean, 7.1, 0.05);
  EXPECT_LE(sigma_sum / draws, 0.1);
  EXPECT_LE(scatter, 0.1);
  EXPECT_NEAR(sigma_sum / draws, scatter, 0.25 * scatter);

}

TEST(FitVoigt, PleUncertaintyScalesWithNoise) {
  const double l = 3.9, g = gaussian_for_total_fwhm(7.1, l);
  const VoigtParams truth{0.0, g, l, 1.0, 0.0};
  std::mt19937_64 rng(7);
  auto s20 = synthetic(truth, -25, 25, 0.5);
  add_noise(s20, voigt_peak_height(truth) / 20.0, rng);
  const double sigma20 = fit_voigt(s20).total_fwhm_sigma;
  EXPECT_GT(sigma20, 0.1);  // SNR 20 is not enough for a 0.1 GHz uncertainty
  EXPECT_LT(sigma20, 0.4);
}

TEST(FitVoigt, ShiftAndScaleInvariance) {
  const VoigtParams truth{0.0, 2.0, 1.5, 10.0, 0.3};
  std::mt19937_64 rng(11);
  auto base = synthetic(truth, -15, 15, 0.25);
  add_noise(base, 0.05, rng);
  const auto ref = fit_voigt(base);

  auto shifted = base;
  for (double& x : shifted.x) x += 1000.0;
  const auto fs = fit_voigt(shifted);
  EXPECT_NEAR(fs.params.center, ref.params.center + 1000.0, 1e-9 * 1000.0);
  EXPECT_NEAR(fs.params.fwhm_gaussian, ref.params.fwhm_gaussian, 1e-9 * ref.params.fwhm_gaussian);
  EXPECT_NEAR(fs.params.fwhm_lorentzian, ref.params.fwhm_lorentzian, 1e-9 * ref.params.fwhm_lorentzian);

  auto scaled = base;
  for (double& y : scaled.y) y *= 3.7;
  const auto fk = fit_voigt(scaled);
  EXPECT_NEAR(fk.params.center, ref.params.center, 1e-9);
  EXPECT_NEAR(fk.params.fwhm_gaussian, ref.params.fwhm_gaussian, 1e-9 * ref.params.fwhm_gaussian);
  EXPECT_NEAR(fk.params.fwhm_lorentzian, ref.params.fwhm_lorentzian, 1e-9 * ref.params.fwhm_lorentzian);
  EXPECT_NEAR(fk.params.amplitude, 3.7 * ref.params.amplitude, 1e-9 * fk.params.amplitude);
}

TEST(FitVoigt, DegenerateData) {
  Spectrum few;
  few.x = {0, 1, 2, 3};
  few.y = {0, 1, 1, 0};
  Spectrum flat;
  flat.x = {0, 1, 2, 3, 4, 5};
  flat.y.assign(6, 2.0);
  for (const auto* s : {&few, &flat}) {
    try {
      fit_voigt(*s);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
    }
  }
}

TEST(FitVoigt, FixedComponentAndTotalConstraints) {
  const VoigtParams truth{5.0, 4.0, 2.5, 30.0, 0.0};
  const auto s = synthetic(truth, -25, 35, 0.25);
  VoigtConstraints fix_g;
  fix_g.fwhm_gaussian = 4.0;
  const auto a = fit_voigt(s, std::nullopt, fix_g);
  EXPECT_EQ(a.params.fwhm_gaussian, 4.0);
  EXPECT_TRUE(a.fit.fixed[1]);
  EXPECT_EQ(a.fit.sigma("fwhm_gaussian"), 0.0);
  EXPECT_NEAR(a.params.fwhm_lorentzian, 2.5, 1e-6 * 2.5);

  VoigtConstraints fix_total;
  fix_total.total_fwhm = voigt_fwhm(4.0, 2.5);
  const auto b = fit_voigt(s, std::nullopt, fix_total);
  EXPECT_NEAR(b.total_fwhm, *fix_total.total_fwhm, 1e-9);
  EXPECT_NEAR(b.params.fwhm_lorentzian, 2.5, 1e-5);
  EXPECT_NEAR(b.params.amplitude, 30.0, 1e-5 * 30.0);

  VoigtConstraints both;
  both.total_fwhm = 5.0;
  both.fwhm_lorentzian = 1.0;
  EXPECT_THROW(fit_voigt(s, std::nullopt, both), Error);
}

TEST(FitVoigt, IterationCapRaisesFitDiverged) {
  const VoigtParams truth{0.0, 3.0, 2.0, 10.0, 0.0};
  LeastSquaresOptions opt;
  opt.max_iterations = 1;
  VoigtParams bad{6.0, 9.0, 0.2, 1.0, 0.0};
  try {
    fit_voigt(synthetic(truth, -20, 20, 0.5), bad, {}, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FitDiverged);
  }
}

TEST(FitVoigt, JsonCarriesFitSummary) {
  const auto fit = fit_voigt(synthetic({0.0, 2.0, 1.0, 5.0, 0.0}, -10, 10, 0.25));
  const auto j = to_json(fit);
  for (const char* key : {"parameters", "sigmas", "correlation", "residual_norm", "n_iterations", "total_fwhm"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["correlation"].size(), 5u);
  EXPECT_DOUBLE_EQ(j["correlation"][2][2].get<double>(), 1.0);
}

TEST(Oscillation, NoOscillationIsUniformRescale) {
  Spectrum s;
  s.x_unit = Unit::meV;
  s.x = {3377.0, 3377.1, 3377.2};
  s.y = {1.0, 2.0, 3.0};
  OscillationParams p;
  p.amplitude = 0.0;
  const auto out = oscillation_correct(s, p);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(out.y[i], s.y[i] / 0.58);
  EXPECT_EQ(out.notes.size(), 1u);
}

TEST(Oscillation, SineNodeDividesByOffset) {
  Spectrum s;
  s.x_unit = Unit::meV;
  s.x = {0.09, 0.18, 0.27};  // 2 pi v E = pi, 2 pi, 3 pi
  s.y = {1.0, 1.0, 1.0};
  const auto out = oscillation_correct(s);
  for (double y : out.y) EXPECT_NEAR(y, 1.0 / 0.58, 1e-12);
}

TEST(Oscillation, RoundTripInGhz) {
  OscillationParams p;
  p.phase = 0.4;
  Spectrum s;
  for (int i = 0; i < 200; ++i) {
    s.x.push_back(816500.0 + 0.5 * i);
    s.y.push_back(1.0 + 0.01 * i);
  }
  auto modulated = s;
  for (std::size_t i = 0; i < s.size(); ++i) modulated.y[i] *= p.factor(ghz_to_mev(s.x[i]));
  const auto out = oscillation_correct(modulated, p);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(out.y[i], s.y[i], 1e-9 * s.y[i]);
}

TEST(Oscillation, SingularCorrection) {
  Spectrum s;
  s.x_unit = Unit::meV;
  s.x = {0.0, 0.135, 0.2};  // sine reaches -1 at 0.135 meV
  s.y = {1, 1, 1};
  OscillationParams p;
  p.c = 0.05;
  try {
    oscillation_correct(s, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorrectionSingular);
  }
}

namespace {
ThermalModel model(Donor d) { return donor_optics(d).thermal; }

std::vector<TemperaturePoint> thermal_points(const ThermalModel& m, double t_lo, double t_hi, int n) {
  std::vector<TemperaturePoint> pts;
  for (int i = 0; i < n; ++i) {
    const double t = t_lo + (t_hi - t_lo) * i / (n - 1);
    pts.push_back({t, thermal_linewidth(m, t), std::nullopt});
  }
  return pts;
}
}  // namespace

TEST(Thermal, LowTemperatureLimit) {
  const auto m = model(Donor::Al);
  EXPECT_EQ(thermal_linewidth(m, 0.01), m.dnu0_ghz);
  EXPECT_EQ(thermal_linewidth(m, 0.04), m.dnu0_ghz);
  EXPECT_GT(thermal_linewidth(m, 1.0), m.dnu0_ghz);
  EXPECT_THROW(thermal_linewidth(m, 0.0), Error);
}

TEST(Thermal, ThermalTermAt1p7K) {
  EXPECT_NEAR(thermal_term(model(Donor::Al), 1.7) * 1e3, 20.0, 1.0);
  EXPECT_NEAR(thermal_term(model(Donor::Ga), 1.7) * 1e3, 4.6, 0.23);
  EXPECT_NEAR(thermal_term(model(Donor::In), 1.7) * 1e3, 0.05, 0.005);
}

TEST(Thermal, BoseFactorByHand) {
  // a / (exp(dE / kT) - 1) with k_B = 0.08617333262 meV/K.
  const double x = 1.26 / (0.08617333262 * 1.7);
  const double expected = 110.0 / (std::exp(x) - 1.0);
  EXPECT_NEAR(thermal_term(model(Donor::Al), 1.7), expected, 1e-9 * expected);
}

TEST(Thermal, MonotonicInTemperature) {
  for (Donor d : {Donor::Al, Donor::Ga, Donor::In}) {
    double prev = 0.0;
    for (double t = 0.1; t < 40.0; t *= 1.1) {
      const double w = thermal_linewidth(model(d), t);
      EXPECT_GE(w, prev);
      prev = w;
    }
  }
}

TEST(CrossingTemperature, ReferenceAlAndGa) {
  EXPECT_NEAR(crossing_temperature(model(Donor::Al), 0.5), 2.7, 0.05);
  EXPECT_NEAR(crossing_temperature(model(Donor::Ga), 0.4), 3.1, 0.05);
}

TEST(CrossingTemperature, ClosedFormAndDefinition) {
  const auto m = model(Donor::In);
  const double t = crossing_temperature(m, 0.1);
  EXPECT_NEAR(thermal_term(m, t), 0.1, 1e-12);
  ThermalModel unit{1.0, 0.3, 1.5};
  EXPECT_NEAR(crossing_temperature(unit, 0.3), 1.5 / (0.08617333262 * std::log(2.0)), 1e-9);
  EXPECT_THROW(crossing_temperature(unit, 0.0), Error);
}

TEST(FitThermal, NoiselessRecovery) {
  const auto m = model(Donor::Ga);
  const auto fit = fit_thermal(thermal_points(m, 1.5, 18.0, 12), m.de_mev);
  EXPECT_NEAR(fit.model.dnu0_ghz, m.dnu0_ghz, 1e-6 * m.dnu0_ghz);
  EXPECT_NEAR(fit.model.a_ghz, m.a_ghz, 1e-6 * m.a_ghz);
  EXPECT_EQ(fit.model.de_mev, m.de_mev);
  EXPECT_FALSE(fit.de_fitted);

  const auto free = fit_thermal(thermal_points(m, 1.5, 18.0, 12), 1.3, true);
  EXPECT_NEAR(free.model.de_mev, m.de_mev, 1e-6 * m.de_mev);
  EXPECT_NEAR(free.model.a_ghz, m.a_ghz, 1e-6 * m.a_ghz);
}

TEST(FitThermal, FivePercentNoiseAlLike) {
  const auto m = model(Donor::Al);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto pts = thermal_points(m, 1.5, 18.0, 15);
  for (auto& p : pts) {
    p.sigma_ghz = 0.05 * p.fwhm_ghz;
    p.fwhm_ghz += *p.sigma_ghz * unit(rng);
  }
  const auto fit = fit_thermal(pts, m.de_mev);
  EXPECT_NEAR(fit.model.a_ghz, 110.0, 10.0);
  EXPECT_GT(fit.sigma_a, 0.0);
  EXPECT_EQ(fit.dof, 13);
}

TEST(FitThermal, ResidualsPassRunsTest) {
  const auto m = model(Donor::Al);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto pts = thermal_points(m, 1.5, 18.0, 60);
  for (auto& p : pts) {
    p.sigma_ghz = 0.5;
    p.fwhm_ghz += 0.5 * unit(rng);
  }
  const auto fit = fit_thermal(pts, m.de_mev);
  // Wald-Wolfowitz runs test on residual signs, two-sided 95%.
  double n_pos = 0, n_neg = 0, runs = 1;
  for (std::size_t i = 0; i < fit.residuals.size(); ++i) {
    (fit.residuals[i] > 0 ? n_pos : n_neg) += 1;
    if (i > 0 && (fit.residuals[i] > 0) != (fit.residuals[i - 1] > 0)) runs += 1;
  }
  const double n = n_pos + n_neg;
  const double mu = 2 * n_pos * n_neg / n + 1;
  const double var = (mu - 1) * (mu - 2) / (n - 1);
  EXPECT_LT(std::abs(runs - mu) / std::sqrt(var), 1.96);
}

TEST(FitThermal, InsufficientData) {
  const auto m = model(Donor::Al);
  for (auto [n, free] : {std::pair{2, false}, std::pair{3, true}}) {
    try {
      fit_thermal(thermal_points(m, 2.0, 10.0, n), m.de_mev, free);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
    }
  }
}

TEST(FitThermal, DegenerateWhenOnlyFrozenTemperatures) {
  std::vector<TemperaturePoint> pts{{0.01, 7.0, {}}, {0.02, 7.1, {}}, {0.03, 6.9, {}}};
  try {
    fit_thermal(pts, 1.26);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
  }
}
