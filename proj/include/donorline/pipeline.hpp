#pragma once

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "donorline/absorption.hpp"
#include "donorline/carrier_states.hpp"
#include "donorline/error.hpp"
#include "donorline/io.hpp"
#include "donorline/isotope_broadening.hpp"
#include "donorline/lineshape.hpp"
#include "donorline/registry.hpp"
#include "donorline/spin_structure.hpp"
#include "donorline/thermal.hpp"
#include "donorline/units.hpp"

#ifndef DONORLINE_VERSION
#define DONORLINE_VERSION "0.0.0"
#endif

namespace donorline {

using nlohmann::json;

inline constexpr int report_schema_version = 1;
inline constexpr const char* registry_dir_env = "DONORLINE_REGISTRY_DIR";

struct CommandSpec {
  std::string name;
  std::string summary;
  std::optional<Schema> input;  // required input schema, if any
  json defaults;                // parameter block with every key and its default
};

inline const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs = {
      {"fit-ple", "Voigt fit of a PLE spectrum", Schema::ple,
       {{"oscillation_correct", false},
        {"osc_c", 0.58},
        {"osc_amplitude", 0.07},
        {"osc_period_meV", 0.18},
        {"osc_phase", 0.0},
        {"fix_gaussian_GHz", nullptr},
        {"fix_lorentzian_GHz", nullptr},
        {"fix_total_GHz", nullptr}}},
      {"correct-oscillation", "divide out the excitation-power oscillation", Schema::ple,
       {{"c", 0.58}, {"amplitude", 0.07}, {"period_meV", 0.18}, {"phase", 0.0}, {"output_csv", nullptr}}},
      {"fit-temperature", "fit linewidth vs temperature with the phonon model", Schema::temperature_series,
       {{"dE_meV", nullptr}, {"fit_dE", false}}},
      {"crossing-temp", "temperature where the thermal term reaches the radiative limit", std::nullopt,
       {{"dnu_rad_GHz", nullptr},
        {"a_GHz", nullptr},
        {"dE_meV", nullptr},
        {"dnu0_GHz", nullptr},
        {"temperature_K", 1.7}}},
      {"compute-od", "optical depth from a transmission spectrum", Schema::transmission,
       {{"reflectance", 0.24}, {"thickness_cm", 0.03}, {"noise_floor", nullptr}}},
      {"fit-od-peak", "peak OD from the unsaturated wings", Schema::transmission,
       {{"reflectance", 0.24},
        {"thickness_cm", 0.03},
        {"noise_floor", nullptr},
        {"input_is_od", false},
        {"fixed_total_fwhm_GHz", nullptr},
        {"saturation_od", default_saturation_od}}},
      {"estimate-density", "donor density from the integrated absorption", Schema::transmission,
       {{"reflectance", 0.24},
        {"thickness_cm", 0.03},
        {"noise_floor", nullptr},
        {"input_is_od", false},
        {"refractive_index", 2.4},
        {"degeneracy_ratio", 1.0},
        {"wavelength_nm", nullptr},
        {"tau_rad_ns", nullptr},
        {"check_coverage", true}}},
      {"simulate-isotope", "Monte Carlo isotope-disorder broadening", std::nullopt,
       {{"samples", 2000}, {"seed", 1}, {"cutoff_nm", nullptr}, {"threads", 0}}},
      {"solve-states", "D0 and D0X envelope parameters", std::nullopt, {{"n_h", 0}, {"l_h", 0}}},
      {"impurity-shift", "donor-isotope shift of the transition", std::nullopt, json::object()},
      {"hyperfine", "67Zn dispersion linewidth and donor hyperfine structure", std::nullopt,
       {{"cutoff_nm", nullptr}, {"field_T", 0.0}, {"u2", nullptr}, {"g_e", default_electron_g}}},
      {"zeeman", "four-transition Zeeman pattern", std::nullopt,
       {{"g_e", default_electron_g},
        {"g_h", nullptr},
        {"field_T", 7.0},
        {"geometry", "Voigt"},
        {"faraday_branching", 0.99}}},
      {"whiting", "combine or invert the Voigt width approximation", std::nullopt,
       {{"mode", "invert"}, {"total_GHz", nullptr}, {"lorentzian_GHz", nullptr}, {"gaussian_GHz", nullptr}}},
  };
  return specs;
}

inline const CommandSpec& command_spec(const std::string& name) {
  for (const auto& c : command_specs()) {
    if (c.name == name) return c;
  }
  throw Error(ErrorCode::ConfigError, "unknown command '" + name + "'");
}

struct AnalysisConfig {
  std::string command;
  std::optional<std::string> input;
  std::optional<std::string> output;
  std::optional<std::string> plot_dir;
  std::string material = "ZnO";
  std::string donor = "Al";
  json overrides = json::object();
  json params = json::object();  // every key of the command's defaults

  json to_json() const {
    json j{{"command", command}, {"material", material}, {"donor", donor}, {"overrides", overrides}};
    j["input"] = input ? json(*input) : json(nullptr);
    j["output"] = output ? json(*output) : json(nullptr);
    j["plot_dir"] = plot_dir ? json(*plot_dir) : json(nullptr);
    j["params"] = params;
    return j;
  }
};

/// Sets one parameter; the key must exist in the command's defaults.
inline void set_param(AnalysisConfig& cfg, const std::string& key, const json& value) {
  const auto& spec = command_spec(cfg.command);
  if (!spec.defaults.contains(key)) {
    throw Error(ErrorCode::ConfigError, "unknown parameter '" + key + "' for " + cfg.command);
  }
  const json& d = spec.defaults.at(key);
  if (!value.is_null()) {
    const bool ok = d.is_null() ? (value.is_number() || value.is_string())
                                : (d.is_boolean() ? value.is_boolean()
                                                  : (d.is_number() ? value.is_number() : value.is_string()));
    if (!ok) throw Error(ErrorCode::ConfigError, "parameter '" + key + "' has the wrong type");
    if (d.is_number_integer() && !value.is_number_integer()) {
      throw Error(ErrorCode::ConfigError, "parameter '" + key + "' must be an integer");
    }
  }
  cfg.params[key] = value;
}

/// Strict parse. `command` (non-empty) takes precedence over the file's.
inline AnalysisConfig parse_config(const json& j, const std::string& command = "") {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  AnalysisConfig cfg;
  if (!command.empty()) cfg.command = command;
  else if (j.contains("command") && j["command"].is_string()) cfg.command = j["command"].get<std::string>();
  else throw Error(ErrorCode::ConfigError, "config names no command");
  const auto& spec = command_spec(cfg.command);
  cfg.params = spec.defaults;

  auto str = [](const json& v, const std::string& key) {
    if (!v.is_string()) throw Error(ErrorCode::ConfigError, "'" + key + "' must be a string");
    return v.get<std::string>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "command") {
      if (!value.is_string()) throw Error(ErrorCode::ConfigError, "'command' must be a string");
    } else if (key == "input") {
      if (!value.is_null()) cfg.input = str(value, key);
    } else if (key == "output") {
      if (!value.is_null()) cfg.output = str(value, key);
    } else if (key == "plot_dir") {
      if (!value.is_null()) cfg.plot_dir = str(value, key);
    } else if (key == "material") {
      cfg.material = str(value, key);
    } else if (key == "donor") {
      cfg.donor = str(value, key);
    } else if (key == "overrides") {
      if (!value.is_object()) throw Error(ErrorCode::ConfigError, "'overrides' must be an object");
      cfg.overrides = value;
    } else if (key == "params") {
      if (!value.is_object()) throw Error(ErrorCode::ConfigError, "'params' must be an object");
      for (const auto& [pk, pv] : value.items()) set_param(cfg, pk, pv);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
  }
  return cfg;
}

inline AnalysisConfig load_config(const std::string& path, const std::string& command = "") {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return parse_config(j, command);
}

/// A run's output. `data` follows the versioned report schema.
struct Report {
  json data;

  const json& results() const { return data.at("results"); }
  bool has_series(const std::string& name) const {
    return data.contains("series") && data["series"].contains(name);
  }
  /// Serialized report without the timestamp (for determinism checks).
  std::string canonical() const {
    json copy = data;
    copy.erase("generated_at");
    return copy.dump(2);
  }
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::optional<double> opt_number(const json& params, const std::string& key) {
  const json& v = params.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw Error(ErrorCode::ConfigError, "parameter '" + key + "' must be a number");
  return v.get<double>();
}

inline double number(const json& params, const std::string& key) {
  const auto v = opt_number(params, key);
  if (!v) throw Error(ErrorCode::ConfigError, "parameter '" + key + "' is required");
  return *v;
}

struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  json to_json() const { return {{"columns", columns}, {"rows", rows}}; }
};

/// Registry entry with the optional override directory and the config's own
/// override block applied (in that order).
inline MaterialParams resolve_material(const AnalysisConfig& cfg, std::vector<std::string>& notes) {
  const Material m = parse_material(cfg.material);
  const Donor d = parse_donor(cfg.donor);
  MaterialParams p = material_params(m, d);
  if (const char* dir = std::getenv(registry_dir_env); dir != nullptr && *dir != '\0') {
    const std::filesystem::path file = std::filesystem::path(dir) / "registry.json";
    if (std::filesystem::exists(file)) {
      json reg;
      try {
        reg = json::parse(read_file(file.string()));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, file.string() + ": " + e.what());
      }
      const std::string key = cfg.material + "/" + cfg.donor;
      if (reg.contains(key)) {
        apply_overrides(p, reg[key]);
        notes.push_back("registry entry " + key + " overridden from " + file.string());
      }
    }
  }
  if (!cfg.overrides.empty()) {
    apply_overrides(p, cfg.overrides);
    notes.push_back("registry entry modified by config overrides: " + cfg.overrides.dump());
  }
  validate(p);
  return p;
}

inline void material_notes(const MaterialParams& p, std::vector<std::string>& notes) {
  notes.push_back("CODATA 2018 constants");
  notes.push_back("effective masses, dielectric constant and donor binding energy from the built-in registry");
  if (p.material == Material::Si) {
    notes.push_back("Si Debye energy is a literature default (not used by the isotope Monte Carlo)");
  } else {
    notes.push_back("Debye energy 35.8 meV and high-temperature gap slope 3.24 are literature defaults");
  }
}

struct LoadedInput {
  LoadedData data;
  json record;
};

inline LoadedInput load_input(const AnalysisConfig& cfg, Schema schema) {
  if (!cfg.input) throw Error(ErrorCode::ConfigError, cfg.command + " needs an input file");
  const std::string text = read_file(*cfg.input);
  LoadedInput out{parse_csv(text, schema, *cfg.input), json::object()};
  out.record = {{"path", *cfg.input},
                {"schema", std::string(to_string(schema))},
                {"sha256", sha256_hex(text)},
                {"bytes", text.size()}};
  return out;
}

inline Series spectrum_series(const Spectrum& s, const std::string& y_name) {
  Series out;
  out.columns = {"x (" + std::string(to_string(s.x_unit)) + ")", y_name};
  for (std::size_t i = 0; i < s.size(); ++i) out.rows.push_back({s.x[i], s.y[i]});
  return out;
}

inline OdSpectrum od_from_input(const LoadedData& in, const json& params) {
  TransmissionSetup setup;
  setup.reflectance = number(params, "reflectance");
  setup.thickness_cm = number(params, "thickness_cm");
  setup.noise_floor = opt_number(params, "noise_floor");
  if (params.contains("input_is_od") && params.at("input_is_od").get<bool>()) {
    OdSpectrum od;
    od.od = in.spectrum;
    od.saturated.assign(in.spectrum.size(), false);
    return od;
  }
  return optical_depth(in.spectrum, setup);
}

}  // namespace detail

/// Executes one command. Module errors are rethrown with the command name
/// prefixed; the error code is preserved.
inline Report run(const AnalysisConfig& cfg) {
  using detail::number;
  using detail::opt_number;
  command_spec(cfg.command);  // rejects unknown commands
  const json& params = cfg.params;
  json results = json::object();
  json inputs = json::array();
  std::map<std::string, detail::Series> series;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;

  auto load = [&](Schema schema) {
    auto in = detail::load_input(cfg, schema);
    inputs.push_back(in.record);
    for (const auto& w : in.data.warnings) warnings.push_back(w);
    return in.data;
  };

  try {
    const std::string& c = cfg.command;
    if (c == "fit-ple" || c == "correct-oscillation") {
      LoadedData in = load(Schema::ple);
      Spectrum s = in.spectrum;
      const bool correct = c == "correct-oscillation" || params.at("oscillation_correct").get<bool>();
      if (correct) {
        const std::string pre = c == "fit-ple" ? "osc_" : "";
        OscillationParams op;
        op.c = number(params, pre + "c");
        op.amplitude = number(params, pre + "amplitude");
        op.frequency_per_mev = 1.0 / number(params, pre + "period_meV");
        op.phase = number(params, pre + "phase");
        s = oscillation_correct(s, op);
        results["oscillation"] = {{"c", op.c},
                                  {"amplitude", op.amplitude},
                                  {"frequency_per_meV", op.frequency_per_mev},
                                  {"phase", op.phase}};
        notes.push_back("oscillation constants c = 0.58, A = 0.07, period 0.18 meV are literature calibration values; "
                        "the phase is experiment-specific");
      }
      if (c == "correct-oscillation") {
        series["corrected"] = detail::spectrum_series(s, s.y_label);
        if (const json& out = params.at("output_csv"); !out.is_null()) {
          std::ofstream f(out.get<std::string>());
          if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + out.get<std::string>());
          write_spectrum_csv(f, s, in.columns[1].unit);
          results["output_csv"] = out;
        }
        results["points"] = s.size();
      } else {
        const Spectrum g = s.with_abscissa(Unit::GHz);
        VoigtConstraints vc;
        vc.fwhm_gaussian = opt_number(params, "fix_gaussian_GHz");
        vc.fwhm_lorentzian = opt_number(params, "fix_lorentzian_GHz");
        vc.total_fwhm = opt_number(params, "fix_total_GHz");
        const VoigtFit fit = fit_voigt(g, std::nullopt, vc);
        results["fit"] = to_json(fit);
        results["units"] = "GHz";
        detail::Series curve;
        curve.columns = {"x (GHz)", "data", "model", "residual"};
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double m = voigt_value(fit.params, g.x[i]);
          curve.rows.push_back({g.x[i], g.y[i], m, g.y[i] - m});
        }
        series["fit"] = curve;
        if (!g.has_sigma()) notes.push_back("no per-point uncertainties: uniform weights, covariance scaled by reduced chi^2");
      }
    } else if (c == "fit-temperature") {
      LoadedData in = load(Schema::temperature_series);
      const Donor d = parse_donor(cfg.donor);
      const auto de = opt_number(params, "dE_meV");
      const double de_mev = de ? *de : donor_optics(d).thermal.de_mev;
      if (!de) notes.push_back("D0X-D0X* splitting taken from the registry (literature value)");
      const ThermalFit fit = fit_thermal(in.points, de_mev, params.at("fit_dE").get<bool>());
      results["fit"] = to_json(fit);
      detail::Series data, model;
      data.columns = {"T (K)", "fwhm (GHz)", "residual (GHz)"};
      for (std::size_t i = 0; i < in.points.size(); ++i) {
        data.rows.push_back({in.points[i].t_k, in.points[i].fwhm_ghz, fit.residuals[i]});
      }
      model.columns = {"T (K)", "linewidth (GHz)"};
      const double t_lo = in.points.front().t_k, t_hi = in.points.back().t_k;
      for (int k = 0; k < 200; ++k) {
        const double t = t_lo + (t_hi - t_lo) * k / 199.0;
        model.rows.push_back({t, thermal_linewidth(fit.model, t)});
      }
      series["data"] = data;
      series["model_curve"] = model;
    } else if (c == "crossing-temp") {
      const Donor d = parse_donor(cfg.donor);
      const DonorOptics o = donor_optics(d);
      ThermalModel m = o.thermal;
      if (auto v = opt_number(params, "a_GHz")) m.a_ghz = *v;
      if (auto v = opt_number(params, "dE_meV")) m.de_mev = *v;
      if (auto v = opt_number(params, "dnu0_GHz")) m.dnu0_ghz = *v;
      const auto rad = opt_number(params, "dnu_rad_GHz");
      const double dnu_rad = rad ? *rad : o.radiative_linewidth_ghz;
      const double t_eval = number(params, "temperature_K");
      results["model"] = to_json(m);
      results["dnu_rad_GHz"] = dnu_rad;
      results["crossing_temperature_K"] = crossing_temperature(m, dnu_rad);
      results["thermal_term_MHz"] = 1e3 * thermal_term(m, t_eval);
      results["temperature_K"] = t_eval;
      notes.push_back("thermal model parameters default to literature fit values for " + cfg.donor);
      if (!rad) notes.push_back("radiative linewidth is the rounded literature value");
      detail::Series curve;
      curve.columns = {"T (K)", "linewidth (GHz)"};
      for (int k = 0; k < 200; ++k) {
        const double t = 0.5 + 19.5 * k / 199.0;
        curve.rows.push_back({t, thermal_linewidth(m, t)});
      }
      series["model_curve"] = curve;
    } else if (c == "compute-od") {
      LoadedData in = load(Schema::transmission);
      const OdSpectrum od = detail::od_from_input(in, params);
      detail::Series s;
      s.columns = {"x (" + std::string(to_string(od.od.x_unit)) + ")", "OD", "saturated"};
      for (std::size_t i = 0; i < od.od.size(); ++i) s.rows.push_back({od.od.x[i], od.od.y[i], od.saturated[i] ? 1.0 : 0.0});
      series["od"] = s;
      results["points"] = od.od.size();
      results["saturated_points"] = od.saturated_count();
      results["max_od"] = *std::max_element(od.od.y.begin(), od.od.y.end());
      notes.push_back("reflectance default 0.24 and thickness 300 um are literature sample values");
    } else if (c == "fit-od-peak") {
      LoadedData in = load(Schema::transmission);
      const OdSpectrum od = detail::od_from_input(in, params);
      const Spectrum g = od.od.with_abscissa(Unit::GHz);
      const auto fwhm = opt_number(params, "fixed_total_fwhm_GHz");
      if (!fwhm) throw Error(ErrorCode::ConfigError, "fixed_total_fwhm_GHz is required");
      const OdPeakFit fit = fit_od_peak(g, *fwhm, number(params, "saturation_od"), od.saturated);
      results["peak_od"] = fit.peak_od;
      results["peak_od_sigma"] = fit.peak_od_sigma;
      results["points_used"] = fit.points_used;
      results["points_excluded"] = fit.points_excluded;
      results["fit"] = to_json(fit.fit);
      detail::Series s;
      s.columns = {"x (GHz)", "OD", "model"};
      for (std::size_t i = 0; i < g.size(); ++i) s.rows.push_back({g.x[i], g.y[i], voigt_value(fit.fit.params, g.x[i])});
      series["od_fit"] = s;
    } else if (c == "estimate-density") {
      LoadedData in = load(Schema::transmission);
      const OdSpectrum od = detail::od_from_input(in, params);
      const Donor d = parse_donor(cfg.donor);
      DensityInputs di;
      di.refractive_index = number(params, "refractive_index");
      di.degeneracy_ratio = number(params, "degeneracy_ratio");
      di.thickness_cm = number(params, "thickness_cm");
      const auto lambda = opt_number(params, "wavelength_nm");
      const auto tau = opt_number(params, "tau_rad_ns");
      if (!lambda || !tau) {
        const DonorOptics o = donor_optics(d);
        if (!lambda) {
          di.wavelength_nm = o.wavelength_nm;
          notes.push_back("transition wavelength is a literature default");
        }
        if (!tau) {
          di.tau_rad_ns = zpl_lifetime(o.lifetime_total_ns, o.zpl_fraction());
          notes.push_back("ZPL radiative lifetime from the registry (literature value)");
        }
      }
      if (lambda) di.wavelength_nm = *lambda;
      if (tau) di.tau_rad_ns = *tau;
      notes.push_back("refractive index " + std::to_string(di.refractive_index) +
                      (params.at("refractive_index") == json(2.4) ? " is a literature default" : " set by config"));
      notes.push_back("degeneracy ratio g_D0/g_D0X defaults to 1");
      if (od.saturated_count() > 0) {
        warnings.push_back(std::to_string(od.saturated_count()) +
                           " saturated points integrated as measured; the density is a lower bound");
      }
      const DensityResult r = donor_density(od.od, di, params.at("check_coverage").get<bool>());
      results["density_cm-3"] = r.density_cm3;
      results["integrated_alpha_cm-1_Hz"] = r.integrated_alpha;
      results["tail_fraction"] = r.tail_fraction;
      results["assumed"] = to_json(di);
    } else if (c == "simulate-isotope") {
      const MaterialParams p = detail::resolve_material(cfg, notes);
      detail::material_notes(p, notes);
      BroadeningOptions opt;
      opt.samples = static_cast<std::size_t>(params.at("samples").get<long long>());
      opt.seed = params.at("seed").get<std::uint64_t>();
      opt.threads = params.at("threads").get<unsigned>();
      if (auto v = opt_number(params, "cutoff_nm")) opt.cutoff_nm = *v;
      const BroadeningResult r = broadening_distribution(p, opt);
      results["fwhm_GHz"] = r.fwhm_ghz;
      results["std_GHz"] = r.std_ghz;
      results["mean_GHz"] = r.mean_ghz;
      results["site_count"] = r.site_count;
      results["cutoff_nm"] = r.cutoff_nm;
      results["samples"] = opt.samples;
      results["seed"] = r.seed;
      detail::Series s;
      s.columns = {"sample_index", "dE_D0 (GHz)", "dE_D0X (GHz)", "dE_transition (GHz)"};
      for (std::size_t k = 0; k < r.transition_ghz.size(); ++k) {
        s.rows.push_back({static_cast<double>(k), r.d0_ghz[k], r.d0x_ghz[k], r.transition_ghz[k]});
      }
      series["shifts"] = s;
      notes.push_back("isotope abundances and dE/dM coefficients from the built-in registry");
    } else if (c == "solve-states") {
      const MaterialParams p = detail::resolve_material(cfg, notes);
      detail::material_notes(p, notes);
      const DonorState d = solve_donor(p);
      const ExcitonState x = solve_exciton(p, params.at("n_h").get<int>(), params.at("l_h").get<int>());
      results["donor"] = {{"a_nm", d.a_nm},
                          {"n", d.n},
                          {"hydrogenic_meV", d.hydrogenic_mev},
                          {"binding_meV", d.binding_mev},
                          {"mean_radius_nm", d.mean_radius_nm},
                          {"bohr_radius_nm", d.bohr_radius_nm}};
      results["exciton"] = {{"a_e_nm", x.electron_radius_nm},
                            {"b_nm", x.b_nm},
                            {"D_meV", x.depth_mev},
                            {"lambda", x.lambda},
                            {"hole_decay_per_nm", x.hole_decay_per_nm},
                            {"hole_energy_meV", x.hole_energy_mev},
                            {"energy_meV", x.total_energy_mev},
                            {"n_h", x.n_h},
                            {"l_h", x.l_h}};
      results["rovib_00_meV"] = rovib_energy(x.depth_mev, x.b_nm, p.hole_mass, 0, 0);
      const auto de = solve_donor(p).envelope();
      const auto ee = x.electron_envelope();
      const auto he = x.hole_envelope();
      detail::Series s;
      s.columns = {"r (nm)", "D0 electron (nm^-3)", "D0X electron (nm^-3)", "D0X hole (nm^-3)"};
      for (int k = 0; k < 200; ++k) {
        const double r = 15.0 * k / 199.0;
        s.rows.push_back({r, de.density(r), ee.density(r), he.density(r)});
      }
      series["envelopes"] = s;
    } else if (c == "impurity-shift") {
      const MaterialParams p = detail::resolve_material(cfg, notes);
      detail::material_notes(p, notes);
      const ImpurityShift r = impurity_isotope_shift(p, solve_donor(p), solve_exciton(p));
      results = {{"transition_MHz", r.transition_ghz * 1e3},
                 {"transition_meV", r.transition_mev},
                 {"d0_electron_meV", r.d0_electron_mev},
                 {"d0x_electron_meV", r.d0x_electron_mev},
                 {"d0x_hole_meV", r.d0x_hole_mev},
                 {"P_d0_electron", r.p_d0_electron},
                 {"P_d0x_electron", r.p_d0x_electron},
                 {"P_d0x_hole", r.p_d0x_hole},
                 {"applicable", p.impurity_isotopes.has_value()}};
      if (!p.impurity_isotopes) warnings.push_back(cfg.donor + " has a single stable isotope; shift is zero");
    } else if (c == "hyperfine") {
      const MaterialParams p = detail::resolve_material(cfg, notes);
      if (p.material != Material::ZnO) throw Error(ErrorCode::UnknownDonor, "hyperfine model covers ZnO donors only");
      const auto cut = opt_number(params, "cutoff_nm");
      const LatticeEnvironment env = generate_sites(p, cut ? *cut : p.default_cutoff_nm);
      HyperfineParams hp = hyperfine_params(parse_donor(cfg.donor));
      hp.g_e = number(params, "g_e");
      const auto u2 = opt_number(params, "u2");
      hp.u2 = u2 ? *u2 : calibrate_u2(env);
      if (!u2) notes.push_back("u2 calibrated so (ZnO, Al) gives 22 MHz on the same environment");
      notes.push_back("hyperfine constants A and nuclear spins are literature values");
      notes.push_back("67Zn: I = 5/2, mu = 0.874 mu_N, abundance 4.1%");
      const HyperfineDispersion disp = hyperfine_dispersion(p, env, hp);
      const HyperfineSplitting split = hyperfine_splitting(hp, number(params, "field_T"));
      results["u2"] = hp.u2;
      results["dispersion"] = to_json(disp);
      results["splitting"] = to_json(split);
      results["A_MHz"] = hp.a_mhz;
      results["I"] = hp.nuclear_spin;
    } else if (c == "zeeman") {
      ZeemanScheme z;
      z.geometry = parse_geometry(params.at("geometry").get<std::string>());
      z.g_e = number(params, "g_e");
      const auto gh = opt_number(params, "g_h");
      z.g_h = gh ? *gh : default_hole_g(z.geometry);
      z.field_t = number(params, "field_T");
      z.faraday_branching = number(params, "faraday_branching");
      if (!gh) notes.push_back("hole g-factor default is the literature geometry value");
      const ZeemanLevels lv = zeeman_transitions(z);
      results = to_json(lv);
      results["g_e"] = z.g_e;
      results["g_h"] = z.g_h;
      results["field_T"] = z.field_t;
      results["geometry"] = std::string(to_string(z.geometry));
      detail::Series s;
      s.columns = {"B (T)", "V_up (GHz)", "V_down (GHz)", "H_up (GHz)", "H_down (GHz)"};
      for (int k = 0; k < 200; ++k) {
        ZeemanScheme zk = z;
        zk.field_t = z.field_t * k / 199.0;
        const auto t = zeeman_transitions(zk).transitions;
        s.rows.push_back({zk.field_t, t[0].offset_ghz, t[1].offset_ghz, t[2].offset_ghz, t[3].offset_ghz});
      }
      series["field_sweep"] = s;
    } else if (c == "whiting") {
      const std::string mode = params.at("mode").get<std::string>();
      const double l = number(params, "lorentzian_GHz");
      if (mode == "invert") {
        const double total = number(params, "total_GHz");
        results = {{"gaussian_GHz", whiting_invert(total, l)}, {"total_GHz", total}, {"lorentzian_GHz", l}};
      } else if (mode == "combine") {
        const double g = number(params, "gaussian_GHz");
        results = {{"total_GHz", whiting_combine(l, g)}, {"gaussian_GHz", g}, {"lorentzian_GHz", l}};
      } else {
        throw Error(ErrorCode::ConfigError, "whiting mode must be 'invert' or 'combine'");
      }
    } else {
      throw Error(ErrorCode::ConfigError, "command '" + c + "' is not implemented");
    }
  } catch (const Error& e) {
    throw Error(e.code(), cfg.command + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, cfg.command + ": " + e.what());
  }

  Report report;
  json s = json::object();
  for (const auto& [name, ser] : series) s[name] = ser.to_json();
  report.data = {{"schema_version", report_schema_version},
                 {"tool", {{"name", "donorline"}, {"version", DONORLINE_VERSION}}},
                 {"command", cfg.command},
                 {"inputs", inputs},
                 {"effective_config", cfg.to_json()},
                 {"results", results},
                 {"series", s},
                 {"warnings", warnings},
                 {"provenance_notes", notes},
                 {"generated_at", detail::utc_timestamp()}};
  return report;
}

/// Writes `<dir>/<kind>.csv` and `<dir>/<kind>.manifest.json`; returns both paths.
inline std::vector<std::string> emit_plot_data(const Report& report, const std::string& kind, const std::string& dir) {
  if (!report.has_series(kind)) throw Error(ErrorCode::MissingSeries, "report has no series '" + kind + "'");
  const json& ser = report.data["series"][kind];
  std::filesystem::create_directories(dir);
  const auto csv = std::filesystem::path(dir) / (kind + ".csv");
  const auto manifest = std::filesystem::path(dir) / (kind + ".manifest.json");
  {
    std::ofstream f(csv);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + csv.string());
    const auto& cols = ser["columns"];
    for (std::size_t i = 0; i < cols.size(); ++i) f << (i ? "," : "") << cols[i].get<std::string>();
    f << '\n';
    f.precision(12);
    for (const auto& row : ser["rows"]) {
      for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i].get<double>();
      f << '\n';
    }
  }
  {
    std::ofstream f(manifest);
    if (!f) throw Error(ErrorCode::ConfigError, "cannot write " + manifest.string());
    const json m{{"series", kind},
                 {"command", report.data["command"]},
                 {"columns", ser["columns"]},
                 {"rows", ser["rows"].size()},
                 {"csv", csv.filename().string()}};
    f << m.dump(2) << '\n';
  }
  return {csv.string(), manifest.string()};
}

/// Every series name in the report.
inline std::vector<std::string> series_names(const Report& report) {
  std::vector<std::string> out;
  if (!report.data.contains("series")) return out;
  for (const auto& [k, v] : report.data["series"].items()) out.push_back(k);
  return out;
}

}  // namespace donorline
