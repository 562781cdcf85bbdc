#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "donorline/donorline.hpp"

using namespace donorline;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("no error raised");
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("donorline_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path() const { return path_.string(); }

 private:
  fs::path path_;
};

AnalysisConfig config(const std::string& command, const nlohmann::json& params = nlohmann::json::object()) {
  nlohmann::json j{{"command", command}, {"params", params}};
  return parse_config(j);
}

std::string ple_csv(const VoigtParams& p, double lo, double hi, double step) {
  std::ostringstream os;
  os << "# synthetic\nfrequency (GHz),counts (1)\n";
  os.precision(15);
  for (double x = lo; x <= hi + 1e-9; x += step) os << x << ',' << voigt_value(p, x) << '\n';
  return os.str();
}

}  // namespace

TEST(Csv, ParsesTwoAndThreeColumns) {
  const auto a = parse_csv("x (GHz), y (1)\n1, 2\n2, 3\n", Schema::ple);
  EXPECT_EQ(a.spectrum.x, (std::vector<double>{1, 2}));
  EXPECT_EQ(a.spectrum.x_unit, Unit::GHz);
  EXPECT_FALSE(a.spectrum.has_sigma());
  EXPECT_EQ(a.columns[1].name, "y");
  const auto b = parse_csv("# comment\nE (meV),I (1),s (1)\n\n3377.1,5,0.1\n# mid\n3377.2,6,0.2\n", Schema::ple);
  EXPECT_EQ(b.spectrum.x_unit, Unit::meV);
  EXPECT_EQ(b.spectrum.sigma, (std::vector<double>{0.1, 0.2}));
  EXPECT_TRUE(b.warnings.empty());
}

TEST(Csv, UnsortedRowsAreSortedWithWarning) {
  const auto d = parse_csv("x (GHz),y (1),s (1)\n3,30,3\n1,10,1\n2,20,2\n", Schema::ple);
  EXPECT_EQ(d.spectrum.x, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(d.spectrum.y, (std::vector<double>{10, 20, 30}));
  EXPECT_EQ(d.spectrum.sigma, (std::vector<double>{1, 2, 3}));
  ASSERT_EQ(d.warnings.size(), 1u);
  EXPECT_NE(d.warnings[0].find("sorted"), std::string::npos);
}

TEST(Csv, DuplicateAbscissaNamesBothLines) {
  const auto msg = message_of([] { parse_csv("x (GHz),y (1)\n1,1\n2,2\n1,3\n", Schema::ple, "dup.csv"); });
  EXPECT_NE(msg.find("dup.csv:4:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_EQ(code_of([] { parse_csv("x (GHz),y (1)\n1,1\n1,3\n", Schema::ple); }), ErrorCode::ParseError);
}

TEST(Csv, EmptyAndHeaderOnly) {
  EXPECT_NE(message_of([] { parse_csv("", Schema::ple, "e.csv"); }).find("empty file"), std::string::npos);
  EXPECT_NE(message_of([] { parse_csv("# only\n\n", Schema::ple, "e.csv"); }).find("empty file"), std::string::npos);
  EXPECT_NE(message_of([] { parse_csv("x (GHz),y (1)\n", Schema::ple); }).find("no data rows"), std::string::npos);
}

TEST(Csv, UnitErrors) {
  EXPECT_EQ(code_of([] { parse_csv("x,y (1)\n1,2\n", Schema::ple); }), ErrorCode::UnitError);
  EXPECT_EQ(code_of([] { parse_csv("x (),y (1)\n1,2\n", Schema::ple); }), ErrorCode::UnitError);
  EXPECT_EQ(code_of([] { parse_csv("x (K),y (1)\n1,2\n", Schema::ple); }), ErrorCode::UnitError);
  EXPECT_EQ(code_of([] { parse_csv("x (GHz),T (counts)\n1,0.5\n", Schema::transmission); }), ErrorCode::UnitError);
  EXPECT_EQ(code_of([] { parse_csv("T (GHz),w (GHz)\n1,2\n", Schema::temperature_series); }), ErrorCode::UnitError);
}

TEST(Csv, MalformedRows) {
  const auto msg = message_of([] { parse_csv("x (GHz),y (1)\n1,2\n2,abc\n", Schema::ple, "m.csv"); });
  EXPECT_NE(msg.find("m.csv:3:"), std::string::npos) << msg;
  EXPECT_EQ(code_of([] { parse_csv("x (GHz),y (1)\n1,2,3\n", Schema::ple); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_csv("x (GHz),y (1),s (1)\n1,2,0\n", Schema::ple); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_csv("a (GHz)\n1\n", Schema::ple); }), ErrorCode::ParseError);
}

TEST(Csv, TemperatureSeriesConvertsWidths) {
  const auto d = parse_csv("T (K),fwhm (meV)\n2,0.01\n4,0.02\n", Schema::temperature_series);
  ASSERT_EQ(d.points.size(), 2u);
  EXPECT_NEAR(d.points[0].fwhm_ghz, mev_to_ghz(0.01), 1e-12);
  EXPECT_FALSE(d.points[0].sigma_ghz.has_value());
}

TEST(Digest, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Config, DefaultsFilledAndOverridden) {
  const auto cfg = config("simulate-isotope", {{"samples", 10}});
  EXPECT_EQ(cfg.params["samples"], 10);
  EXPECT_EQ(cfg.params["seed"], 1);
  EXPECT_TRUE(cfg.params["cutoff_nm"].is_null());
  EXPECT_EQ(cfg.material, "ZnO");
  EXPECT_EQ(cfg.donor, "Al");
}

TEST(Config, StrictKeysAndTypes) {
  using nlohmann::json;
  EXPECT_EQ(code_of([] { parse_config(json{{"command", "zeeman"}, {"colour", "red"}}); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { config("zeeman", {{"field", 3}}); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { config("zeeman", {{"field_T", "3"}}); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { config("simulate-isotope", {{"samples", 2.5}}); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { config("fit-ple", {{"oscillation_correct", 1}}); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config(json{{"command", "nope"}}); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config(json{{"params", json::object()}}); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([] { parse_config(json::array()); }), ErrorCode::ConfigError);
}

TEST(Config, CommandArgumentWinsAndFileLoads) {
  TempDir dir;
  const auto path = dir.file("cfg.json", R"({"command": "zeeman", "donor": "Ga", "params": {"field_T": 3.0}})");
  const auto cfg = load_config(path);
  EXPECT_EQ(cfg.command, "zeeman");
  EXPECT_EQ(cfg.donor, "Ga");
  EXPECT_EQ(cfg.params["field_T"], 3.0);
  const auto bad = dir.file("bad.json", "{not json");
  EXPECT_EQ(code_of([&] { load_config(bad); }), ErrorCode::ConfigError);
  const auto other = parse_config(nlohmann::json{{"command", "zeeman"}}, "whiting");
  EXPECT_EQ(other.command, "whiting");
}

TEST(Run, ReportSchema) {
  const auto r = run(config("whiting", {{"total_GHz", 7.0}, {"lorentzian_GHz", 3.9}}));
  for (const char* key : {"schema_version", "tool", "command", "inputs", "effective_config", "results", "series",
                          "warnings", "provenance_notes", "generated_at"}) {
    EXPECT_TRUE(r.data.contains(key)) << key;
  }
  EXPECT_EQ(r.data["schema_version"], 1);
  EXPECT_EQ(r.data["tool"]["name"], "donorline");
  EXPECT_NEAR(r.results()["gaussian_GHz"].get<double>(), whiting_invert(7.0, 3.9), 1e-15);
  EXPECT_EQ(r.data["effective_config"]["params"]["total_GHz"], 7.0);
  EXPECT_EQ(r.canonical().find("generated_at"), std::string::npos);
}

TEST(Run, ErrorsKeepCodeAndNameCommand) {
  const auto cfg = config("whiting", {{"total_GHz", 3.0}, {"lorentzian_GHz", 3.9}});
  EXPECT_EQ(code_of([&] { run(cfg); }), ErrorCode::InconsistentWidths);
  EXPECT_EQ(message_of([&] { run(cfg); }).rfind("whiting: ", 0), 0u);
  EXPECT_EQ(code_of([] { run(config("fit-ple")); }), ErrorCode::ConfigError);  // no input
  auto bad_donor = config("solve-states");
  bad_donor.donor = "Xe";
  EXPECT_EQ(code_of([&] { run(bad_donor); }), ErrorCode::UnknownDonor);
}

TEST(Run, PhysicsCommands) {
  auto cross = config("crossing-temp");
  EXPECT_NEAR(run(cross).results()["crossing_temperature_K"].get<double>(), 2.7, 0.05);
  EXPECT_NEAR(run(cross).results()["thermal_term_MHz"].get<double>(), 20.0, 1.0);

  auto zee = run(config("zeeman"));
  EXPECT_NEAR(zee.results()["electron_splitting_GHz"].get<double>(), 193.0, 0.1);
  EXPECT_EQ(zee.results()["transitions"].size(), 4u);
  EXPECT_TRUE(zee.has_series("field_sweep"));

  auto states = run(config("solve-states"));
  EXPECT_NEAR(states.results()["exciton"]["a_e_nm"].get<double>(), 2.08, 0.02);

  auto hf = config("hyperfine", {{"cutoff_nm", 8.0}});
  hf.donor = "In";
  const auto h = run(hf).results();
  EXPECT_EQ(h["splitting"]["zero_field_separation_MHz"], 500.0);
  EXPECT_NEAR(h["dispersion"]["linewidth_MHz"].get<double>(), 29.0, 1.0);

  auto imp = run(config("impurity-shift"));
  EXPECT_EQ(imp.results()["transition_MHz"], 0.0);
  EXPECT_EQ(imp.data["warnings"].size(), 1u);
}

TEST(Run, IsotopeReportIsDeterministic) {
  const auto cfg = config("simulate-isotope", {{"samples", 12}, {"cutoff_nm", 3.0}, {"seed", 4}});
  const auto a = run(cfg);
  const auto b = run(cfg);
  EXPECT_EQ(a.canonical(), b.canonical());
  auto threaded = cfg;
  threaded.params["threads"] = 3;
  EXPECT_EQ(run(threaded).results(), a.results());
  EXPECT_EQ(a.data["series"]["shifts"]["rows"].size(), 12u);
  EXPECT_FALSE(a.data["provenance_notes"].empty());
}

TEST(Run, FitPleFromFile) {
  TempDir dir;
  const VoigtParams truth{816800.0, 4.0, 3.0, 500.0, 5.0};
  const std::string text = ple_csv(truth, 816770.0, 816830.0, 0.25);
  auto cfg = config("fit-ple");
  cfg.input = dir.file("ple.csv", text);
  const auto r = run(cfg);
  const auto& fit = r.results()["fit"];
  EXPECT_NEAR(fit["parameters"]["center"].get<double>(), truth.center, 1e-5);
  EXPECT_NEAR(fit["total_fwhm"].get<double>(), voigt_fwhm(4.0, 3.0), 1e-5);
  EXPECT_EQ(r.data["inputs"][0]["sha256"], sha256_hex(text));
  EXPECT_EQ(r.data["inputs"][0]["bytes"], text.size());
  EXPECT_TRUE(r.has_series("fit"));

  // Same data on an meV axis gives the same widths.
  std::ostringstream os;
  os.precision(17);
  os << "E (meV),counts (1)\n";
  for (double x = 816770.0; x <= 816830.0 + 1e-9; x += 0.25) os << ghz_to_mev(x) << ',' << voigt_value(truth, x) << '\n';
  cfg.input = dir.file("ple_mev.csv", os.str());
  EXPECT_NEAR(run(cfg).results()["fit"]["total_fwhm"].get<double>(), voigt_fwhm(4.0, 3.0), 1e-4);
}

TEST(Run, CorrectOscillationWritesCsv) {
  TempDir dir;
  auto cfg = config("correct-oscillation", {{"output_csv", dir.path() + "/corrected.csv"}});
  cfg.input = dir.file("in.csv", "E (meV),I (1)\n0.09,0.58\n0.18,1.16\n");
  const auto r = run(cfg);
  const auto back = load_spectrum(dir.path() + "/corrected.csv", Schema::ple);
  EXPECT_NEAR(back.spectrum.y[0], 1.0, 1e-12);
  EXPECT_NEAR(back.spectrum.y[1], 2.0, 1e-12);
  EXPECT_EQ(back.spectrum.x_unit, Unit::meV);
}

TEST(Run, TemperatureFitFromFile) {
  TempDir dir;
  const auto m = donor_optics(Donor::Ga).thermal;
  std::ostringstream os;
  os.precision(15);
  os << "T (K),fwhm (GHz)\n";
  for (double t = 2.0; t <= 16.0; t += 2.0) os << t << ',' << thermal_linewidth(m, t) << '\n';
  auto cfg = config("fit-temperature");
  cfg.donor = "Ga";
  cfg.input = dir.file("t.csv", os.str());
  const auto r = run(cfg).results();
  EXPECT_NEAR(r["fit"]["a_GHz"].get<double>(), m.a_ghz, 1e-6);
}

TEST(Run, DensityAndOdFromTransmission) {
  TempDir dir;
  TransmissionSetup setup;
  const VoigtParams line{816500.0, 6.0, 0.0, 40.0, 0.0};
  std::ostringstream os;
  os.precision(17);
  os << "nu (GHz),T (1)\n";
  Spectrum od;
  for (double x = 816440.0; x <= 816560.0 + 1e-9; x += 0.1) {
    os << x << ',' << transmission_from_od(voigt_value(line, x), setup) << '\n';
    od.x.push_back(x);
    od.y.push_back(voigt_value(line, x));
  }
  const auto path = dir.file("t.csv", os.str());
  auto cfg = config("estimate-density");
  cfg.donor = "In";
  cfg.input = path;
  const auto r = run(cfg);
  DensityInputs in;
  in.wavelength_nm = donor_optics(Donor::In).wavelength_nm;
  in.tau_rad_ns = donor_optics(Donor::In).lifetime_zpl_ns;
  const double expected = donor_density(od, in).density_cm3;
  EXPECT_NEAR(r.results()["density_cm-3"].get<double>(), expected, 1e-6 * expected);
  bool mentions_index = false;
  for (const auto& n : r.data["provenance_notes"]) mentions_index |= n.get<std::string>().find("refractive index") != std::string::npos;
  EXPECT_TRUE(mentions_index);
  EXPECT_EQ(r.results()["assumed"]["refractive_index"], 2.4);

  auto odc = config("compute-od");
  odc.input = path;
  const auto o = run(odc);
  EXPECT_NEAR(o.results()["max_od"].get<double>(), voigt_peak_height(line), 1e-9);
  EXPECT_EQ(o.results()["saturated_points"], 0);
}

TEST(Run, RegistryDirectoryOverride) {
  TempDir dir;
  dir.file("registry.json", R"({"ZnO/Al": {"donor_binding_meV": 60.0}})");
  const double base = run(config("solve-states")).results()["donor"]["a_nm"].get<double>();
  ::setenv("DONORLINE_REGISTRY_DIR", dir.path().c_str(), 1);
  const auto r = run(config("solve-states"));
  ::unsetenv("DONORLINE_REGISTRY_DIR");
  EXPECT_EQ(r.results()["donor"]["binding_meV"], 60.0);
  EXPECT_LT(r.results()["donor"]["a_nm"].get<double>(), base);
  bool noted = false;
  for (const auto& n : r.data["provenance_notes"]) noted |= n.get<std::string>().find("overridden") != std::string::npos;
  EXPECT_TRUE(noted);
}

TEST(Run, ConfigOverridesAreStrict) {
  auto cfg = config("solve-states");
  cfg.overrides = {{"electron_mass", 0.3}};
  EXPECT_NO_THROW(run(cfg));
  cfg.overrides = {{"electron_mas", 0.3}};
  EXPECT_EQ(code_of([&] { run(cfg); }), ErrorCode::ConfigError);
}

TEST(PlotData, EmitsCsvAndManifest) {
  TempDir dir;
  const auto r = run(config("zeeman", {{"field_T", 2.0}}));
  EXPECT_EQ(series_names(r), (std::vector<std::string>{"field_sweep"}));
  const auto files = emit_plot_data(r, "field_sweep", dir.path() + "/plots");
  ASSERT_EQ(files.size(), 2u);
  const auto back = read_file(files[0]);
  EXPECT_EQ(back.rfind("B (T),V_up (GHz),V_down (GHz),H_up (GHz),H_down (GHz)\n", 0), 0u);
  const auto manifest = nlohmann::json::parse(read_file(files[1]));
  EXPECT_EQ(manifest["rows"], 200);
  EXPECT_EQ(code_of([&] { emit_plot_data(r, "od", dir.path()); }), ErrorCode::MissingSeries);
}
