// Command-line front end: one subcommand per analysis.
#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "donorline/pipeline.hpp"

namespace {

using donorline::json;

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

/// Flag values are read as JSON when they parse, else as plain strings.
json flag_value(const std::string& text) {
  if (text == "null") return nullptr;
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

struct CommandOptions {
  std::string config_path;
  std::string input, output, plot_dir, material, donor;
  std::vector<std::string> plots;
  std::map<std::string, std::string> params;
};

int execute(const std::string& command, const CommandOptions& o) {
  donorline::AnalysisConfig cfg;
  if (!o.config_path.empty()) {
    cfg = donorline::load_config(o.config_path, command);
  } else {
    cfg = donorline::parse_config(json{{"command", command}});
  }
  if (!o.input.empty()) cfg.input = o.input;
  if (!o.output.empty()) cfg.output = o.output;
  if (!o.plot_dir.empty()) cfg.plot_dir = o.plot_dir;
  if (!o.material.empty()) cfg.material = o.material;
  if (!o.donor.empty()) cfg.donor = o.donor;
  for (const auto& [key, text] : o.params) donorline::set_param(cfg, key, flag_value(text));

  const donorline::Report report = donorline::run(cfg);
  if (cfg.output) {
    std::ofstream f(*cfg.output);
    if (!f) throw donorline::Error(donorline::ErrorCode::ConfigError, "cannot write " + *cfg.output);
    f << report.data.dump(2) << '\n';
  } else {
    std::cout << report.data.dump(2) << '\n';
  }
  if (cfg.plot_dir) {
    const auto kinds = o.plots.empty() ? donorline::series_names(report) : o.plots;
    for (const auto& kind : kinds) {
      for (const auto& path : donorline::emit_plot_data(report, kind, *cfg.plot_dir)) std::cerr << "wrote " << path << '\n';
    }
  } else if (!o.plots.empty()) {
    throw donorline::Error(donorline::ErrorCode::ConfigError, "--plot needs --plot-dir");
  }
  for (const auto& w : report.data["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Donor-bound exciton linewidth analysis"};
  app.set_version_flag("--version", std::string(DONORLINE_VERSION));
  app.require_subcommand(1);

  std::map<std::string, CommandOptions> options;
  for (const auto& spec : donorline::command_specs()) {
    CommandOptions& o = options[spec.name];
    CLI::App* sub = app.add_subcommand(spec.name, spec.summary);
    sub->add_option("--config", o.config_path, "JSON config file; flags override its keys");
    if (spec.input) sub->add_option("--input,-i", o.input, "input CSV");
    sub->add_option("--output,-o", o.output, "report path (default stdout)");
    sub->add_option("--plot-dir", o.plot_dir, "directory for plot CSVs and manifests");
    sub->add_option("--plot", o.plots, "series to emit (default all)");
    sub->add_option("--material", o.material, "ZnO or Si");
    sub->add_option("--donor", o.donor, "Al, Ga, In or P");
    for (const auto& [key, value] : spec.defaults.items()) {
      const std::string k = key;
      sub->add_option_function<std::string>(
          flag_name(k), [&o, k](const std::string& v) { o.params[k] = v; },
          "default " + value.dump());
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return donorline::exit_code(donorline::ErrorCode::ConfigError);
  }

  for (const auto* sub : app.get_subcommands()) {
    try {
      return execute(sub->get_name(), options[sub->get_name()]);
    } catch (const donorline::Error& e) {
      std::cerr << "error [" << donorline::to_string(e.code()) << "]: " << e.what() << '\n';
      return donorline::exit_code(e.code());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 0;
}
