// Command line runner for the experiments.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jblab/errors.hpp"
#include "jblab/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"jblab: approximation systems, Cantor constructions and dimension certificates"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "flat key = value config file")->required();
  run->add_option("-o,--out", out_dir, "output directory");
  run->add_option("-s,--set", overrides, "override a key, key=value (repeatable)");

  std::string experiment;
  auto* show = app.add_subcommand("config", "print a complete config with every key and its default");
  show->add_option("-e,--experiment", experiment, "experiment name to fill in");

  auto* keys = app.add_subcommand("keys", "list the config keys with their types and meaning");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*keys) {
      for (const auto& k : jblab::config_schema())
        std::cout << k.name << " (" << k.type << ", default " << k.fallback << "): " << k.doc << "\n";
      return 0;
    }
    if (*show) {
      jblab::ExperimentConfig cfg;
      if (!experiment.empty()) cfg.set("experiment", experiment);
      for (const auto& k : jblab::config_schema()) std::cout << "# " << k.doc << "\n" << k.name << " = " << cfg.get(k.name) << "\n";
      return 0;
    }
    jblab::ExperimentConfig cfg = jblab::ExperimentConfig::load(config_path);
    for (const auto& o : overrides) {
      auto eq = o.find('=');
      if (eq == std::string::npos) throw jblab::Error(jblab::ErrorCode::ConfigError, "--set expects key=value: " + o);
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    jblab::RunResult r = jblab::run_experiment(cfg, out_dir);
    std::cout << r.message << "\n";
    for (const auto& f : r.files) std::cout << "  " << out_dir << "/" << f << "\n";
    return r.exit_code;
  } catch (const jblab::Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == jblab::ErrorCode::ConfigError ? jblab::kExitConfig : jblab::kExitConstruction;
  }
}
