// Command-line driver: one subcommand per experiment mode.
//
//   hisd converge --config configs/fourwell_i.json --output out/
//
// Worker threads for the studies: HISD_WORKERS (default: hardware threads).

#include "hisd/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"Constrained high-index saddle dynamics on the unit sphere"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;

  const std::vector<std::pair<hisd::Mode, std::string>> commands = {
      {hisd::Mode::Run, "integrate one trajectory and write trajectory.csv / probes.csv"},
      {hisd::Mode::Converge, "error table against a fine reference (convergence.csv)"},
      {hisd::Mode::Lemmas, "tau^2 scaling of the per-step defects (lemma_*.csv)"},
      {hisd::Mode::Pathway, "successive-refinement pathway study (pathway*.csv)"},
      {hisd::Mode::IndexRobust, "averaged-norm errors across saddle indices (index_robust.csv)"},
  };
  std::vector<std::pair<hisd::Mode, CLI::App*>> subcommands;
  for (const auto& [mode, help] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(hisd::mode_name(mode)), help);
    sub->add_option("--config", config_path, "JSON experiment configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", output_dir, "output directory (overrides output_dir)");
    subcommands.emplace_back(mode, sub);
  }

  CLI11_PARSE(app, argc, argv);

  hisd::Mode mode = hisd::Mode::Run;
  for (const auto& [m, sub] : subcommands) {
    if (sub->parsed()) mode = m;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error [config]: cannot read " << config_path << '\n';
    return 1;
  }
  std::stringstream text;
  text << in.rdbuf();

  hisd::ExperimentConfig config;
  try {
    config = hisd::parse_config(text.str(), mode);
  } catch (const hisd::ConfigError& e) {
    std::cerr << "error [config]: " << e.what() << '\n';
    return 1;
  }
  if (!output_dir.empty()) config.output_dir = output_dir;

  return hisd::run_experiment(config, std::cout);
}
