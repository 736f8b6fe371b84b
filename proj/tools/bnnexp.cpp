#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "bnnfilt/expcli/config.hpp"
#include "bnnfilt/expcli/experiments.hpp"

using namespace bnnfilt::expcli;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::size_t jobs = 1;
};

int run(ExperimentKind kind, const Flags& flags) {
  ExperimentConfig base;
  base.experiment = kind;
  ExperimentConfig cfg = flags.config.empty() ? base : load_config(flags.config, base);
  if (cfg.experiment != kind)
    throw ConfigError("config is for experiment '" + std::string(to_string(cfg.experiment)) + "'", 0);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.output_dir = *flags.out;
  RunOptions opt;
  opt.jobs = flags.jobs;
  std::cout << run_experiment(cfg, opt);
  std::cerr << "wrote " << cfg.output_dir << "/summary.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary-weight optimizer experiments: latent-weight SGD and its gradient-filter view"};
  app.require_subcommand(1);

  Flags flags;
  std::optional<ExperimentKind> chosen;
  const std::pair<ExperimentKind, const char*> commands[] = {
      {ExperimentKind::equivalence, "Train latent and filtered twins in lockstep and compare their flips"},
      {ExperimentKind::filter_response, "Record a gradient trace and compare first- and second-order filtering"},
      {ExperimentKind::lr_vs_init, "Compare learning-rate scaling with inverse initial-weight scaling"},
      {ExperimentKind::lr_sensitivity, "Accuracy across learning rates for three latent-weight settings"},
      {ExperimentKind::alpha_sweep, "Flip ratio and accuracy across alpha"},
      {ExperimentKind::alpha_decay, "Alpha decay against constant alpha"},
      {ExperimentKind::hpsearch, "Random hyperparameter search over both optimizer views"},
      {ExperimentKind::train, "A single training run"},
  };
  for (const auto& [kind, help] : commands) {
    auto* sub = app.add_subcommand(std::string(to_string(kind)), help);
    sub->add_option("--config", flags.config, "Config file of key = value lines")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Override the run seed");
    sub->add_option("--out", flags.out, "Override the output directory");
    sub->add_option("--jobs", flags.jobs, "Independent runs to execute concurrently")->check(CLI::PositiveNumber);
    sub->callback([&chosen, kind = kind] { chosen = kind; });
  }
  auto* schema = app.add_subcommand("schema", "List every config key");
  schema->callback([] {
    for (const auto& k : config_schema()) {
      const char* group = k.group == KeyGroup::latent_tunable     ? "latent tunable"
                          : k.group == KeyGroup::filtered_tunable ? "filtered tunable"
                                                                  : "structural";
      std::cout << k.name << "\t" << group << "\t" << k.help << "\n";
    }
  });

  CLI11_PARSE(app, argc, argv);
  if (!chosen) return 0;
  try {
    return run(*chosen, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
