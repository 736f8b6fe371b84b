#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "bnnfilt/expcli/config.hpp"
#include "bnnfilt/expcli/csv.hpp"
#include "bnnfilt/tinynet/train.hpp"

namespace bnnfilt::expcli {

struct RunOptions {
  std::size_t jobs = 1;      // independent runs executed concurrently
  bool write_files = true;   // runlogs, summary.csv and timing.csv under cfg.output_dir
};

/// One training run as the experiments execute it. `cfg.view` picks the
/// optimizer; `cfg.name` names the runlog.
tinynet::TrainingLog run_training(const ExperimentConfig& cfg, const tinynet::Dataset& data, Exec exec,
                                  std::vector<std::size_t> tracked = {});

/// runlog_<name>_<seed>.csv: config echo as comment lines, then one row per
/// step, per epoch evaluation and per tracked-weight sample.
CsvTable runlog_table(const ExperimentConfig& cfg, const tinynet::TrainingLog& log);
std::filesystem::path runlog_path(const ExperimentConfig& cfg);

struct EquivalenceResult {
  std::size_t steps = 0;
  std::size_t weights = 0;
  std::size_t latent_flips = 0;
  std::size_t filtered_flips = 0;
  double agreement = 1.0;  // flip-event agreement over all (step, weight) pairs
  bool diverged = false;   // agreement below kEquivalenceThreshold
  tinynet::TrainingLog latent;
  tinynet::TrainingLog filtered;
};

inline constexpr double kEquivalenceThreshold = 0.999;

struct FilterResponseResult {
  std::size_t first_step = 0;  // global step index of the first recorded sample
  std::vector<double> raw, ema, second_order;
  double var_raw = 0.0, var_ema = 0.0, var_second_order = 0.0;
  bool ordered = false;  // var(second order) < var(EMA) < var(raw)
};

struct LrVsInitResult {
  struct Pair {
    double scale = 0.0;
    std::size_t differing_steps = 0;  // steps whose flip counts differ
    bool identical = false;           // flip masks equal at every step
  };
  std::vector<Pair> pairs;
  bool zero_init_identical = false;  // all sweep.epsilons give the same flips from w0 = 0
  double large_init_mean_ff = 0.0;   // smallest epsilon, largest init scale
  double reference_mean_ff = 0.0;    // configured epsilon and init scale
};

struct LrSensitivityResult {
  struct Point {
    char setting = 'a';  // a: clip+scale, b: magnitude independent, c: magnitude independent zero init
    double epsilon = 0.0;
    double lambda = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double mean_ff = 0.0;
  };
  std::vector<Point> points;
  /// max - min test accuracy of one setting across the sweep.
  double spread(char setting) const;
  double train_spread(char setting) const;
};

struct AlphaSweepResult {
  struct Point {
    double alpha = 0.0;
    double mean_ff = 0.0;
    double early_ff = 0.0;  // mean over the first 5% of steps, skipping the initial step
    double test_accuracy = 0.0;
  };
  std::vector<Point> points;
};

struct AlphaDecayResult {
  double decay_final_ff = 0.0;  // mean over the final 5% of steps
  double constant_final_ff = 0.0;
  double decay_first_ff = 0.0;
  double constant_first_ff = 0.0;
  double decay_test_accuracy = 0.0;
  double constant_test_accuracy = 0.0;
  tinynet::TrainingLog decay, constant;
};

inline constexpr double kFinalWindow = 0.05;

struct HpsearchResult {
  /// Best-so-far test accuracy after each trial, averaged over repeats.
  std::vector<double> latent_curve, filtered_curve;
  /// Mean 1-based trial at which a repeat first comes within 1 point of its final best.
  double latent_trials_to_near_best = 0.0;
  double filtered_trials_to_near_best = 0.0;
};

/// Random-search ranges per view: log-uniform [1e-5, 1] for epsilon, lambda,
/// alpha and gamma; log-uniform [1e-3, 10] for the init scale; uniform over
/// flags and decay schedules.
ExperimentConfig sample_trial(const ExperimentConfig& base, tinynet::View view, Rng& rng);

EquivalenceResult run_equivalence(const ExperimentConfig& cfg, const RunOptions& opt = {});
FilterResponseResult run_filter_response(const ExperimentConfig& cfg, const RunOptions& opt = {});
LrVsInitResult run_lr_vs_init(const ExperimentConfig& cfg, const RunOptions& opt = {});
LrSensitivityResult run_lr_sensitivity(const ExperimentConfig& cfg, const RunOptions& opt = {});
AlphaSweepResult run_alpha_sweep(const ExperimentConfig& cfg, const RunOptions& opt = {});
AlphaDecayResult run_alpha_decay(const ExperimentConfig& cfg, const RunOptions& opt = {});
HpsearchResult run_hpsearch(const ExperimentConfig& cfg, const RunOptions& opt = {});
tinynet::TrainingLog run_train(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Runs the experiment named by cfg.experiment and returns the text of its summary.csv.
std::string run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

}  // namespace bnnfilt::expcli
