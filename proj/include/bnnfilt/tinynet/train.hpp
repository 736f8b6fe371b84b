#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bnnfilt/binopt.hpp"
#include "bnnfilt/bitmetrics.hpp"
#include "bnnfilt/tinynet/dataset.hpp"
#include "bnnfilt/tinynet/network.hpp"

namespace bnnfilt::tinynet {

enum class View { latent, filtered };

/// Binary-weight optimizer choice. Schedule lengths are filled in by the
/// trainer from epochs x steps-per-epoch.
struct BinaryOptimizerConfig {
  View view = View::filtered;
  binopt::LatentHyper latent;
  double w0_init_scale = 0.0;  // latent init: w0 = scale * N(0, 1)
  binopt::FilterHyper filtered;
};

struct RealOptimizerConfig {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  binopt::ScheduleKind decay = binopt::ScheduleKind::cosine;
};

struct TrainOptions {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  std::vector<std::size_t> tracked_weights;  // indices into the pooled binary weights
  Exec exec = Exec::parallel;
};

struct StepRecord {
  std::size_t epoch = 0;        // 1-based epoch this update belongs to
  double rate = 0.0;            // epsilon (latent) or alpha (filtered) used
  double loss = 0.0;            // minibatch loss before the update
  bitmetrics::FlipRecord flips;  // pooled over all binary layers
  std::vector<std::size_t> layer_flips;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 0 = before training
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct WeightTrace {
  std::size_t index = 0;
  std::vector<double> grad;         // raw minibatch gradient per step
  std::vector<double> accumulator;  // optimizer's accumulated negative gradient after the step
};

struct TrainingLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::vector<WeightTrace> traces;

  std::vector<bitmetrics::FlipRecord> flip_records() const;
};

/// Minibatch trainer for the binary MLP. The run is a pure function of
/// (dataset, configs, seed): shuffling, initialization and tie-break draws
/// come from sub-seeds of `options.seed`.
class Trainer {
 public:
  Trainer(const Dataset& data, NetConfig net, BinaryOptimizerConfig binary, RealOptimizerConfig real,
          TrainOptions options);

  std::size_t steps_per_epoch() const { return steps_per_epoch_; }
  std::size_t total_steps() const { return steps_per_epoch_ * options_.epochs; }
  std::size_t steps_done() const { return step_; }
  bool finished() const { return step_ >= total_steps(); }

  /// One minibatch update. Evaluates and logs accuracies after the last
  /// batch of each epoch. `flipped` optionally receives the flip mask.
  const StepRecord& step(std::span<std::uint8_t> flipped = {});

  /// Runs to completion and returns the log.
  const TrainingLog& run();

  const TrainingLog& log() const { return log_; }
  Network& network() { return net_; }
  const binopt::BinaryOptimizer& binary_optimizer() const { return *binary_; }

 private:
  EpochRecord evaluate(std::size_t epoch);
  void start_epoch();

  const Dataset& data_;
  TrainOptions options_;
  RealOptimizerConfig real_cfg_;
  Network net_;
  std::unique_ptr<binopt::BinaryOptimizer> binary_;
  RealSgd real_opt_;
  binopt::Schedule real_lr_;
  Rng shuffle_rng_;
  std::vector<std::size_t> order_;
  std::size_t steps_per_epoch_ = 0;
  std::size_t step_ = 0;
  std::vector<std::size_t> layer_sizes_;
  std::vector<double> grad_;
  std::vector<std::uint8_t> mask_;
  std::vector<std::int8_t> prev_theta_;
  TrainingLog log_;
};

/// Convenience wrapper: constructs a Trainer and runs it.
TrainingLog train(const Dataset& data, const NetConfig& net, const BinaryOptimizerConfig& binary,
                  const RealOptimizerConfig& real, const TrainOptions& options);

/// Default net for a dataset: three hidden blocks of `width`, the first real.
NetConfig default_net(const Dataset& data, std::size_t width = 64);

}  // namespace bnnfilt::tinynet
