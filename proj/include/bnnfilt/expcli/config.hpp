#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bnnfilt/binopt.hpp"
#include "bnnfilt/schedule.hpp"
#include "bnnfilt/tinynet/train.hpp"

namespace bnnfilt::expcli {

enum class ExperimentKind { equivalence, filter_response, lr_vs_init, lr_sensitivity, alpha_sweep, alpha_decay, hpsearch, train };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view text);
std::string_view to_string(tinynet::View view);
tinynet::View parse_view(std::string_view text);

enum class DatasetKind { blobs, csv };
enum class ResponseSource { training, synthetic };

/// Everything a user may tune for classical latent-weight SGD.
struct LatentTunables {
  double epsilon = 1.0;
  binopt::ScheduleKind epsilon_decay = binopt::ScheduleKind::cosine;
  double w0_init_scale = 0.0;
  double gamma = 0.1;
  double lambda = 1e-3;
  bool scaling = false;
  bool clipping = false;

  friend bool operator==(const LatentTunables&, const LatentTunables&) = default;
};

/// Everything a user may tune for the filter optimizer.
struct FilteredTunables {
  double alpha = 1e-3;
  binopt::ScheduleKind alpha_decay = binopt::ScheduleKind::cosine;
  double gamma = 0.1;

  friend bool operator==(const FilteredTunables&, const FilteredTunables&) = default;
};

struct BlobsSpec {
  std::size_t n_per_class = 500;
  std::size_t n_classes = 4;
  std::size_t dim = 16;
  double sigma = 0.3;
  std::uint64_t seed = 1;

  friend bool operator==(const BlobsSpec&, const BlobsSpec&) = default;
};

struct CsvSpec {
  std::string path;
  std::string label_column = "label";
  double test_fraction = 0.2;

  friend bool operator==(const CsvSpec&, const CsvSpec&) = default;
};

struct RealSpec {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  binopt::ScheduleKind decay = binopt::ScheduleKind::cosine;

  friend bool operator==(const RealSpec&, const RealSpec&) = default;
};

struct ResponseSpec {
  ResponseSource source = ResponseSource::training;
  std::size_t weight = 0;     // tracked binary weight (training source)
  std::size_t epoch = 0;      // recorded epoch, 0 = last
  double coefficient = 0.1;   // alpha = gamma of both filters
  std::size_t steps = 1000;   // synthetic stream length
  double period = 200.0;      // synthetic sinusoid period in steps
  double amplitude = 1.0;
  double noise = 1.0;

  friend bool operator==(const ResponseSpec&, const ResponseSpec&) = default;
};

struct HpsearchSpec {
  std::size_t trials = 25;
  std::size_t repeats = 5;

  friend bool operator==(const HpsearchSpec&, const HpsearchSpec&) = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::train;
  tinynet::View view = tinynet::View::filtered;
  std::string name = "run";
  std::uint64_t seed = 0;
  std::string output_dir = "results";

  LatentTunables latent;
  FilteredTunables filtered;
  binopt::FilterForm filter_form = binopt::FilterForm::cascade;

  DatasetKind dataset = DatasetKind::blobs;
  BlobsSpec blobs;
  CsvSpec csv;

  std::size_t hidden_width = 64;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  RealSpec real;

  std::vector<double> sweep_epsilons{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> sweep_alphas{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  std::vector<double> sweep_scales{1e-3, 1e-1, 10.0, 1e3};
  ResponseSpec response;
  HpsearchSpec hpsearch;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

enum class KeyGroup { structural, latent_tunable, filtered_tunable };

struct KeyInfo {
  std::string_view name;
  KeyGroup group;
  std::string_view help;
};

/// Every accepted configuration key, in canonical order.
std::span<const KeyInfo> config_schema();

/// Keys of the tunable hyperparameters each optimizer view exposes.
std::vector<std::string_view> tunable_keys(tinynet::View view);

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::size_t line)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Sets one key from its text value. Throws ConfigError for unknown keys or
/// malformed values.
void set_key(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Parses `key = value` lines over `base`; `#` starts a comment. Keys may
/// appear once. The result is validated.
ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base = {});

/// Renders every key in canonical order, leaving out the other view's
/// tunables for single-view experiments. parse_config reads it back.
std::string format_config(const ExperimentConfig& cfg);

/// Range and consistency checks. Experiments that use a single optimizer view
/// reject explicitly set tunables of the other view.
void validate(const ExperimentConfig& cfg, std::span<const std::string> explicit_keys = {});

/// True for experiments that compare the two views and so read both tunable groups.
bool uses_both_views(ExperimentKind kind);

tinynet::NetConfig make_net_config(const ExperimentConfig& cfg, const tinynet::Dataset& data);
tinynet::BinaryOptimizerConfig make_binary_config(const ExperimentConfig& cfg, tinynet::View view);
tinynet::RealOptimizerConfig make_real_config(const ExperimentConfig& cfg);
tinynet::Dataset make_dataset(const ExperimentConfig& cfg);

}  // namespace bnnfilt::expcli
