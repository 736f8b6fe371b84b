#include "bnnfilt/expcli/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

#include "bnnfilt/bitmetrics.hpp"
#include "bnnfilt/iir.hpp"
#include "bnnfilt/rng.hpp"

namespace bnnfilt::expcli {

namespace {

using tinynet::TrainingLog;
using tinynet::View;

Exec inner_exec(const RunOptions& opt) { return opt.jobs > 1 ? Exec::serial : Exec::parallel; }

/// Calls fn(i) for i in [0, n) on up to `jobs` threads and rethrows the first failure.
template <class Fn>
void for_each_run(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::exception_ptr error;
  std::mutex mu;
  const int threads = static_cast<int>(std::max<std::size_t>(1, std::min(jobs, n)));
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(mu);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

class Timings {
 public:
  void add(const std::string& run, double seconds) {
    std::lock_guard lock(mu_);
    rows_.emplace_back(run, seconds);
  }
  void write(const ExperimentConfig& cfg, const RunOptions& opt) {
    if (!opt.write_files) return;
    std::sort(rows_.begin(), rows_.end());
    CsvTable t({"run", "wall_clock[s]"});
    for (const auto& [run, s] : rows_) t.add_row({run, cell(s)});
    t.write(std::filesystem::path(cfg.output_dir) / "timing.csv");
  }

 private:
  std::mutex mu_;
  std::vector<std::pair<std::string, double>> rows_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig variant(const ExperimentConfig& base, const std::string& suffix) {
  ExperimentConfig c = base;
  c.name = base.name + "-" + suffix;
  return c;
}

tinynet::TrainOptions train_options(const ExperimentConfig& cfg, Exec exec, std::vector<std::size_t> tracked) {
  tinynet::TrainOptions o;
  o.epochs = cfg.epochs;
  o.batch_size = cfg.batch_size;
  o.seed = cfg.seed;
  o.tracked_weights = std::move(tracked);
  o.exec = exec;
  return o;
}

std::unique_ptr<tinynet::Trainer> make_trainer(const ExperimentConfig& cfg, const tinynet::Dataset& data, Exec exec,
                                               std::vector<std::size_t> tracked = {}) {
  return std::make_unique<tinynet::Trainer>(data, make_net_config(cfg, data), make_binary_config(cfg, cfg.view),
                                            make_real_config(cfg), train_options(cfg, exec, std::move(tracked)));
}

void write_runlog(const ExperimentConfig& cfg, const TrainingLog& log, const RunOptions& opt) {
  if (opt.write_files) runlog_table(cfg, log).write(runlog_path(cfg));
}

/// Trains every run on its own thread slot and writes its runlog.
std::vector<TrainingLog> execute(const std::vector<ExperimentConfig>& runs, const tinynet::Dataset& data,
                                 const RunOptions& opt, Timings& timings) {
  std::vector<TrainingLog> logs(runs.size());
  for_each_run(runs.size(), opt.jobs, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    logs[i] = run_training(runs[i], data, inner_exec(opt));
    timings.add(runs[i].name, seconds_since(t0));
    write_runlog(runs[i], logs[i], opt);
  });
  return logs;
}

struct Lockstep {
  std::vector<TrainingLog> logs;
  std::vector<std::size_t> differing_steps;  // against run 0
  std::vector<bitmetrics::FlipEventAgreement> agreement;
};

/// Steps several trainers side by side and compares their flip masks with the first.
Lockstep run_lockstep(const std::vector<ExperimentConfig>& runs, const tinynet::Dataset& data, Exec exec) {
  std::vector<std::unique_ptr<tinynet::Trainer>> trainers;
  for (const auto& r : runs) trainers.push_back(make_trainer(r, data, exec));
  const std::size_t n = trainers.front()->network().binary_size();
  std::vector<std::vector<std::uint8_t>> masks(runs.size(), std::vector<std::uint8_t>(n));
  Lockstep out;
  out.differing_steps.assign(runs.size(), 0);
  out.agreement.resize(runs.size());
  while (!trainers.front()->finished()) {
    for (std::size_t i = 0; i < runs.size(); ++i) trainers[i]->step(masks[i]);
    for (std::size_t i = 1; i < runs.size(); ++i) {
      out.agreement[i].add(masks[0], masks[i]);
      out.differing_steps[i] += masks[i] == masks[0] ? 0 : 1;
    }
  }
  for (auto& t : trainers) out.logs.push_back(t->log());
  return out;
}

double mean_ff(const TrainingLog& log, std::size_t begin, std::size_t end) {
  end = std::min(end, log.steps.size());
  if (begin >= end) return 0.0;
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += log.steps[i].flips.ff_ratio;
  return s / static_cast<double>(end - begin);
}

double final_window_ff(const TrainingLog& log) {
  if (log.steps.empty()) return 0.0;
  return bitmetrics::ff_series_summary(log.flip_records(), kFinalWindow);
}

double final_test(const TrainingLog& log) { return log.epochs.back().test_accuracy; }
double final_train(const TrainingLog& log) { return log.epochs.back().train_accuracy; }

std::size_t total_flips(const TrainingLog& log) {
  std::size_t n = 0;
  for (const auto& s : log.steps) n += s.flips.flips;
  return n;
}

double variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void write_summary(const ExperimentConfig& cfg, const RunOptions& opt, const CsvTable& table) {
  if (opt.write_files) table.write(std::filesystem::path(cfg.output_dir) / "summary.csv");
}

CsvTable summary_table(const ExperimentConfig& cfg, const EquivalenceResult& r) {
  CsvTable t({"steps[count]", "weights[count]", "latent_flips[count]", "filtered_flips[count]",
              "flip_agreement[fraction]", "threshold[fraction]", "diverged[bool]"});
  t.add_comment("experiment = " + std::string(to_string(cfg.experiment)));
  t.add_row({cell(r.steps), cell(r.weights), cell(r.latent_flips), cell(r.filtered_flips), cell(r.agreement),
             cell(kEquivalenceThreshold), cell(r.diverged)});
  return t;
}

CsvTable summary_table(const ExperimentConfig& cfg, const FilterResponseResult& r) {
  CsvTable t({"samples[count]", "var_raw[grad^2]", "var_ema[grad^2]", "var_second_order[grad^2]", "ordered[bool]"});
  t.add_comment("experiment = " + std::string(to_string(cfg.experiment)));
  t.add_comment("coefficient = " + cell(cfg.response.coefficient));
  t.add_row({cell(r.raw.size()), cell(r.var_raw), cell(r.var_ema), cell(r.var_second_order), cell(r.ordered)});
  return t;
}

CsvTable summary_table(const ExperimentConfig& cfg, const LrVsInitResult& r) {
  CsvTable t({"scale", "differing_steps[count]", "identical[bool]"});
  t.add_comment("experiment = " + std::string(to_string(cfg.experiment)));
  t.add_comment("zero_init_identical = " + cell(r.zero_init_identical));
  t.add_comment("large_init_mean_ff = " + cell(r.large_init_mean_ff));
  t.add_comment("reference_mean_ff = " + cell(r.reference_mean_ff));
  for (const auto& p : r.pairs) t.add_row({cell(p.scale), cell(p.differing_steps), cell(p.identical)});
  return t;
}

CsvTable summary_table(const ExperimentConfig& cfg, const LrSensitivityResult& r) {
  CsvTable t({"setting", "epsilon", "lambda", "train_accuracy[fraction]", "test_accuracy[fraction]",
              "mean_ff_ratio[fraction]"});
  t.add_comment("experiment = " + std::string(to_string(cfg.experiment)));
  t.add_comment("settings: a = clipping and scaling, b = magnitude independent, c = magnitude independent zero init");
  for (char s : {'a', 'b', 'c'}) t.add_comment(std::string("spread_") + s + " = " + cell(r.spread(s)));
  for (const auto& p : r.points)
    t.add_row({std::string(1, p.setting), cell(p.epsilon), cell(p.lambda), cell(p.train_accuracy),
               cell(p.test_accuracy), cell(p.mean_ff)});
  return t;
}

CsvTable summary_table(const ExperimentConfig& cfg, const AlphaSweepResult& r) {
  CsvTable t({"alpha", "mean_ff_ratio[fraction]", "early_ff_ratio[fraction]", "test_accuracy[fraction]"});
  t.add_comment("experiment = " + std::string(to_string(cfg.experiment)));
  for (const auto& p : r.points) t.add_row({cell(p.alpha), cell(p.mean_ff), cell(p.early_ff), cell(p.test_accuracy)});
  return t;
}

CsvTable summary_table(const ExperimentConfig& cfg, const AlphaDecayResult& r) {
  CsvTable t({"schedule", "first_ff_ratio[fraction]", "final_window_ff_ratio[fraction]", "test_accuracy[fraction]"});
  t.add_comment("experiment = " + std::string(to_string(cfg.experiment)));
  t.add_comment("final window = " + cell(kFinalWindow) + " of the steps");
  t.add_row({std::string(binopt::to_string(cfg.filtered.alpha_decay)), cell(r.decay_first_ff), cell(r.decay_final_ff),
             cell(r.decay_test_accuracy)});
  t.add_row({"constant", cell(r.constant_first_ff), cell(r.constant_final_ff), cell(r.constant_test_accuracy)});
  return t;
}

CsvTable summary_table(const ExperimentConfig& cfg, const HpsearchResult& r) {
  CsvTable t({"trial", "latent_best_test_accuracy[fraction]", "filtered_best_test_accuracy[fraction]"});
  t.add_comment("experiment = " + std::string(to_string(cfg.experiment)));
  t.add_comment("repeats = " + cell(cfg.hpsearch.repeats));
  t.add_comment("latent_trials_to_near_best = " + cell(r.latent_trials_to_near_best));
  t.add_comment("filtered_trials_to_near_best = " + cell(r.filtered_trials_to_near_best));
  for (std::size_t i = 0; i < r.latent_curve.size(); ++i)
    t.add_row({cell(i + 1), cell(r.latent_curve[i]), cell(r.filtered_curve[i])});
  return t;
}

CsvTable summary_table(const ExperimentConfig& cfg, const TrainingLog& log) {
  CsvTable t({"view", "steps[count]", "train_accuracy[fraction]", "test_accuracy[fraction]",
              "final_window_ff_ratio[fraction]"});
  t.add_comment("experiment = " + std::string(to_string(cfg.experiment)));
  t.add_row({std::string(to_string(cfg.view)), cell(log.steps.size()), cell(final_train(log)), cell(final_test(log)),
             cell(final_window_ff(log))});
  return t;
}

double log_uniform(Rng& rng, double lo, double hi) { return rng.log_uniform(lo, hi); }

binopt::ScheduleKind random_schedule(Rng& rng) {
  constexpr binopt::ScheduleKind kinds[] = {binopt::ScheduleKind::constant, binopt::ScheduleKind::cosine,
                                            binopt::ScheduleKind::linear};
  return kinds[rng.index(3)];
}

}  // namespace

tinynet::TrainingLog run_training(const ExperimentConfig& cfg, const tinynet::Dataset& data, Exec exec,
                                  std::vector<std::size_t> tracked) {
  return make_trainer(cfg, data, exec, std::move(tracked))->run();
}

std::filesystem::path runlog_path(const ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.output_dir) / ("runlog_" + cfg.name + "_" + std::to_string(cfg.seed) + ".csv");
}

CsvTable runlog_table(const ExperimentConfig& cfg, const TrainingLog& log) {
  CsvTable t({"record", "step", "epoch", "rate", "loss[nats]", "flips[count]", "weights[count]", "ff_ratio[fraction]",
              "train_accuracy[fraction]", "test_accuracy[fraction]", "weight_index", "grad", "accumulator"});
  // The output directory is left out of the echo.
  const std::string echo = format_config(cfg);
  std::size_t pos = 0;
  while (pos < echo.size()) {
    const auto nl = echo.find('\n', pos);
    const auto line = echo.substr(pos, nl - pos);
    if (!line.starts_with("output_dir ")) t.add_comment(line);
    pos = nl + 1;
  }
  for (const auto& s : log.steps)
    t.add_row({"step", cell(s.flips.step), cell(s.epoch), cell(s.rate), cell(s.loss), cell(s.flips.flips),
               cell(s.flips.total_weights), cell(s.flips.ff_ratio), "", "", "", "", ""});
  for (const auto& e : log.epochs)
    t.add_row({"epoch", "", cell(e.epoch), "", "", "", "", "", cell(e.train_accuracy), cell(e.test_accuracy), "", "", ""});
  for (const auto& tr : log.traces)
    for (std::size_t i = 0; i < tr.grad.size(); ++i)
      t.add_row({"trace", cell(i), "", "", "", "", "", "", "", "", cell(tr.index), cell(tr.grad[i]),
                 cell(tr.accumulator[i])});
  return t;
}

double LrSensitivityResult::spread(char setting) const {
  double lo = 2.0, hi = -1.0;
  for (const auto& p : points)
    if (p.setting == setting) lo = std::min(lo, p.test_accuracy), hi = std::max(hi, p.test_accuracy);
  return hi < lo ? 0.0 : hi - lo;
}

double LrSensitivityResult::train_spread(char setting) const {
  double lo = 2.0, hi = -1.0;
  for (const auto& p : points)
    if (p.setting == setting) lo = std::min(lo, p.train_accuracy), hi = std::max(hi, p.train_accuracy);
  return hi < lo ? 0.0 : hi - lo;
}

EquivalenceResult run_equivalence(const ExperimentConfig& cfg, const RunOptions& opt) {
  const double alpha = cfg.filtered.alpha, product = cfg.latent.epsilon * cfg.latent.lambda;
  if (std::abs(alpha - product) > 1e-12 * alpha)
    throw ConfigError("equivalence needs filtered.alpha = latent.epsilon * latent.lambda, got " + cell(alpha) +
                          " and " + cell(product),
                      0);
  if (cfg.latent.epsilon_decay != cfg.filtered.alpha_decay)
    throw ConfigError("equivalence needs latent.epsilon_decay = filtered.alpha_decay", 0);
  if (cfg.latent.clipping || cfg.latent.scaling || cfg.latent.w0_init_scale != 0.0)
    throw ConfigError("equivalence compares magnitude-independent zero-init latent SGD: clipping, scaling and "
                      "w0_init_scale must be off",
                      0);
  const auto data = make_dataset(cfg);
  Timings timings;
  auto latent = variant(cfg, "latent");
  latent.view = View::latent;
  auto filtered = variant(cfg, "filtered");
  filtered.view = View::filtered;
  const auto t0 = std::chrono::steady_clock::now();
  auto ls = run_lockstep({latent, filtered}, data, inner_exec(opt));
  timings.add(cfg.name, seconds_since(t0));

  EquivalenceResult r;
  r.latent = std::move(ls.logs[0]);
  r.filtered = std::move(ls.logs[1]);
  r.steps = r.latent.steps.size();
  r.weights = r.steps ? r.latent.steps[0].flips.total_weights : 0;
  r.latent_flips = total_flips(r.latent);
  r.filtered_flips = total_flips(r.filtered);
  r.agreement = ls.agreement[1].value();
  r.diverged = r.agreement < kEquivalenceThreshold;
  write_runlog(latent, r.latent, opt);
  write_runlog(filtered, r.filtered, opt);
  write_summary(cfg, opt, summary_table(cfg, r));
  timings.write(cfg, opt);
  return r;
}

FilterResponseResult run_filter_response(const ExperimentConfig& cfg, const RunOptions& opt) {
  const double c = cfg.response.coefficient;
  std::vector<double> stream;
  std::size_t first = 0, last = 0;
  Timings timings;
  if (cfg.response.source == ResponseSource::synthetic) {
    Rng rng(derive_seed(cfg.seed, 11));
    stream.resize(cfg.response.steps);
    for (std::size_t t = 0; t < stream.size(); ++t)
      stream[t] = cfg.response.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / cfg.response.period) +
                  cfg.response.noise * rng.normal();
    last = stream.size();
  } else {
    if (cfg.epochs == 0) throw ConfigError("filter-response needs at least one training epoch", 0);
    const std::size_t epoch = cfg.response.epoch == 0 ? cfg.epochs : cfg.response.epoch;
    if (epoch > cfg.epochs) throw ConfigError("response.epoch exceeds epochs", 0);
    const auto data = make_dataset(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const auto log = run_training(cfg, data, inner_exec(opt), {cfg.response.weight});
    timings.add(cfg.name, seconds_since(t0));
    write_runlog(cfg, log, opt);
    stream = log.traces.at(0).grad;
    const std::size_t spe = stream.size() / cfg.epochs;
    first = (epoch - 1) * spe;
    last = epoch * spe;
  }
  // Both filters run over the whole stream; only the window is reported.
  const auto ema = iir::filter_sequence(iir::make_ema(c), stream);
  const auto second = iir::filter_sequence(iir::make_second_order_bnn(c, c), stream);

  FilterResponseResult r;
  r.first_step = first;
  const auto window = [&](const std::vector<double>& v) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(first), v.begin() + static_cast<std::ptrdiff_t>(last));
  };
  r.raw = window(stream);
  r.ema = window(ema);
  r.second_order = window(second);
  r.var_raw = variance(r.raw);
  r.var_ema = variance(r.ema);
  r.var_second_order = variance(r.second_order);
  r.ordered = r.var_second_order < r.var_ema && r.var_ema < r.var_raw;

  if (opt.write_files) {
    CsvTable t({"step", "raw[grad]", "ema[grad]", "second_order[grad]", "ema_scaled[grad]", "second_order_scaled[grad]"});
    t.add_comment("coefficient = " + cell(c));
    t.add_comment("scaled columns multiply the filter output by max|raw| / max|output| over the window");
    const double range = max_abs(r.raw);
    const double se = max_abs(r.ema) > 0.0 ? range / max_abs(r.ema) : 0.0;
    const double ss = max_abs(r.second_order) > 0.0 ? range / max_abs(r.second_order) : 0.0;
    for (std::size_t i = 0; i < r.raw.size(); ++i)
      t.add_row({cell(first + i), cell(r.raw[i]), cell(r.ema[i]), cell(r.second_order[i]), cell(r.ema[i] * se),
                 cell(r.second_order[i] * ss)});
    t.write(std::filesystem::path(cfg.output_dir) / ("response_" + cfg.name + "_" + std::to_string(cfg.seed) + ".csv"));
  }
  write_summary(cfg, opt, summary_table(cfg, r));
  timings.write(cfg, opt);
  return r;
}

LrVsInitResult run_lr_vs_init(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.latent.clipping || cfg.latent.scaling)
    throw ConfigError("lr-vs-init needs the magnitude-independent setting: clipping and scaling off", 0);
  const auto data = make_dataset(cfg);
  const double eps = cfg.latent.epsilon, lambda = cfg.latent.lambda, w0 = cfg.latent.w0_init_scale;
  const double alpha = eps * lambda;
  auto latent_run = [&](const std::string& suffix, double e, double l, double init) {
    auto c = variant(cfg, suffix);
    c.view = View::latent;
    c.latent.epsilon = e;
    c.latent.lambda = l;
    c.latent.w0_init_scale = init;
    return c;
  };

  // Jobs: one per scale pair, the zero-init group and the two single runs.
  const std::size_t n_pairs = cfg.sweep_scales.size();
  std::vector<Lockstep> pairs(n_pairs);
  Lockstep zero;
  std::vector<TrainingLog> singles(2);
  Timings timings;
  const double eps_min = *std::min_element(cfg.sweep_epsilons.begin(), cfg.sweep_epsilons.end());
  const double big = std::max(1.0, w0) * *std::max_element(cfg.sweep_scales.begin(), cfg.sweep_scales.end());
  const std::vector<ExperimentConfig> single_cfgs{latent_run("reference", eps, lambda, w0),
                                                  latent_run("large-init", eps_min, alpha / eps_min, big)};
  for_each_run(n_pairs + 3, opt.jobs, [&](std::size_t job) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ExperimentConfig> runs;
    if (job < n_pairs) {
      const double s = cfg.sweep_scales[job];
      runs = {latent_run("scale" + cell(s) + "-lr", s * eps, lambda / s, w0),
              latent_run("scale" + cell(s) + "-init", eps, lambda, w0 / s)};
      pairs[job] = run_lockstep(runs, data, inner_exec(opt));
      for (std::size_t i = 0; i < runs.size(); ++i) write_runlog(runs[i], pairs[job].logs[i], opt);
    } else if (job == n_pairs) {
      for (double e : cfg.sweep_epsilons) runs.push_back(latent_run("zero-init-eps" + cell(e), e, alpha / e, 0.0));
      zero = run_lockstep(runs, data, inner_exec(opt));
      for (std::size_t i = 0; i < runs.size(); ++i) write_runlog(runs[i], zero.logs[i], opt);
    } else {
      const auto& c = single_cfgs[job - n_pairs - 1];
      runs = {c};
      singles[job - n_pairs - 1] = run_training(c, data, inner_exec(opt));
      write_runlog(c, singles[job - n_pairs - 1], opt);
    }
    for (const auto& r : runs) timings.add(r.name, seconds_since(t0) / static_cast<double>(runs.size()));
  });

  LrVsInitResult r;
  for (std::size_t i = 0; i < n_pairs; ++i)
    r.pairs.push_back({cfg.sweep_scales[i], pairs[i].differing_steps[1], pairs[i].differing_steps[1] == 0});
  r.zero_init_identical =
      std::all_of(zero.differing_steps.begin(), zero.differing_steps.end(), [](std::size_t d) { return d == 0; });
  r.reference_mean_ff = mean_ff(singles[0], 1, singles[0].steps.size());
  r.large_init_mean_ff = mean_ff(singles[1], 1, singles[1].steps.size());
  write_summary(cfg, opt, summary_table(cfg, r));
  timings.write(cfg, opt);
  return r;
}

LrSensitivityResult run_lr_sensitivity(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto data = make_dataset(cfg);
  // Settings a and b use unit init scale when the config has zero init.
  const double init = cfg.latent.w0_init_scale > 0.0 ? cfg.latent.w0_init_scale : 1.0;
  std::vector<ExperimentConfig> runs;
  std::vector<LrSensitivityResult::Point> points;
  for (char setting : {'a', 'b', 'c'}) {
    for (double e : cfg.sweep_epsilons) {
      auto c = variant(cfg, std::string(1, setting) + "-eps" + cell(e));
      c.view = View::latent;
      c.latent.epsilon = e;
      c.latent.lambda = cfg.latent.lambda * cfg.latent.epsilon / e;
      c.latent.clipping = c.latent.scaling = setting == 'a';
      c.latent.w0_init_scale = setting == 'c' ? 0.0 : init;
      runs.push_back(c);
      points.push_back({setting, e, c.latent.lambda});
    }
  }
  Timings timings;
  const auto logs = execute(runs, data, opt, timings);
  LrSensitivityResult r;
  r.points = std::move(points);
  for (std::size_t i = 0; i < logs.size(); ++i) {
    r.points[i].train_accuracy = final_train(logs[i]);
    r.points[i].test_accuracy = final_test(logs[i]);
    r.points[i].mean_ff = mean_ff(logs[i], 1, logs[i].steps.size());
  }
  write_summary(cfg, opt, summary_table(cfg, r));
  timings.write(cfg, opt);
  return r;
}

AlphaSweepResult run_alpha_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto data = make_dataset(cfg);
  std::vector<ExperimentConfig> runs;
  for (double a : cfg.sweep_alphas) {
    auto c = variant(cfg, "alpha" + cell(a));
    c.view = View::filtered;
    c.filtered.alpha = a;
    runs.push_back(c);
  }
  Timings timings;
  const auto logs = execute(runs, data, opt, timings);
  AlphaSweepResult r;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const std::size_t n = logs[i].steps.size();
    const auto early = static_cast<std::size_t>(std::ceil(kFinalWindow * static_cast<double>(n)));
    r.points.push_back({cfg.sweep_alphas[i], mean_ff(logs[i], 1, n), mean_ff(logs[i], 1, early + 1), final_test(logs[i])});
  }
  write_summary(cfg, opt, summary_table(cfg, r));
  timings.write(cfg, opt);
  return r;
}

AlphaDecayResult run_alpha_decay(const ExperimentConfig& cfg, const RunOptions& opt) {
  if (cfg.filtered.alpha_decay == binopt::ScheduleKind::constant)
    throw ConfigError("alpha-decay compares a decaying schedule with constant alpha; set filtered.alpha_decay", 0);
  const auto data = make_dataset(cfg);
  auto decay = variant(cfg, "decay");
  decay.view = View::filtered;
  auto constant = variant(cfg, "constant");
  constant.view = View::filtered;
  constant.filtered.alpha_decay = binopt::ScheduleKind::constant;
  Timings timings;
  auto logs = execute({decay, constant}, data, opt, timings);
  AlphaDecayResult r;
  r.decay = std::move(logs[0]);
  r.constant = std::move(logs[1]);
  r.decay_final_ff = final_window_ff(r.decay);
  r.constant_final_ff = final_window_ff(r.constant);
  r.decay_first_ff = r.decay.steps.empty() ? 0.0 : r.decay.steps[0].flips.ff_ratio;
  r.constant_first_ff = r.constant.steps.empty() ? 0.0 : r.constant.steps[0].flips.ff_ratio;
  r.decay_test_accuracy = final_test(r.decay);
  r.constant_test_accuracy = final_test(r.constant);
  write_summary(cfg, opt, summary_table(cfg, r));
  timings.write(cfg, opt);
  return r;
}

ExperimentConfig sample_trial(const ExperimentConfig& base, View view, Rng& rng) {
  ExperimentConfig c = base;
  c.view = view;
  if (view == View::latent) {
    c.latent.epsilon = log_uniform(rng, 1e-5, 1.0);
    c.latent.epsilon_decay = random_schedule(rng);
    c.latent.w0_init_scale = log_uniform(rng, 1e-3, 10.0);
    c.latent.gamma = log_uniform(rng, 1e-5, 1.0);
    c.latent.lambda = log_uniform(rng, 1e-5, 1.0);
    c.latent.scaling = rng.uniform() < 0.5;
    c.latent.clipping = rng.uniform() < 0.5;
  } else {
    c.filtered.alpha = log_uniform(rng, 1e-5, 1.0);
    c.filtered.alpha_decay = random_schedule(rng);
    c.filtered.gamma = log_uniform(rng, 1e-5, 1.0);
  }
  return c;
}

HpsearchResult run_hpsearch(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto data = make_dataset(cfg);
  const std::size_t trials = cfg.hpsearch.trials, repeats = cfg.hpsearch.repeats;
  std::vector<ExperimentConfig> runs;
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    for (View view : {View::latent, View::filtered}) {
      Rng rng(derive_seed(derive_seed(cfg.seed, 100 + rep), view == View::latent ? 1 : 2));
      for (std::size_t t = 0; t < trials; ++t) {
        auto c = sample_trial(cfg, view, rng);
        c.name = cfg.name + "-r" + std::to_string(rep) + "-t" + std::to_string(t) + "-" + std::string(to_string(view));
        c.seed = derive_seed(cfg.seed, 1000 + rep * trials + t);  // shared by both views
        runs.push_back(std::move(c));
      }
    }
  }
  Timings timings;
  const auto logs = execute(runs, data, opt, timings);

  HpsearchResult r;
  r.latent_curve.assign(trials, 0.0);
  r.filtered_curve.assign(trials, 0.0);
  std::size_t k = 0;
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    for (View view : {View::latent, View::filtered}) {
      auto& curve = view == View::latent ? r.latent_curve : r.filtered_curve;
      auto& to_best = view == View::latent ? r.latent_trials_to_near_best : r.filtered_trials_to_near_best;
      std::vector<double> best(trials);
      double b = -1.0;
      for (std::size_t t = 0; t < trials; ++t, ++k) {
        const double acc = final_test(logs[k]);
        b = std::max(b, std::isfinite(acc) ? acc : 0.0);
        best[t] = b;
        curve[t] += b / static_cast<double>(repeats);
      }
      std::size_t first = trials;
      for (std::size_t t = 0; t < trials; ++t)
        if (best[t] >= best.back() - 0.01) {
          first = t + 1;
          break;
        }
      to_best += static_cast<double>(first) / static_cast<double>(repeats);
    }
  }
  write_summary(cfg, opt, summary_table(cfg, r));
  timings.write(cfg, opt);
  return r;
}

tinynet::TrainingLog run_train(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto data = make_dataset(cfg);
  Timings timings;
  auto logs = execute({cfg}, data, opt, timings);
  write_summary(cfg, opt, summary_table(cfg, logs[0]));
  timings.write(cfg, opt);
  return std::move(logs[0]);
}

std::string run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  switch (cfg.experiment) {
    case ExperimentKind::equivalence: return summary_table(cfg, run_equivalence(cfg, opt)).str();
    case ExperimentKind::filter_response: return summary_table(cfg, run_filter_response(cfg, opt)).str();
    case ExperimentKind::lr_vs_init: return summary_table(cfg, run_lr_vs_init(cfg, opt)).str();
    case ExperimentKind::lr_sensitivity: return summary_table(cfg, run_lr_sensitivity(cfg, opt)).str();
    case ExperimentKind::alpha_sweep: return summary_table(cfg, run_alpha_sweep(cfg, opt)).str();
    case ExperimentKind::alpha_decay: return summary_table(cfg, run_alpha_decay(cfg, opt)).str();
    case ExperimentKind::hpsearch: return summary_table(cfg, run_hpsearch(cfg, opt)).str();
    case ExperimentKind::train: return summary_table(cfg, run_train(cfg, opt)).str();
  }
  throw std::logic_error("unknown experiment kind");
}

}  // namespace bnnfilt::expcli
