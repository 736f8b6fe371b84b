#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "bnnfilt/common.hpp"
#include "bnnfilt/schedule.hpp"
#include "bnnfilt/tiebreak.hpp"

namespace bnnfilt::binopt {

/// Anything that owns a vector of binary weights and updates it from the
/// gradient with respect to those weights.
class BinaryOptimizer {
 public:
  virtual ~BinaryOptimizer() = default;

  /// Applies one update. `flipped`, when non-empty, receives 1 for every
  /// weight whose sign changed. Returns the number of flips.
  virtual std::size_t step(std::span<const double> grad, std::size_t step_index,
                           std::span<std::uint8_t> flipped = {}) = 0;

  virtual std::span<const std::int8_t> theta() const = 0;
  virtual std::size_t size() const = 0;
  /// Value of the scheduled hyperparameter used by the most recent step.
  virtual double last_rate() const = 0;
  /// The accumulated negative gradient that theta is the (negated) sign of.
  virtual double accumulator(std::size_t index) const = 0;
};

struct LatentHyper {
  Schedule epsilon{ScheduleKind::constant, 0.1, 1};  // learning rate and its decay
  double lambda = 1e-2;                              // weight decay factor
  double gamma = 0.1;                                // momentum discount
  bool clip = false;
  bool scale = false;
};

/// State of classical latent-weight SGD with momentum and weight decay.
struct LatentOptimState {
  std::vector<double> w;
  std::vector<double> m;
  std::vector<std::int8_t> theta;
  double epsilon = 0.0;  // value used by the most recent step
  double lambda = 0.0;
  double gamma = 0.0;
  bool clip_enabled = false;
  bool scale_enabled = false;
};

/// Latent-weight SGD:
///   m <- (1-gamma) m + gamma grad
///   w <- w - eps_t (m + lambda w),  clamp to [-1, 1] when clipping
///   theta <- sign(w)  (stochastic at exact zero)
///
/// With scaling enabled the weights are grouped into output channels and each
/// channel carries a scale equal to its mean absolute latent weight; the
/// incoming gradient of a weight is multiplied by its channel scale, which is
/// the straight-through chain rule for binarized weights s_c * sign(w).
class LatentOptimizer final : public BinaryOptimizer {
 public:
  /// `channel_sizes` partitions the weights into consecutive channels; empty
  /// means one channel spanning everything.
  LatentOptimizer(std::vector<double> initial_w, LatentHyper hyper, TieBreakRng rng,
                  std::vector<std::size_t> channel_sizes = {}, Exec exec = Exec::parallel);

  std::size_t step(std::span<const double> grad, std::size_t step_index,
                   std::span<std::uint8_t> flipped = {}) override;

  std::span<const std::int8_t> theta() const override { return state_.theta; }
  std::size_t size() const override { return state_.w.size(); }
  double last_rate() const override { return state_.epsilon; }
  double accumulator(std::size_t index) const override { return -state_.w.at(index); }

  const LatentOptimState& state() const { return state_; }
  /// Per-channel mean |w| (meaningful whether or not scaling is enabled).
  std::vector<double> channel_scales() const;

 private:
  LatentOptimState state_;
  LatentHyper hyper_;
  TieBreakRng rng_;
  std::vector<std::size_t> channels_;
  Exec exec_;
  std::vector<double> scratch_;
};

enum class FilterForm { cascade, direct2 };

std::string_view to_string(FilterForm form);
FilterForm parse_filter_form(std::string_view text);

struct FilterHyper {
  Schedule alpha{ScheduleKind::constant, 1e-3, 1};  // outer discount and its decay
  double gamma = 0.1;                               // momentum discount
  FilterForm form = FilterForm::cascade;
};

/// State of the gradient-filtering optimizer. In cascade form `m` and `g`
/// are the two EMA accumulators; in direct2 form `g` holds g[i-1] and
/// `g_prev` holds g[i-2] (and `m` is unused).
struct FilterOptimState {
  std::vector<double> m;
  std::vector<double> g;
  std::vector<double> g_prev;
  std::vector<std::int8_t> theta;
  double alpha = 0.0;  // value used by the most recent step
  double gamma = 0.0;
  FilterForm form = FilterForm::cascade;
};

/// Latent-weight-free optimizer: theta = -sign(g) where g is the gradient
/// passed through two cascaded EMAs (gamma, then alpha_t), i.e. a second-order
/// IIR filter. Accumulators start at zero and the initial theta is drawn at random.
class FilterOptimizer final : public BinaryOptimizer {
 public:
  FilterOptimizer(std::size_t n, FilterHyper hyper, TieBreakRng rng, Exec exec = Exec::parallel);

  std::size_t step(std::span<const double> grad, std::size_t step_index,
                   std::span<std::uint8_t> flipped = {}) override;

  std::span<const std::int8_t> theta() const override { return state_.theta; }
  std::size_t size() const override { return state_.g.size(); }
  double last_rate() const override { return state_.alpha; }
  double accumulator(std::size_t index) const override { return state_.g.at(index); }

  const FilterOptimState& state() const { return state_; }

 private:
  FilterOptimState state_;
  FilterHyper hyper_;
  TieBreakRng rng_;
  Exec exec_;
};

/// Brute-force test oracle for the accumulated negative gradient of latent SGD:
///   g_i = (1 - eps*lambda)^i g0 + eps * sum_{r=0..i} (1 - eps*lambda)^(i-r) m_r
/// with m_r the momentum EMA (m_{-1} = 0). Every g_i is recomputed from scratch.
std::vector<double> unrolled_oracle(std::span<const double> grads, double epsilon, double lambda, double gamma,
                                    double g0);

/// Theta history of a single latent weight over a gradient stream, magnitude
/// independent (no clip or scale), starting from latent value w0 = -g0.
std::vector<std::int8_t> latent_theta_sequence(std::span<const double> grads, double epsilon, double lambda,
                                               double gamma, double g0, std::uint64_t seed);

/// True iff running latent SGD with (s*eps, g0) and with (eps, g0/s) produces
/// identical theta sequences under identical tie-break draws. The first run
/// uses weight decay lambda/s, keeping alpha = eps*lambda fixed.
bool scale_equivalence_check(std::span<const double> grads, double epsilon, double lambda, double gamma,
                             double g0, double s, std::uint64_t seed);

}  // namespace bnnfilt::binopt
