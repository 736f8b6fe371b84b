#include "bnnfilt/binopt.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bnnfilt/iir.hpp"
#include "bnnfilt/kernels.hpp"

namespace bnnfilt::binopt {

namespace {

void check_discount(const char* name, double v) {
  if (!(v > 0.0 && v <= 1.0))
    throw std::domain_error(std::string(name) + " must lie in (0, 1], got " + std::to_string(v));
}

}  // namespace

// ---------------------------------------------------------------------------
// LatentOptimizer

LatentOptimizer::LatentOptimizer(std::vector<double> initial_w, LatentHyper hyper, TieBreakRng rng,
                                 std::vector<std::size_t> channel_sizes, Exec exec)
    : hyper_(hyper), rng_(rng), channels_(std::move(channel_sizes)), exec_(exec) {
  if (!(hyper.epsilon.initial_value > 0.0)) throw std::domain_error("epsilon must be positive");
  if (!(hyper.lambda >= 0.0)) throw std::domain_error("lambda must be non-negative");
  check_discount("gamma", hyper.gamma);

  const std::size_t n = initial_w.size();
  if (channels_.empty()) channels_.push_back(n);
  check_dims("channel sizes total", n, std::accumulate(channels_.begin(), channels_.end(), std::size_t{0}));

  state_.w = std::move(initial_w);
  state_.m.assign(n, 0.0);
  state_.theta.assign(n, 0);
  state_.lambda = hyper.lambda;
  state_.gamma = hyper.gamma;
  state_.clip_enabled = hyper.clip;
  state_.scale_enabled = hyper.scale;
  if (hyper.clip)
    for (auto& w : state_.w) w = std::clamp(w, -1.0, 1.0);

  kernels::binarize(exec_, {.values = state_.w,
                            .sign_factor = 1.0,
                            .rng = &rng_,
                            .step = TieBreakRng::kInitStep,
                            .theta = state_.theta,
                            .flipped = {}});
}

std::vector<double> LatentOptimizer::channel_scales() const {
  std::vector<double> scales;
  scales.reserve(channels_.size());
  std::size_t offset = 0;
  for (std::size_t len : channels_) {
    double sum = 0.0;
    for (std::size_t k = offset; k < offset + len; ++k) sum += std::abs(state_.w[k]);
    scales.push_back(len ? sum / static_cast<double>(len) : 0.0);
    offset += len;
  }
  return scales;
}

std::size_t LatentOptimizer::step(std::span<const double> grad, std::size_t step_index,
                                  std::span<std::uint8_t> flipped) {
  check_dims("latent gradient length", state_.w.size(), grad.size());
  if (!flipped.empty()) check_dims("flip mask length", state_.w.size(), flipped.size());

  std::span<const double> effective = grad;
  if (hyper_.scale) {
    const auto scales = channel_scales();
    scratch_.resize(grad.size());
    std::size_t offset = 0;
    for (std::size_t c = 0; c < channels_.size(); ++c) {
      for (std::size_t k = offset; k < offset + channels_[c]; ++k) scratch_[k] = grad[k] * scales[c];
      offset += channels_[c];
    }
    effective = scratch_;
  }

  state_.epsilon = hyper_.epsilon.value(step_index);
  kernels::latent_update(exec_, {.epsilon = state_.epsilon,
                                 .lambda = hyper_.lambda,
                                 .gamma = hyper_.gamma,
                                 .clip = hyper_.clip,
                                 .grad = effective,
                                 .m = state_.m,
                                 .w = state_.w});
  return kernels::binarize(exec_, {.values = state_.w,
                                   .sign_factor = 1.0,
                                   .rng = &rng_,
                                   .step = step_index,
                                   .theta = state_.theta,
                                   .flipped = flipped});
}

// ---------------------------------------------------------------------------
// FilterOptimizer

std::string_view to_string(FilterForm form) { return form == FilterForm::cascade ? "cascade" : "direct2"; }

FilterForm parse_filter_form(std::string_view text) {
  if (text == "cascade") return FilterForm::cascade;
  if (text == "direct2") return FilterForm::direct2;
  throw std::invalid_argument("unknown filter form '" + std::string(text) + "'");
}

FilterOptimizer::FilterOptimizer(std::size_t n, FilterHyper hyper, TieBreakRng rng, Exec exec)
    : hyper_(hyper), rng_(rng), exec_(exec) {
  check_discount("alpha", hyper.alpha.initial_value);
  check_discount("gamma", hyper.gamma);
  state_.m.assign(n, 0.0);
  state_.g.assign(n, 0.0);
  state_.g_prev.assign(n, 0.0);
  state_.theta.assign(n, 0);
  state_.gamma = hyper.gamma;
  state_.form = hyper.form;
  kernels::binarize(exec_, {.values = state_.g,
                            .sign_factor = -1.0,
                            .rng = &rng_,
                            .step = TieBreakRng::kInitStep,
                            .theta = state_.theta,
                            .flipped = {}});
}

std::size_t FilterOptimizer::step(std::span<const double> grad, std::size_t step_index,
                                  std::span<std::uint8_t> flipped) {
  check_dims("filter gradient length", state_.g.size(), grad.size());
  if (!flipped.empty()) check_dims("flip mask length", state_.g.size(), flipped.size());

  // One alpha per step, shared by every weight.
  const double alpha = hyper_.alpha.value(step_index);
  state_.alpha = alpha;
  if (hyper_.form == FilterForm::cascade) {
    kernels::cascade_update(exec_, {.alpha = alpha, .gamma = hyper_.gamma, .grad = grad, .m = state_.m, .g = state_.g});
  } else {
    const auto c = iir::make_second_order_bnn(alpha, hyper_.gamma);
    kernels::direct2_update(exec_, {.b0 = c.b()[0],
                                    .a1 = c.a()[1],
                                    .a2 = c.a()[2],
                                    .grad = grad,
                                    .g1 = state_.g,
                                    .g2 = state_.g_prev});
  }
  // theta = -sign(g), with ties drawn on -g.
  return kernels::binarize(exec_, {.values = state_.g,
                                   .sign_factor = -1.0,
                                   .rng = &rng_,
                                   .step = step_index,
                                   .theta = state_.theta,
                                   .flipped = flipped});
}

// ---------------------------------------------------------------------------
// Oracles and checks

std::vector<double> unrolled_oracle(std::span<const double> grads, double epsilon, double lambda, double gamma,
                                    double g0) {
  std::vector<double> m(grads.size());
  double acc = 0.0;
  for (std::size_t r = 0; r < grads.size(); ++r) {
    acc = (1.0 - gamma) * acc + gamma * grads[r];
    m[r] = acc;
  }
  const double decay = 1.0 - epsilon * lambda;
  std::vector<double> g(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    double sum = 0.0;
    for (std::size_t r = 0; r <= i; ++r) sum += std::pow(decay, static_cast<double>(i - r)) * m[r];
    g[i] = std::pow(decay, static_cast<double>(i)) * g0 + epsilon * sum;
  }
  return g;
}

std::vector<std::int8_t> latent_theta_sequence(std::span<const double> grads, double epsilon, double lambda,
                                               double gamma, double g0, std::uint64_t seed) {
  LatentHyper hyper;
  hyper.epsilon = Schedule{ScheduleKind::constant, epsilon, grads.size()};
  hyper.lambda = lambda;
  hyper.gamma = gamma;
  LatentOptimizer opt({-g0}, hyper, TieBreakRng(seed), {}, Exec::serial);
  std::vector<std::int8_t> seq;
  seq.reserve(grads.size() + 1);
  seq.push_back(opt.theta()[0]);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    opt.step(grads.subspan(i, 1), i);
    seq.push_back(opt.theta()[0]);
  }
  return seq;
}

bool scale_equivalence_check(std::span<const double> grads, double epsilon, double lambda, double gamma,
                             double g0, double s, std::uint64_t seed) {
  if (!(s > 0.0)) throw std::domain_error("scale factor must be positive");
  const auto scaled_lr = latent_theta_sequence(grads, s * epsilon, lambda / s, gamma, g0, seed);
  const auto scaled_init = latent_theta_sequence(grads, epsilon, lambda, gamma, g0 / s, seed);
  return scaled_lr == scaled_init;
}

}  // namespace bnnfilt::binopt
