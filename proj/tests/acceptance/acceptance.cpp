// Prints one PASS/FAIL line per primary acceptance criterion; exits non-zero on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "bnnfilt/binopt.hpp"
#include "bnnfilt/bitmetrics.hpp"
#include "bnnfilt/expcli/config.hpp"
#include "bnnfilt/expcli/experiments.hpp"
#include "bnnfilt/iir.hpp"
#include "bnnfilt/rng.hpp"
#include "bnnfilt/tinynet/network.hpp"
#include "gradcheck.hpp"

using namespace bnnfilt;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> normal_stream(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double pointwise_rel(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, b[i] == 0.0 ? std::abs(a[i]) : std::abs(a[i] - b[i]) / std::abs(b[i]));
  return worst;
}

double normwise_rel(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale == 0.0 ? diff : diff / scale;
}

binopt::FilterHyper filter_hyper(double alpha, double gamma, std::size_t steps) {
  binopt::FilterHyper h;
  h.alpha = {binopt::ScheduleKind::constant, alpha, steps};
  h.gamma = gamma;
  return h;
}

expcli::ExperimentConfig desk(expcli::ExperimentKind kind) {
  expcli::ExperimentConfig c;
  c.experiment = kind;
  c.seed = kSeed;
  return c;
}

expcli::RunOptions no_files() {
  expcli::RunOptions o;
  o.write_files = false;
  return o;
}

Outcome oracle_equivalence() {
  Rng rng(kSeed);
  double worst = 0.0;
  for (int stream = 0; stream < 100; ++stream) {
    const double eps = rng.log_uniform(1e-3, 1.0), lambda = rng.log_uniform(1e-3, 1.0);
    const double gamma = rng.log_uniform(1e-3, 1.0), alpha = eps * lambda;
    const auto g = normal_stream(32, rng);
    const auto oracle = binopt::unrolled_oracle(g, eps, lambda, gamma, 0.0);
    binopt::FilterOptimizer opt(1, filter_hyper(alpha, gamma, 32), binopt::TieBreakRng(1));
    std::vector<double> rec;
    for (std::size_t t = 0; t < g.size(); ++t) {
      opt.step(std::span(g).subspan(t, 1), t);
      rec.push_back(opt.state().g[0] * eps / alpha);
    }
    worst = std::max(worst, pointwise_rel(rec, oracle));
  }
  return {worst < 1e-12, "max relative error " + fmt("%.3g", worst) + " (tol 1e-12)"};
}

Outcome cascade_identity() {
  Rng rng(kSeed + 1);
  bool coeffs_equal = true;
  double worst_log = 0.0, worst_uniform = 0.0;
  for (int pair = 0; pair < 200; ++pair) {
    const bool log_sampled = pair % 2 == 0;
    const double alpha = log_sampled ? rng.log_uniform(1e-4, 1.0) : 1.0 - rng.uniform();
    const double gamma = log_sampled ? rng.log_uniform(1e-4, 1.0) : 1.0 - rng.uniform();
    const auto direct = iir::make_second_order_bnn(alpha, gamma);
    coeffs_equal = coeffs_equal && iir::cascade(iir::make_ema(gamma), iir::make_ema(alpha)) == direct;
    const auto x = normal_stream(1000, rng);
    const auto series = iir::filter_sequence(iir::make_ema(alpha), iir::filter_sequence(iir::make_ema(gamma), x));
    double& worst = log_sampled ? worst_log : worst_uniform;
    worst = std::max(worst, normwise_rel(iir::filter_sequence(direct, x), series));
  }
  const bool pass = coeffs_equal && worst_log < 1e-12 && worst_uniform < 1e-12;
  return {pass, std::string("coefficients ") + (coeffs_equal ? "equal" : "differ") +
                    "; max relative output error " + fmt("%.3g", worst_log) + " for log-uniform (alpha, gamma) in [1e-4, 1], " +
                    fmt("%.3g", worst_uniform) + " for uniform in (0, 1] (tol 1e-12)"};
}

Outcome flip_equivalence() {
  const std::size_t n = 1000, steps = 10000;
  const double eps = 0.5, lambda = 2e-3, gamma = 0.1;
  binopt::LatentHyper lh;
  lh.epsilon = {binopt::ScheduleKind::constant, eps, steps};
  lh.lambda = lambda;
  lh.gamma = gamma;
  binopt::LatentOptimizer latent(std::vector<double>(n, 0.0), lh, binopt::TieBreakRng(kSeed));
  binopt::FilterOptimizer filter(n, filter_hyper(eps * lambda, gamma, steps), binopt::TieBreakRng(kSeed));
  Rng rng(kSeed + 2);
  std::vector<double> drift(n), g(n);
  for (auto& d : drift) d = 0.1 * rng.normal();
  std::vector<std::uint8_t> ma(n), mb(n);
  bitmetrics::FlipEventAgreement stream;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t k = 0; k < n; ++k) g[k] = drift[k] + rng.normal();
    latent.step(g, t, ma);
    filter.step(g, t, mb);
    stream.add(ma, mb);
  }
  const auto train = expcli::run_equivalence(desk(expcli::ExperimentKind::equivalence), no_files());
  const bool pass = stream.value() >= 0.999 && train.agreement >= 0.999;
  return {pass, "random streams " + fmt("%.6f", stream.value()) + " over " + std::to_string(stream.either) +
                    " flip events; training run " + fmt("%.6f", train.agreement) + " over " +
                    std::to_string(train.latent_flips) + " flips (min 0.999)"};
}

Outcome scale_invariance() {
  Rng rng(kSeed + 3);
  std::size_t failures = 0, checks = 0;
  for (int stream = 0; stream < 50; ++stream) {
    const auto g = normal_stream(2000, rng);
    const double g0 = rng.normal();
    for (double s : {1e-3, 1e-1, 10.0, 1e3}) {
      ++checks;
      failures += binopt::scale_equivalence_check(g, 0.1, 1e-2, 0.1, g0, s, kSeed) ? 0 : 1;
    }
    const auto ref = binopt::latent_theta_sequence(g, 1.0, 1e-3, 0.1, 0.0, kSeed);
    for (double eps : {1e-4, 1e-2, 1e2}) {
      ++checks;
      failures += binopt::latent_theta_sequence(g, eps, 1e-3 / eps, 0.1, 0.0, kSeed) == ref ? 0 : 1;
    }
  }
  auto cfg = desk(expcli::ExperimentKind::lr_vs_init);
  cfg.view = tinynet::View::latent;
  cfg.latent.w0_init_scale = 0.01;
  cfg.sweep_scales = {1e-3, 1e-1, 10.0, 1e3};
  cfg.sweep_epsilons = {1e-4, 1e-2, 1.0};
  const auto r = expcli::run_lr_vs_init(cfg, no_files());
  std::size_t pairs_identical = 0;
  for (const auto& p : r.pairs) pairs_identical += p.identical ? 1 : 0;
  const bool pass = failures == 0 && pairs_identical == r.pairs.size() && r.zero_init_identical;
  return {pass, "random streams " + std::to_string(checks - failures) + "/" + std::to_string(checks) +
                    " identical; training pairs " + std::to_string(pairs_identical) + "/" +
                    std::to_string(r.pairs.size()) + " identical; zero-init across eps " +
                    (r.zero_init_identical ? "identical" : "differs")};
}

Outcome lr_flatness() {
  auto cfg = desk(expcli::ExperimentKind::lr_sensitivity);
  cfg.view = tinynet::View::latent;
  cfg.sweep_epsilons = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  const auto r = expcli::run_lr_sensitivity(cfg, no_files());
  const double train = r.train_spread('c'), test = r.spread('c');
  return {train < 0.01 && test < 0.01, "zero-init spread over eps 1e-4..1: train " + fmt("%.4f", train) + ", test " +
                                           fmt("%.4f", test) + " (max 0.01); clip+scale test spread " +
                                           fmt("%.4f", r.spread('a'))};
}

Outcome alpha_decay() {
  const auto r = expcli::run_alpha_decay(desk(expcli::ExperimentKind::alpha_decay), no_files());
  const bool pass = r.decay_final_ff < 0.1 * r.constant_final_ff && r.decay_test_accuracy >= r.constant_test_accuracy;
  return {pass, "final-window FF decay " + fmt("%.3g", r.decay_final_ff) + " vs constant " +
                    fmt("%.3g", r.constant_final_ff) + " (ratio " +
                    fmt("%.3g", r.decay_final_ff / r.constant_final_ff) + ", max 0.1); test accuracy decay " +
                    fmt("%.4f", r.decay_test_accuracy) + " vs constant " + fmt("%.4f", r.constant_test_accuracy)};
}

Outcome filter_ordering() {
  auto cfg = desk(expcli::ExperimentKind::filter_response);
  cfg.batch_size = 16;
  cfg.response.weight = 100;
  cfg.response.coefficient = 0.1;
  const auto r = expcli::run_filter_response(cfg, no_files());
  return {r.ordered, "variance raw " + fmt("%.3g", r.var_raw) + " > EMA " + fmt("%.3g", r.var_ema) +
                         " > second order " + fmt("%.3g", r.var_second_order) + " over " +
                         std::to_string(r.raw.size()) + " steps"};
}

Outcome alpha_gamma_swap() {
  Rng rng(kSeed + 4);
  double worst = 0.0;
  for (int pair = 0; pair < 100; ++pair) {
    const double a = rng.log_uniform(1e-4, 1.0), b = rng.log_uniform(1e-4, 1.0);
    const auto x = normal_stream(1000, rng);
    for (auto form : {binopt::FilterForm::cascade, binopt::FilterForm::direct2}) {
      auto h1 = filter_hyper(a, b, x.size()), h2 = filter_hyper(b, a, x.size());
      h1.form = h2.form = form;
      binopt::FilterOptimizer f1(1, h1, binopt::TieBreakRng(1)), f2(1, h2, binopt::TieBreakRng(1));
      std::vector<double> g1, g2;
      for (std::size_t t = 0; t < x.size(); ++t) {
        f1.step(std::span(x).subspan(t, 1), t);
        f2.step(std::span(x).subspan(t, 1), t);
        g1.push_back(f1.state().g[0]);
        g2.push_back(f2.state().g[0]);
      }
      worst = std::max(worst, normwise_rel(g1, g2));
    }
  }
  return {worst < 1e-12, "max relative difference " + fmt("%.3g", worst) + " (tol 1e-12)"};
}

Outcome gradient_checks() {
  double worst = 0.0;
  std::size_t params = 0;
  const std::vector<tinynet::NetConfig> nets{{2, {8}, {false}, 3}, {2, {8, 8}, {false, false}, 3}, {2, {8, 8}, {false, true}, 3}};
  for (std::size_t i = 0; i < nets.size(); ++i) {
    tinynet::Network net(nets[i], kSeed + i);
    net.set_activation(tinynet::Activation::hardtanh);
    Rng rng(kSeed + 10 + i);
    std::vector<std::int8_t> theta(net.binary_size());
    for (auto& t : theta) t = rng.uniform() < 0.5 ? -1 : 1;
    net.set_binary_theta(theta);
    tinynet::Matrix x(12, 2);
    for (auto& v : x.data) v = rng.normal();
    std::vector<int> y(12);
    for (auto& v : y) v = static_cast<int>(rng.index(3));
    const auto r = testsupport::check_real_gradients(net, x, y);
    std::size_t count = 0;
    for (const auto& p : net.real_parameters()) count += p.value.size();
    if (count > 1000) return {false, "net has " + std::to_string(count) + " parameters"};
    params += r.checked;
    worst = std::max(worst, r.worst_rel);
  }
  return {worst < 1e-5, std::to_string(params) + " parameters, max relative error " + fmt("%.3g", worst) + " (tol 1e-5)"};
}

Outcome tunable_schema() {
  const auto latent = expcli::tunable_keys(tinynet::View::latent);
  const auto filtered = expcli::tunable_keys(tinynet::View::filtered);
  std::string latent_cfg = "view = latent\n", filtered_cfg = "view = filtered\n";
  const char* latent_values[] = {"0.1", "cosine", "0", "0.1", "0.01", "off", "off"};
  const char* filtered_values[] = {"1e-3", "cosine", "0.1"};
  bool accepts = latent.size() == 7 && filtered.size() == 3;
  if (accepts) {
    for (std::size_t i = 0; i < 7; ++i) latent_cfg += std::string(latent[i]) + " = " + latent_values[i] + "\n";
    for (std::size_t i = 0; i < 3; ++i) filtered_cfg += std::string(filtered[i]) + " = " + filtered_values[i] + "\n";
    try {
      expcli::parse_config(latent_cfg);
      expcli::parse_config(filtered_cfg);
    } catch (const std::exception&) {
      accepts = false;
    }
  }
  auto rejects = [](const std::string& text) {
    try {
      expcli::parse_config(text);
      return false;
    } catch (const expcli::ConfigError&) {
      return true;
    }
  };
  const bool rejections = rejects("view = latent\nfiltered.alpha = 1e-3\n") &&
                          rejects("view = filtered\nlatent.epsilon = 1\n") && rejects("latent.beta = 1\n") &&
                          rejects("filtered.lambda = 1\n");
  return {accepts && rejections, "latent " + std::to_string(latent.size()) + " tunables, filtered " +
                                     std::to_string(filtered.size()) + "; other-view and unknown keys " +
                                     (rejections ? "rejected" : "accepted")};
}

Outcome training_sanity() {
  auto cfg = desk(expcli::ExperimentKind::train);
  cfg.view = tinynet::View::filtered;
  cfg.filtered = {1e-3, binopt::ScheduleKind::cosine, 0.1};
  const auto log = expcli::run_train(cfg, no_files());
  const double acc = log.epochs.back().test_accuracy;
  return {acc >= 0.90, "test accuracy " + fmt("%.4f", acc) + " (min 0.90)"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"oracle-equivalence", 1, oracle_equivalence},
      {"cascade-identity", 1, cascade_identity},
      {"latent-filter-flip-equivalence", 120, flip_equivalence},
      {"scale-invariance", 60, scale_invariance},
      {"learning-rate-flatness", 600, lr_flatness},
      {"alpha-decay-convergence", 300, alpha_decay},
      {"filter-ordering", 120, filter_ordering},
      {"alpha-gamma-swap", 1, alpha_gamma_swap},
      {"gradient-checks", 30, gradient_checks},
      {"tunable-schema", 1, tunable_schema},
      {"training-sanity", 300, training_sanity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s %s: %s; %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), s,
                c.limit_seconds, in_time ? "" : " over time limit");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
