#include "bnnfilt/iir.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "bnnfilt/kernels.hpp"

namespace bnnfilt::iir {

namespace {

void check_discount(const char* name, double v) {
  if (!(v > 0.0 && v <= 1.0))
    throw std::domain_error(std::string(name) + " must lie in (0, 1], got " + std::to_string(v));
}

std::vector<double> convolve(const std::vector<double>& f, const std::vector<double>& h) {
  std::vector<double> out(f.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) out[i + j] += f[i] * h[j];
  return out;
}

}  // namespace

FilterCoeffs::FilterCoeffs(std::vector<double> b, std::vector<double> a) : b_(std::move(b)), a_(std::move(a)) {
  if (b_.empty() || a_.empty()) throw std::invalid_argument("filter coefficient vectors must be non-empty");
  if (a_[0] == 0.0) throw std::invalid_argument("a0 must be nonzero");
}

std::size_t FilterCoeffs::order() const { return std::max(feedforward_order(), feedback_order()); }

FilterState::FilterState(const FilterCoeffs& coeffs, std::size_t element_count)
    : n_(element_count),
      x_lags_(coeffs.feedforward_order()),
      y_lags_(coeffs.feedback_order()),
      x_hist_(x_lags_ * element_count, 0.0),
      y_hist_(y_lags_ * element_count, 0.0) {}

double FilterState::input_history(std::size_t lag, std::size_t element) const {
  if (lag == 0 || lag > x_lags_ || element >= n_) throw std::out_of_range("input history index");
  return x_hist_[row_of(x_head_, x_lags_, lag) * n_ + element];
}

double FilterState::output_history(std::size_t lag, std::size_t element) const {
  if (lag == 0 || lag > y_lags_ || element >= n_) throw std::out_of_range("output history index");
  return y_hist_[row_of(y_head_, y_lags_, lag) * n_ + element];
}

void FilterState::reset() {
  std::fill(x_hist_.begin(), x_hist_.end(), 0.0);
  std::fill(y_hist_.begin(), y_hist_.end(), 0.0);
  x_head_ = y_head_ = 0;
}

FilterCoeffs make_ema(double alpha) {
  check_discount("alpha", alpha);
  return FilterCoeffs({alpha, 0.0}, {1.0, alpha - 1.0});
}

FilterCoeffs identity() { return FilterCoeffs({1.0}, {1.0}); }

FilterCoeffs cascade(const FilterCoeffs& first, const FilterCoeffs& second) {
  return FilterCoeffs(convolve(first.b(), second.b()), convolve(first.a(), second.a()));
}

FilterCoeffs make_second_order_bnn(double alpha, double gamma) {
  check_discount("alpha", alpha);
  check_discount("gamma", gamma);
  const double pa = alpha - 1.0;
  const double pg = gamma - 1.0;
  // Same operations as cascade(make_ema(gamma), make_ema(alpha)).
  return FilterCoeffs({gamma * alpha, 0.0, 0.0}, {1.0, pa + pg, pg * pa});
}

void step_into(const FilterCoeffs& coeffs, FilterState& state, std::span<const double> x, std::span<double> y,
               Exec exec) {
  check_dims("filter input length", state.n_, x.size());
  check_dims("filter output length", state.n_, y.size());
  check_dims("input history lags", coeffs.feedforward_order(), state.x_lags_);
  check_dims("output history lags", coeffs.feedback_order(), state.y_lags_);

  const std::size_t n = state.n_;
  std::vector<const double*> x_lags(state.x_lags_);
  std::vector<const double*> y_lags(state.y_lags_);
  for (std::size_t j = 1; j <= state.x_lags_; ++j)
    x_lags[j - 1] = state.x_hist_.data() + state.row_of(state.x_head_, state.x_lags_, j) * n;
  for (std::size_t q = 1; q <= state.y_lags_; ++q)
    y_lags[q - 1] = state.y_hist_.data() + state.row_of(state.y_head_, state.y_lags_, q) * n;

  // The oldest row (lag P / lag Q) becomes the newest after this step.
  double* x_write = state.x_lags_ ? state.x_hist_.data() + state.row_of(state.x_head_, state.x_lags_, state.x_lags_) * n
                                  : nullptr;
  double* y_write = state.y_lags_ ? state.y_hist_.data() + state.row_of(state.y_head_, state.y_lags_, state.y_lags_) * n
                                  : nullptr;

  kernels::iir_step(exec, {.b = coeffs.b(),
                           .a = coeffs.a(),
                           .x_lags = x_lags,
                           .y_lags = y_lags,
                           .x = x,
                           .y = y,
                           .x_write = x_write,
                           .y_write = y_write});

  if (state.x_lags_) state.x_head_ = (state.x_head_ + 1) % state.x_lags_;
  if (state.y_lags_) state.y_head_ = (state.y_head_ + 1) % state.y_lags_;
}

std::vector<double> step(const FilterCoeffs& coeffs, FilterState& state, std::span<const double> x, Exec exec) {
  std::vector<double> y(x.size());
  step_into(coeffs, state, x, y, exec);
  return y;
}

std::vector<double> filter_sequence(const FilterCoeffs& coeffs, std::span<const double> x) {
  FilterState state(coeffs, 1);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    step_into(coeffs, state, x.subspan(i, 1), std::span<double>(out).subspan(i, 1), Exec::serial);
  return out;
}

std::vector<double> impulse_response(const FilterCoeffs& coeffs, std::size_t n) {
  if (n == 0) throw std::invalid_argument("impulse_response needs n >= 1");
  std::vector<double> x(n, 0.0);
  x[0] = 1.0;
  return filter_sequence(coeffs, x);
}

}  // namespace bnnfilt::iir
