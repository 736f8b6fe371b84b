#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bnnfilt/common.hpp"

namespace bnnfilt::iir {

/// Coefficients of the difference equation
///   a0 y[i] = b0 x[i] + ... + bP x[i-P] - a1 y[i-1] - ... - aQ y[i-Q].
/// Immutable after construction; a0 must be nonzero.
class FilterCoeffs {
 public:
  FilterCoeffs(std::vector<double> b, std::vector<double> a);

  const std::vector<double>& b() const { return b_; }
  const std::vector<double>& a() const { return a_; }
  std::size_t feedforward_order() const { return b_.size() - 1; }  // P
  std::size_t feedback_order() const { return a_.size() - 1; }     // Q
  std::size_t order() const;

  friend bool operator==(const FilterCoeffs&, const FilterCoeffs&) = default;

 private:
  std::vector<double> b_;
  std::vector<double> a_;
};

/// Per-element recursion state: ring buffers holding the last P inputs and the
/// last Q outputs of `element_count` independent signals, stored lag-major
/// (row r holds one lag for every element). Always starts from zero history.
class FilterState {
 public:
  FilterState(const FilterCoeffs& coeffs, std::size_t element_count);

  std::size_t element_count() const { return n_; }
  std::size_t input_lags() const { return x_lags_; }
  std::size_t output_lags() const { return y_lags_; }

  /// Stored x[i-lag] (lag >= 1) for one element.
  double input_history(std::size_t lag, std::size_t element) const;
  /// Stored y[i-lag] (lag >= 1) for one element.
  double output_history(std::size_t lag, std::size_t element) const;

  void reset();

 private:
  friend std::vector<double> step(const FilterCoeffs&, FilterState&, std::span<const double>, Exec);
  friend void step_into(const FilterCoeffs&, FilterState&, std::span<const double>, std::span<double>, Exec);

  std::size_t row_of(std::size_t head, std::size_t lags, std::size_t lag) const {
    return (head + lags - (lag - 1)) % lags;
  }

  std::size_t n_;
  std::size_t x_lags_;
  std::size_t y_lags_;
  std::vector<double> x_hist_;
  std::vector<double> y_hist_;
  std::size_t x_head_ = 0;  // row holding x[i-1]
  std::size_t y_head_ = 0;  // row holding y[i-1]
};

/// First-order EMA y = (1-alpha) y[-1] + alpha x: b = [alpha, 0], a = [1, alpha-1].
/// Throws std::domain_error unless 0 < alpha <= 1.
FilterCoeffs make_ema(double alpha);

/// Pass-through filter b = [1], a = [1].
FilterCoeffs identity();

/// Series composition: b and a are the discrete convolutions of the inputs'.
FilterCoeffs cascade(const FilterCoeffs& first, const FilterCoeffs& second);

/// Direct form of two cascaded EMAs (momentum gamma, then alpha):
///   g[i] = alpha*gamma*x[i] - ((alpha-1)+(gamma-1)) g[i-1] - (alpha-1)(gamma-1) g[i-2].
/// Bitwise equal to cascade(make_ema(gamma), make_ema(alpha)) and symmetric in its arguments.
FilterCoeffs make_second_order_bnn(double alpha, double gamma);

/// Advances every element by one time step and returns the outputs.
std::vector<double> step(const FilterCoeffs& coeffs, FilterState& state, std::span<const double> x,
                         Exec exec = Exec::parallel);
void step_into(const FilterCoeffs& coeffs, FilterState& state, std::span<const double> x,
               std::span<double> y, Exec exec = Exec::parallel);

/// Output for the input (1, 0, 0, ...) from zero state, n samples.
std::vector<double> impulse_response(const FilterCoeffs& coeffs, std::size_t n);

/// Runs a scalar stream through a fresh single-element state.
std::vector<double> filter_sequence(const FilterCoeffs& coeffs, std::span<const double> x);

}  // namespace bnnfilt::iir
