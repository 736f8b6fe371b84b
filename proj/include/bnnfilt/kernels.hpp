#pragma once

// Element-wise hot loops. Every kernel exists twice: a serial reference in
// kernels_serial.cpp and an OpenMP version in kernels_omp.cpp, performing the
// same floating-point operations per output element.

#include <cstddef>
#include <cstdint>
#include <span>

#include "bnnfilt/common.hpp"
#include "bnnfilt/tiebreak.hpp"

namespace bnnfilt::kernels {

/// One step of a general linear recursion over n independent signals.
/// `x_lags[j-1]` / `y_lags[q-1]` point at the rows holding x_{i-j} / y_{i-q}.
/// The new input and output are written to `x_write` / `y_write` (the oldest
/// history rows, read before they are overwritten) when those are non-null.
struct IirStepArgs {
  std::span<const double> b;
  std::span<const double> a;
  std::span<const double* const> x_lags;
  std::span<const double* const> y_lags;
  std::span<const double> x;
  std::span<double> y;
  double* x_write = nullptr;
  double* y_write = nullptr;
};

/// Two cascaded EMAs: m <- (1-gamma) m + gamma grad; g <- (1-alpha) g + alpha m.
struct CascadeArgs {
  double alpha;
  double gamma;
  std::span<const double> grad;
  std::span<double> m;
  std::span<double> g;
};

/// Direct second-order form: g <- b0 grad - a1 g1 - a2 g2, then shift history.
struct Direct2Args {
  double b0;
  double a1;
  double a2;
  std::span<const double> grad;
  std::span<double> g1;
  std::span<double> g2;
};

/// Latent SGD: m <- (1-gamma) m + gamma grad; w <- w - eps (m + lambda w); optional clamp.
struct LatentArgs {
  double epsilon;
  double lambda;
  double gamma;
  bool clip;
  std::span<const double> grad;
  std::span<double> m;
  std::span<double> w;
};

/// Re-binarizes `values` (theta = stochastic_sign(sign_factor * value)) and
/// records which entries changed. Returns the number of flips.
struct BinarizeArgs {
  std::span<const double> values;
  double sign_factor;
  const binopt::TieBreakRng* rng;
  std::uint64_t step;
  std::span<std::int8_t> theta;
  std::span<std::uint8_t> flipped;  // may be empty
};

namespace serial {
void iir_step(const IirStepArgs& args);
void cascade_update(const CascadeArgs& args);
void direct2_update(const Direct2Args& args);
void latent_update(const LatentArgs& args);
std::size_t binarize(const BinarizeArgs& args);

/// C (m x n) = A (m x k) * B^T, B is (n x k).
template <typename TB>
void matmul_abt(std::span<const double> A, std::span<const TB> B, std::span<double> C, std::size_t m,
                std::size_t k, std::size_t n);
/// C (m x n) = A^T * B, A is (r x m), B is (r x n).
void matmul_atb(std::span<const double> A, std::span<const double> B, std::span<double> C,
                std::size_t r, std::size_t m, std::size_t n);
/// C (m x n) = A (m x k) * B (k x n).
template <typename TB>
void matmul_ab(std::span<const double> A, std::span<const TB> B, std::span<double> C, std::size_t m,
               std::size_t k, std::size_t n);
}  // namespace serial

namespace omp {
void iir_step(const IirStepArgs& args);
void cascade_update(const CascadeArgs& args);
void direct2_update(const Direct2Args& args);
void latent_update(const LatentArgs& args);
std::size_t binarize(const BinarizeArgs& args);
template <typename TB>
void matmul_abt(std::span<const double> A, std::span<const TB> B, std::span<double> C, std::size_t m,
                std::size_t k, std::size_t n);
void matmul_atb(std::span<const double> A, std::span<const double> B, std::span<double> C,
                std::size_t r, std::size_t m, std::size_t n);
template <typename TB>
void matmul_ab(std::span<const double> A, std::span<const TB> B, std::span<double> C, std::size_t m,
               std::size_t k, std::size_t n);
}  // namespace omp

// Policy dispatch.
inline void iir_step(Exec e, const IirStepArgs& a) { e == Exec::serial ? serial::iir_step(a) : omp::iir_step(a); }
inline void cascade_update(Exec e, const CascadeArgs& a) {
  e == Exec::serial ? serial::cascade_update(a) : omp::cascade_update(a);
}
inline void direct2_update(Exec e, const Direct2Args& a) {
  e == Exec::serial ? serial::direct2_update(a) : omp::direct2_update(a);
}
inline void latent_update(Exec e, const LatentArgs& a) {
  e == Exec::serial ? serial::latent_update(a) : omp::latent_update(a);
}
inline std::size_t binarize(Exec e, const BinarizeArgs& a) {
  return e == Exec::serial ? serial::binarize(a) : omp::binarize(a);
}
template <typename TB>
void matmul_abt(Exec e, std::span<const double> A, std::span<const TB> B, std::span<double> C, std::size_t m,
                std::size_t k, std::size_t n) {
  e == Exec::serial ? serial::matmul_abt<TB>(A, B, C, m, k, n) : omp::matmul_abt<TB>(A, B, C, m, k, n);
}
inline void matmul_atb(Exec e, std::span<const double> A, std::span<const double> B, std::span<double> C,
                       std::size_t r, std::size_t m, std::size_t n) {
  e == Exec::serial ? serial::matmul_atb(A, B, C, r, m, n) : omp::matmul_atb(A, B, C, r, m, n);
}
template <typename TB>
void matmul_ab(Exec e, std::span<const double> A, std::span<const TB> B, std::span<double> C, std::size_t m,
               std::size_t k, std::size_t n) {
  e == Exec::serial ? serial::matmul_ab<TB>(A, B, C, m, k, n) : omp::matmul_ab<TB>(A, B, C, m, k, n);
}

}  // namespace bnnfilt::kernels
