#include <omp.h>

#include <algorithm>
#include <cstddef>

#include "bnnfilt/kernels.hpp"

namespace bnnfilt::kernels::omp {

namespace {
using Index = std::ptrdiff_t;
inline Index ssize(std::size_t n) { return static_cast<Index>(n); }
}  // namespace

void iir_step(const IirStepArgs& args) {
  const Index n = ssize(args.x.size());
  const double a0 = args.a[0];
  const std::size_t nb = args.b.size();
  const std::size_t na = args.a.size();
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < n; ++k) {
    double acc = args.b[0] * args.x[k];
    for (std::size_t j = 1; j < nb; ++j) acc += args.b[j] * args.x_lags[j - 1][k];
    for (std::size_t q = 1; q < na; ++q) acc -= args.a[q] * args.y_lags[q - 1][k];
    const double y = acc / a0;
    args.y[k] = y;
    if (args.x_write) args.x_write[k] = args.x[k];
    if (args.y_write) args.y_write[k] = y;
  }
}

void cascade_update(const CascadeArgs& args) {
  const double keep_m = 1.0 - args.gamma;
  const double keep_g = 1.0 - args.alpha;
  const double alpha = args.alpha;
  const double gamma = args.gamma;
  const double* grad = args.grad.data();
  double* m = args.m.data();
  double* g = args.g.data();
  const Index n = ssize(args.grad.size());
#pragma omp parallel for simd schedule(static)
  for (Index k = 0; k < n; ++k) {
    m[k] = keep_m * m[k] + gamma * grad[k];
    g[k] = keep_g * g[k] + alpha * m[k];
  }
}

void direct2_update(const Direct2Args& args) {
  const double b0 = args.b0, a1 = args.a1, a2 = args.a2;
  const double* grad = args.grad.data();
  double* g1 = args.g1.data();
  double* g2 = args.g2.data();
  const Index n = ssize(args.grad.size());
#pragma omp parallel for simd schedule(static)
  for (Index k = 0; k < n; ++k) {
    const double g = b0 * grad[k] - a1 * g1[k] - a2 * g2[k];
    g2[k] = g1[k];
    g1[k] = g;
  }
}

void latent_update(const LatentArgs& args) {
  const double keep_m = 1.0 - args.gamma;
  const double gamma = args.gamma, eps = args.epsilon, lambda = args.lambda;
  const bool clip = args.clip;
  const double* grad = args.grad.data();
  double* m = args.m.data();
  double* w = args.w.data();
  const Index n = ssize(args.grad.size());
#pragma omp parallel for schedule(static)
  for (Index k = 0; k < n; ++k) {
    m[k] = keep_m * m[k] + gamma * grad[k];
    double v = w[k] - eps * (m[k] + lambda * w[k]);
    if (clip) v = std::clamp(v, -1.0, 1.0);
    w[k] = v;
  }
}

std::size_t binarize(const BinarizeArgs& args) {
  std::size_t flips = 0;
  const bool record = !args.flipped.empty();
  const Index n = ssize(args.values.size());
#pragma omp parallel for schedule(static) reduction(+ : flips)
  for (Index k = 0; k < n; ++k) {
    const double v = args.sign_factor * args.values[k];
    const auto next = static_cast<std::int8_t>(v < 0.0 ? -1 : v > 0.0 ? 1 : args.rng->draw(args.step, static_cast<std::uint64_t>(k)));
    const bool changed = next != args.theta[k];
    args.theta[k] = next;
    if (record) args.flipped[k] = changed ? 1 : 0;
    flips += changed ? 1 : 0;
  }
  return flips;
}

template <typename TB>
void matmul_abt(std::span<const double> A, std::span<const TB> B, std::span<double> C, std::size_t m,
                std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < ssize(m); ++i) {
    const double* a = A.data() + i * ssize(k);
    for (std::size_t j = 0; j < n; ++j) {
      const TB* b = B.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p] * static_cast<double>(b[p]);
      C[i * n + j] = acc;
    }
  }
}

void matmul_atb(std::span<const double> A, std::span<const double> B, std::span<double> C, std::size_t r,
                std::size_t m, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < ssize(m); ++i) {
    double* c = C.data() + i * ssize(n);
    std::fill(c, c + n, 0.0);
    for (std::size_t row = 0; row < r; ++row) {
      const double a = A[row * m + i];
      const double* b = B.data() + row * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += a * b[j];
    }
  }
}

template <typename TB>
void matmul_ab(std::span<const double> A, std::span<const TB> B, std::span<double> C, std::size_t m,
               std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < ssize(m); ++i) {
    double* c = C.data() + i * ssize(n);
    std::fill(c, c + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double a = A[i * k + p];
      const TB* b = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) c[j] += a * static_cast<double>(b[j]);
    }
  }
}

template void matmul_abt<double>(std::span<const double>, std::span<const double>, std::span<double>,
                                 std::size_t, std::size_t, std::size_t);
template void matmul_abt<std::int8_t>(std::span<const double>, std::span<const std::int8_t>,
                                      std::span<double>, std::size_t, std::size_t, std::size_t);
template void matmul_ab<double>(std::span<const double>, std::span<const double>, std::span<double>,
                                std::size_t, std::size_t, std::size_t);
template void matmul_ab<std::int8_t>(std::span<const double>, std::span<const std::int8_t>,
                                     std::span<double>, std::size_t, std::size_t, std::size_t);

}  // namespace bnnfilt::kernels::omp
