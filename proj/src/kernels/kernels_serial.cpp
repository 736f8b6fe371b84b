#include "bnnfilt/kernels.hpp"

#include <algorithm>

namespace bnnfilt::kernels::serial {

void iir_step(const IirStepArgs& args) {
  const std::size_t n = args.x.size();
  const double a0 = args.a[0];
  for (std::size_t k = 0; k < n; ++k) {
    double acc = args.b[0] * args.x[k];
    for (std::size_t j = 1; j < args.b.size(); ++j) acc += args.b[j] * args.x_lags[j - 1][k];
    for (std::size_t q = 1; q < args.a.size(); ++q) acc -= args.a[q] * args.y_lags[q - 1][k];
    const double y = acc / a0;
    args.y[k] = y;
    if (args.x_write) args.x_write[k] = args.x[k];
    if (args.y_write) args.y_write[k] = y;
  }
}

void cascade_update(const CascadeArgs& args) {
  const double keep_m = 1.0 - args.gamma;
  const double keep_g = 1.0 - args.alpha;
  for (std::size_t k = 0; k < args.grad.size(); ++k) {
    args.m[k] = keep_m * args.m[k] + args.gamma * args.grad[k];
    args.g[k] = keep_g * args.g[k] + args.alpha * args.m[k];
  }
}

void direct2_update(const Direct2Args& args) {
  for (std::size_t k = 0; k < args.grad.size(); ++k) {
    const double g = args.b0 * args.grad[k] - args.a1 * args.g1[k] - args.a2 * args.g2[k];
    args.g2[k] = args.g1[k];
    args.g1[k] = g;
  }
}

void latent_update(const LatentArgs& args) {
  const double keep_m = 1.0 - args.gamma;
  for (std::size_t k = 0; k < args.grad.size(); ++k) {
    args.m[k] = keep_m * args.m[k] + args.gamma * args.grad[k];
    double w = args.w[k] - args.epsilon * (args.m[k] + args.lambda * args.w[k]);
    if (args.clip) w = std::clamp(w, -1.0, 1.0);
    args.w[k] = w;
  }
}

std::size_t binarize(const BinarizeArgs& args) {
  std::size_t flips = 0;
  const bool record = !args.flipped.empty();
  for (std::size_t k = 0; k < args.values.size(); ++k) {
    const double v = args.sign_factor * args.values[k];
    const auto next = static_cast<std::int8_t>(v < 0.0 ? -1 : v > 0.0 ? 1 : args.rng->draw(args.step, k));
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
  for (std::size_t i = 0; i < m; ++i) {
    const double* a = A.data() + i * k;
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
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C.data() + i * n;
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
  for (std::size_t i = 0; i < m; ++i) {
    double* c = C.data() + i * n;
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

}  // namespace bnnfilt::kernels::serial
