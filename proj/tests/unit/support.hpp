#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bnnfilt/rng.hpp"

namespace testsupport {

inline std::vector<double> normal_stream(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  bnnfilt::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = mean + sd * rng.normal();
  return v;
}

/// max_i |a_i - b_i| / max_i |b_i|  (normwise relative error of a sequence)
inline double normwise_rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale == 0.0 ? diff : diff / scale;
}

/// max_i |a_i - b_i| / |b_i| over entries with b_i != 0
inline double pointwise_rel_error(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] == 0.0) {
      worst = std::max(worst, std::abs(a[i]));
      continue;
    }
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::abs(b[i]));
  }
  return worst;
}

inline double variance(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

}  // namespace testsupport
