#include "bnnfilt/bitmetrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "bnnfilt/common.hpp"

namespace bnnfilt::bitmetrics {

FlipRecord ff_ratio(std::span<const std::int8_t> prev, std::span<const std::int8_t> next, std::size_t step) {
  check_dims("ff_ratio vector length", prev.size(), next.size());
  std::size_t flips = 0;
  for (std::size_t k = 0; k < prev.size(); ++k) {
    if ((prev[k] != 1 && prev[k] != -1) || (next[k] != 1 && next[k] != -1))
      throw std::invalid_argument("ff_ratio: entry " + std::to_string(k) + " is not +-1");
    flips += static_cast<std::size_t>(std::abs(next[k] - prev[k]) / 2);
  }
  FlipRecord r;
  r.step = step;
  r.flips = flips;
  r.total_weights = prev.size();
  r.ff_ratio = prev.empty() ? 0.0 : static_cast<double>(flips) / static_cast<double>(prev.size());
  return r;
}

FlipRecord pool(std::span<const FlipRecord> layers) {
  FlipRecord r;
  for (const auto& l : layers) {
    r.step = l.step;
    r.flips += l.flips;
    r.total_weights += l.total_weights;
  }
  r.ff_ratio = r.total_weights ? static_cast<double>(r.flips) / static_cast<double>(r.total_weights) : 0.0;
  return r;
}

double ff_series_summary(std::span<const FlipRecord> records, double window_fraction) {
  if (records.empty()) throw std::invalid_argument("ff_series_summary: empty series");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw std::domain_error("ff_series_summary: window fraction must lie in (0, 1]");
  auto window = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(records.size())));
  window = std::max<std::size_t>(1, std::min(window, records.size()));
  double sum = 0.0;
  for (std::size_t i = records.size() - window; i < records.size(); ++i) sum += records[i].ff_ratio;
  return sum / static_cast<double>(window);
}

double flip_agreement(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  check_dims("flip mask length", a.size(), b.size());
  if (a.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t k = 0; k < a.size(); ++k) same += (a[k] != 0) == (b[k] != 0) ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

void FlipEventAgreement::add(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  check_dims("flip mask length", a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const bool fa = a[k] != 0, fb = b[k] != 0;
    both += fa && fb ? 1 : 0;
    either += fa || fb ? 1 : 0;
  }
}

double FlipEventAgreement::value() const {
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace bnnfilt::bitmetrics
