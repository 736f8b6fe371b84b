#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bnnfilt::bitmetrics {

/// Sign changes of one update across a set of binary weights.
struct FlipRecord {
  std::size_t step = 0;
  std::size_t flips = 0;
  std::size_t total_weights = 0;
  double ff_ratio = 0.0;  // flips / total_weights, in [0, 1]
};

/// flips = sum |next - prev| / 2 over +-1 vectors; ratio = flips / N.
/// Throws std::invalid_argument on length mismatch or a non +-1 entry.
FlipRecord ff_ratio(std::span<const std::int8_t> prev, std::span<const std::int8_t> next, std::size_t step = 0);

/// Pools per-layer records into a network-wide one (flip counts and weight
/// totals add).
FlipRecord pool(std::span<const FlipRecord> layers);

/// Mean ff_ratio over the last ceil(window_fraction * len) records.
double ff_series_summary(std::span<const FlipRecord> records, double window_fraction);

/// Fraction of positions where two flip masks agree.
double flip_agreement(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Accumulates flip events of two runs over many steps. value() is
/// |A and B| / |A or B| over (step, weight) events, 1 when neither flipped.
struct FlipEventAgreement {
  std::size_t both = 0;
  std::size_t either = 0;

  void add(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
  double value() const;
};

}  // namespace bnnfilt::bitmetrics
