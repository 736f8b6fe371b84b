#pragma once

#include <cstdint>

#include "bnnfilt/rng.hpp"

namespace bnnfilt::binopt {

/// Uniform +-1 draws for the stochastic sign.
///
/// Two ways to consume the stream: `next()` walks a sequential counter, and
/// `draw(step, index)` is a counter-based draw keyed by (seed, step, weight
/// index). Optimizers use the keyed form; it does not depend on thread
/// scheduling, and two optimizers built from one seed see identical draws.
class TieBreakRng {
 public:
  /// Step key reserved for the draw that sets theta before the first update.
  static constexpr std::uint64_t kInitStep = ~0ull;

  explicit TieBreakRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return counter_; }

  int next() { return bit_to_sign(splitmix64(seed_ ^ splitmix64(counter_++))); }

  int draw(std::uint64_t step, std::uint64_t index) const {
    return bit_to_sign(splitmix64(seed_ ^ splitmix64(step ^ splitmix64(index + 0xA24BAED4963EE407ull))));
  }

 private:
  static int bit_to_sign(std::uint64_t h) { return (h >> 63) ? 1 : -1; }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Sign with a caller-supplied tie value used only at exact zero.
inline int stochastic_sign(double x, int tie) {
  if (x < 0.0) return -1;
  if (x > 0.0) return 1;
  return tie;
}

/// -1 for x<0, +1 for x>0, and a fresh uniform draw when x is exactly zero.
/// There is no tolerance window: 1e-300 is positive.
inline int stochastic_sign(double x, TieBreakRng& rng) {
  if (x < 0.0) return -1;
  if (x > 0.0) return 1;
  return rng.next();
}

}  // namespace bnnfilt::binopt
