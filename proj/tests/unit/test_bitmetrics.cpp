#include <stdexcept>
#include <vector>

#include "bnnfilt/bitmetrics.hpp"
#include "bnnfilt/rng.hpp"
#include "doctest.h"

using namespace bnnfilt::bitmetrics;
using Signs = std::vector<std::int8_t>;

TEST_CASE("ff_ratio counts sign changes") {
  const auto r = ff_ratio(Signs{-1, 1, 1}, Signs{1, 1, -1}, 4);
  CHECK(r.flips == 2);
  CHECK(r.total_weights == 3);
  CHECK(r.ff_ratio == doctest::Approx(2.0 / 3.0));
  CHECK(r.step == 4);

  const Signs v{1, -1, -1, 1};
  CHECK(ff_ratio(v, v).ff_ratio == 0.0);
  CHECK(ff_ratio(v, Signs{-1, 1, 1, -1}).ff_ratio == 1.0);
}

TEST_CASE("ff_ratio rejects bad input") {
  CHECK_THROWS_AS(ff_ratio(Signs{1, 1}, Signs{1}), std::invalid_argument);
  CHECK_THROWS_AS(ff_ratio(Signs{1, 0}, Signs{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(ff_ratio(Signs{1, 1}, Signs{2, 1}), std::invalid_argument);
}

TEST_CASE("ff_ratio is symmetric and additive") {
  bnnfilt::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n1 = 1 + rng.index(40), n2 = 1 + rng.index(40);
    auto draw = [&](std::size_t n) {
      Signs s(n);
      for (auto& v : s) v = rng.uniform() < 0.5 ? -1 : 1;
      return s;
    };
    const auto a1 = draw(n1), b1 = draw(n1), a2 = draw(n2), b2 = draw(n2);
    CHECK(ff_ratio(a1, b1).flips == ff_ratio(b1, a1).flips);

    Signs a = a1, b = b1;
    a.insert(a.end(), a2.begin(), a2.end());
    b.insert(b.end(), b2.begin(), b2.end());
    const auto whole = ff_ratio(a, b);
    const std::vector<FlipRecord> parts{ff_ratio(a1, b1), ff_ratio(a2, b2)};
    const auto pooled = pool(parts);
    CHECK(whole.flips == pooled.flips);
    CHECK(whole.total_weights == pooled.total_weights);
    CHECK(whole.ff_ratio == pooled.ff_ratio);
  }
}

TEST_CASE("ff_series_summary averages the trailing window") {
  auto series = [](std::vector<double> ratios) {
    std::vector<FlipRecord> out;
    for (double r : ratios) out.push_back({0, 0, 1, r});
    return out;
  };
  const auto constant = series({0.1, 0.1, 0.1, 0.1, 0.1});
  for (double w : {0.01, 0.3, 1.0}) CHECK(ff_series_summary(constant, w) == doctest::Approx(0.1));
  CHECK(ff_series_summary(series({1, 0, 0, 0}), 0.5) == 0.0);
  CHECK(ff_series_summary(series({1, 0, 0, 0}), 1.0) == 0.25);
  CHECK(ff_series_summary(series({1, 0.5, 0.2}), 0.5) == doctest::Approx(0.35));  // ceil(1.5) = 2
  CHECK_THROWS_AS(ff_series_summary(std::vector<FlipRecord>{}, 0.5), std::invalid_argument);
  CHECK_THROWS(ff_series_summary(constant, 0.0));
}

TEST_CASE("flip_agreement") {
  const std::vector<std::uint8_t> a{1, 0, 0, 1}, b{1, 1, 0, 1};
  CHECK(flip_agreement(a, b) == 0.75);
  CHECK(flip_agreement(std::vector<std::uint8_t>{}, std::vector<std::uint8_t>{}) == 1.0);
}

TEST_CASE("flip event agreement ignores positions where neither run flipped") {
  FlipEventAgreement acc;
  CHECK(acc.value() == 1.0);
  acc.add(std::vector<std::uint8_t>{0, 0, 0, 0}, std::vector<std::uint8_t>{0, 0, 0, 0});
  CHECK(acc.value() == 1.0);
  acc.add(std::vector<std::uint8_t>{1, 0, 1, 0}, std::vector<std::uint8_t>{1, 1, 0, 0});
  CHECK(acc.both == 1);
  CHECK(acc.either == 3);
  CHECK(acc.value() == doctest::Approx(1.0 / 3.0));
}
