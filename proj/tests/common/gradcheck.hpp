#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bnnfilt/tinynet/network.hpp"

namespace testsupport {

struct GradCheckResult {
  double worst_rel = 0.0;
  std::size_t checked = 0;
  std::string worst_where;
};

/// Central differences of the train-mode loss against the analytic backward
/// pass for every real parameter. Relative error is |a - n| / max(|a|, |n|),
/// with pairs below `floor` in magnitude compared absolutely.
inline GradCheckResult check_real_gradients(bnnfilt::tinynet::Network& net, const bnnfilt::tinynet::Matrix& x,
                                            std::span<const int> y, double h = 1e-5, double floor = 1e-7) {
  using bnnfilt::tinynet::Mode;
  net.forward(x, Mode::train);
  net.backward(y);
  auto params = net.real_parameters();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) analytic.emplace_back(p.grad.begin(), p.grad.end());

  GradCheckResult r;
  for (std::size_t g = 0; g < params.size(); ++g) {
    auto value = params[g].value;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double saved = value[k];
      value[k] = saved + h;
      const double lp = net.loss(x, y, Mode::train);
      value[k] = saved - h;
      const double lm = net.loss(x, y, Mode::train);
      value[k] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[g][k];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double err = scale < floor ? std::abs(a - numeric) : std::abs(a - numeric) / scale;
      ++r.checked;
      if (err > r.worst_rel) {
        r.worst_rel = err;
        r.worst_where = "group " + std::to_string(g) + " index " + std::to_string(k);
      }
    }
  }
  return r;
}

}  // namespace testsupport
