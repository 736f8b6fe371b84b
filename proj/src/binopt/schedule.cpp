#include "bnnfilt/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bnnfilt::binopt {

double Schedule::value(std::size_t t) const {
  if (t > total_steps)
    throw std::out_of_range("schedule step " + std::to_string(t) + " beyond total " + std::to_string(total_steps));
  const double frac = total_steps == 0 ? 0.0 : static_cast<double>(t) / static_cast<double>(total_steps);
  double v = initial_value;
  switch (kind) {
    case ScheduleKind::constant:
      break;
    case ScheduleKind::cosine:
      v = initial_value * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
      break;
    case ScheduleKind::linear:
      v = initial_value * (1.0 - frac);
      break;
  }
  return std::max(v, kScheduleFloor);
}

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cosine: return "cosine";
    case ScheduleKind::linear: return "linear";
  }
  return "?";
}

ScheduleKind parse_schedule_kind(std::string_view text) {
  if (text == "constant" || text == "none") return ScheduleKind::constant;
  if (text == "cosine") return ScheduleKind::cosine;
  if (text == "linear") return ScheduleKind::linear;
  throw std::invalid_argument("unknown schedule kind '" + std::string(text) + "'");
}

}  // namespace bnnfilt::binopt
