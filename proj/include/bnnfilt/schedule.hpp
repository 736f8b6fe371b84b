#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace bnnfilt::binopt {

enum class ScheduleKind { constant, cosine, linear };

/// Smallest value a schedule returns. alpha = 0 would freeze the filter, and a
/// tiny positive value behaves the same while keeping updates well defined.
inline constexpr double kScheduleFloor = 1e-20;

/// Time-varying hyperparameter over `total_steps` updates:
///   constant: v0
///   cosine:   v0 * (1 + cos(pi t / T)) / 2
///   linear:   v0 * (1 - t / T)
/// floored at kScheduleFloor. value(t) throws std::out_of_range for t > T.
struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;
  double initial_value = 0.0;
  std::size_t total_steps = 1;

  double value(std::size_t t) const;
};

inline double schedule_value(const Schedule& s, std::size_t t) { return s.value(t); }

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view text);

}  // namespace bnnfilt::binopt
