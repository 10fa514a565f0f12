#pragma once

#include <string_view>

namespace vinenav {

inline constexpr double kMaxLinearVelocity = 0.5;   // m/s, open upper bound
inline constexpr double kMaxAngularVelocity = 1.0;  // rad/s, open bound on both sides

/// Velocity command (v, omega). v in (0, 0.5) m/s, omega in (-1, 1) rad/s.
struct Action {
  double v = 0.0;
  double omega = 0.0;

  friend bool operator==(const Action&, const Action&) = default;
};

inline bool within_bounds(const Action& a) {
  return a.v > 0.0 && a.v < kMaxLinearVelocity && a.omega > -kMaxAngularVelocity && a.omega < kMaxAngularVelocity;
}

enum class Outcome { Running, Success, Collision, Reverse, Timeout };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Running: return "running";
    case Outcome::Success: return "success";
    case Outcome::Collision: return "collision";
    case Outcome::Reverse: return "reverse";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

inline bool is_terminal(Outcome o) { return o != Outcome::Running; }

/// Terminal for bootstrapping purposes; a timeout only truncates the episode.
inline bool ends_task(Outcome o) {
  return o == Outcome::Success || o == Outcome::Collision || o == Outcome::Reverse;
}

}  // namespace vinenav
