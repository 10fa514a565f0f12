#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vinenav/action.hpp"
#include "vinenav/geometry.hpp"
#include "vinenav/rng.hpp"
#include "vinenav/world.hpp"

namespace vinenav {

struct RobotState {
  Pose2 pose;
  Action last_action;

  friend bool operator==(const RobotState&, const RobotState&) = default;
};

struct PlatformSpec {
  std::string name = "jackal";
  double length = 0.508;
  double width = 0.430;
  double mount_forward = 0.2;
  double mount_up = 0.3;
};

inline PlatformSpec platform_preset(std::string_view name) {
  if (name == "jackal") return {"jackal", 0.508, 0.430, 0.2, 0.3};
  if (name == "husky") return {"husky", 0.990, 0.670, 0.2, 0.55};
  throw std::invalid_argument("unknown platform preset: " + std::string(name));
}

/// Mean-reverting Gaussian process with exact discretization; its stationary
/// standard deviation is `sigma` for any step size.
struct OrnsteinUhlenbeck {
  double reversion_rate = 4.0;  // 1/s
  double sigma = 0.0;
  double value = 0.0;

  void reset(Rng& rng) { value = sigma * rng.normal(); }

  double step(double dt, Rng& rng) {
    const double decay = std::exp(-reversion_rate * dt);
    value = value * decay + sigma * std::sqrt(1.0 - decay * decay) * rng.normal();
    return value;
  }
};

struct TerrainConfig {
  double yaw_rate_sigma = 0.08;  // rad/s
  double pitch_sigma = 0.02;     // rad
  double reversion_rate = 4.0;   // 1/s
};

/// Yaw-rate and camera-pitch disturbances driven by one per-episode stream.
class TerrainDisturbance {
 public:
  TerrainDisturbance() = default;
  TerrainDisturbance(const TerrainConfig& cfg, Rng rng)
      : yaw_{cfg.reversion_rate, cfg.yaw_rate_sigma}, pitch_{cfg.reversion_rate, cfg.pitch_sigma}, rng_(rng) {
    yaw_.reset(rng_);
    pitch_.reset(rng_);
  }

  struct Sample {
    double yaw_rate = 0.0;
    double pitch = 0.0;
  };

  Sample step(double dt) { return {yaw_.step(dt, rng_), pitch_.step(dt, rng_)}; }
  [[nodiscard]] double pitch() const { return pitch_.value; }

 private:
  OrnsteinUhlenbeck yaw_;
  OrnsteinUhlenbeck pitch_;
  Rng rng_;
};

/// Unicycle Euler step: position advances along the current heading, the
/// heading integrates the commanded plus disturbed yaw rate and is wrapped.
inline RobotState step_kinematics(const RobotState& s, const Action& a, double yaw_rate_disturbance, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  RobotState out;
  out.pose.x = s.pose.x + a.v * std::cos(s.pose.yaw) * dt;
  out.pose.y = s.pose.y + a.v * std::sin(s.pose.yaw) * dt;
  out.pose.yaw = wrap_angle(s.pose.yaw + (a.omega + yaw_rate_disturbance) * dt);
  out.last_action = a;
  return out;
}

/// Exact test between the footprint rectangle centered on the pose and a circle.
inline bool rectangle_circle_intersect(const Pose2& pose, double length, double width, Vec2 center, double radius) {
  const Vec2 rel = center - pose.position();
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const double lx = c * rel.x + s * rel.y;
  const double ly = -s * rel.x + c * rel.y;
  const double hx = 0.5 * length, hy = 0.5 * width;
  const double dx = lx - std::clamp(lx, -hx, hx);
  const double dy = ly - std::clamp(ly, -hy, hy);
  return dx * dx + dy * dy <= radius * radius;
}

inline bool check_collision(const VineyardWorld& world, const Pose2& pose, const PlatformSpec& platform) {
  const double reach = 0.5 * std::hypot(platform.length, platform.width) + world.index().max_radius();
  bool hit = false;
  world.index().for_each_candidate(pose.position(), reach, [&](PlantIndex::Ref ref) {
    if (hit) return;
    const auto& p = world.plant(ref);
    hit = rectangle_circle_intersect(pose, platform.length, platform.width, p.position, p.trunk_radius);
  });
  return hit;
}

}  // namespace vinenav
