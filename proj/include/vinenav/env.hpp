#pragma once

// Row-navigation MDP: observation assembly, shaped reward, termination rules
// and the episode loop with periodic random repositioning.

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "vinenav/action.hpp"
#include "vinenav/geometry.hpp"
#include "vinenav/rng.hpp"
#include "vinenav/robot.hpp"
#include "vinenav/sensor.hpp"
#include "vinenav/world.hpp"

namespace vinenav {

/// Agent-visible data only: the noisy depth frame and [v_prev, omega_prev, yaw].
struct Observation {
  DepthImage depth;
  std::array<double, 3> state_vec{0.0, 0.0, 0.0};

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct RewardConfig {
  double heading_weight = 0.6;    // a
  double distance_weight = 35.0;  // b
  double success_bonus = 1000.0;
  double collision_penalty = -500.0;
  double reverse_penalty = -500.0;
  double yaw_limit = deg_to_rad(85.0);
};

struct StartPoseDistribution {
  std::vector<std::size_t> corridors;  // empty: every corridor
  Range arclength_fraction{0.0, 0.9};  // along the travel direction
  double lateral = 0.3;                // +- m around the median
  double yaw = deg_to_rad(30.0);       // +- rad around the travel tangent
  double forward_probability = 0.5;
};

struct EpisodeConfig {
  int max_steps = 700;
  int reposition_period = 10;
  StartPoseDistribution start;
};

struct EnvConfig {
  RewardConfig reward;
  EpisodeConfig episode;
  CameraParams camera;
  NoiseSpec noise;
  PlatformSpec platform;
  TerrainConfig terrain;
  double dt = 0.1;
};

struct StartPose {
  std::size_t corridor = 0;
  Direction direction = Direction::Forward;
  Pose2 pose;

  friend bool operator==(const StartPose&, const StartPose&) = default;
};

/// Logging-only quantities; never part of the observation.
struct StepInfo {
  double distance = 0.0;       // d_t to EoR
  double heading_error = 0.0;  // phi_t
  double reward_heading = 0.0;
  double reward_distance = 0.0;
  Pose2 pose;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  Outcome outcome = Outcome::Running;
  StepInfo info;
};

struct LogRecord {
  int t = 0;
  double x = 0.0, y = 0.0, yaw = 0.0;
  double v = 0.0, omega = 0.0;
  double reward = 0.0;
  double distance = 0.0;
  double heading_error = 0.0;
  Outcome outcome = Outcome::Running;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct EpisodeLog {
  std::size_t corridor = 0;
  Direction direction = Direction::Forward;
  std::vector<LogRecord> records;

  [[nodiscard]] Outcome outcome() const { return records.empty() ? Outcome::Running : records.back().outcome; }
  [[nodiscard]] int steps() const { return records.empty() ? 0 : records.back().t; }
};

inline void write_csv(std::ostream& os, const EpisodeLog& log) {
  os << "t,x,y,yaw,v,omega,reward,d,phi,outcome\n";
  os.precision(17);
  for (const auto& r : log.records)
    os << r.t << ',' << r.x << ',' << r.y << ',' << r.yaw << ',' << r.v << ',' << r.omega << ',' << r.reward << ','
       << r.distance << ',' << r.heading_error << ',' << to_string(r.outcome) << '\n';
}

/// phi = wrap(bearing to EoR - yaw).
inline double heading_error(const Pose2& pose, const CorridorFrame& frame) {
  return wrap_angle(heading_of(frame.eor - pose.position()) - pose.yaw);
}

inline double reward_heading(double phi) { return 1.0 - 2.0 * std::sqrt(std::abs(phi / kPi)); }

inline double reward_distance(double d_prev, double d_cur) { return d_prev - d_cur; }

inline double compose_reward(double r_h, double r_d, Outcome outcome, const RewardConfig& cfg) {
  double r = cfg.heading_weight * r_h + cfg.distance_weight * r_d;
  switch (outcome) {
    case Outcome::Success: r += cfg.success_bonus; break;
    case Outcome::Collision: r += cfg.collision_penalty; break;
    case Outcome::Reverse: r += cfg.reverse_penalty; break;
    default: break;
  }
  return r;
}

/// Half-width of the exit gate: half the distance between the row ends on the
/// exit side plus a trunk-row allowance.
inline double gate_half_width(const VineyardWorld& world, const CorridorFrame& frame) {
  const auto& a = world.rows()[frame.corridor_id].centerline;
  const auto& b = world.rows()[frame.corridor_id + 1].centerline;
  const bool fwd = frame.direction == Direction::Forward;
  const Vec2 pa = fwd ? a.point(a.length()) : a.point(0.0);
  const Vec2 pb = fwd ? b.point(b.length()) : b.point(0.0);
  return 0.5 * distance(pa, pb) + 0.25;
}

/// Collision > Reverse > Success > Timeout.
inline Outcome check_termination(const Pose2& pose, const CorridorFrame& frame, int step_index,
                                 const VineyardWorld& world, const PlatformSpec& platform, const EnvConfig& cfg) {
  if (check_collision(world, pose, platform)) return Outcome::Collision;

  const double s = frame.travel_arclength(pose.position());
  if (std::abs(wrap_angle(pose.yaw - frame.tangent_heading(s))) > cfg.reward.yaw_limit) return Outcome::Reverse;

  const Vec2 exit_dir = unit(frame.exit_heading());
  const Vec2 rel = pose.position() - frame.eor;
  if (rel.dot(exit_dir) >= 0.0 && std::abs(rel.cross(exit_dir)) <= gate_half_width(world, frame))
    return Outcome::Success;

  if (step_index >= cfg.episode.max_steps) return Outcome::Timeout;
  return Outcome::Running;
}

/// Pose at the corridor entry facing along the travel tangent.
inline StartPose entry_pose(const VineyardWorld& world, std::size_t corridor, Direction dir) {
  const CorridorFrame f = corridor_frame(world, corridor, dir);
  return {corridor, dir, {f.entry.x, f.entry.y, f.entry_heading()}};
}

class VineyardEnv {
 public:
  VineyardEnv(std::shared_ptr<const VineyardWorld> world, EnvConfig cfg, std::uint64_t seed)
      : world_(std::move(world)), cfg_(std::move(cfg)), seed_(seed) {
    if (!world_ || world_->corridor_count() == 0) throw std::invalid_argument("environment needs a world with corridors");
    if (cfg_.episode.max_steps < 1 || cfg_.episode.reposition_period < 1)
      throw std::invalid_argument("max_steps and reposition_period must be >= 1");
    cfg_.camera.mount_forward = cfg_.platform.mount_forward;
    cfg_.camera.mount_up = cfg_.platform.mount_up;
  }

  /// Draws a start pose from p(s0) every reposition_period episodes and reuses
  /// the cached one otherwise.
  Observation reset(int episode_index, Rng& rng) {
    if (episode_index < 0) throw std::invalid_argument("episode index must be >= 0");
    if (!cached_start_ || episode_index % cfg_.episode.reposition_period == 0) cached_start_ = sample_start(rng);
    return reset_to(*cached_start_);
  }

  Observation reset_to(const StartPose& start) {
    frame_ = corridor_frame(*world_, start.corridor, start.direction);
    state_ = {start.pose, {0.0, 0.0}};
    yaw_reference_ = frame_.tangent_heading(frame_.travel_arclength(start.pose.position()));
    disturbance_ = TerrainDisturbance(cfg_.terrain, make_stream(seed_, "terrain", episode_counter_++));
    steps_ = 0;
    running_ = true;
    distance_ = distance(frame_.eor, state_.pose.position());
    log_ = EpisodeLog{start.corridor, start.direction, {}};
    log_.records.push_back({0, state_.pose.x, state_.pose.y, state_.pose.yaw, 0.0, 0.0, 0.0, distance_,
                            heading_error(state_.pose, frame_), Outcome::Running});
    return observe();
  }

  StepResult step(const Action& action) {
    if (!running_) throw std::logic_error("step called on a terminated episode");
    if (!(action.v >= 0.0 && action.v <= kMaxLinearVelocity && std::abs(action.omega) <= kMaxAngularVelocity))
      throw std::invalid_argument("action outside the action space");

    const auto dist = disturbance_.step(cfg_.dt);
    state_ = step_kinematics(state_, action, dist.yaw_rate, cfg_.dt);
    ++steps_;

    StepResult res;
    const double d_prev = distance_;
    distance_ = distance(frame_.eor, state_.pose.position());
    res.info.pose = state_.pose;
    res.info.distance = distance_;
    res.info.heading_error = heading_error(state_.pose, frame_);
    res.info.reward_heading = reward_heading(res.info.heading_error);
    res.info.reward_distance = reward_distance(d_prev, distance_);
    res.outcome = check_termination(state_.pose, frame_, steps_, *world_, cfg_.platform, cfg_);
    res.reward = compose_reward(res.info.reward_heading, res.info.reward_distance, res.outcome, cfg_.reward);
    res.observation = observe();
    running_ = !is_terminal(res.outcome);

    log_.records.push_back({steps_, state_.pose.x, state_.pose.y, state_.pose.yaw, action.v, action.omega, res.reward,
                            distance_, res.info.heading_error, res.outcome});
    return res;
  }

  [[nodiscard]] const EpisodeLog& log() const { return log_; }
  [[nodiscard]] const RobotState& state() const { return state_; }
  [[nodiscard]] const CorridorFrame& frame() const { return frame_; }
  [[nodiscard]] const EnvConfig& config() const { return cfg_; }
  [[nodiscard]] const VineyardWorld& world() const { return *world_; }
  [[nodiscard]] bool running() const { return running_; }
  [[nodiscard]] int steps() const { return steps_; }
  [[nodiscard]] const std::optional<StartPose>& cached_start() const { return cached_start_; }

  StartPose sample_start(Rng& rng) const {
    const auto& dist = cfg_.episode.start;
    for (int attempt = 0; attempt < 100; ++attempt) {
      StartPose s;
      s.corridor = dist.corridors.empty() ? std::size_t(rng.uniform_index(world_->corridor_count()))
                                          : dist.corridors[rng.uniform_index(dist.corridors.size())];
      s.direction = rng.bernoulli(dist.forward_probability) ? Direction::Forward : Direction::Reverse;
      const CorridorFrame f = corridor_frame(*world_, s.corridor, s.direction);
      const double travel_s =
          rng.uniform(dist.arclength_fraction.min, dist.arclength_fraction.max) * f.geometry->length();
      const double lateral = rng.uniform(-dist.lateral, dist.lateral);
      const double yaw = rng.uniform(-dist.yaw, dist.yaw);
      const double tangent = f.tangent_heading(travel_s);
      const Vec2 p = f.point_at_travel(travel_s) + lateral * unit(tangent).left();
      s.pose = {p.x, p.y, wrap_angle(tangent + yaw)};
      if (!check_collision(*world_, s.pose, cfg_.platform)) return s;
    }
    throw std::runtime_error("could not sample a collision-free start pose");
  }

 private:
  Observation observe() {
    Observation obs;
    const CameraPose cam = camera_pose_from(state_.pose, cfg_.camera, disturbance_.pitch());
    Rng noise_rng = make_stream(seed_, "noise", frame_counter_++);
    obs.depth = apply_noise(render_depth(*world_, cam, cfg_.camera), cfg_.noise, noise_rng);
    obs.state_vec = {state_.last_action.v, state_.last_action.omega, wrap_angle(state_.pose.yaw - yaw_reference_)};
    return obs;
  }

  std::shared_ptr<const VineyardWorld> world_;
  EnvConfig cfg_;
  std::uint64_t seed_ = 0;
  std::uint64_t episode_counter_ = 0;
  std::uint64_t frame_counter_ = 0;
  std::optional<StartPose> cached_start_;
  CorridorFrame frame_;
  RobotState state_;
  double yaw_reference_ = 0.0;
  TerrainDisturbance disturbance_;
  double distance_ = 0.0;
  int steps_ = 0;
  bool running_ = false;
  EpisodeLog log_;
};

}  // namespace vinenav
