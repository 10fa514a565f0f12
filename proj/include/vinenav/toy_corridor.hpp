#pragma once

// Vision-free corridor for checking the learner: the only observed quantity
// is the lateral offset y. A constant cross-wind pushes the robot towards one
// wall; it has to steer against it while driving to the end.

#include <array>
#include <cmath>
#include <stdexcept>

#include "vinenav/action.hpp"
#include "vinenav/rng.hpp"
#include "vinenav/sac.hpp"

namespace vinenav {

struct ToyCorridorConfig {
  double length = 2.0;      // m to travel
  double half_width = 0.75; // |y| beyond this is a collision
  double drift = 0.3;       // m/s lateral push
  double lateral_gain = 1.0;
  double noise = 0.02;  // std of the per-step lateral perturbation, m
  double start_offset = 0.25;
  double dt = 0.1;
  int max_steps = 100;
  double progress_weight = 10.0;
  double offset_weight = 0.5;
  double success_bonus = 10.0;
  double collision_penalty = -10.0;
};

struct ToyObservation {
  double y = 0.0;
};

struct ToyStep {
  ToyObservation observation;
  double reward = 0.0;
  Outcome outcome = Outcome::Running;
};

inline AgentInput agent_input(const ToyObservation& o) { return {{}, {float(o.y)}}; }

class ToyCorridor {
 public:
  explicit ToyCorridor(ToyCorridorConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(make_stream(seed, "toy")) {}

  ToyObservation reset(int /*episode*/, Rng& rng) {
    x_ = 0.0;
    y_ = rng.uniform(-cfg_.start_offset, cfg_.start_offset);
    steps_ = 0;
    return {y_};
  }

  ToyStep step(const Action& a) {
    if (!(a.v >= 0.0 && a.v <= kMaxLinearVelocity && std::abs(a.omega) <= kMaxAngularVelocity))
      throw std::invalid_argument("action outside the action space");
    const double x_prev = x_;
    x_ += a.v * cfg_.dt;
    y_ += (cfg_.lateral_gain * a.omega + cfg_.drift) * cfg_.dt + cfg_.noise * rng_.normal();
    ++steps_;
    ToyStep s;
    s.observation = {y_};
    s.reward = cfg_.progress_weight * (x_ - x_prev) - cfg_.offset_weight * std::abs(y_) * cfg_.dt;
    if (std::abs(y_) >= cfg_.half_width) {
      s.outcome = Outcome::Collision;
      s.reward += cfg_.collision_penalty;
    } else if (x_ >= cfg_.length) {
      s.outcome = Outcome::Success;
      s.reward += cfg_.success_bonus;
    } else if (steps_ >= cfg_.max_steps) {
      s.outcome = Outcome::Timeout;
    }
    return s;
  }

  [[nodiscard]] double x() const { return x_; }
  [[nodiscard]] double y() const { return y_; }

 private:
  ToyCorridorConfig cfg_;
  Rng rng_;
  double x_ = 0.0, y_ = 0.0;
  int steps_ = 0;
};

/// SAC settings used on the toy corridor: small MLPs, a larger step size and
/// a short warmup. Discounting, smoothing and the exploration schedule are
/// the defaults.
inline SACConfig toy_sac_config(int episodes = 200) {
  SACConfig c;
  c.learning_rate = 3e-3;
  c.batch_size = 64;
  c.replay_capacity = 50000;
  c.warmup_steps = 500;
  c.episodes = episodes;
  c.alpha = 0.2;
  c.updates_per_step = 2;
  return c;
}

inline ArchSpec toy_actor_arch() { return mlp_arch(1, {64, 64}, 4); }
inline ArchSpec toy_critic_arch() { return mlp_arch(3, {64, 64}, 1); }

struct ToyRunResult {
  TrainResult training;
  int successes_last_50 = 0;
};

inline ToyRunResult run_toy_corridor(std::uint64_t seed, int episodes = 200) {
  Rng init = make_stream(seed, "init");
  SacAgent<float> agent(toy_actor_arch(), toy_critic_arch(), toy_sac_config(episodes), init);
  ToyCorridor env(ToyCorridorConfig{}, seed);
  ReplayBuffer replay(agent.config().replay_capacity, 0, 1);
  ToyRunResult r;
  r.training = train(agent, env, replay, seed);
  const auto& eps = r.training.episodes;
  for (std::size_t i = eps.size() > 50 ? eps.size() - 50 : 0; i < eps.size(); ++i)
    r.successes_last_50 += eps[i].outcome == Outcome::Success;
  return r;
}

}  // namespace vinenav
