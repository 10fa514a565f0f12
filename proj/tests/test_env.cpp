#include <gtest/gtest.h>

#include <map>
#include <type_traits>

#include "vinenav/env.hpp"
#include "vinenav/presets.hpp"

using namespace vinenav;

namespace {

std::shared_ptr<const VineyardWorld> straight_corridor(double length = 20.0) {
  WorldConfig cfg;
  cfg.rows.assign(2, RowConfig{length, 0.0, 0.0, false, {}, 0});
  cfg.inter_row_distances = {2.0};
  return std::make_shared<const VineyardWorld>(generate_world(cfg, 1));
}

EnvConfig calm_config() {
  EnvConfig cfg;
  cfg.terrain.yaw_rate_sigma = 0.0;
  cfg.terrain.pitch_sigma = 0.0;
  return cfg;
}

}  // namespace

TEST(HeadingError, Examples) {
  CorridorFrame f;
  f.eor = {1.0, 1.0};
  EXPECT_NEAR(heading_error({0.0, 0.0, kPi / 4}, f), 0.0, 1e-15);
  EXPECT_NEAR(heading_error({0.0, 0.0, 0.0}, f), kPi / 4, 1e-15);
  EXPECT_DOUBLE_EQ(heading_error({0.0, 0.0, -3.0 * kPi / 4}, f), kPi);
}

TEST(Reward, HeadingExamples) {
  EXPECT_DOUBLE_EQ(reward_heading(0.0), 1.0);
  EXPECT_DOUBLE_EQ(reward_heading(kPi), -1.0);
  EXPECT_DOUBLE_EQ(reward_heading(-kPi), -1.0);
  EXPECT_NEAR(reward_heading(kPi / 4), 0.0, 1e-15);
  EXPECT_NEAR(reward_heading(-kPi / 4), 0.0, 1e-15);
}

TEST(Reward, HeadingIsEvenAndDecreasing) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(0.0, kPi), b = rng.uniform(0.0, kPi);
    EXPECT_EQ(reward_heading(a), reward_heading(-a));
    if (a < b) {
      EXPECT_GT(reward_heading(a), reward_heading(b));
    }
    EXPECT_GE(reward_heading(a), -1.0);
    EXPECT_LE(reward_heading(a), 1.0);
  }
}

TEST(Reward, DistanceExamples) {
  EXPECT_NEAR(reward_distance(10.00, 9.95), 0.05, 1e-12);
  EXPECT_EQ(reward_distance(4.0, 4.0), 0.0);
  EXPECT_NEAR(reward_distance(9.95, 10.0), -0.05, 1e-12);
}

TEST(Reward, ComposeExamples) {
  const RewardConfig cfg;
  EXPECT_NEAR(compose_reward(1.0, 0.05, Outcome::Running, cfg), 2.35, 1e-12);
  EXPECT_NEAR(compose_reward(1.0, 0.05, Outcome::Success, cfg), 1002.35, 1e-12);
  EXPECT_EQ(compose_reward(0.0, 0.0, Outcome::Collision, cfg), -500.0);
  EXPECT_EQ(compose_reward(0.0, 0.0, Outcome::Reverse, cfg), -500.0);
  EXPECT_EQ(compose_reward(0.0, 0.0, Outcome::Timeout, cfg), 0.0);
}

TEST(Termination, Examples) {
  const auto world = straight_corridor();
  const EnvConfig cfg;
  const auto f = corridor_frame(*world, 0, Direction::Forward);
  const auto& plat = cfg.platform;
  EXPECT_EQ(check_termination({20.6, 1.0, 0.0}, f, 10, *world, plat, cfg), Outcome::Success);
  EXPECT_EQ(check_termination({10.0, 1.0, kPi / 2}, f, 10, *world, plat, cfg), Outcome::Reverse);
  EXPECT_EQ(check_termination({10.0, 1.0, 0.0}, f, 700, *world, plat, cfg), Outcome::Timeout);
  EXPECT_EQ(check_termination({10.0, 1.0, 0.0}, f, 699, *world, plat, cfg), Outcome::Running);
  EXPECT_EQ(check_termination({10.0, 1.0, deg_to_rad(84.0)}, f, 10, *world, plat, cfg), Outcome::Running);
  // Reverse direction: travelling towards -x.
  const auto r = corridor_frame(*world, 0, Direction::Reverse);
  EXPECT_EQ(check_termination({-0.6, 1.0, kPi}, r, 10, *world, plat, cfg), Outcome::Success);
  EXPECT_EQ(check_termination({10.0, 1.0, 0.0}, r, 10, *world, plat, cfg), Outcome::Reverse);
}

TEST(Termination, PriorityCollisionOverReverseOverSuccess) {
  const auto world = straight_corridor();
  const EnvConfig cfg;
  const auto f = corridor_frame(*world, 0, Direction::Forward);
  const auto& plant = world->rows()[0].plants[5];
  // On a trunk and turned sideways.
  EXPECT_EQ(check_termination({plant.position.x, plant.position.y, kPi / 2}, f, 700, *world, cfg.platform, cfg),
            Outcome::Collision);
  // Past the gate but turned back.
  EXPECT_EQ(check_termination({20.6, 1.0, kPi}, f, 700, *world, cfg.platform, cfg), Outcome::Reverse);
  // Past the gate at the step limit.
  EXPECT_EQ(check_termination({20.6, 1.0, 0.0}, f, 700, *world, cfg.platform, cfg), Outcome::Success);
}

TEST(Reset, RepositionsEveryTenEpisodes) {
  VineyardEnv env(std::make_shared<const VineyardWorld>(generate_world(train_world_config(), 7)), EnvConfig{}, 5);
  Rng rng(1);
  env.reset(0, rng);
  const StartPose first = *env.cached_start();
  for (int e = 1; e < 10; ++e) {
    env.reset(e, rng);
    EXPECT_EQ(*env.cached_start(), first);
    EXPECT_EQ(env.state().pose, first.pose);
    EXPECT_EQ(env.state().last_action, (Action{0.0, 0.0}));
  }
  env.reset(10, rng);
  EXPECT_NE(*env.cached_start(), first);
}

TEST(Reset, BothDirectionsDrawn) {
  const auto world = std::make_shared<const VineyardWorld>(generate_world(train_world_config(), 7));
  VineyardEnv env(world, EnvConfig{}, 5);
  Rng rng(2);
  int forward = 0;
  constexpr int n = 1000;
  std::map<std::size_t, int> per_corridor;
  for (int i = 0; i < n; ++i) {
    const auto s = env.sample_start(rng);
    forward += s.direction == Direction::Forward;
    ++per_corridor[s.corridor];
    EXPECT_FALSE(check_collision(*world, s.pose, EnvConfig{}.platform));
  }
  // Binomial(1000, 0.5): 3 sigma ~ 47.
  EXPECT_NEAR(forward, n / 2, 47);
  EXPECT_EQ(per_corridor.size(), world->corridor_count());
}

TEST(Reset, DeterministicSequence) {
  const auto world = std::make_shared<const VineyardWorld>(generate_world(train_world_config(), 7));
  auto run = [&] {
    VineyardEnv env(world, EnvConfig{}, 9);
    Rng rng(4);
    std::vector<StartPose> starts;
    for (int e = 0; e < 40; ++e) {
      env.reset(e, rng);
      starts.push_back(*env.cached_start());
    }
    return starts;
  };
  EXPECT_EQ(run(), run());
}

TEST(Step, StraightTraversalTelescopes) {
  const auto world = straight_corridor(20.0);
  VineyardEnv env(world, calm_config(), 3);
  env.reset_to(entry_pose(*world, 0, Direction::Forward));
  const double d0 = env.log().records.front().distance;
  EXPECT_NEAR(d0, 21.0, 1e-12);
  double sum_rd = 0.0, sum_bonus = 0.0;
  int terminal_bonuses = 0;
  StepResult res;
  const RewardConfig rc;
  while (env.running()) {
    res = env.step({0.5, 0.0});
    sum_rd += res.info.reward_distance;
    const double dense = rc.heading_weight * res.info.reward_heading + rc.distance_weight * res.info.reward_distance;
    EXPECT_LE(std::abs(rc.heading_weight * res.info.reward_heading), 0.6 + 1e-12);
    EXPECT_LE(std::abs(rc.distance_weight * res.info.reward_distance), 35.0 * 0.5 * 0.1 + 1e-9);
    if (res.reward != dense) {
      ++terminal_bonuses;
      sum_bonus += res.reward - dense;
    }
  }
  EXPECT_EQ(res.outcome, Outcome::Success);
  EXPECT_EQ(terminal_bonuses, 1);
  EXPECT_NEAR(sum_bonus, 1000.0, 1e-9);
  const double d_final = res.info.distance;
  EXPECT_NEAR(sum_rd, d0 - d_final, 1e-9 * d0);
  EXPECT_NEAR(35.0 * sum_rd, 35.0 * d0, 35.0 * 0.05);
  EXPECT_EQ(env.log().records.size(), std::size_t(env.steps()) + 1);
  EXPECT_THROW(env.step({0.2, 0.0}), std::logic_error);
}

TEST(Step, ActionsAtOpenBoundsAccepted) {
  const auto world = straight_corridor();
  VineyardEnv env(world, EnvConfig{}, 3);
  env.reset_to(entry_pose(*world, 0, Direction::Forward));
  EXPECT_NO_THROW(env.step({std::nextafter(0.5, 0.0), std::nextafter(1.0, 0.0)}));
  EXPECT_THROW(env.step({0.7, 0.0}), std::invalid_argument);
}

TEST(Step, IdenticalSeedsGiveIdenticalStreams) {
  const auto world = std::make_shared<const VineyardWorld>(generate_world(train_world_config(), 7));
  auto run = [&] {
    VineyardEnv env(world, EnvConfig{}, 21);
    Rng rng(5), act(6);
    std::vector<StepResult> out;
    for (int e = 0; e < 2; ++e) {
      env.reset(e, rng);
      for (int t = 0; t < 15 && env.running(); ++t)
        out.push_back(env.step({act.uniform_open(0.0, 0.5), act.uniform_open(-1.0, 1.0)}));
    }
    return out;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].observation, b[i].observation);
    EXPECT_EQ(a[i].reward, b[i].reward);
    EXPECT_EQ(a[i].outcome, b[i].outcome);
  }
}

TEST(Observation, CarriesOnlyDepthAndStateVector) {
  static_assert(std::is_aggregate_v<Observation>);
  Observation obs;
  auto& [depth, state] = obs;  // exactly two members
  static_assert(std::is_same_v<std::remove_reference_t<decltype(depth)>, DepthImage>);
  static_assert(std::is_same_v<std::remove_reference_t<decltype(state)>, std::array<double, 3>>);
  EXPECT_EQ(depth.width * depth.height, 112 * 112);
}

TEST(Observation, StateVectorWithinBounds) {
  const auto world = std::make_shared<const VineyardWorld>(generate_world(train_world_config(), 7));
  VineyardEnv env(world, EnvConfig{}, 2);
  Rng rng(3), act(4);
  for (int e = 0; e < 5; ++e) {
    auto obs = env.reset(e, rng);
    while (env.running()) {
      EXPECT_GE(obs.state_vec[0], 0.0);
      EXPECT_LE(obs.state_vec[0], 0.5);
      EXPECT_LE(std::abs(obs.state_vec[1]), 1.0);
      EXPECT_GT(obs.state_vec[2], -kPi);
      EXPECT_LE(obs.state_vec[2], kPi);
      for (float d : obs.depth.data) ASSERT_TRUE(d >= 0.0f && d <= 5.0f);
      obs = env.step({act.uniform_open(0.0, 0.5), act.uniform_open(-1.0, 1.0)}).observation;
    }
  }
}
