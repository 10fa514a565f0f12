#include <gtest/gtest.h>

#include <sstream>

#include "vinenav/sac.hpp"
#include "vinenav/toy_corridor.hpp"

using namespace vinenav;

namespace {

SACConfig small_config() {
  SACConfig c;
  c.batch_size = 4;
  c.warmup_steps = 10;
  c.learning_rate = 1e-3;
  return c;
}

template <typename S>
SacAgent<S> linear_agent(SACConfig cfg = small_config(), std::uint64_t seed = 1) {
  Rng rng(seed);
  return SacAgent<S>(mlp_arch(1, {}, 4), mlp_arch(3, {}, 1), cfg, rng);
}

Transition toy_transition(double s, Action a, double r, double s2, bool done) {
  return {{{}, {float(s)}}, a, r, {{}, {float(s2)}}, done};
}

template <typename S>
Batch<S> batch_of(std::initializer_list<Transition> ts) {
  Batch<S> b;
  for (const auto& t : ts) b.push(t);
  return b;
}

double rel_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

}  // namespace

TEST(Epsilon, ScheduleValues) {
  const ExplorationSchedule sched;
  EXPECT_EQ(sched.epsilon(0), 1.0);
  EXPECT_DOUBLE_EQ(sched.epsilon(100), std::pow(0.992, 100));
  EXPECT_NEAR(sched.epsilon(100), 0.4479, 1e-4);
  EXPECT_EQ(sched.epsilon(1000), 0.05);
  int floor_from = 0;
  while (std::pow(0.992, floor_from) >= 0.05) ++floor_from;
  EXPECT_GT(sched.epsilon(floor_from - 1), 0.05);
  EXPECT_EQ(sched.epsilon(floor_from), 0.05);
  for (int n = 1; n < 2000; ++n) EXPECT_LE(sched.epsilon(n), sched.epsilon(n - 1));
  EXPECT_THROW((void)sched.epsilon(-1), std::invalid_argument);
}

TEST(SelectAction, FullExplorationIsUniform) {
  auto agent = linear_agent<float>();
  Rng rng(2);
  const AgentInput in{{}, {0.1f}};
  constexpr int n = 100000, bins = 10;
  std::vector<int> counts(bins * bins, 0);
  for (int i = 0; i < n; ++i) {
    const auto ta = select_training_action(agent, in, 1.0, rng);
    ASSERT_TRUE(ta.random);
    ASSERT_TRUE(within_bounds(ta.action));
    const int bv = std::min(bins - 1, int(ta.action.v / 0.5 * bins));
    const int bw = std::min(bins - 1, int((ta.action.omega + 1.0) / 2.0 * bins));
    ++counts[std::size_t(bv * bins + bw)];
  }
  double chi2 = 0.0;
  const double expected = double(n) / (bins * bins);
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99 degrees of freedom, upper 0.1% point.
  EXPECT_LT(chi2, 148.23);
}

TEST(SelectAction, NoExplorationMatchesPolicySampleStream) {
  auto agent = linear_agent<float>();
  Rng a(3), b(3);
  const AgentInput in{{}, {-0.2f}};
  for (int i = 0; i < 1000; ++i) {
    const auto ta = select_training_action(agent, in, 0.0, a);
    const auto s = sample_action(agent.policy(in), b);
    EXPECT_FALSE(ta.random);
    EXPECT_EQ(ta.action, s.action);
  }
}

TEST(SelectAction, ExplorationFrequencyTracksEpsilon) {
  auto agent = linear_agent<float>();
  Rng rng(4);
  const AgentInput in{{}, {0.0f}};
  constexpr int n = 20000;
  int random = 0;
  for (int i = 0; i < n; ++i) {
    const auto ta = select_training_action(agent, in, 0.3, rng);
    random += ta.random;
    ASSERT_TRUE(within_bounds(ta.action));
  }
  EXPECT_NEAR(random, 0.3 * n, 3 * std::sqrt(n * 0.3 * 0.7));
}

TEST(Replay, SizeNeverExceedsCapacity) {
  ReplayBuffer rb(5, 0, 1);
  for (int i = 0; i < 12; ++i) {
    rb.push(toy_transition(i, {0.1, 0.0}, i, i + 1, false));
    EXPECT_EQ(rb.size(), std::min<std::size_t>(i + 1, 5));
  }
  EXPECT_THROW(rb.push(Transition{}), std::invalid_argument);
}

TEST(Replay, SamplingIsUniform) {
  ReplayBuffer rb(100, 0, 1);
  for (int i = 0; i < 100; ++i) rb.push(toy_transition(i, {0.1, 0.0}, i, i + 1, false));
  Rng rng(5);
  constexpr int n = 100000;
  std::vector<int> counts(100, 0);
  for (int i = 0; i < n; ++i) ++counts[rb.sample_index(rng)];
  const double p = 0.01, sigma = std::sqrt(n * p * (1 - p));
  for (int c : counts) EXPECT_NEAR(c, n * p, 3 * sigma);
}

TEST(Replay, SharedFramesReconstructTransitionsExactly) {
  // Image transitions over several episodes and a wrap-around.
  constexpr std::size_t img = 16;
  ReplayBuffer rb(7, img, 3);
  Rng rng(6);
  auto frame = [&] {
    AgentInput in;
    for (std::size_t i = 0; i < img; ++i) in.image.push_back(dequantize_depth(std::uint8_t(rng.uniform_index(256))));
    for (int i = 0; i < 3; ++i) in.state.push_back(float(rng.uniform(-1, 1)));
    return in;
  };
  std::vector<Transition> pushed;
  for (int ep = 0; ep < 4; ++ep) {
    AgentInput obs = frame();
    const int len = 2 + ep;
    for (int t = 0; t < len; ++t) {
      AgentInput next = frame();
      Transition tr{obs, {0.1 * t, 0.0}, double(pushed.size()), next, t + 1 == len};
      rb.push(tr);
      pushed.push_back(tr);
      obs = next;
    }
  }
  ASSERT_EQ(rb.size(), 7u);
  // The newest 7 transitions occupy slots in ring order.
  const std::size_t total = pushed.size();
  for (std::size_t k = 0; k < 7; ++k) {
    const std::size_t index = total - 7 + k;
    const Transition got = rb.at(index % 7);
    const Transition& want = pushed[index];
    EXPECT_EQ(got.obs, want.obs) << index;
    EXPECT_EQ(got.next_obs, want.next_obs) << index;
    EXPECT_EQ(got.reward, want.reward);
    EXPECT_EQ(got.done, want.done);
    EXPECT_EQ(got.action, want.action);
  }
  EXPECT_LE(rb.separate_next_frames(), 4u);
}

TEST(Replay, StoresOnlyAgentVisibleData) {
  // Structural audit: a transition holds two agent inputs, an action, a
  // reward and a flag; an agent input holds an image and a state vector.
  static_assert(std::is_aggregate_v<Transition> && std::is_aggregate_v<AgentInput>);
  auto [obs, action, reward, next, done] = Transition{};
  auto [image, state] = AgentInput{};
  static_assert(std::is_same_v<decltype(action), Action>);
  static_assert(std::is_same_v<decltype(image), std::vector<float>>);
  SUCCEED();
}

TEST(Critic, TerminalTargetIsReward) {
  auto agent = linear_agent<double>();
  Rng rng(7);
  const auto b = batch_of<double>({toy_transition(0.1, {0.2, 0.3}, 4.5, 0.2, true),
                                   toy_transition(0.3, {0.2, 0.3}, -2.0, 0.1, true)});
  const auto y = agent.critic_targets(b, rng);
  EXPECT_EQ(y[0], 4.5);
  EXPECT_EQ(y[1], -2.0);
}

TEST(Critic, ZeroDiscountHasNoBootstrap) {
  auto cfg = small_config();
  cfg.gamma = 0.0;
  auto agent = linear_agent<double>(cfg);
  Rng rng(8);
  const auto b = batch_of<double>({toy_transition(0.1, {0.2, 0.3}, 1.25, 0.2, false)});
  EXPECT_EQ(agent.critic_targets(b, rng)[0], 1.25);
}

TEST(Critic, TargetUsesTheSmallerCritic) {
  auto agent = linear_agent<double>();
  agent.set_alpha(1e-9);
  // Q1' = 1 + s, Q2' = 3 + s: the bootstrap must use Q1'.
  agent.target(0).params().setZero();
  agent.target(1).params().setZero();
  agent.target(0).params()[0] = 1.0;
  agent.target(1).params()[0] = 1.0;
  agent.target(0).params()[3] = 1.0;  // bias
  agent.target(1).params()[3] = 3.0;
  Rng rng(9);
  const auto b = batch_of<double>({toy_transition(0.1, {0.2, 0.3}, 0.5, 0.25, false)});
  const double y = agent.critic_targets(b, rng)[0];
  EXPECT_NEAR(y, 0.5 + 0.99 * (1.0 + 0.25), 1e-6);
  EXPECT_LE(y, 0.5 + 0.99 * (3.0 + 0.25));
}

TEST(Critic, SingleTransitionLossByHand) {
  auto agent = linear_agent<double>();
  // Q = 2 s - v + 0.5 omega + 0.125, done transition so y = r.
  auto& p = agent.critic(0).params();
  p << 2.0, -1.0, 0.5, 0.125;
  agent.critic(1).params() << 0.0, 0.0, 0.0, 0.0;
  Rng rng(10);
  const auto b = batch_of<double>({toy_transition(0.5, {0.25, -0.5}, 1.0, 0.0, true)});
  const double q = 2 * 0.5 - 0.25 + 0.5 * -0.5 + 0.125;  // 0.625
  const auto [l1, l2] = agent.critic_update(b, rng);
  EXPECT_EQ(l1, (q - 1.0) * (q - 1.0));
  EXPECT_NEAR(l2, 1.0, 1e-12);
}

TEST(Critic, LossGradientMatchesFiniteDifferences) {
  Rng init(11);
  SacAgent<double> agent(actor_arch(16), critic_arch(16), small_config(), init);
  Rng data(12);
  Batch<double> b;
  for (int i = 0; i < 3; ++i) {
    AgentInput o, n;
    for (int k = 0; k < 256; ++k) o.image.push_back(float(data.uniform(0, 5))), n.image.push_back(float(data.uniform(0, 5)));
    for (int k = 0; k < 3; ++k) o.state.push_back(float(data.uniform(-1, 1))), n.state.push_back(float(data.uniform(-1, 1)));
    b.push({o, uniform_action(data), data.uniform(-1, 1), n, i == 0});
  }
  Rng rng(13);
  const auto y = agent.critic_targets(b, rng);
  const auto [loss, grad] = agent.critic_loss_and_gradient(0, b, y);
  auto& params = agent.critic(0).params();
  for (int c = 0; c < 20; ++c) {
    const auto i = Eigen::Index(data.uniform_index(std::uint64_t(params.size())));
    const double saved = params[i];
    params[i] = saved + 1e-5;
    const double lp = agent.critic_loss_and_gradient(0, b, y).first;
    params[i] = saved - 1e-5;
    const double lm = agent.critic_loss_and_gradient(0, b, y).first;
    params[i] = saved;
    EXPECT_LT(rel_error(grad[i], (lp - lm) / 2e-5), 1e-4) << i;
  }
}

TEST(Actor, LossGradientMatchesFiniteDifferences) {
  Rng init(14);
  SacAgent<double> agent(actor_arch(16), critic_arch(16), small_config(), init);
  agent.set_alpha(0.3);
  Rng data(15);
  Batch<double> b;
  for (int i = 0; i < 3; ++i) {
    AgentInput o;
    for (int k = 0; k < 256; ++k) o.image.push_back(float(data.uniform(0, 5)));
    for (int k = 0; k < 3; ++k) o.state.push_back(float(data.uniform(-1, 1)));
    b.push({o, uniform_action(data), 0.0, o, false});
  }
  const Rng fixed(16);
  Rng r0 = fixed;
  const auto res = agent.actor_loss_and_gradient(b, r0);
  auto& params = agent.actor().params();
  for (int c = 0; c < 20; ++c) {
    const auto i = Eigen::Index(data.uniform_index(std::uint64_t(params.size())));
    const double saved = params[i];
    params[i] = saved + 1e-5;
    Rng rp = fixed;
    const double lp = agent.actor_loss_and_gradient(b, rp).loss;
    params[i] = saved - 1e-5;
    Rng rm = fixed;
    const double lm = agent.actor_loss_and_gradient(b, rm).loss;
    params[i] = saved;
    EXPECT_LT(rel_error(res.grad[i], (lp - lm) / 2e-5), 1e-4) << i;
  }
}

TEST(Actor, FollowsACriticThatRewardsSpeed) {
  auto cfg = small_config();
  cfg.auto_alpha = false;
  auto agent = linear_agent<double>(cfg);
  agent.set_alpha(1e-12);
  for (int k = 0; k < 2; ++k) {
    agent.critic(k).params().setZero();
    agent.critic(k).params()[1] = 10.0;  // Q = 10 v
  }
  const auto b = batch_of<double>({toy_transition(0.3, {0.1, 0.0}, 0.0, 0.3, false)});
  const AgentInput in{{}, {0.3f}};
  Rng rng(17);
  double prev = agent.policy(in).mean[0];
  for (int i = 0; i < 50; ++i) {
    agent.actor_update(b, rng);
    const double now = agent.policy(in).mean[0];
    EXPECT_GT(now, prev) << "update " << i;
    prev = now;
  }
}

// With Q = 0 the actor maximizes the entropy of the squashed action. That
// entropy peaks at a finite sigma (near 0.9 for a centred tanh), so a narrow
// policy widens and settles well inside the log-std clamp.
TEST(Actor, EntropyAloneWidensANarrowPolicy) {
  auto cfg = small_config();
  cfg.auto_alpha = false;
  cfg.learning_rate = 1e-2;
  auto agent = linear_agent<double>(cfg);
  agent.set_alpha(1.0);
  agent.critic(0).params().setZero();
  agent.critic(1).params().setZero();
  // Linear actor: W (1 x 4) then b (4); start at mean 0, log std -2.
  agent.actor().params().setZero();
  agent.actor().params()[6] = -2.0;
  agent.actor().params()[7] = -2.0;
  const auto b = batch_of<double>({toy_transition(0.3, {0.1, 0.0}, 0.0, 0.3, false)});
  const AgentInput in{{}, {0.3f}};
  Rng rng(18);
  for (int i = 0; i < 600; ++i) agent.actor_update(b, rng);
  const auto after = agent.policy(in);
  for (int j = 0; j < 2; ++j) {
    EXPECT_GT(after.log_std[std::size_t(j)], -2.0 + 1.0);
    EXPECT_LT(after.log_std[std::size_t(j)], 0.5);
  }
}

TEST(Temperature, StationaryAtTargetEntropy) {
  auto agent = linear_agent<double>();
  const double a0 = agent.alpha();
  agent.temperature_update(2.0);  // E[log pi] = -target_entropy
  EXPECT_EQ(agent.alpha(), a0);
}

TEST(Temperature, RisesWhenEntropyIsLow) {
  auto agent = linear_agent<double>();
  const double a0 = agent.alpha();
  agent.temperature_update(5.0);  // entropy -5 < -2
  EXPECT_GT(agent.alpha(), a0);
  const double a1 = agent.alpha();
  agent.temperature_update(-1.0);  // entropy 1 > -2
  EXPECT_LT(agent.alpha(), a1);
}

TEST(Temperature, FixedModeNeverChanges) {
  auto cfg = small_config();
  cfg.auto_alpha = false;
  cfg.alpha = 0.3;
  auto agent = linear_agent<double>(cfg);
  Rng rng(19);
  const auto b = batch_of<double>({toy_transition(0.3, {0.1, 0.0}, 1.0, 0.3, false)});
  for (int i = 0; i < 10; ++i) agent.update(b, rng);
  EXPECT_DOUBLE_EQ(agent.alpha(), 0.3);
}

TEST(SoftUpdate, EdgeCoefficientsAndGeometricDecay) {
  Rng rng(20);
  Network<double> online(mlp_arch(3, {8}, 1)), target(mlp_arch(3, {8}, 1));
  online.init(rng);
  target.init(rng);
  auto t0 = target;
  SacAgent<double>::soft_update(t0, online, 0.0);
  EXPECT_EQ(t0.params(), target.params());
  auto t1 = target;
  SacAgent<double>::soft_update(t1, online, 1.0);
  EXPECT_EQ(t1.params(), online.params());

  const double tau = 0.05;
  const double gap0 = (target.params() - online.params()).norm();
  for (int i = 0; i < 100; ++i) SacAgent<double>::soft_update(target, online, tau);
  EXPECT_NEAR((target.params() - online.params()).norm(), gap0 * std::pow(1 - tau, 100), 1e-9 * gap0);
  Network<double> other(mlp_arch(2, {8}, 1));
  EXPECT_THROW(SacAgent<double>::soft_update(other, online, 0.5), std::invalid_argument);
}

TEST(Agent, CheckpointRoundTrip) {
  auto a = linear_agent<float>(small_config(), 21);
  auto b = linear_agent<float>(small_config(), 22);
  a.set_alpha(0.37);
  b.load(a.to_checkpoint("meta"));
  EXPECT_EQ(b.to_checkpoint("meta"), a.to_checkpoint("meta"));
  Rng rng(23);
  SacAgent<float> big(mlp_arch(1, {8}, 4), mlp_arch(3, {}, 1), small_config(), rng);
  EXPECT_THROW(big.load(a.to_checkpoint()), CheckpointMismatch);
}

TEST(Train, LogHasOneLinePerEpisodeAndIsReproducible) {
  auto run = [](std::vector<Action>& actions, std::string& log) {
    auto cfg = toy_sac_config(6);
    cfg.warmup_steps = 50;
    Rng init = make_stream(31, "init");
    SacAgent<float> agent(toy_actor_arch(), toy_critic_arch(), cfg, init);
    ToyCorridor env(ToyCorridorConfig{}, 31);
    ReplayBuffer replay(cfg.replay_capacity, 0, 1);
    std::ostringstream os;
    TrainHooks hooks;
    hooks.log = &os;
    int checkpoints = 0;
    hooks.checkpoint = [&](int, const Checkpoint&) { ++checkpoints; };
    hooks.on_action = [&](long step, const Action& a) {
      if (step < 100) actions.push_back(a);
    };
    const auto res = train(agent, env, replay, 31, hooks);
    log = os.str();
    EXPECT_EQ(checkpoints, 1);
    return res;
  };
  std::vector<Action> a1, a2;
  std::string l1, l2;
  const auto r1 = run(a1, l1);
  run(a2, l2);
  EXPECT_EQ(r1.episodes.size(), 6u);
  EXPECT_EQ(std::count(l1.begin(), l1.end(), '\n'), 6);
  EXPECT_EQ(a1.size(), 100u);
  EXPECT_EQ(a1, a2);
  EXPECT_EQ(l1, l2);
  std::istringstream is(l1);
  std::string line;
  int ep = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("episode").get<int>(), ep++);
    EXPECT_TRUE(j.contains("epsilon") && j.contains("return") && j.contains("outcome") && j.contains("alpha"));
  }
  EXPECT_GT(r1.updates, 0);
}

TEST(Train, DivergenceGuardAborts) {
  auto cfg = toy_sac_config(20);
  cfg.warmup_steps = 70;
  cfg.critic_loss_ceiling = -1.0;  // every update counts as over the ceiling
  cfg.divergence_patience = 3;
  Rng init(32);
  SacAgent<float> agent(toy_actor_arch(), toy_critic_arch(), cfg, init);
  ToyCorridor env(ToyCorridorConfig{}, 32);
  ReplayBuffer replay(cfg.replay_capacity, 0, 1);
  EXPECT_THROW(train(agent, env, replay, 32), DivergenceError);
}
