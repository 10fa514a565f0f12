#pragma once

// Soft Actor-Critic with twin critics, automatic temperature and an
// epsilon-greedy overlay on top of the stochastic policy.

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <tuple>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "vinenav/action.hpp"
#include "vinenav/checkpoint.hpp"
#include "vinenav/env.hpp"
#include "vinenav/net.hpp"
#include "vinenav/policy.hpp"
#include "vinenav/rng.hpp"

namespace vinenav {

/// What the networks see: an optional image (HWC floats) and a state vector.
struct AgentInput {
  std::vector<float> image;
  std::vector<float> state;

  friend bool operator==(const AgentInput&, const AgentInput&) = default;
};

inline constexpr int kDepthLevels = 255;

inline std::uint8_t quantize_depth(float d) {
  return std::uint8_t(std::lround(std::clamp(double(d), 0.0, kMaxDepth) / kMaxDepth * kDepthLevels));
}
inline float dequantize_depth(std::uint8_t q) { return float(double(q) * kMaxDepth / kDepthLevels); }

/// Depth frames go through the same 8-bit quantization as the replay buffer,
/// so acting and learning see identical inputs.
inline AgentInput agent_input(const Observation& obs) {
  AgentInput in;
  in.image.resize(obs.depth.data.size());
  std::transform(obs.depth.data.begin(), obs.depth.data.end(), in.image.begin(),
                 [](float d) { return dequantize_depth(quantize_depth(d)); });
  in.state.assign(obs.state_vec.begin(), obs.state_vec.end());
  return in;
}

struct ExplorationSchedule {
  double initial = 1.0;
  double decay = 0.992;
  double minimum = 0.05;

  [[nodiscard]] double epsilon(int episode) const {
    if (episode < 0) throw std::invalid_argument("episode must be >= 0");
    return std::max(minimum, initial * std::pow(decay, episode));
  }
};

struct SACConfig {
  double gamma = 0.99;
  double learning_rate = 2e-4;
  std::size_t batch_size = 256;
  std::size_t replay_capacity = 200000;
  double tau = 0.005;
  bool auto_alpha = true;
  double alpha = 1.0;  // initial value when auto-tuned, constant otherwise
  double target_entropy = -2.0;
  std::size_t warmup_steps = 1000;
  int episodes = 1500;
  int updates_per_step = 1;
  ExplorationSchedule exploration;
  double critic_loss_ceiling = 1e8;
  int divergence_patience = 50;
  int checkpoint_every = 50;

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    if (!(learning_rate > 0.0) || !(tau >= 0.0 && tau <= 1.0) || !(alpha > 0.0))
      throw std::invalid_argument("learning rate and alpha must be positive, tau in [0, 1]");
    if (batch_size == 0 || replay_capacity == 0 || episodes < 0 || updates_per_step < 0)
      throw std::invalid_argument("sizes must be positive");
    if (!(exploration.minimum >= 0.0 && exploration.initial <= 1.0 && exploration.decay > 0.0 &&
          exploration.decay <= 1.0))
      throw std::invalid_argument("invalid exploration schedule");
  }
};

struct Transition {
  AgentInput obs;
  Action action;
  double reward = 0.0;
  AgentInput next_obs;
  bool done = false;  // task ended (success, collision, reverse); false on timeout
};

template <typename Scalar>
struct Batch {
  std::vector<std::vector<Scalar>> image, state, next_image, next_state;
  std::vector<Action> action;
  std::vector<Scalar> reward;
  std::vector<bool> done;
  [[nodiscard]] std::size_t size() const { return reward.size(); }

  void push(const Transition& t) {
    image.emplace_back(t.obs.image.begin(), t.obs.image.end());
    state.emplace_back(t.obs.state.begin(), t.obs.state.end());
    next_image.emplace_back(t.next_obs.image.begin(), t.next_obs.image.end());
    next_state.emplace_back(t.next_obs.state.begin(), t.next_obs.state.end());
    action.push_back(t.action);
    reward.push_back(Scalar(t.reward));
    done.push_back(t.done);
  }
};

/// Ring buffer with uniform sampling. Images are stored 8-bit; a transition's
/// next image is the following slot's image unless it had to be kept apart
/// (episode boundaries).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t image_size, std::size_t state_size)
      : capacity_(capacity), image_size_(image_size), state_size_(state_size) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  }

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t separate_next_frames() const { return explicit_next_.size(); }

  void push(const Transition& t) {
    if (t.obs.image.size() != image_size_ || t.next_obs.image.size() != image_size_ ||
        t.obs.state.size() != state_size_ || t.next_obs.state.size() != state_size_)
      throw std::invalid_argument("transition shape does not match the replay buffer");
    const auto frame = quantize(t.obs.image);
    if (size_ > 0 && frame != pending_next_) explicit_next_[newest_] = std::move(pending_next_);
    const std::size_t slot = size_ == 0 ? 0 : (newest_ + 1) % capacity_;
    explicit_next_.erase(slot);
    if (slot >= records_.size()) {
      records_.emplace_back();
      images_.resize(images_.size() + image_size_);
    }
    std::copy(frame.begin(), frame.end(), images_.begin() + std::ptrdiff_t(slot * image_size_));
    records_[slot] = {t.obs.state, t.action, t.reward, t.next_obs.state, t.done};
    pending_next_ = quantize(t.next_obs.image);
    newest_ = slot;
    size_ = std::min(size_ + 1, capacity_);
  }

  [[nodiscard]] Transition at(std::size_t slot) const {
    if (slot >= size_) throw std::out_of_range("replay slot");
    const auto& r = records_[slot];
    Transition t;
    t.obs = {dequantize(frame_at(slot)), r.state};
    t.action = r.action;
    t.reward = r.reward;
    t.done = r.done;
    std::span<const std::uint8_t> next;
    if (slot == newest_)
      next = pending_next_;
    else if (auto it = explicit_next_.find(slot); it != explicit_next_.end())
      next = it->second;
    else
      next = frame_at((slot + 1) % capacity_);
    t.next_obs = {dequantize(next), r.next_state};
    return t;
  }

  [[nodiscard]] std::size_t sample_index(Rng& rng) const {
    if (size_ == 0) throw std::logic_error("sampling from an empty replay buffer");
    return std::size_t(rng.uniform_index(size_));
  }

  template <typename Scalar>
  Batch<Scalar> sample(std::size_t n, Rng& rng) const {
    Batch<Scalar> b;
    for (std::size_t i = 0; i < n; ++i) b.push(at(sample_index(rng)));
    return b;
  }

 private:
  struct Record {
    std::vector<float> state;
    Action action;
    double reward = 0.0;
    std::vector<float> next_state;
    bool done = false;
  };

  [[nodiscard]] std::span<const std::uint8_t> frame_at(std::size_t slot) const {
    return {images_.data() + slot * image_size_, image_size_};
  }
  static std::vector<std::uint8_t> quantize(const std::vector<float>& img) {
    std::vector<std::uint8_t> q(img.size());
    std::transform(img.begin(), img.end(), q.begin(), quantize_depth);
    return q;
  }
  static std::vector<float> dequantize(std::span<const std::uint8_t> q) {
    std::vector<float> img(q.size());
    std::transform(q.begin(), q.end(), img.begin(), dequantize_depth);
    return img;
  }

  std::size_t capacity_, image_size_, state_size_;
  std::size_t size_ = 0, newest_ = 0;
  std::vector<Record> records_;
  std::vector<std::uint8_t> images_;  // grows with the buffer
  std::vector<std::uint8_t> pending_next_;
  std::unordered_map<std::size_t, std::vector<std::uint8_t>> explicit_next_;
};

/// Raised when training numerics blow up.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UpdateStats {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double mean_q = 0.0;
  double mean_log_prob = 0.0;
  double alpha = 0.0;
};

template <typename Scalar>
class SacAgent {
 public:
  using Net = Network<Scalar>;
  using Vec = typename Net::Vec;
  using RowVec = typename Net::RowVec;

  SacAgent(ArchSpec actor, ArchSpec critic, SACConfig cfg, Rng& init_rng)
      : cfg_(cfg),
        actor_(std::move(actor)),
        critic1_(critic),
        critic2_(critic),
        actor_opt_(actor_.parameter_count(), cfg.learning_rate),
        critic1_opt_(critic1_.parameter_count(), cfg.learning_rate),
        critic2_opt_(critic2_.parameter_count(), cfg.learning_rate),
        alpha_opt_(1, cfg.learning_rate) {
    cfg_.validate();
    if (actor_.outputs() != 4 || critic1_.outputs() != 1 || critic1_.arch().extra != actor_.arch().extra + 2)
      throw std::invalid_argument("actor must emit 4 values and critics take state + 2 action inputs");
    actor_.init(init_rng);
    critic1_.init(init_rng);
    critic2_.init(init_rng);
    target1_ = critic1_;
    target2_ = critic2_;
    log_alpha_ = Vec::Constant(1, Scalar(std::log(cfg.alpha)));
  }

  [[nodiscard]] const SACConfig& config() const { return cfg_; }
  Net& actor() { return actor_; }
  Net& critic(int k) { return k == 0 ? critic1_ : critic2_; }
  Net& target(int k) { return k == 0 ? target1_ : target2_; }
  [[nodiscard]] const Net& actor() const { return actor_; }
  [[nodiscard]] double alpha() const { return std::exp(double(log_alpha_[0])); }
  void set_alpha(double a) { log_alpha_[0] = Scalar(std::log(a)); }

  [[nodiscard]] std::uint64_t hash() const {
    return arch_hash(actor_.arch().describe() + " || " + critic1_.arch().describe());
  }

  [[nodiscard]] PolicyOutput policy(std::span<const Scalar> image, std::span<const Scalar> state) const {
    return policy_output(actor_.forward(image, state));
  }
  [[nodiscard]] PolicyOutput policy(const AgentInput& in) const {
    const auto img = convert(in.image);
    const auto st = convert(in.state);
    return policy(img, st);
  }

  [[nodiscard]] Scalar q_value(const Net& net, std::span<const Scalar> image, std::span<const Scalar> state,
                               const Action& a, typename Net::Tape* tape = nullptr) const {
    const auto extra = critic_extra(state, a);
    return net.forward(image, extra, tape)(0);
  }

  /// Bellman targets y = r + gamma (1 - done) (min Q'(s', a') - alpha log pi(a'|s')).
  std::vector<Scalar> critic_targets(const Batch<Scalar>& b, Rng& rng) const {
    std::vector<Scalar> y(b.size());
    const double alpha = this->alpha();
    for (std::size_t i = 0; i < b.size(); ++i) {
      double boot = 0.0;
      if (!b.done[i] && cfg_.gamma > 0.0) {
        const auto out = policy(b.next_image[i], b.next_state[i]);
        const auto s = sample_action(out, rng);
        const double q1 = q_value(target1_, b.next_image[i], b.next_state[i], s.action);
        const double q2 = q_value(target2_, b.next_image[i], b.next_state[i], s.action);
        boot = cfg_.gamma * (std::min(q1, q2) - alpha * s.log_prob);
      }
      const double target = double(b.reward[i]) + boot;
      if (!std::isfinite(target)) {
        std::ostringstream os;
        os << "non-finite Bellman target at batch index " << i << " (reward " << b.reward[i] << ", alpha " << alpha
           << ")";
        throw DivergenceError(os.str());
      }
      y[i] = Scalar(target);
    }
    return y;
  }

  /// Mean squared Bellman error of critic k against fixed targets, and its gradient.
  std::pair<double, Vec> critic_loss_and_gradient(int k, const Batch<Scalar>& b, const std::vector<Scalar>& y) const {
    if (b.size() == 0) throw std::invalid_argument("empty batch");
    const Net& net = k == 0 ? critic1_ : critic2_;
    Vec grad = Vec::Zero(Eigen::Index(net.parameter_count()));
    typename Net::Tape tape;
    double loss = 0.0;
    const Scalar n = Scalar(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
      const Scalar q = q_value(net, b.image[i], b.state[i], b.action[i], &tape);
      const Scalar err = q - y[i];
      loss += double(err * err);
      RowVec d(1);
      d(0) = Scalar(2) * err / n;
      net.backward(tape, d, grad);
    }
    return {loss / double(b.size()), std::move(grad)};
  }

  /// One optimizer step per critic on the mean squared Bellman error.
  std::pair<double, double> critic_update(const Batch<Scalar>& b, Rng& rng) {
    if (b.size() == 0) throw std::invalid_argument("empty batch");
    const auto y = critic_targets(b, rng);
    double losses[2];
    for (int k = 0; k < 2; ++k) {
      auto [loss, grad] = critic_loss_and_gradient(k, b, y);
      losses[k] = loss;
      (k == 0 ? critic1_opt_ : critic2_opt_).step(critic(k).params(), grad);
    }
    return {losses[0], losses[1]};
  }

  struct ActorResult {
    double loss = 0.0;
    double mean_log_prob = 0.0;
    double mean_q = 0.0;
    Vec grad;
  };

  /// Loss mean(alpha log pi(a|s) - min(Q1, Q2)(s, a)) with a reparameterized,
  /// and its gradient with respect to the actor parameters. Critics stay fixed.
  ActorResult actor_loss_and_gradient(const Batch<Scalar>& b, Rng& rng) const {
    if (b.size() == 0) throw std::invalid_argument("empty batch");
    ActorResult r;
    r.grad = Vec::Zero(Eigen::Index(actor_.parameter_count()));
    const double alpha = this->alpha();
    const double n = double(b.size());
    typename Net::Tape actor_tape, c1_tape, c2_tape;
    Vec scratch;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto raw = actor_.forward(b.image[i], b.state[i], &actor_tape);
      const auto out = policy_output(raw);
      const auto s = sample_action(out, rng);
      const Scalar q1 = q_value(critic1_, b.image[i], b.state[i], s.action, &c1_tape);
      const Scalar q2 = q_value(critic2_, b.image[i], b.state[i], s.action, &c2_tape);
      const bool first = q1 <= q2;
      const Net& cnet = first ? critic1_ : critic2_;
      RowVec one(1);
      one(0) = Scalar(1);
      RowVec d_extra;
      cnet.backward(first ? c1_tape : c2_tape, one, scratch, &d_extra, true);
      const std::array<double, 2> dq_da{double(d_extra(d_extra.size() - 2)), double(d_extra(d_extra.size() - 1))};
      const auto g = reparam_gradient(out, s, alpha, dq_da);
      RowVec d_raw(4);
      for (int k = 0; k < 4; ++k) d_raw(k) = Scalar(g[std::size_t(k)] / n);
      actor_.backward(actor_tape, d_raw, r.grad);
      const double q = double(std::min(q1, q2));
      r.loss += (alpha * s.log_prob - q) / n;
      r.mean_log_prob += s.log_prob / n;
      r.mean_q += q / n;
    }
    return r;
  }

  ActorResult actor_update(const Batch<Scalar>& b, Rng& rng) {
    auto r = actor_loss_and_gradient(b, rng);
    actor_opt_.step(actor_.params(), r.grad);
    return r;
  }

  /// Gradient step on log alpha for the loss -log_alpha (log_prob + target_entropy).
  double temperature_update(double mean_log_prob) {
    if (!cfg_.auto_alpha) return 0.0;
    Vec grad(1);
    grad[0] = Scalar(-(mean_log_prob + cfg_.target_entropy));
    alpha_opt_.step(log_alpha_, grad);
    return -double(log_alpha_[0]) * (mean_log_prob + cfg_.target_entropy);
  }

  void soft_update_targets() {
    soft_update(target1_, critic1_, cfg_.tau);
    soft_update(target2_, critic2_, cfg_.tau);
  }

  UpdateStats update(const Batch<Scalar>& b, Rng& rng) {
    UpdateStats st;
    std::tie(st.critic1_loss, st.critic2_loss) = critic_update(b, rng);
    const auto ar = actor_update(b, rng);
    st.actor_loss = ar.loss;
    st.mean_q = ar.mean_q;
    st.mean_log_prob = ar.mean_log_prob;
    st.alpha_loss = temperature_update(ar.mean_log_prob);
    soft_update_targets();
    st.alpha = alpha();
    return st;
  }

  [[nodiscard]] Checkpoint to_checkpoint(const std::string& metadata = {}) const {
    Checkpoint ck;
    ck.arch_hash = hash();
    ck.metadata = metadata;
    auto put = [&](const std::string& name, const Vec& v) {
      auto& dst = ck.blocks[name];
      dst.resize(std::size_t(v.size()));
      for (Eigen::Index i = 0; i < v.size(); ++i) dst[std::size_t(i)] = float(v[i]);
    };
    put("actor", actor_.params());
    put("critic1", critic1_.params());
    put("critic2", critic2_.params());
    put("critic1_target", target1_.params());
    put("critic2_target", target2_.params());
    put("log_alpha", log_alpha_);
    return ck;
  }

  void load(const Checkpoint& ck) {
    if (ck.arch_hash != hash()) throw CheckpointMismatch("checkpoint was written for a different architecture");
    auto get = [&](const std::string& name, Vec& v) {
      auto it = ck.blocks.find(name);
      if (it == ck.blocks.end()) throw std::runtime_error("checkpoint lacks block " + name);
      if (it->second.size() != std::size_t(v.size())) throw CheckpointMismatch("block size mismatch: " + name);
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Scalar(it->second[std::size_t(i)]);
    };
    get("actor", actor_.params());
    get("critic1", critic1_.params());
    get("critic2", critic2_.params());
    get("critic1_target", target1_.params());
    get("critic2_target", target2_.params());
    get("log_alpha", log_alpha_);
  }

  static void soft_update(Net& target, const Net& online, double tau) {
    if (target.parameter_count() != online.parameter_count()) throw std::invalid_argument("soft update shape mismatch");
    target.params() = Scalar(tau) * online.params() + Scalar(1.0 - tau) * target.params();
  }

 private:
  static std::vector<Scalar> convert(const std::vector<float>& v) { return {v.begin(), v.end()}; }

  static std::vector<Scalar> critic_extra(std::span<const Scalar> state, const Action& a) {
    std::vector<Scalar> x(state.begin(), state.end());
    x.push_back(Scalar(a.v));
    x.push_back(Scalar(a.omega));
    return x;
  }

  SACConfig cfg_;
  Net actor_, critic1_, critic2_, target1_, target2_;
  Adam<Scalar> actor_opt_, critic1_opt_, critic2_opt_, alpha_opt_;
  Vec log_alpha_;
};

inline Action uniform_action(Rng& rng) {
  return {rng.uniform_open(0.0, kMaxLinearVelocity), rng.uniform_open(-kMaxAngularVelocity, kMaxAngularVelocity)};
}

struct TrainingAction {
  Action action;
  bool random = false;
};

/// With probability epsilon a uniform action, otherwise a policy sample.
/// No coin is drawn when epsilon is exactly 0 or 1.
template <typename Scalar>
TrainingAction select_training_action(const SacAgent<Scalar>& agent, const AgentInput& in, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must lie in [0, 1]");
  const bool random = epsilon >= 1.0 || (epsilon > 0.0 && rng.bernoulli(epsilon));
  if (random) return {uniform_action(rng), true};
  return {sample_action(agent.policy(in), rng).action, false};
}

struct EpisodeRecord {
  int episode = 0;
  double episode_return = 0.0;
  int steps = 0;
  Outcome outcome = Outcome::Running;
  double epsilon = 0.0;
  double explore_fraction = 0.0;
  long env_steps = 0;
  long updates = 0;
  double critic_loss = 0.0;  // means over this episode's updates
  double actor_loss = 0.0;
  double alpha = 0.0;
};

inline nlohmann::json to_json(const EpisodeRecord& r) {
  return {{"episode", r.episode},         {"return", r.episode_return},
          {"steps", r.steps},             {"outcome", std::string(to_string(r.outcome))},
          {"epsilon", r.epsilon},         {"explore_fraction", r.explore_fraction},
          {"env_steps", r.env_steps},     {"updates", r.updates},
          {"critic_loss", r.critic_loss}, {"actor_loss", r.actor_loss},
          {"alpha", r.alpha}};
}

struct TrainHooks {
  std::ostream* log = nullptr;  // one JSON object per episode
  std::function<void(int episode, const Checkpoint&)> checkpoint;
  std::function<void(const EpisodeRecord&)> on_episode;
  std::function<void(long step, const Action&)> on_action;
};

struct TrainResult {
  std::vector<EpisodeRecord> episodes;
  long env_steps = 0;
  long updates = 0;
};

/// Collect-and-update loop. The environment provides reset(episode, rng) and
/// step(action) returning {observation, reward, outcome}; agent_input() must
/// accept its observation type.
template <typename Scalar, typename Env>
TrainResult train(SacAgent<Scalar>& agent, Env& env, ReplayBuffer& replay, std::uint64_t seed,
                  const TrainHooks& hooks = {}, const std::string& metadata = {}) {
  const SACConfig& cfg = agent.config();
  Rng reset_rng = make_stream(seed, "reset");
  Rng action_rng = make_stream(seed, "action");
  Rng sample_rng = make_stream(seed, "replay");
  Rng update_rng = make_stream(seed, "update");
  TrainResult result;
  int over_ceiling = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    EpisodeRecord rec;
    rec.episode = ep;
    rec.epsilon = cfg.exploration.epsilon(ep);
    AgentInput obs = agent_input(env.reset(ep, reset_rng));
    int random_actions = 0, updates = 0;
    double critic_sum = 0.0, actor_sum = 0.0;
    while (true) {
      TrainingAction ta;
      if (std::size_t(result.env_steps) < cfg.warmup_steps)
        ta = {uniform_action(action_rng), true};
      else
        ta = select_training_action(agent, obs, rec.epsilon, action_rng);
      random_actions += ta.random;
      if (hooks.on_action) hooks.on_action(result.env_steps, ta.action);
      const auto res = env.step(ta.action);
      AgentInput next = agent_input(res.observation);
      replay.push({obs, ta.action, res.reward, next, ends_task(res.outcome)});
      rec.episode_return += res.reward;
      ++rec.steps;
      ++result.env_steps;
      obs = std::move(next);

      if (std::size_t(result.env_steps) >= cfg.warmup_steps && replay.size() >= cfg.batch_size) {
        for (int u = 0; u < cfg.updates_per_step; ++u) {
          const auto batch = replay.sample<Scalar>(cfg.batch_size, sample_rng);
          const auto st = agent.update(batch, update_rng);
          const double closs = 0.5 * (st.critic1_loss + st.critic2_loss);
          if (!std::isfinite(closs) || !std::isfinite(st.actor_loss)) throw DivergenceError("non-finite loss");
          over_ceiling = closs > cfg.critic_loss_ceiling ? over_ceiling + 1 : 0;
          if (over_ceiling >= cfg.divergence_patience) {
            std::ostringstream os;
            os << "critic loss above " << cfg.critic_loss_ceiling << " for " << over_ceiling
               << " consecutive updates (episode " << ep << ", last loss " << closs << ", alpha " << st.alpha << ")";
            throw DivergenceError(os.str());
          }
          critic_sum += closs;
          actor_sum += st.actor_loss;
          ++updates;
          ++result.updates;
        }
      }
      if (is_terminal(res.outcome)) {
        rec.outcome = res.outcome;
        break;
      }
    }
    rec.explore_fraction = double(random_actions) / rec.steps;
    rec.env_steps = result.env_steps;
    rec.updates = result.updates;
    rec.critic_loss = updates ? critic_sum / updates : 0.0;
    rec.actor_loss = updates ? actor_sum / updates : 0.0;
    rec.alpha = agent.alpha();
    result.episodes.push_back(rec);
    if (hooks.log) *hooks.log << to_json(rec).dump() << '\n' << std::flush;
    if (hooks.on_episode) hooks.on_episode(rec);
    const bool last = ep + 1 == cfg.episodes;
    if (hooks.checkpoint && (last || (cfg.checkpoint_every > 0 && (ep + 1) % cfg.checkpoint_every == 0)))
      hooks.checkpoint(ep + 1, agent.to_checkpoint(metadata));
  }
  return result;
}

}  // namespace vinenav
