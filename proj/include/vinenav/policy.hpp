#pragma once

// Squashed Gaussian over (v, omega): u ~ N(mu, sigma^2), v = 0.25 (tanh u0 + 1),
// omega = tanh u1.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "vinenav/action.hpp"
#include "vinenav/rng.hpp"

namespace vinenav {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct PolicyOutput {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> log_std{0.0, 0.0};  // clamped
  std::array<bool, 2> log_std_clamped{false, false};
};

/// Reads the four raw network outputs [mu0, mu1, log_std0, log_std1].
template <typename Row>
PolicyOutput policy_output(const Row& raw, double log_std_min = kLogStdMin, double log_std_max = kLogStdMax) {
  PolicyOutput out;
  for (int j = 0; j < 2; ++j) {
    out.mean[j] = double(raw(j));
    const double ls = double(raw(2 + j));
    out.log_std[j] = std::clamp(ls, log_std_min, log_std_max);
    out.log_std_clamped[j] = ls < log_std_min || ls > log_std_max;
  }
  return out;
}

/// Scale of each action dimension relative to tanh: dv/dtanh = 0.25, domega/dtanh = 1.
inline constexpr std::array<double, 2> kActionScale{0.25, 1.0};

/// log(1 - tanh(u)^2), stable for large |u|.
inline double log_one_minus_tanh_sq(double u) {
  const double a = std::abs(u);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

inline Action squash(double u0, double u1) {
  return {0.25 * (std::tanh(u0) + 1.0), std::tanh(u1)};
}

/// Keeps a squashed action strictly inside the open action box.
inline Action nudge_inside(Action a) {
  a.v = std::clamp(a.v, std::nextafter(0.0, 1.0), std::nextafter(kMaxLinearVelocity, 0.0));
  a.omega = std::clamp(a.omega, std::nextafter(-kMaxAngularVelocity, 0.0), std::nextafter(kMaxAngularVelocity, 0.0));
  return a;
}

/// log density of the squashed action given the pre-squash sample u.
inline double squashed_log_prob(const PolicyOutput& out, const std::array<double, 2>& u) {
  constexpr double half_log_2pi = 0.5 * 1.8378770664093453;  // 0.5 log(2 pi)
  double lp = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double z = (u[j] - out.mean[j]) * std::exp(-out.log_std[j]);
    lp += -0.5 * z * z - out.log_std[j] - half_log_2pi;
    lp -= std::log(kActionScale[j]) + log_one_minus_tanh_sq(u[j]);
  }
  return lp;
}

struct PolicySample {
  Action action;
  double log_prob = 0.0;
  std::array<double, 2> u{};    // pre-squash value
  std::array<double, 2> eps{};  // standard normal draw, u = mu + sigma * eps
};

inline PolicySample sample_from_noise(const PolicyOutput& out, const std::array<double, 2>& eps) {
  PolicySample s;
  s.eps = eps;
  for (int j = 0; j < 2; ++j) s.u[j] = out.mean[j] + std::exp(out.log_std[j]) * eps[j];
  s.action = nudge_inside(squash(s.u[0], s.u[1]));
  s.log_prob = squashed_log_prob(out, s.u);
  return s;
}

inline PolicySample sample_action(const PolicyOutput& out, Rng& rng) {
  const double e0 = rng.normal();
  const double e1 = rng.normal();
  return sample_from_noise(out, {e0, e1});
}

/// Test-time action: the squashed mean, no randomness.
inline Action deterministic_action(const PolicyOutput& out) {
  return nudge_inside(squash(out.mean[0], out.mean[1]));
}

/// Gradient of  alpha * log_prob - q(action)  with respect to the four raw
/// outputs, for a reparameterized sample. dq_da is d q / d (v, omega).
inline std::array<double, 4> reparam_gradient(const PolicyOutput& out, const PolicySample& s, double alpha,
                                              const std::array<double, 2>& dq_da) {
  std::array<double, 4> g{};
  for (int j = 0; j < 2; ++j) {
    const double t = std::tanh(s.u[j]);
    const double da_du = kActionScale[j] * (1.0 - t * t);
    // d log_prob / d u through the squash correction; the Gaussian term is
    // constant in u for fixed eps once expressed through (mu, log_std).
    const double dl_du = alpha * 2.0 * t - dq_da[j] * da_du;
    g[j] = dl_du;
    const double sigma = std::exp(out.log_std[j]);
    g[2 + j] = out.log_std_clamped[j] ? 0.0 : (-alpha + dl_du * sigma * s.eps[j]);
  }
  return g;
}

}  // namespace vinenav
