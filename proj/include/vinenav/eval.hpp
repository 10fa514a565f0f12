#pragma once

// Test-time protocol: ground-truth median fit, cross-track metrics, the
// per-row suite, noise sweep, platform swap and actor latency.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vinenav/env.hpp"
#include "vinenav/sac.hpp"

namespace vinenav {

/// Least-squares polynomial y = sum c_k x^k. Columns of the Vandermonde
/// matrix are scaled to unit norm before a column-pivoted QR.
inline std::vector<double> fit_polynomial(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  if (degree < 0) throw std::invalid_argument("degree must be >= 0");
  if (x.size() != y.size()) throw std::invalid_argument("abscissae and ordinates differ in length");
  const int n = int(x.size()), m = degree + 1;
  if (n < m) throw std::invalid_argument("need at least degree + 1 points");
  Eigen::MatrixXd A(n, m);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int k = 0; k < m; ++k, p *= x[std::size_t(i)]) A(i, k) = p;
    b(i) = y[std::size_t(i)];
  }
  Eigen::VectorXd scale(m);
  for (int k = 0; k < m; ++k) {
    scale(k) = A.col(k).norm();
    if (scale(k) == 0.0) throw std::invalid_argument("rank-deficient abscissae");
    A.col(k) /= scale(k);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-12);
  if (qr.rank() < m) throw std::invalid_argument("rank-deficient abscissae");
  const Eigen::VectorXd c = qr.solve(b);
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) out[std::size_t(k)] = c(k) / scale(k);
  return out;
}

inline double polyval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

inline double polyder(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) v = v * x + double(k) * c[k];
  return v;
}

/// Quintic median line in the row-aligned frame: origin at the first median
/// point, abscissa along the chord to the last one.
class GroundTruthLine {
 public:
  static constexpr int kDegree = 5;

  GroundTruthLine(const std::vector<Vec2>& median, double resolution = 0.01) {
    if (median.size() < std::size_t(kDegree + 1)) throw std::invalid_argument("ground-truth fit needs >= 6 points");
    if (!(resolution > 0.0)) throw std::invalid_argument("cache resolution must be positive");
    origin_ = median.front();
    const Vec2 chord = median.back() - median.front();
    if (chord.norm() == 0.0) throw std::invalid_argument("median chord has zero length");
    heading_ = heading_of(chord);
    std::vector<double> xs, ys;
    for (const Vec2& p : median) {
      const Vec2 q = to_row(p);
      if (!xs.empty() && !(q.x > xs.back()))
        throw std::invalid_argument("median is not a function of the chord abscissa");
      xs.push_back(q.x);
      ys.push_back(q.y);
    }
    coeffs_ = fit_polynomial(xs, ys, kDegree);
    double sq = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) sq += std::pow(polyval(coeffs_, xs[i]) - ys[i], 2);
    residual_rms_ = std::sqrt(sq / double(xs.size()));
    x_min_ = xs.front();
    x_max_ = xs.back();
    // Step so that consecutive cache samples are at most `resolution` apart.
    for (double x = x_min_;;) {
      cache_.push_back(to_world({x, polyval(coeffs_, x)}));
      if (x >= x_max_) break;
      const double slope = polyder(coeffs_, x);
      x = std::min(x_max_, x + 0.999 * resolution / std::sqrt(1.0 + slope * slope));
    }
  }

  [[nodiscard]] const std::vector<double>& coefficients() const { return coeffs_; }
  [[nodiscard]] double residual_rms() const { return residual_rms_; }
  [[nodiscard]] const std::vector<Vec2>& cache() const { return cache_; }
  [[nodiscard]] Vec2 origin() const { return origin_; }
  [[nodiscard]] double heading() const { return heading_; }
  [[nodiscard]] double x_min() const { return x_min_; }
  [[nodiscard]] double x_max() const { return x_max_; }

  [[nodiscard]] Vec2 to_row(Vec2 p) const {
    const Vec2 d = p - origin_;
    const Vec2 ax = unit(heading_);
    return {d.dot(ax), d.dot(ax.left())};
  }
  [[nodiscard]] Vec2 to_world(Vec2 q) const {
    const Vec2 ax = unit(heading_);
    return origin_ + q.x * ax + q.y * ax.left();
  }
  /// True when p projects onto the fitted span of the abscissa.
  [[nodiscard]] bool spans(Vec2 p) const {
    const double x = to_row(p).x;
    return x >= x_min_ && x <= x_max_;
  }

  /// Distance to the cache polyline: nearest sample, then its two segments.
  [[nodiscard]] double distance_to(Vec2 p) const {
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cache_.size(); ++i) {
      const double sq = (p - cache_[i]).squared_norm();
      if (sq < best_sq) best_sq = sq, best = i;
    }
    double d = std::sqrt(best_sq);
    if (best > 0) d = std::min(d, point_segment_distance(p, cache_[best - 1], cache_[best]));
    if (best + 1 < cache_.size()) d = std::min(d, point_segment_distance(p, cache_[best], cache_[best + 1]));
    return d;
  }

 private:
  Vec2 origin_;
  double heading_ = 0.0;
  std::vector<double> coeffs_;
  double residual_rms_ = 0.0;
  double x_min_ = 0.0, x_max_ = 0.0;
  std::vector<Vec2> cache_;
};

inline GroundTruthLine fit_ground_truth(const std::vector<Vec2>& median, double resolution = 0.01) {
  return GroundTruthLine(median, resolution);
}

/// Running sums so that pooled metrics are exact reductions of per-run ones.
struct ErrorSums {
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  std::size_t count = 0;

  void add(double e) {
    abs_sum += std::abs(e);
    sq_sum += e * e;
    ++count;
  }
  void add(const ErrorSums& o) {
    abs_sum += o.abs_sum;
    sq_sum += o.sq_sum;
    count += o.count;
  }
  [[nodiscard]] double mae() const { return count ? abs_sum / double(count) : std::nan(""); }
  [[nodiscard]] double rmse() const { return count ? std::sqrt(sq_sum / double(count)) : std::nan(""); }
};

struct CrossTrack {
  double mae = 0.0;
  double rmse = 0.0;
};

inline ErrorSums cross_track_sums(const std::vector<Vec2>& trajectory, const GroundTruthLine& gt) {
  ErrorSums s;
  for (const Vec2& p : trajectory) s.add(gt.distance_to(p));
  return s;
}

inline CrossTrack cross_track_errors(const std::vector<Vec2>& trajectory, const GroundTruthLine& gt) {
  if (trajectory.empty()) throw std::invalid_argument("trajectory is empty");
  const ErrorSums s = cross_track_sums(trajectory, gt);
  return {s.mae(), s.rmse()};
}

/// Logged positions that lie over the fitted span (entry and exit run-outs
/// beyond the row ends are not scored).
inline std::vector<Vec2> scored_positions(const EpisodeLog& log, const GroundTruthLine& gt) {
  std::vector<Vec2> out;
  for (const auto& r : log.records)
    if (gt.spans({r.x, r.y})) out.push_back({r.x, r.y});
  return out;
}

/// Mean and population standard deviation accumulated by Welford's update.
struct MeanStd {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / double(n);
    m2 += d * (x - mean);
  }
  [[nodiscard]] double stddev() const { return n ? std::sqrt(m2 / double(n)) : std::nan(""); }
  [[nodiscard]] double value() const { return n ? mean : std::nan(""); }
};

// ---------------------------------------------------------------------------
// Rollouts

using Policy = std::function<Action(const Observation&)>;

/// Policy from a trained actor: mean action at test time, a sample otherwise.
/// The stochastic variant draws from `rng`, which must outlive the policy.
template <typename Scalar>
Policy actor_policy(const SacAgent<Scalar>& agent, bool deterministic = true, Rng* rng = nullptr) {
  if (!deterministic && !rng) throw std::invalid_argument("stochastic policy needs an rng");
  return [&agent, deterministic, rng](const Observation& obs) {
    const PolicyOutput out = agent.policy(agent_input(obs));
    return deterministic ? deterministic_action(out) : sample_action(out, *rng).action;
  };
}

inline EpisodeLog run_episode(const Policy& policy, VineyardEnv& env, const StartPose& start) {
  Observation obs = env.reset_to(start);
  while (env.running()) obs = env.step(policy(obs)).observation;
  return env.log();
}

template <typename Scalar>
EpisodeLog run_episode(const SacAgent<Scalar>& agent, VineyardEnv& env, const StartPose& start,
                       bool deterministic, Rng& rng) {
  return run_episode(actor_policy(agent, deterministic, &rng), env, start);
}

/// Runs fn(0..n-1) on `workers` threads; results keep index order.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, int workers, Fn&& fn) {
  std::vector<T> out(n);
  const std::size_t threads = std::min<std::size_t>(n, std::size_t(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

struct EvalConfig {
  int runs_per_row = 10;  // split evenly between F and R
  double start_lateral = 0.1;
  double start_yaw = deg_to_rad(5.0);
  std::size_t median_samples = 201;
  double cache_resolution = 0.01;
  double fit_tolerance = 0.05;
  std::vector<double> noise_factors{2, 4, 6, 8, 10};
  int sweep_runs = 10;
  std::vector<std::string> platforms{"jackal", "husky"};
  int swap_runs = 10;
  int bench_trials = 100;
  int bench_warmup = 10;
};

inline GroundTruthLine corridor_ground_truth(const VineyardWorld& world, std::size_t corridor, const EvalConfig& cfg) {
  GroundTruthLine gt(median_points(world, corridor, cfg.median_samples), cfg.cache_resolution);
  if (gt.residual_rms() > cfg.fit_tolerance)
    throw std::runtime_error("ground-truth fit residual " + std::to_string(gt.residual_rms()) + " m on corridor " +
                             std::to_string(corridor) + " exceeds the tolerance");
  return gt;
}

/// Entry pose with a small random lateral and heading offset.
inline StartPose eval_start(const VineyardWorld& world, std::size_t corridor, Direction dir, const EvalConfig& cfg,
                            Rng& rng) {
  StartPose s = entry_pose(world, corridor, dir);
  const double lateral = rng.uniform(-cfg.start_lateral, cfg.start_lateral);
  const Vec2 p = s.pose.position() + lateral * unit(s.pose.yaw).left();
  s.pose = {p.x, p.y, wrap_angle(s.pose.yaw + rng.uniform(-cfg.start_yaw, cfg.start_yaw))};
  return s;
}

struct RunSpec {
  std::size_t corridor = 0;
  Direction direction = Direction::Forward;
  int run = 0;
  std::uint64_t key = 0;  // selects the start and environment streams
};

struct RunResult {
  RunSpec spec;
  StartPose start;
  EpisodeLog log;
  ErrorSums errors;

  [[nodiscard]] bool success() const { return log.outcome() == Outcome::Success; }
};

/// Executes the runs in parallel; every run owns its environment and streams.
inline std::vector<RunResult> execute_runs(const Policy& policy, std::shared_ptr<const VineyardWorld> world,
                                           const EnvConfig& env_cfg, const EvalConfig& cfg,
                                           const std::vector<RunSpec>& specs, std::uint64_t seed,
                                           std::string_view stream, int workers) {
  std::vector<std::optional<GroundTruthLine>> gts(world->corridor_count());
  for (const auto& s : specs)
    if (!gts.at(s.corridor)) gts[s.corridor] = corridor_ground_truth(*world, s.corridor, cfg);
  const std::string start_stream = std::string(stream) + "/start";
  const std::string env_stream = std::string(stream) + "/env";
  return parallel_map<RunResult>(specs.size(), workers, [&](std::size_t i) {
    RunResult r;
    r.spec = specs[i];
    Rng start_rng = make_stream(seed, start_stream, r.spec.key);
    r.start = eval_start(*world, r.spec.corridor, r.spec.direction, cfg, start_rng);
    VineyardEnv env(world, env_cfg, derive_seed(seed, env_stream, r.spec.key));
    r.log = run_episode(policy, env, r.start);
    r.errors = cross_track_sums(scored_positions(r.log, *gts[r.spec.corridor]), *gts[r.spec.corridor]);
    return r;
  });
}

struct ActionStats {
  MeanStd v, omega;

  void add(const EpisodeLog& log) {
    for (std::size_t i = 1; i < log.records.size(); ++i) {
      v.add(log.records[i].v);
      omega.add(log.records[i].omega);
    }
  }
};

struct ReportRow {
  std::string label;  // corridor label, or "overall"
  std::size_t corridor = 0;
  std::optional<Direction> direction;
  int runs = 0;
  int successes = 0;
  ErrorSums errors;
  ActionStats actions;

  [[nodiscard]] double mae() const { return errors.mae(); }
  [[nodiscard]] double rmse() const { return errors.rmse(); }
};

inline ReportRow summarize(std::string label, std::size_t corridor, std::optional<Direction> dir,
                           const std::vector<const RunResult*>& runs) {
  ReportRow row{std::move(label), corridor, dir, 0, 0, {}, {}};
  for (const RunResult* r : runs) {
    ++row.runs;
    row.successes += r->success();
    row.errors.add(r->errors);
    row.actions.add(r->log);
  }
  return row;
}

struct EvalReport {
  std::vector<ReportRow> rows;  // (corridor, direction) rows then "overall"
  std::vector<RunResult> runs;  // ordered by (corridor, direction, run)
};

/// Table I protocol: runs_per_row episodes per corridor, half forward and half
/// reverse, all scored against the corridor's ground-truth line.
inline EvalReport evaluate_suite(const Policy& policy, std::shared_ptr<const VineyardWorld> world,
                                 const EnvConfig& env_cfg, const EvalConfig& cfg, std::uint64_t seed,
                                 int workers = 1) {
  if (cfg.runs_per_row < 2) throw std::invalid_argument("runs_per_row must be >= 2");
  std::vector<RunSpec> specs;
  const int per_dir[2] = {(cfg.runs_per_row + 1) / 2, cfg.runs_per_row / 2};
  for (std::size_t c = 0; c < world->corridor_count(); ++c)
    for (int d = 0; d < 2; ++d)
      for (int k = 0; k < per_dir[d]; ++k)
        specs.push_back({c, d ? Direction::Reverse : Direction::Forward, k, std::uint64_t(specs.size())});
  EvalReport rep;
  rep.runs = execute_runs(policy, world, env_cfg, cfg, specs, seed, "eval", workers);
  std::vector<const RunResult*> all;
  for (std::size_t c = 0; c < world->corridor_count(); ++c)
    for (Direction d : {Direction::Forward, Direction::Reverse}) {
      std::vector<const RunResult*> sel;
      for (const auto& r : rep.runs)
        if (r.spec.corridor == c && r.spec.direction == d) sel.push_back(&r);
      rep.rows.push_back(summarize(world->corridor_label(c), c, d, sel));
      all.insert(all.end(), sel.begin(), sel.end());
    }
  rep.rows.push_back(summarize("overall", 0, std::nullopt, all));
  return rep;
}

/// First corridor carrying the label; throws when absent.
inline std::size_t corridor_with_label(const VineyardWorld& world, std::string_view label) {
  for (std::size_t c = 0; c < world.corridor_count(); ++c)
    if (world.corridor_label(c) == label) return c;
  throw std::invalid_argument("world has no corridor labeled " + std::string(label));
}

/// `runs` episodes on each corridor, alternating forward and reverse.
inline std::vector<RunSpec> paired_specs(const std::vector<std::size_t>& corridors, int runs) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  std::vector<RunSpec> specs;
  for (std::size_t c : corridors)
    for (int k = 0; k < runs; ++k)
      specs.push_back({c, k % 2 ? Direction::Reverse : Direction::Forward, k, std::uint64_t(specs.size())});
  return specs;
}

struct SweepRow {
  double factor = 0.0;
  ReportRow row;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // factor-major, then corridor
  std::vector<std::vector<RunResult>> runs;  // per factor
};

/// Same start poses and streams for every factor, so factors are paired.
inline SweepReport noise_sweep(const Policy& policy, std::shared_ptr<const VineyardWorld> world,
                               const EnvConfig& env_cfg, const EvalConfig& cfg, const std::vector<double>& factors,
                               const std::vector<std::size_t>& corridors, std::uint64_t seed, int workers = 1) {
  if (factors.empty()) throw std::invalid_argument("noise sweep needs at least one factor");
  const auto specs = paired_specs(corridors, cfg.sweep_runs);
  SweepReport rep;
  for (double f : factors) {
    if (!(f >= 0.0)) throw std::invalid_argument("noise factors must be >= 0");
    EnvConfig e = env_cfg;
    e.noise.factor = f;
    rep.runs.push_back(execute_runs(policy, world, e, cfg, specs, seed, "sweep", workers));
    for (std::size_t c : corridors) {
      std::vector<const RunResult*> sel;
      for (const auto& r : rep.runs.back())
        if (r.spec.corridor == c) sel.push_back(&r);
      rep.rows.push_back({f, summarize(world->corridor_label(c), c, std::nullopt, sel)});
    }
  }
  return rep;
}

struct SwapRow {
  std::string platform;
  ReportRow row;
  MeanStd traversal_time;  // s, successful runs only
};

struct SwapReport {
  std::vector<SwapRow> rows;
  std::vector<std::vector<RunResult>> runs;  // per platform
};

inline SwapReport platform_swap_eval(const Policy& policy, std::shared_ptr<const VineyardWorld> world,
                                     const EnvConfig& env_cfg, const EvalConfig& cfg,
                                     const std::vector<PlatformSpec>& platforms,
                                     const std::vector<std::size_t>& corridors, std::uint64_t seed, int workers = 1) {
  const auto specs = paired_specs(corridors, cfg.swap_runs);
  SwapReport rep;
  for (const auto& p : platforms) {
    if (!(p.length > 0.0 && p.width > 0.0)) throw std::invalid_argument("platform footprint must be positive");
    EnvConfig e = env_cfg;
    e.platform = p;
    rep.runs.push_back(execute_runs(policy, world, e, cfg, specs, seed, "swap", workers));
    for (std::size_t c : corridors) {
      std::vector<const RunResult*> sel;
      SwapRow row{p.name, {}, {}};
      for (const auto& r : rep.runs.back())
        if (r.spec.corridor == c) {
          sel.push_back(&r);
          if (r.success()) row.traversal_time.add(r.log.steps() * env_cfg.dt);
        }
      row.row = summarize(world->corridor_label(c), c, std::nullopt, sel);
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

struct LatencyStats {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  int trials = 0;
  std::vector<double> samples_ms;
};

/// Wall time of single actor forward passes on fresh random inputs; the
/// warmup calls are not recorded.
template <typename Scalar>
LatencyStats benchmark_inference(const Network<Scalar>& actor, int trials = 100, int warmup = 10,
                                 std::uint64_t seed = 0) {
  if (trials < 1 || warmup < 0) throw std::invalid_argument("trials must be >= 1 and warmup >= 0");
  Rng rng = make_stream(seed, "bench");
  std::vector<Scalar> image(actor.image_size()), extra(std::size_t(actor.arch().extra));
  auto refill = [&] {
    for (auto& px : image) px = Scalar(rng.uniform(0.0, kMaxDepth));
    for (auto& s : extra) s = Scalar(rng.uniform(-1.0, 1.0));
  };
  volatile Scalar sink = 0;
  for (int i = 0; i < warmup; ++i) {
    refill();
    sink = actor.forward(image, extra)(0);
  }
  LatencyStats st;
  st.trials = trials;
  MeanStd acc;
  for (int i = 0; i < trials; ++i) {
    refill();
    const auto t0 = std::chrono::steady_clock::now();
    sink = actor.forward(image, extra)(0);
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    st.samples_ms.push_back(ms);
    acc.add(ms);
  }
  (void)sink;
  st.mean_ms = acc.value();
  st.std_ms = acc.stddev();
  return st;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string pm(const MeanStd& m, int digits) { return fixed(m.value(), digits) + " +- " + fixed(m.stddev(), digits); }

/// Left-aligned first column, right-aligned others, widths from content.
inline std::string render_table(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells)
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (width.size() <= j) width.push_back(0);
      width[j] = std::max(width[j], row[j].size());
    }
  std::ostringstream os;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < cells[i].size(); ++j) {
      if (j) os << "  ";
      os << (j == 0 ? std::left : std::right) << std::setw(int(width[j])) << cells[i][j];
    }
    os << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return os.str();
}

inline nlohmann::json number(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

inline nlohmann::json row_json(const ReportRow& r) {
  nlohmann::json j = {{"label", r.label},
                      {"runs", r.runs},
                      {"successes", r.successes},
                      {"mae", number(r.mae())},
                      {"rmse", number(r.rmse())},
                      {"scored_points", r.errors.count},
                      {"v_mean", number(r.actions.v.value())},
                      {"v_std", number(r.actions.v.stddev())},
                      {"omega_mean", number(r.actions.omega.value())},
                      {"omega_std", number(r.actions.omega.stddev())}};
  if (r.direction) {
    j["corridor"] = r.corridor + 1;
    j["direction"] = std::string(1, to_char(*r.direction));
  }
  return j;
}

}  // namespace detail

inline std::string format_table(const EvalReport& rep) {
  std::vector<std::vector<std::string>> cells{
      {"Row", "Shape", "Dir", "MAE [m]", "RMSE [m]", "v [m/s]", "w [rad/s]", "Success"}};
  for (const auto& r : rep.rows)
    cells.push_back({r.direction ? std::to_string(r.corridor + 1) : "Overall", r.direction ? r.label : "",
                     r.direction ? std::string(1, to_char(*r.direction)) : "", detail::fixed(r.mae(), 3),
                     detail::fixed(r.rmse(), 3), detail::pm(r.actions.v, 3), detail::pm(r.actions.omega, 3),
                     std::to_string(r.successes) + "/" + std::to_string(r.runs)});
  return detail::render_table(cells);
}

inline std::string format_table(const SweepReport& rep) {
  std::vector<std::vector<std::string>> cells{{"Factor", "Row", "Success", "v [m/s]", "w [rad/s]"}};
  for (const auto& s : rep.rows)
    cells.push_back({detail::fixed(s.factor, 1), s.row.label,
                     std::to_string(s.row.successes) + "/" + std::to_string(s.row.runs),
                     detail::pm(s.row.actions.v, 3), detail::pm(s.row.actions.omega, 3)});
  return detail::render_table(cells);
}

inline std::string format_table(const SwapReport& rep) {
  std::vector<std::vector<std::string>> cells{{"Platform", "Row", "Success", "T_avg [s]", "MAE [m]", "RMSE [m]"}};
  for (const auto& s : rep.rows)
    cells.push_back({s.platform, s.row.label, std::to_string(s.row.successes) + "/" + std::to_string(s.row.runs),
                     detail::fixed(s.traversal_time.value(), 1), detail::fixed(s.row.mae(), 3),
                     detail::fixed(s.row.rmse(), 3)});
  return detail::render_table(cells);
}

inline std::string format_table(const LatencyStats& st, const std::string& platform = "cpu, 1 thread") {
  return detail::render_table({{"Platform", "Inference time [ms]"},
                               {platform, detail::fixed(st.mean_ms, 2) + " +- " + detail::fixed(st.std_ms, 2)}});
}

inline nlohmann::json to_json(const EvalReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) rows.push_back(detail::row_json(r));
  return {{"rows", rows}};
}

inline nlohmann::json to_json(const SweepReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : rep.rows) {
    auto j = detail::row_json(s.row);
    j["factor"] = s.factor;
    rows.push_back(j);
  }
  return {{"rows", rows}};
}

inline nlohmann::json to_json(const SwapReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : rep.rows) {
    auto j = detail::row_json(s.row);
    j["platform"] = s.platform;
    j["t_avg"] = detail::number(s.traversal_time.value());
    rows.push_back(j);
  }
  return {{"rows", rows}};
}

inline nlohmann::json to_json(const LatencyStats& st) {
  return {{"trials", st.trials}, {"mean_ms", st.mean_ms}, {"std_ms", st.std_ms}, {"samples_ms", st.samples_ms}};
}

inline std::string trajectory_name(const RunSpec& s) {
  std::ostringstream os;
  os << "row" << s.corridor + 1 << '_' << to_char(s.direction) << '_' << std::setw(2) << std::setfill('0') << s.run
     << ".csv";
  return os.str();
}

}  // namespace vinenav
