// vinenav: world generation, training, evaluation suites and benchmarking.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "vinenav/checkpoint.hpp"
#include "vinenav/config.hpp"
#include "vinenav/eval.hpp"
#include "vinenav/sac.hpp"

namespace fs = std::filesystem;
using namespace vinenav;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kDivergence = 3, kCheckpointMismatch = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Options every subcommand shares.
struct Common {
  std::string config_file;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config_file, "JSON configuration or a snapshot from an earlier run")
      ->check(CLI::ExistingFile);
  c.seed_opt = cmd->add_option("--seed", c.seed, "global seed");
  if (with_out) cmd->add_option("--out", c.out, "output directory");
  c.workers_opt = cmd->add_option("--workers", c.workers, "evaluation worker threads")->check(CLI::PositiveNumber);
}

/// Flags given on the command line form the top configuration layer.
struct FlagPatch {
  json j = json::object();

  template <typename T>
  void set(const CLI::Option* opt, const json::json_pointer& key, const T& value) {
    if (opt && opt->count() > 0) j[key] = value;
  }
};

ResolvedConfig resolve(const Common& c, FlagPatch& flags) {
  flags.set(c.seed_opt, json::json_pointer("/seed"), c.seed);
  try {
    return resolve_config(c.config_file.empty() ? json::object() : read_json(c.config_file), flags.j);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int worker_count(const Common& c) {
  if (c.workers_opt->count() > 0) return c.workers;
  if (const char* env = std::getenv("VINENAV_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw UsageError("VINENAV_WORKERS must be a positive integer");
  }
  return int(std::max(1u, std::thread::hardware_concurrency()));
}

fs::path output_dir(const Common& c, const std::string& command) {
  fs::path dir;
  if (!c.out.empty()) {
    dir = c.out;
  } else {
    const char* root = std::getenv("VINENAV_OUTPUT_ROOT");
    dir = fs::path(root && *root ? root : "runs") / command;
  }
  fs::create_directories(dir);
  return dir;
}

/// Resolved configuration (reloadable with --config) and key provenance.
void write_snapshot(const fs::path& dir, const ResolvedConfig& r, const std::string& command) {
  json j = r.config;
  j["command"] = command;
  write_json(j, (dir / "config.json").string());
  write_json(r.provenance, (dir / "provenance.json").string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::shared_ptr<const VineyardWorld> require_world(const RunConfig& cfg) {
  if (cfg.world_file.empty()) throw UsageError("a world file is required (--world or world.file)");
  return std::make_shared<const VineyardWorld>(load_world(cfg.world_file));
}

int image_size(const RunConfig& cfg) {
  if (cfg.env.camera.width != cfg.env.camera.height) throw UsageError("camera must be square");
  return cfg.env.camera.height;
}

SacAgent<float> make_agent(const RunConfig& cfg) {
  Rng init = make_stream(cfg.seed, "init");
  return SacAgent<float>(actor_arch(image_size(cfg)), critic_arch(image_size(cfg)), cfg.sac, init);
}

/// Agent with parameters from the configured checkpoint.
SacAgent<float> load_agent(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw UsageError("a checkpoint is required (--checkpoint)");
  SacAgent<float> agent = make_agent(cfg);
  agent.load(load_checkpoint(cfg.checkpoint, agent.hash()));
  return agent;
}

void write_trajectories(const fs::path& dir, const std::vector<RunResult>& runs) {
  fs::create_directories(dir);
  for (const auto& r : runs) {
    std::ofstream os(dir / trajectory_name(r.spec));
    write_csv(os, r.log);
  }
}

std::vector<std::size_t> straight_and_curved(const VineyardWorld& w) {
  return {corridor_with_label(w, "straight"), corridor_with_label(w, "curved")};
}

std::string factor_name(double f) {
  std::ostringstream os;
  os << f;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_gen_world(const Common& c, FlagPatch& flags, const std::string& output) {
  const ResolvedConfig r = resolve(c, flags);
  const RunConfig& cfg = r.config;
  const VineyardWorld world = generate_world(cfg.resolved_world_config(), cfg.seed);
  const fs::path path(output);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_world(world, path.string());
  json snap = cfg;
  snap["command"] = "gen-world";
  write_json(snap, path.string() + ".config.json");
  write_json(r.provenance, path.string() + ".provenance.json");
  std::cout << world_summary(world);
  return kOk;
}

int cmd_train(const Common& c, FlagPatch& flags) {
  const ResolvedConfig r = resolve(c, flags);
  const RunConfig& cfg = r.config;
  const auto world = require_world(cfg);
  const fs::path dir = output_dir(c, "train");
  write_snapshot(dir, r, "train");
  fs::create_directories(dir / "checkpoints");

  SacAgent<float> agent = make_agent(cfg);
  VineyardEnv env(world, cfg.env, derive_seed(cfg.seed, "env"));
  ReplayBuffer replay(cfg.sac.replay_capacity, std::size_t(image_size(cfg)) * std::size_t(image_size(cfg)), 3);
  std::ofstream log(dir / "train.jsonl");
  TrainHooks hooks;
  hooks.log = &log;
  hooks.checkpoint = [&](int episode, const Checkpoint& ck) {
    std::ostringstream name;
    name << "ep" << std::setw(5) << std::setfill('0') << episode << ".ckpt";
    save_checkpoint(ck, (dir / "checkpoints" / name.str()).string());
    save_checkpoint(ck, (dir / "final.ckpt").string());
  };
  hooks.on_episode = [&](const EpisodeRecord& rec) {
    if ((rec.episode + 1) % 10 == 0 || rec.episode + 1 == cfg.sac.episodes)
      std::cerr << "episode " << rec.episode + 1 << "/" << cfg.sac.episodes << " return " << rec.episode_return
                << " " << to_string(rec.outcome) << " alpha " << rec.alpha << '\n';
  };
  const json meta = {{"seed", cfg.seed}, {"world", cfg.world_file}};
  const TrainResult res = train(agent, env, replay, cfg.seed, hooks, meta.dump());
  std::cout << "trained " << res.episodes.size() << " episodes, " << res.env_steps << " steps, " << res.updates
            << " updates -> " << (dir / "final.ckpt").string() << '\n';
  return kOk;
}

int cmd_eval(const Common& c, FlagPatch& flags) {
  const ResolvedConfig r = resolve(c, flags);
  const RunConfig& cfg = r.config;
  const auto world = require_world(cfg);
  const SacAgent<float> agent = load_agent(cfg);
  const fs::path dir = output_dir(c, "eval");
  write_snapshot(dir, r, "eval");
  const EvalReport rep = evaluate_suite(actor_policy(agent), world, cfg.env, cfg.eval, cfg.seed, worker_count(c));
  const std::string table = format_table(rep);
  write_text(dir / "table.txt", table);
  write_json(to_json(rep), (dir / "report.json").string());
  write_trajectories(dir / "trajectories", rep.runs);
  std::cout << table;
  return kOk;
}

int cmd_sweep_noise(const Common& c, FlagPatch& flags) {
  const ResolvedConfig r = resolve(c, flags);
  const RunConfig& cfg = r.config;
  const auto world = require_world(cfg);
  const SacAgent<float> agent = load_agent(cfg);
  const fs::path dir = output_dir(c, "sweep-noise");
  write_snapshot(dir, r, "sweep-noise");
  const SweepReport rep = noise_sweep(actor_policy(agent), world, cfg.env, cfg.eval, cfg.eval.noise_factors,
                                      straight_and_curved(*world), cfg.seed, worker_count(c));
  const std::string table = format_table(rep);
  write_text(dir / "table.txt", table);
  write_json(to_json(rep), (dir / "report.json").string());
  for (std::size_t i = 0; i < rep.runs.size(); ++i)
    write_trajectories(dir / "trajectories" / ("factor_" + factor_name(cfg.eval.noise_factors[i])), rep.runs[i]);
  std::cout << table;
  return kOk;
}

int cmd_swap_platform(const Common& c, FlagPatch& flags) {
  const ResolvedConfig r = resolve(c, flags);
  const RunConfig& cfg = r.config;
  const auto world = require_world(cfg);
  const SacAgent<float> agent = load_agent(cfg);
  std::vector<PlatformSpec> platforms;
  for (const auto& name : cfg.eval.platforms) {
    try {
      platforms.push_back(platform_preset(name));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const fs::path dir = output_dir(c, "swap-platform");
  write_snapshot(dir, r, "swap-platform");
  const SwapReport rep = platform_swap_eval(actor_policy(agent), world, cfg.env, cfg.eval, platforms,
                                            straight_and_curved(*world), cfg.seed, worker_count(c));
  const std::string table = format_table(rep);
  write_text(dir / "table.txt", table);
  write_json(to_json(rep), (dir / "report.json").string());
  for (std::size_t i = 0; i < rep.runs.size(); ++i)
    write_trajectories(dir / "trajectories" / platforms[i].name, rep.runs[i]);
  std::cout << table;
  return kOk;
}

/// Timings are measurements, so only the configuration part of the output
/// reproduces exactly.
int cmd_bench(const Common& c, FlagPatch& flags) {
  const ResolvedConfig r = resolve(c, flags);
  const RunConfig& cfg = r.config;
  const SacAgent<float> agent = cfg.checkpoint.empty() ? make_agent(cfg) : load_agent(cfg);
  const fs::path dir = output_dir(c, "bench");
  write_snapshot(dir, r, "bench");
  const LatencyStats st = benchmark_inference(agent.actor(), cfg.eval.bench_trials, cfg.eval.bench_warmup, cfg.seed);
  const std::string table = format_table(st);
  write_text(dir / "table.txt", table);
  write_json(to_json(st), (dir / "report.json").string());
  std::cout << table;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vineyard-row navigation: simulator, SAC trainer and evaluator"};
  app.require_subcommand(1);
  FlagPatch flags;
  using ptr = json::json_pointer;

  Common gen_c;
  std::string preset, world_config_file, gen_output;
  auto* gen = app.add_subcommand("gen-world", "generate a world file");
  add_common(gen, gen_c, false);
  auto* preset_opt = gen->add_option("--preset", preset, "world preset")->check(CLI::IsMember({"train", "test"}));
  auto* wcfg_opt = gen->add_option("--world-config", world_config_file, "JSON world configuration")
                       ->check(CLI::ExistingFile)
                       ->excludes(preset_opt);
  gen->add_option("-o,--output", gen_output, "world file to write")->required();

  Common train_c;
  std::string train_world;
  int episodes = 0, checkpoint_every = 0;
  auto* trn = app.add_subcommand("train", "train the agent");
  add_common(trn, train_c);
  auto* train_world_opt = trn->add_option("--world", train_world, "world file")->check(CLI::ExistingFile);
  auto* episodes_opt = trn->add_option("--episodes", episodes, "training episodes")->check(CLI::NonNegativeNumber);
  auto* every_opt = trn->add_option("--checkpoint-every", checkpoint_every, "episodes between checkpoints");

  // eval-type subcommands share --world and --checkpoint.
  struct EvalArgs {
    Common c;
    std::string world, checkpoint;
    CLI::Option *world_opt = nullptr, *ckpt_opt = nullptr;
  };
  auto add_eval_args = [](CLI::App* cmd, EvalArgs& a) {
    add_common(cmd, a.c);
    a.world_opt = cmd->add_option("--world", a.world, "world file")->check(CLI::ExistingFile);
    a.ckpt_opt = cmd->add_option("--checkpoint", a.checkpoint, "checkpoint file")->check(CLI::ExistingFile);
  };

  EvalArgs eval_a;
  int runs_per_row = 0;
  auto* evl = app.add_subcommand("eval", "per-row evaluation suite");
  add_eval_args(evl, eval_a);
  auto* rpr_opt = evl->add_option("--runs-per-row", runs_per_row, "runs per corridor, half F and half R");

  EvalArgs sweep_a;
  std::vector<double> factors;
  int sweep_runs = 0;
  auto* swp = app.add_subcommand("sweep-noise", "noise-factor sweep on a straight and a curved corridor");
  add_eval_args(swp, sweep_a);
  auto* factors_opt = swp->add_option("--factors", factors, "noise factors")->delimiter(',');
  auto* sweep_runs_opt = swp->add_option("--runs", sweep_runs, "runs per corridor and factor");

  EvalArgs swap_a;
  std::vector<std::string> platform_names;
  int swap_runs = 0;
  auto* swa = app.add_subcommand("swap-platform", "evaluate the same policy on other platforms");
  add_eval_args(swa, swap_a);
  auto* platforms_opt = swa->add_option("--platforms", platform_names, "platform presets")->delimiter(',');
  auto* swap_runs_opt = swa->add_option("--runs", swap_runs, "runs per corridor and platform");

  EvalArgs bench_a;
  int trials = 0, warmup = 0;
  auto* bch = app.add_subcommand("bench", "actor inference latency");
  add_common(bch, bench_a.c);
  bench_a.ckpt_opt = bch->add_option("--checkpoint", bench_a.checkpoint, "checkpoint file")->check(CLI::ExistingFile);
  auto* trials_opt = bch->add_option("--trials", trials, "timed trials")->check(CLI::PositiveNumber);
  auto* warmup_opt = bch->add_option("--warmup", warmup, "untimed warmup calls")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) {
      flags.set(preset_opt, ptr("/world/preset"), preset);
      if (wcfg_opt->count() > 0) flags.j["world"]["config"] = read_json(world_config_file);
      return cmd_gen_world(gen_c, flags, gen_output);
    }
    if (trn->parsed()) {
      flags.set(train_world_opt, ptr("/world/file"), train_world);
      flags.set(episodes_opt, ptr("/sac/episodes"), episodes);
      flags.set(every_opt, ptr("/sac/checkpoint_every"), checkpoint_every);
      return cmd_train(train_c, flags);
    }
    auto eval_flags = [&](const EvalArgs& a) {
      flags.set(a.world_opt, ptr("/world/file"), a.world);
      flags.set(a.ckpt_opt, ptr("/checkpoint"), a.checkpoint);
    };
    if (evl->parsed()) {
      eval_flags(eval_a);
      flags.set(rpr_opt, ptr("/eval/runs_per_row"), runs_per_row);
      return cmd_eval(eval_a.c, flags);
    }
    if (swp->parsed()) {
      eval_flags(sweep_a);
      flags.set(factors_opt, ptr("/eval/noise_factors"), factors);
      flags.set(sweep_runs_opt, ptr("/eval/sweep_runs"), sweep_runs);
      return cmd_sweep_noise(sweep_a.c, flags);
    }
    if (swa->parsed()) {
      eval_flags(swap_a);
      flags.set(platforms_opt, ptr("/eval/platforms"), platform_names);
      flags.set(swap_runs_opt, ptr("/eval/swap_runs"), swap_runs);
      return cmd_swap_platform(swap_a.c, flags);
    }
    if (bch->parsed()) {
      flags.set(bench_a.ckpt_opt, ptr("/checkpoint"), bench_a.checkpoint);
      flags.set(trials_opt, ptr("/eval/bench_trials"), trials);
      flags.set(warmup_opt, ptr("/eval/bench_warmup"), warmup);
      return cmd_bench(bench_a.c, flags);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const CheckpointMismatch& e) {
    std::cerr << "checkpoint mismatch: " << e.what() << '\n';
    return kCheckpointMismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
