#pragma once

// JSON forms of the configuration structs, world files and the layered run
// configuration (defaults < file < flags) with per-key provenance.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "vinenav/env.hpp"
#include "vinenav/eval.hpp"
#include "vinenav/presets.hpp"
#include "vinenav/sac.hpp"
#include "vinenav/world.hpp"

namespace vinenav {

using nlohmann::json;

NLOHMANN_JSON_SERIALIZE_ENUM(Direction, {{Direction::Forward, "F"}, {Direction::Reverse, "R"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Vec2, x, y)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Range, min, max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Interval, start, end)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PlantDims, trunk_radius, canopy_half_width, canopy_base, height)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RowConfig, straight_length, arc_length, curvature, concentric, gaps,
                                                random_gaps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(WorldConfig, rows, inter_row, inter_row_distances, plant_spacing,
                                                jitter, gap_width, plant, corridor_labels, exit_margin, bounds_margin)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Centerline, origin, heading, straight_length, arc_length, curvature)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PlantInstance, position, trunk_radius, canopy_half_width, canopy_base,
                                                height, jitter, row, arclength)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RowSpec, centerline, plant_spacing, gaps, plants)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RewardConfig, heading_weight, distance_weight, success_bonus,
                                                collision_penalty, reverse_penalty, yaw_limit)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(StartPoseDistribution, corridors, arclength_fraction, lateral, yaw,
                                                forward_probability)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EpisodeConfig, max_steps, reposition_period, start)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(CameraParams, width, height, horizontal_fov, vertical_fov,
                                                mount_forward, mount_up, max_range, render_ground)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NoiseSpec, uniform_amplitude, proportional_amplitude, factor)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PlatformSpec, name, length, width, mount_forward, mount_up)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TerrainConfig, yaw_rate_sigma, pitch_sigma, reversion_rate)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EnvConfig, reward, episode, camera, noise, platform, terrain, dt)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExplorationSchedule, initial, decay, minimum)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SACConfig, gamma, learning_rate, batch_size, replay_capacity, tau,
                                                auto_alpha, alpha, target_entropy, warmup_steps, episodes,
                                                updates_per_step, exploration, critic_loss_ceiling,
                                                divergence_patience, checkpoint_every)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalConfig, runs_per_row, start_lateral, start_yaw, median_samples,
                                                cache_resolution, fit_tolerance, noise_factors, sweep_runs, platforms,
                                                swap_runs, bench_trials, bench_warmup)

inline json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline void write_json(const json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// World files: every realized plant is listed, so a reload does not depend on
// the generator.

inline constexpr int kWorldFormatVersion = 1;

inline json world_to_json(const VineyardWorld& w) {
  return {{"format", "vinenav-world"},
          {"version", kWorldFormatVersion},
          {"seed", w.seed()},
          {"exit_margin", w.exit_margin()},
          {"bounds_margin", w.bounds_margin()},
          {"corridor_labels", w.corridor_labels()},
          {"inter_row_distances", w.inter_row_distances()},
          {"rows", w.rows()}};
}

inline VineyardWorld world_from_json(const json& j) {
  if (j.value("format", "") != "vinenav-world") throw std::runtime_error("not a world file");
  if (j.at("version").get<int>() != kWorldFormatVersion) throw std::runtime_error("unsupported world file version");
  return VineyardWorld(j.at("rows").get<std::vector<RowSpec>>(), j.at("inter_row_distances").get<std::vector<double>>(),
                       j.at("corridor_labels").get<std::vector<std::string>>(), j.at("seed").get<std::uint64_t>(),
                       j.at("exit_margin").get<double>(), j.at("bounds_margin").get<double>());
}

inline void save_world(const VineyardWorld& w, const std::string& path) { write_json(world_to_json(w), path); }
inline VineyardWorld load_world(const std::string& path) { return world_from_json(read_json(path)); }

/// Row count, per-corridor width range and gap list.
inline std::string world_summary(const VineyardWorld& w) {
  std::ostringstream os;
  os << w.rows().size() << " rows, " << w.corridor_count() << " corridors, " << w.plant_count() << " plants\n";
  os.setf(std::ios::fixed);
  os.precision(2);
  for (std::size_t c = 0; c < w.corridor_count(); ++c) {
    const auto& a = w.rows()[c].centerline;
    const auto& b = w.rows()[c + 1].centerline;
    const auto line = detail::sample_centerline(a, 0.05);
    double hi = 0.0;
    for (const Vec2& p : detail::sample_centerline(b, 0.05)) hi = std::max(hi, detail::point_polyline_distance(p, line));
    os << "corridor " << c + 1 << " (" << w.corridor_label(c) << "): width " << min_row_separation(a, b) << "-" << hi
       << " m, length " << w.corridor(c)->length() << " m\n";
  }
  for (std::size_t r = 0; r < w.rows().size(); ++r)
    for (const auto& g : w.rows()[r].gaps) os << "row " << r + 1 << " gap [" << g.start << ", " << g.end << "] m\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::uint64_t seed = 1;
  std::string world_preset = "train";
  std::optional<WorldConfig> world_config;  // replaces the preset when set
  std::string world_file;
  std::string checkpoint;
  EnvConfig env;
  SACConfig sac;
  EvalConfig eval;

  [[nodiscard]] WorldConfig resolved_world_config() const {
    return world_config ? *world_config : vinenav::world_preset(world_preset);
  }
};

inline void to_json(json& j, const RunConfig& c) {
  j = {{"seed", c.seed},
       {"world", {{"preset", c.world_preset}, {"file", c.world_file}}},
       {"checkpoint", c.checkpoint},
       {"env", c.env},
       {"sac", c.sac},
       {"eval", c.eval}};
  if (c.world_config) j["world"]["config"] = *c.world_config;
}

inline void from_json(const json& j, RunConfig& c) {
  const RunConfig d;
  c.seed = j.value("seed", d.seed);
  const json w = j.value("world", json::object());
  c.world_preset = w.value("preset", d.world_preset);
  c.world_file = w.value("file", d.world_file);
  c.world_config = w.contains("config") ? std::optional(w.at("config").get<WorldConfig>()) : std::nullopt;
  c.checkpoint = j.value("checkpoint", d.checkpoint);
  c.env = j.value("env", d.env);
  c.sac = j.value("sac", d.sac);
  c.eval = j.value("eval", d.eval);
}

/// Keys written next to the configuration in a snapshot; ignored on load.
inline constexpr const char* kSnapshotMetaKeys[] = {"provenance", "command"};

namespace detail {

/// Rejects keys that the defaults do not know (typos would otherwise be
/// silently ignored). The free-form world config is checked by its parser.
inline void check_known_keys(const json& reference, const json& patch, const std::string& path) {
  if (!patch.is_object()) return;
  for (const auto& [key, value] : patch.items()) {
    const std::string sub = path.empty() ? key : path + "." + key;
    if (sub == "world.config") continue;
    if (!reference.contains(key)) throw std::invalid_argument("unknown configuration key: " + sub);
    if (reference.at(key).is_object()) check_known_keys(reference.at(key), value, sub);
  }
}

inline void mark(json& prov, const json& patch, const std::string& path, const std::string& origin) {
  if (patch.is_object() && !(path == "world.config")) {
    for (const auto& [key, value] : patch.items()) mark(prov, value, path.empty() ? key : path + "." + key, origin);
  } else {
    prov[path] = origin;
  }
}

}  // namespace detail

struct ResolvedConfig {
  RunConfig config;
  json provenance;  // dotted key -> "default" | "file" | "flag"
};

/// defaults < file < flags. `file` and `flags` are partial JSON objects;
/// snapshot metadata keys in `file` are dropped.
inline ResolvedConfig resolve_config(json file, const json& flags) {
  const json defaults = RunConfig{};
  if (file.is_null()) file = json::object();
  if (!file.is_object() || !(flags.is_null() || flags.is_object()))
    throw std::invalid_argument("configuration must be a JSON object");
  for (const char* k : kSnapshotMetaKeys) file.erase(k);
  detail::check_known_keys(defaults, file, "");
  detail::check_known_keys(defaults, flags, "");
  json merged = defaults;
  merged.merge_patch(file);
  if (!flags.is_null()) merged.merge_patch(flags);
  ResolvedConfig r;
  try {
    r.config = merged.get<RunConfig>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("invalid configuration: ") + e.what());
  }
  r.config.sac.validate();
  detail::mark(r.provenance, defaults, "", "default");
  detail::mark(r.provenance, file, "", "file");
  if (!flags.is_null()) detail::mark(r.provenance, flags, "", "flag");
  return r;
}

inline json snapshot_json(const ResolvedConfig& r, const std::string& command) {
  json j = r.config;
  j["command"] = command;
  j["provenance"] = r.provenance;
  return j;
}

}  // namespace vinenav
