#pragma once

#include <string_view>

#include "vinenav/world.hpp"

namespace vinenav {

/// Six straight 20 m rows without gaps; inter-row distances drawn per seed.
inline WorldConfig train_world_config() {
  WorldConfig cfg;
  cfg.rows.assign(6, RowConfig{20.0, 0.0, 0.0, false, {}, 0});
  cfg.corridor_labels.assign(5, "straight");
  return cfg;
}

/// Five labeled corridors: straight, straight, hybrid, curved, curved. Every
/// row except the first carries one random gap. Curvatures keep every corridor
/// between 1.5 m and 2.0 m wide along its whole length.
inline WorldConfig test_world_config() {
  WorldConfig cfg;
  cfg.rows = {
      {20.0, 0.0, 0.0, false, {}, 0},
      {20.0, 0.0, 0.0, false, {}, 1},
      {20.0, 0.0, 0.0, false, {}, 1},
      {10.0, 10.0, 0.01, false, {}, 1},
      {0.0, 20.0, 0.005, false, {}, 1},
      {0.0, 0.0, 0.0, true, {}, 1},
  };
  cfg.inter_row_distances = {1.8, 1.6, 1.5, 1.5, 1.7};
  cfg.corridor_labels = {"straight", "straight", "hybrid", "curved", "curved"};
  return cfg;
}

inline WorldConfig world_preset(std::string_view name) {
  if (name == "train") return train_world_config();
  if (name == "test") return test_world_config();
  throw std::invalid_argument("unknown world preset: " + std::string(name));
}

}  // namespace vinenav
