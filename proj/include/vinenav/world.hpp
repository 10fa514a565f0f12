#pragma once

// Procedural vineyard geometry: row centerlines, realized plants, corridor
// medians and the spatial index used by collision checks and rendering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vinenav/geometry.hpp"
#include "vinenav/rng.hpp"

namespace vinenav {

struct Range {
  double min = 0.0;
  double max = 0.0;

  [[nodiscard]] bool valid() const { return min <= max; }
  [[nodiscard]] bool contains(double v) const { return v >= min && v <= max; }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Closed arclength interval [start, end].
struct Interval {
  double start = 0.0;
  double end = 0.0;

  [[nodiscard]] bool contains(double s) const { return s >= start && s <= end; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class RowShape { Straight, Curved, Hybrid };

inline const char* to_string(RowShape s) {
  switch (s) {
    case RowShape::Straight: return "straight";
    case RowShape::Curved: return "curved";
    case RowShape::Hybrid: return "hybrid";
  }
  return "?";
}

/// Planar curve parameterized by arclength: a straight segment followed by a
/// constant-curvature arc (either part may be empty). Positive curvature turns
/// left. Queries outside [0, length] extrapolate along the end tangents.
struct Centerline {
  Vec2 origin;
  double heading = 0.0;
  double straight_length = 0.0;
  double arc_length = 0.0;
  double curvature = 0.0;

  [[nodiscard]] double length() const { return straight_length + arc_length; }

  [[nodiscard]] RowShape shape() const {
    const bool curved = arc_length > 0.0 && curvature != 0.0;
    if (!curved) return RowShape::Straight;
    return straight_length > 0.0 ? RowShape::Hybrid : RowShape::Curved;
  }

  [[nodiscard]] double heading_at(double s) const {
    s = std::clamp(s, 0.0, length());
    if (s <= straight_length) return heading;
    return heading + curvature * (s - straight_length);
  }

  [[nodiscard]] Vec2 tangent(double s) const { return unit(heading_at(s)); }

  [[nodiscard]] Vec2 point(double s) const {
    if (s < 0.0) return origin + s * unit(heading);
    if (s > length()) return point_inside(length()) + (s - length()) * tangent(length());
    return point_inside(s);
  }

 private:
  [[nodiscard]] Vec2 point_inside(double s) const {
    const Vec2 t0 = unit(heading);
    if (s <= straight_length) return origin + s * t0;
    const Vec2 joint = origin + straight_length * t0;
    const double sigma = s - straight_length;
    if (std::abs(curvature) < 1e-12) return joint + sigma * t0;
    const double k = curvature;
    return joint + (std::sin(k * sigma) / k) * t0 + ((1.0 - std::cos(k * sigma)) / k) * t0.left();
  }
};

struct PlantDims {
  double trunk_radius = 0.06;
  double canopy_half_width = 0.25;
  double canopy_base = 0.5;
  double height = 1.8;
};

struct PlantInstance {
  Vec2 position;
  double trunk_radius = 0.06;
  double canopy_half_width = 0.25;
  double canopy_base = 0.5;
  double height = 1.8;
  Vec2 jitter;
  std::size_t row = 0;
  double arclength = 0.0;

  friend bool operator==(const PlantInstance&, const PlantInstance&) = default;
};

struct RowSpec {
  Centerline centerline;
  Range plant_spacing{0.7, 1.0};
  std::vector<Interval> gaps;
  std::vector<PlantInstance> plants;

  [[nodiscard]] double length() const { return centerline.length(); }
  [[nodiscard]] bool in_gap(double s) const {
    return std::any_of(gaps.begin(), gaps.end(), [s](const Interval& g) { return g.contains(s); });
  }
};

/// Per-row generation request. With `concentric` set, the row is the exact
/// offset of the previous row and its own shape fields are ignored.
struct RowConfig {
  double straight_length = 20.0;
  double arc_length = 0.0;
  double curvature = 0.0;
  bool concentric = false;
  std::vector<Interval> gaps;
  int random_gaps = 0;
};

struct WorldConfig {
  std::vector<RowConfig> rows;
  Range inter_row{1.5, 2.0};
  /// Optional explicit distances per adjacent pair; sampled from `inter_row` when empty.
  std::vector<double> inter_row_distances;
  Range plant_spacing{0.7, 1.0};
  double jitter = 0.08;
  double gap_width = 2.0;
  PlantDims plant;
  std::vector<std::string> corridor_labels;
  double exit_margin = 0.5;
  double bounds_margin = 5.0;
};

/// Uniform-grid index over plant trunk centers.
class PlantIndex {
 public:
  PlantIndex() = default;

  PlantIndex(const std::vector<RowSpec>& rows, Bounds bounds, double cell = 1.0)
      : origin_(bounds.lo), cell_(cell) {
    nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((bounds.hi.x - bounds.lo.x) / cell)) + 1);
    ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((bounds.hi.y - bounds.lo.y) / cell)) + 1);
    cells_.assign(nx_ * ny_, {});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t k = 0; k < rows[r].plants.size(); ++k) {
        const auto& p = rows[r].plants[k];
        max_radius_ = std::max(max_radius_, std::max(p.trunk_radius, p.canopy_half_width));
        cells_[cell_of(p.position)].push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(k)});
      }
    }
  }

  struct Ref {
    std::uint32_t row;
    std::uint32_t index;
  };

  /// Calls fn(ref) for every plant whose center lies within `reach` of center.
  template <typename Fn>
  void for_each_candidate(Vec2 center, double reach, Fn&& fn) const {
    if (cells_.empty()) return;
    const auto [x0, y0] = clamp_cell(center.x - reach, center.y - reach);
    const auto [x1, y1] = clamp_cell(center.x + reach, center.y + reach);
    for (std::size_t iy = y0; iy <= y1; ++iy)
      for (std::size_t ix = x0; ix <= x1; ++ix)
        for (const Ref& ref : cells_[iy * nx_ + ix]) fn(ref);
  }

  [[nodiscard]] double max_radius() const { return max_radius_; }

 private:
  [[nodiscard]] std::size_t cell_of(Vec2 p) const {
    const auto ix = static_cast<std::size_t>(std::clamp(std::floor((p.x - origin_.x) / cell_), 0.0, double(nx_ - 1)));
    const auto iy = static_cast<std::size_t>(std::clamp(std::floor((p.y - origin_.y) / cell_), 0.0, double(ny_ - 1)));
    return iy * nx_ + ix;
  }

  [[nodiscard]] std::pair<std::size_t, std::size_t> clamp_cell(double x, double y) const {
    const double fx = std::floor((x - origin_.x) / cell_);
    const double fy = std::floor((y - origin_.y) / cell_);
    return std::pair{static_cast<std::size_t>(std::clamp(fx, 0.0, double(nx_ - 1))),
                     static_cast<std::size_t>(std::clamp(fy, 0.0, double(ny_ - 1)))};
  }

  Vec2 origin_;
  double cell_ = 1.0;
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  double max_radius_ = 0.0;
  std::vector<std::vector<Ref>> cells_;
};

enum class Direction { Forward, Reverse };

inline char to_char(Direction d) { return d == Direction::Forward ? 'F' : 'R'; }

/// Dense polyline of a corridor median (pointwise average of the two bounding
/// centerlines at matched arclength fractions) with arclength lookups.
class CorridorGeometry {
 public:
  CorridorGeometry(const Centerline& a, const Centerline& b, double resolution = 0.05) {
    const double approx = 0.5 * (a.length() + b.length());
    const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(approx / resolution)) + 1);
    points_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = double(i) / double(n - 1);
      points_.push_back(0.5 * (a.point(u * a.length()) + b.point(u * b.length())));
    }
    cumulative_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) cumulative_[i] = cumulative_[i - 1] + distance(points_[i], points_[i - 1]);
  }

  [[nodiscard]] double length() const { return cumulative_.back(); }
  [[nodiscard]] const std::vector<Vec2>& points() const { return points_; }

  [[nodiscard]] Vec2 start() const { return points_.front(); }
  [[nodiscard]] Vec2 end() const { return points_.back(); }

  /// Forward tangent heading at median arclength s (clamped to the ends).
  [[nodiscard]] double heading_at(double s) const {
    const std::size_t i = segment_at(s);
    return heading_of(points_[i + 1] - points_[i]);
  }

  [[nodiscard]] Vec2 point_at(double s) const {
    if (s <= 0.0) return points_.front() + s * unit(heading_at(0.0));
    if (s >= length()) return points_.back() + (s - length()) * unit(heading_at(length()));
    const std::size_t i = segment_at(s);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double t = seg > 0.0 ? (s - cumulative_[i]) / seg : 0.0;
    return points_[i] + t * (points_[i + 1] - points_[i]);
  }

  /// Median arclength of the point nearest to p (projection onto the polyline).
  [[nodiscard]] double project(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const Vec2 ab = points_[i + 1] - points_[i];
      const double len2 = ab.squared_norm();
      const double t = len2 > 0.0 ? std::clamp((p - points_[i]).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const double d = (p - (points_[i] + t * ab)).squared_norm();
      if (d < best) {
        best = d;
        best_s = cumulative_[i] + t * std::sqrt(len2);
      }
    }
    return best_s;
  }

 private:
  [[nodiscard]] std::size_t segment_at(double s) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t i = it == cumulative_.begin() ? 0 : std::size_t(it - cumulative_.begin()) - 1;
    return std::min(i, points_.size() - 2);
  }

  std::vector<Vec2> points_;
  std::vector<double> cumulative_;
};

/// Travel-direction view of a corridor.
struct CorridorFrame {
  std::size_t corridor_id = 0;
  Direction direction = Direction::Forward;
  Vec2 eor;
  Vec2 entry;
  std::shared_ptr<const CorridorGeometry> geometry;

  /// Median arclength measured along the travel direction.
  [[nodiscard]] double travel_arclength(Vec2 p) const {
    const double s = geometry->project(p);
    return direction == Direction::Forward ? s : geometry->length() - s;
  }

  /// Tangent heading in the travel direction at travel arclength s.
  [[nodiscard]] double tangent_heading(double travel_s) const {
    if (direction == Direction::Forward) return geometry->heading_at(travel_s);
    return wrap_angle(geometry->heading_at(geometry->length() - travel_s) + kPi);
  }

  /// Travel tangent at the exit gate.
  [[nodiscard]] double exit_heading() const { return tangent_heading(geometry->length()); }
  [[nodiscard]] double entry_heading() const { return tangent_heading(0.0); }

  [[nodiscard]] Vec2 point_at_travel(double travel_s) const {
    if (direction == Direction::Forward) return geometry->point_at(travel_s);
    return geometry->point_at(geometry->length() - travel_s);
  }
};

class VineyardWorld {
 public:
  VineyardWorld() = default;

  VineyardWorld(std::vector<RowSpec> rows, std::vector<double> inter_row, std::vector<std::string> labels,
                std::uint64_t seed, double exit_margin, double bounds_margin)
      : rows_(std::move(rows)),
        inter_row_(std::move(inter_row)),
        labels_(std::move(labels)),
        seed_(seed),
        exit_margin_(exit_margin),
        bounds_margin_(bounds_margin) {
    compute_bounds(bounds_margin);
    index_ = PlantIndex(rows_, bounds_);
    for (std::size_t c = 0; c + 1 < rows_.size(); ++c)
      corridors_.push_back(std::make_shared<CorridorGeometry>(rows_[c].centerline, rows_[c + 1].centerline));
  }

  [[nodiscard]] const std::vector<RowSpec>& rows() const { return rows_; }
  [[nodiscard]] const std::vector<double>& inter_row_distances() const { return inter_row_; }
  [[nodiscard]] const std::vector<std::string>& corridor_labels() const { return labels_; }
  [[nodiscard]] std::size_t corridor_count() const { return rows_.empty() ? 0 : rows_.size() - 1; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const Bounds& bounds() const { return bounds_; }
  [[nodiscard]] double exit_margin() const { return exit_margin_; }
  [[nodiscard]] double bounds_margin() const { return bounds_margin_; }
  [[nodiscard]] const PlantIndex& index() const { return index_; }

  [[nodiscard]] std::shared_ptr<const CorridorGeometry> corridor(std::size_t id) const {
    if (id >= corridors_.size()) throw std::out_of_range("corridor id out of range");
    return corridors_[id];
  }

  [[nodiscard]] const PlantInstance& plant(PlantIndex::Ref ref) const { return rows_[ref.row].plants[ref.index]; }

  [[nodiscard]] std::size_t plant_count() const {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.plants.size();
    return n;
  }

  [[nodiscard]] std::vector<PlantInstance> all_plants() const {
    std::vector<PlantInstance> out;
    out.reserve(plant_count());
    for (const auto& r : rows_) out.insert(out.end(), r.plants.begin(), r.plants.end());
    return out;
  }

  /// Shape label of a corridor: the configured label, else derived from its rows.
  [[nodiscard]] std::string corridor_label(std::size_t id) const {
    if (id < labels_.size() && !labels_[id].empty()) return labels_[id];
    const RowShape a = rows_.at(id).centerline.shape();
    const RowShape b = rows_.at(id + 1).centerline.shape();
    if (a == b) return to_string(a);
    return to_string(RowShape::Hybrid);
  }

 private:
  void compute_bounds(double margin) {
    Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Vec2 hi{-lo.x, -lo.y};
    auto grow = [&](Vec2 p) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    };
    for (const auto& r : rows_) {
      const double len = r.length();
      for (double s = 0.0; s < len; s += 0.5) grow(r.centerline.point(s));
      grow(r.centerline.point(len));
      for (const auto& p : r.plants) grow(p.position);
    }
    bounds_ = {{lo.x - margin, lo.y - margin}, {hi.x + margin, hi.y + margin}};
  }

  std::vector<RowSpec> rows_;
  std::vector<double> inter_row_;
  std::vector<std::string> labels_;
  std::uint64_t seed_ = 0;
  double exit_margin_ = 0.5;
  double bounds_margin_ = 5.0;
  Bounds bounds_;
  PlantIndex index_;
  std::vector<std::shared_ptr<const CorridorGeometry>> corridors_;
};

namespace detail {

inline std::vector<Vec2> sample_centerline(const Centerline& c, double step) {
  std::vector<Vec2> pts;
  const double len = c.length();
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(len / step)) + 1);
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(c.point(len * double(i) / double(n - 1)));
  return pts;
}

inline double point_polyline_distance(Vec2 p, const std::vector<Vec2>& line) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
  return best;
}

}  // namespace detail

/// Minimum over sampled points of row a of the distance to row b.
inline double min_row_separation(const Centerline& a, const Centerline& b, double step = 0.05) {
  const auto pa = detail::sample_centerline(a, step);
  const auto pb = detail::sample_centerline(b, step);
  double best = std::numeric_limits<double>::infinity();
  for (Vec2 p : pa) best = std::min(best, detail::point_polyline_distance(p, pb));
  return best;
}

/// Builds a world from a config. Deterministic in (config, seed).
inline VineyardWorld generate_world(const WorldConfig& cfg, std::uint64_t seed) {
  if (cfg.rows.size() < 2) throw std::invalid_argument("world needs at least 2 rows");
  if (!cfg.plant_spacing.valid() || cfg.plant_spacing.min <= 0.0)
    throw std::invalid_argument("invalid plant spacing range");
  if (!cfg.inter_row.valid() || cfg.inter_row.min <= 0.0) throw std::invalid_argument("invalid inter-row range");
  if (cfg.jitter < 0.0) throw std::invalid_argument("jitter must be non-negative");
  if (cfg.plant.trunk_radius <= 0.0 || cfg.plant.canopy_half_width < cfg.plant.trunk_radius ||
      cfg.plant.height <= cfg.plant.canopy_base)
    throw std::invalid_argument("invalid plant dimensions");
  if (!cfg.inter_row_distances.empty() && cfg.inter_row_distances.size() != cfg.rows.size() - 1)
    throw std::invalid_argument("inter_row_distances must list one value per adjacent row pair");

  Rng rng = make_stream(seed, "world");

  std::vector<double> distances;
  for (std::size_t k = 0; k + 1 < cfg.rows.size(); ++k) {
    const double d = cfg.inter_row_distances.empty() ? rng.uniform(cfg.inter_row.min, cfg.inter_row.max)
                                                     : cfg.inter_row_distances[k];
    if (!cfg.inter_row.contains(d)) throw std::invalid_argument("inter-row distance outside configured range");
    distances.push_back(d);
  }

  std::vector<RowSpec> rows;
  Vec2 origin{0.0, 0.0};
  for (std::size_t k = 0; k < cfg.rows.size(); ++k) {
    const RowConfig& rc = cfg.rows[k];
    Centerline c;
    if (k > 0) origin = origin + distances[k - 1] * Vec2{0.0, 1.0};
    c.origin = origin;
    if (rc.concentric && k > 0) {
      const Centerline& prev = rows.back().centerline;
      const double shrink = 1.0 - prev.curvature * distances[k - 1];
      if (shrink <= 0.0) throw std::invalid_argument("row curvature too tight for offset row");
      c.straight_length = prev.straight_length;
      c.curvature = prev.curvature / shrink;
      c.arc_length = prev.arc_length * shrink;
    } else {
      c.straight_length = rc.straight_length;
      c.arc_length = rc.arc_length;
      c.curvature = rc.curvature;
    }
    if (c.straight_length < 0.0 || c.arc_length < 0.0 || c.length() <= 0.0)
      throw std::invalid_argument("row lengths must be non-negative with positive total");
    if (std::abs(c.curvature) * c.arc_length > kPi) throw std::invalid_argument("row curvature causes self-intersection");

    RowSpec row;
    row.centerline = c;
    row.plant_spacing = cfg.plant_spacing;
    row.gaps = rc.gaps;
    const double len = c.length();
    for (int g = 0; g < rc.random_gaps; ++g) {
      const double w = std::min(cfg.gap_width, 0.5 * len);
      const double s0 = rng.uniform(0.25 * len, std::max(0.25 * len, 0.75 * len - w));
      row.gaps.push_back({s0, s0 + w});
    }
    std::sort(row.gaps.begin(), row.gaps.end(), [](const Interval& a, const Interval& b) { return a.start < b.start; });
    for (std::size_t g = 0; g < row.gaps.size(); ++g) {
      const Interval& gap = row.gaps[g];
      if (gap.start > gap.end || gap.start < 0.0 || gap.end > len) throw std::invalid_argument("gap interval outside row");
      if (g > 0 && gap.start <= row.gaps[g - 1].end) throw std::invalid_argument("gap intervals overlap");
    }

    double s = 0.0;
    while (s <= len + 1e-9) {
      if (!row.in_gap(s)) {
        PlantInstance p;
        p.row = k;
        p.arclength = s;
        p.jitter = {rng.uniform(-cfg.jitter, cfg.jitter), rng.uniform(-cfg.jitter, cfg.jitter)};
        p.position = c.point(s) + p.jitter;
        p.trunk_radius = cfg.plant.trunk_radius;
        p.canopy_half_width = cfg.plant.canopy_half_width;
        p.canopy_base = cfg.plant.canopy_base;
        p.height = cfg.plant.height;
        row.plants.push_back(p);
      }
      s += cfg.plant_spacing.min == cfg.plant_spacing.max ? cfg.plant_spacing.min
                                                          : rng.uniform(cfg.plant_spacing.min, cfg.plant_spacing.max);
    }
    rows.push_back(std::move(row));
  }

  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const double sep = min_row_separation(rows[k].centerline, rows[k + 1].centerline);
    if (sep < cfg.inter_row.min - 1e-6 || sep > cfg.inter_row.max + 1e-6)
      throw std::invalid_argument("row curvature brings adjacent rows outside the inter-row range");
  }

  return VineyardWorld(std::move(rows), std::move(distances), cfg.corridor_labels, seed, cfg.exit_margin,
                       cfg.bounds_margin);
}

/// Travel-direction frame of a corridor; EoR sits `exit_margin` past the median end.
inline CorridorFrame corridor_frame(const VineyardWorld& world, std::size_t corridor_id, Direction dir) {
  auto geom = world.corridor(corridor_id);
  const double m = world.exit_margin();
  const Vec2 fwd_end = geom->point_at(geom->length() + m);
  const Vec2 fwd_start = geom->point_at(-m);
  CorridorFrame f;
  f.corridor_id = corridor_id;
  f.direction = dir;
  f.geometry = geom;
  f.eor = dir == Direction::Forward ? fwd_end : fwd_start;
  f.entry = dir == Direction::Forward ? fwd_start : fwd_end;
  return f;
}

/// Pointwise average of the two bounding centerlines at matched arclength fractions.
inline std::vector<Vec2> median_points(const VineyardWorld& world, std::size_t corridor_id, std::size_t n_samples) {
  if (n_samples < 2) throw std::invalid_argument("median_points needs at least 2 samples");
  if (corridor_id >= world.corridor_count()) throw std::out_of_range("corridor id out of range");
  const Centerline& a = world.rows()[corridor_id].centerline;
  const Centerline& b = world.rows()[corridor_id + 1].centerline;
  std::vector<Vec2> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double u = double(i) / double(n_samples - 1);
    out.push_back(0.5 * (a.point(u * a.length()) + b.point(u * b.length())));
  }
  return out;
}

/// Plants whose trunk circle intersects the disc (center, radius).
inline std::vector<PlantInstance> nearby_plants(const VineyardWorld& world, Vec2 center, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("radius must be positive");
  std::vector<PlantInstance> out;
  world.index().for_each_candidate(center, radius + world.index().max_radius(), [&](PlantIndex::Ref ref) {
    const auto& p = world.plant(ref);
    if (distance(p.position, center) <= radius + p.trunk_radius) out.push_back(p);
  });
  std::sort(out.begin(), out.end(), [](const PlantInstance& a, const PlantInstance& b) {
    return a.row != b.row ? a.row < b.row : a.arclength < b.arclength;
  });
  return out;
}

}  // namespace vinenav
