#pragma once

// Pinhole depth camera: ray casting against plant cylinders and the ground
// plane, plus the additive depth noise model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vinenav/geometry.hpp"
#include "vinenav/rng.hpp"
#include "vinenav/world.hpp"

namespace vinenav {

inline constexpr int kImageSize = 112;
inline constexpr double kMaxDepth = 5.0;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  [[nodiscard]] double norm() const { return std::sqrt(x * x + y * y + z * z); }
  [[nodiscard]] Vec3 normalized() const {
    const double n = norm();
    return {x / n, y / n, z / n};
  }
};

struct CameraParams {
  int width = kImageSize;
  int height = kImageSize;
  double horizontal_fov = deg_to_rad(87.0);
  double vertical_fov = deg_to_rad(58.0);
  double mount_forward = 0.2;
  double mount_up = 0.3;
  double max_range = kMaxDepth;
  bool render_ground = true;
};

/// Camera position and orientation. Positive pitch tilts the view upwards.
struct CameraPose {
  Vec3 position;
  double yaw = 0.0;
  double pitch = 0.0;
};

inline CameraPose camera_pose_from(const Pose2& robot, const CameraParams& cam, double pitch_disturbance) {
  const Vec2 p = robot.position() + cam.mount_forward * unit(robot.yaw);
  return {{p.x, p.y, cam.mount_up}, robot.yaw, pitch_disturbance};
}

struct DepthImage {
  int width = kImageSize;
  int height = kImageSize;
  std::vector<float> data = std::vector<float>(std::size_t(kImageSize) * kImageSize, float(kMaxDepth));

  DepthImage() = default;
  DepthImage(int w, int h, float fill) : width(w), height(h), data(std::size_t(w) * h, fill) {}

  [[nodiscard]] float at(int row, int col) const { return data[std::size_t(row) * width + col]; }
  float& at(int row, int col) { return data[std::size_t(row) * width + col]; }
  friend bool operator==(const DepthImage&, const DepthImage&) = default;
};

struct NoiseSpec {
  double uniform_amplitude = 0.5;
  double proportional_amplitude = 0.5;
  double factor = 1.0;
};

/// Vertical cylinder occupying z in [z_min, z_max].
struct Cylinder {
  Vec2 center;
  double radius = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
};

inline Cylinder trunk_of(const PlantInstance& p) { return {p.position, p.trunk_radius, 0.0, p.height}; }
inline Cylinder canopy_of(const PlantInstance& p) {
  return {p.position, p.canopy_half_width, p.canopy_base, p.height};
}

/// Smallest t >= 0 at which origin + t * direction touches the solid cylinder
/// (lateral surface within its z span, or one of its caps).
inline std::optional<double> ray_cylinder_distance(const Vec3& o, const Vec3& d, const Cylinder& c) {
  double best = std::numeric_limits<double>::infinity();
  const double ox = o.x - c.center.x;
  const double oy = o.y - c.center.y;
  const double r2 = c.radius * c.radius;
  const double a = d.x * d.x + d.y * d.y;
  if (a > 0.0) {
    const double b = ox * d.x + oy * d.y;
    const double cc = ox * ox + oy * oy - r2;
    const double disc = b * b - a * cc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Numerically stable pair of roots.
      const double q = b >= 0.0 ? -(b + sq) : -(b - sq);
      double t1 = q / a;
      double t2 = q != 0.0 ? cc / q : t1;
      if (t1 > t2) std::swap(t1, t2);
      for (double t : {t1, t2}) {
        if (t < 0.0 || t >= best) continue;
        const double z = o.z + t * d.z;
        if (z >= c.z_min && z <= c.z_max) best = t;
      }
    }
  }
  if (d.z != 0.0) {
    for (double zc : {c.z_min, c.z_max}) {
      const double t = (zc - o.z) / d.z;
      if (t < 0.0 || t >= best) continue;
      const double x = ox + t * d.x;
      const double y = oy + t * d.y;
      if (x * x + y * y <= r2) best = t;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

/// Trunk intersection of a plant: the cylinder of radius trunk_radius over z in [0, height].
inline std::optional<double> ray_cylinder_distance(const Vec3& o, const Vec3& d, const PlantInstance& p) {
  return ray_cylinder_distance(o, d, trunk_of(p));
}

/// World-frame unit ray through the center of pixel (row, col).
inline Vec3 pixel_ray(const CameraParams& cam, const CameraPose& pose, double row, double col) {
  const double xn = (2.0 * (col + 0.5) / cam.width - 1.0) * std::tan(0.5 * cam.horizontal_fov);
  const double yn = (2.0 * (row + 0.5) / cam.height - 1.0) * std::tan(0.5 * cam.vertical_fov);
  // Camera frame: forward, left, up.
  const double f = 1.0, l = -xn, u = -yn;
  const double cp = std::cos(pose.pitch), sp = std::sin(pose.pitch);
  const double fh = f * cp - u * sp;  // horizontal forward component
  const double z = f * sp + u * cp;
  const double cy = std::cos(pose.yaw), sy = std::sin(pose.yaw);
  return Vec3{fh * cy - l * sy, fh * sy + l * cy, z}.normalized();
}

/// Renders the clamped range image: nearest hit among trunks, canopies and the
/// ground plane, max_range where nothing is hit.
inline DepthImage render_depth(const VineyardWorld& world, const CameraPose& pose, const CameraParams& cam) {
  DepthImage img(cam.width, cam.height, float(cam.max_range));
  const Vec2 o2{pose.position.x, pose.position.y};

  std::vector<Cylinder> shapes;
  world.index().for_each_candidate(o2, cam.max_range + world.index().max_radius(), [&](PlantIndex::Ref ref) {
    const auto& p = world.plant(ref);
    if (distance(p.position, o2) > cam.max_range + p.canopy_half_width) return;
    shapes.push_back(trunk_of(p));
    if (p.canopy_half_width > p.trunk_radius && p.canopy_base < p.height) shapes.push_back(canopy_of(p));
  });

  for (int r = 0; r < cam.height; ++r) {
    for (int c = 0; c < cam.width; ++c) {
      const Vec3 d = pixel_ray(cam, pose, r, c);
      double best = cam.max_range;
      if (cam.render_ground && d.z < 0.0) best = std::min(best, -pose.position.z / d.z);
      for (const Cylinder& s : shapes) {
        if (auto t = ray_cylinder_distance(pose.position, d, s); t && *t < best) best = *t;
      }
      img.at(r, c) = float(std::clamp(best, 0.0, cam.max_range));
    }
  }
  return img;
}

/// Pre-clamp perturbation k*n1 + k*n2*(d/5) with n1, n2 ~ U(-a, a) drawn independently.
inline double depth_perturbation(double d, const NoiseSpec& spec, Rng& rng) {
  const double n1 = rng.uniform(-spec.uniform_amplitude, spec.uniform_amplitude);
  const double n2 = rng.uniform(-spec.proportional_amplitude, spec.proportional_amplitude);
  return spec.factor * n1 + spec.factor * n2 * (d / kMaxDepth);
}

/// d -> clamp(d + perturbation, 0, 5), one independent draw pair per pixel.
inline DepthImage apply_noise(const DepthImage& img, const NoiseSpec& spec, Rng& rng) {
  if (spec.factor == 0.0) return img;
  DepthImage out = img;
  for (float& px : out.data) {
    const double d = px;
    px = float(std::clamp(d + depth_perturbation(d, spec, rng), 0.0, kMaxDepth));
  }
  return out;
}

/// Binary 16-bit PGM with depth quantized over [0, 5] m.
inline void write_pgm(const DepthImage& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (float d : img.data) {
    const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(double(d), 0.0, kMaxDepth) / kMaxDepth * 65535.0));
    const char bytes[2] = {char(q >> 8), char(q & 0xff)};
    os.write(bytes, 2);
  }
}

inline DepthImage read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  is.get();
  if (magic != "P5" || maxval != 65535) throw std::runtime_error("not a 16-bit PGM: " + path);
  DepthImage img(w, h, 0.0f);
  for (float& d : img.data) {
    unsigned char bytes[2];
    is.read(reinterpret_cast<char*>(bytes), 2);
    d = float(double((bytes[0] << 8) | bytes[1]) / 65535.0 * kMaxDepth);
  }
  return img;
}

}  // namespace vinenav
