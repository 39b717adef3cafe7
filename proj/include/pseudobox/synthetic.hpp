// Copyright 2026 The pseudobox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSEUDOBOX__SYNTHETIC_HPP_
#define PSEUDOBOX__SYNTHETIC_HPP_

#include "pseudobox/aggregation.hpp"
#include "pseudobox/config.hpp"
#include "pseudobox/errors.hpp"
#include "pseudobox/evaluation.hpp"
#include "pseudobox/geometry.hpp"
#include "pseudobox/iou.hpp"
#include "pseudobox/mock_detector.hpp"
#include "pseudobox/parallel.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pseudobox
{

/// Gap cut across an object along its length axis, in object coordinates.
struct TruncationBand
{
  double offset{0.0};
  double width{0.8};
};

struct ObjectSpec
{
  /// Pose at frame 0, global coordinates, bottom face on the ground.
  Box3D box;
  /// Displacement per frame, global.
  double vx{0.0};
  double vy{0.0};
  /// Surface density in points per square metre at the reference range.
  double density{50.0};
  /// Frame indices in which the object emits no points.
  std::vector<int> hidden_frames;
  std::optional<TruncationBand> truncation;

  [[nodiscard]] bool is_static() const noexcept {return vx == 0.0 && vy == 0.0;}

  [[nodiscard]] Box3D box_at(int frame) const
  {
    return Box3D(
      box.cx() + vx * frame, box.cy() + vy * frame, box.cz(), box.length(), box.width(),
      box.height(), box.yaw(), box.class_id());
  }
};

/// Removes every point whose sensor-frame azimuth lies in [azimuth_min,
/// azimuth_max] during frames [first_frame, last_frame].
struct OcclusionSector
{
  int first_frame{0};
  int last_frame{0};
  double azimuth_min{0.0};
  double azimuth_max{0.0};
};

struct SceneSpec
{
  std::uint64_t seed{0};
  int frame_count{11};
  double frame_interval{0.1};
  /// Ego starts at (ego_x0, ego_y0) and advances ego_speed metres per frame along ego_yaw.
  double ego_x0{0.0};
  double ego_y0{0.0};
  double ego_yaw{0.0};
  double ego_speed{1.0};
  double sensor_height{2.0};
  double sensor_range{80.0};
  double reference_range{10.0};
  /// Density stops growing below this range.
  double min_density_range{5.0};
  /// Maximum inward displacement of a surface sample.
  double depth_jitter{0.02};
  /// Per-point drop probability: dropout_base + dropout_per_meter * range, capped at 0.95.
  double dropout_base{0.0};
  double dropout_per_meter{0.0};
  std::size_t clutter_points{2000};
  std::vector<ObjectSpec> objects;
  std::vector<OcclusionSector> occlusions;
  std::map<int, std::string> class_names{
    {kVehicle, "vehicle"}, {kPedestrian, "pedestrian"},
    {kCyclist, "cyclist"}};

  void validate() const
  {
    if (frame_count < 1 || frame_count % 2 == 0) {
      throw ConfigError("scene.frame_count: must be a positive odd number");
    }
    auto finite_pos = [](double v, const char * field) {
        if (!std::isfinite(v) || !(v > 0.0)) {
          throw ConfigError(std::string("scene.") + field + ": must be finite and > 0");
        }
      };
    finite_pos(frame_interval, "frame_interval");
    finite_pos(sensor_height, "sensor_height");
    finite_pos(sensor_range, "sensor_range");
    finite_pos(reference_range, "reference_range");
    finite_pos(min_density_range, "min_density_range");
    if (!std::isfinite(ego_speed) || !std::isfinite(ego_x0) || !std::isfinite(ego_y0) ||
      !std::isfinite(ego_yaw))
    {
      throw ConfigError("scene.ego: trajectory values must be finite");
    }
    if (!std::isfinite(depth_jitter) || depth_jitter < 0.0) {
      throw ConfigError("scene.depth_jitter: must be finite and >= 0");
    }
    if (!(dropout_base >= 0.0 && dropout_base < 1.0) || !(dropout_per_meter >= 0.0)) {
      throw ConfigError("scene.dropout: base must be in [0, 1) and slope >= 0");
    }
    for (std::size_t o = 0; o < objects.size(); ++o) {
      const auto & obj = objects[o];
      const std::string where = "scene.objects[" + std::to_string(o) + "]";
      if (!class_names.count(obj.box.class_id())) {
        throw ConfigError(where + ".class_id: not in the class table");
      }
      if (!std::isfinite(obj.density) || !(obj.density > 0.0)) {
        throw ConfigError(where + ".density: must be finite and > 0");
      }
      if (!std::isfinite(obj.vx) || !std::isfinite(obj.vy)) {
        throw ConfigError(where + ".velocity: must be finite");
      }
      if (2.0 * depth_jitter >= std::min({obj.box.length(), obj.box.width(), obj.box.height()})) {
        throw ConfigError(where + ": box too thin for the configured depth_jitter");
      }
      for (int f : obj.hidden_frames) {
        if (f < 0 || f >= frame_count) {
          throw ConfigError(where + ".hidden_frames: frame index out of range");
        }
      }
      if (obj.truncation && (!(obj.truncation->width > 0.0) ||
        !std::isfinite(obj.truncation->offset)))
      {
        throw ConfigError(where + ".truncation: width must be > 0");
      }
    }
    for (const auto & s : occlusions) {
      if (s.first_frame < 0 || s.last_frame >= frame_count || s.first_frame > s.last_frame ||
        !(s.azimuth_min <= s.azimuth_max))
      {
        throw ConfigError("scene.occlusions: invalid frame or azimuth range");
      }
    }
  }

  [[nodiscard]] Pose ego_pose(int frame) const
  {
    const double d = ego_speed * frame;
    return Pose::from_yaw(
      ego_yaw,
      Eigen::Vector3d(ego_x0 + d * std::cos(ego_yaw), ego_y0 + d * std::sin(ego_yaw), 0.0));
  }
};

struct SyntheticSequence
{
  Sequence sequence;
  /// Per frame, sensor coordinates; only objects with at least one point.
  std::vector<std::vector<GroundTruthBox>> ground_truth;
};

namespace detail
{

struct Face
{
  Eigen::Vector3d centre;  // object frame
  Eigen::Vector3d normal;
  Eigen::Vector3d u;
  Eigen::Vector3d v;
  double half_u;
  double half_v;
};

inline std::array<Face, 6> box_faces(const Box3D & b)
{
  const double hl = 0.5 * b.length();
  const double hw = 0.5 * b.width();
  const double hh = 0.5 * b.height();
  const Eigen::Vector3d ex = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d ey = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d ez = Eigen::Vector3d::UnitZ();
  return {{
    {hl * ex, ex, ey, ez, hw, hh},
    {-hl * ex, -ex, ey, ez, hw, hh},
    {hw * ey, ey, ex, ez, hl, hh},
    {-hw * ey, -ey, ex, ez, hl, hh},
    {hh * ez, ez, ex, ey, hl, hw},
    {-hh * ez, -ez, ex, ey, hl, hw},
  }};
}

inline bool in_sector(double x, double y, int frame, std::span<const OcclusionSector> sectors)
{
  if (sectors.empty()) {
    return false;
  }
  const double az = std::atan2(y, x);
  return std::any_of(
    sectors.begin(), sectors.end(), [&](const OcclusionSector & s) {
      return frame >= s.first_frame && frame <= s.last_frame && az >= s.azimuth_min &&
      az <= s.azimuth_max;
    });
}

}  // namespace detail

/// Points and ground truth for one frame. The random stream depends only on
/// (seed, frame), so frames can be produced in any order.
inline Frame synthesize_frame(
  const SceneSpec & spec, int frame, std::vector<GroundTruthBox> * ground_truth = nullptr)
{
  auto rng = detail::stream_rng(spec.seed, 0x5EED0000ULL + static_cast<std::uint64_t>(frame));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Pose pose = spec.ego_pose(frame);
  const Pose to_sensor = pose.inverse();
  const Eigen::Vector3d sensor =
    pose.translation() + Eigen::Vector3d(0.0, 0.0, spec.sensor_height);

  Frame out;
  out.frame_id = frame;
  out.timestamp = frame * spec.frame_interval;
  out.pose = pose;

  auto dropout = [&](double range) {
      return std::min(0.95, spec.dropout_base + spec.dropout_per_meter * range);
    };

  std::vector<Box3D> sensor_boxes;
  for (const auto & obj : spec.objects) {
    const Box3D g = obj.box_at(frame);
    const Box3D local_box = transform_box(g, to_sensor);
    sensor_boxes.push_back(local_box);
    const bool hidden = std::find(obj.hidden_frames.begin(), obj.hidden_frames.end(), frame) !=
      obj.hidden_frames.end();
    const Pose obj_pose = Pose::from_yaw(g.yaw(), Eigen::Vector3d(g.cx(), g.cy(), g.cz()));
    std::size_t emitted = 0;
    for (const auto & face : detail::box_faces(g)) {
      const Eigen::Vector3d centre = obj_pose.apply(face.centre);
      const Eigen::Vector3d normal = obj_pose.rotation() * face.normal;
      const Eigen::Vector3d to_eye = sensor - centre;
      const double dist = to_eye.norm();
      const double cos_inc = normal.dot(to_eye) / dist;
      if (!(cos_inc > 0.0)) {
        continue;
      }
      const double scale = spec.reference_range / std::max(dist, spec.min_density_range);
      const double mean = obj.density * (4.0 * face.half_u * face.half_v) * cos_inc * scale * scale;
      std::poisson_distribution<long> count(mean);
      const long n = mean > 0.0 ? count(rng) : 0;
      for (long s = 0; s < n; ++s) {
        const double a = (2.0 * unit(rng) - 1.0) * face.half_u;
        const double b = (2.0 * unit(rng) - 1.0) * face.half_v;
        const double depth = spec.depth_jitter * unit(rng);
        const double keep = unit(rng);
        Eigen::Vector3d p = face.centre + a * face.u + b * face.v - depth * face.normal;
        if (hidden) {
          continue;
        }
        if (obj.truncation &&
          std::abs(p.x() - obj.truncation->offset) <= 0.5 * obj.truncation->width)
        {
          continue;
        }
        const Eigen::Vector3d world = obj_pose.apply(p);
        const Eigen::Vector3d local = to_sensor.apply(world);
        const double range = std::hypot(local.x(), local.y());
        if (range > spec.sensor_range || keep < dropout(range)) {
          continue;
        }
        if (detail::in_sector(local.x(), local.y(), frame, spec.occlusions)) {
          continue;
        }
        out.points.push_back(
          SemanticPoint{local.x(), local.y(), local.z(), g.class_id(), 0});
        ++emitted;
      }
    }
    if (ground_truth != nullptr && emitted > 0) {
      ground_truth->push_back(
        GroundTruthBox{local_box, static_cast<int>(&obj - spec.objects.data()), obj.is_static()});
    }
  }

  const double r0 = 2.0;
  for (std::size_t c = 0; c < spec.clutter_points; ++c) {
    const double r = std::sqrt(r0 * r0 + unit(rng) * (spec.sensor_range * spec.sensor_range -
      r0 * r0));
    const double phi = 2.0 * kPi * unit(rng);
    const double z = 0.15 * unit(rng);
    const double x = r * std::cos(phi);
    const double y = r * std::sin(phi);
    if (detail::in_sector(x, y, frame, spec.occlusions)) {
      continue;
    }
    const bool inside = std::any_of(
      sensor_boxes.begin(), sensor_boxes.end(),
      [&](const Box3D & b) {return point_in_box(x, y, z, b);});
    if (!inside) {
      out.points.push_back(SemanticPoint{x, y, z, kBackgroundClass, 0});
    }
  }
  return out;
}

inline SyntheticSequence generate_sequence(
  const SceneSpec & spec, const std::string & name = "synthetic", unsigned threads = 1)
{
  spec.validate();
  SyntheticSequence out;
  out.sequence.name = name;
  out.sequence.class_names = spec.class_names;
  const auto n = static_cast<std::size_t>(spec.frame_count);
  out.sequence.frames.resize(n);
  out.ground_truth.resize(n);
  parallel_for(
    n, threads, [&](std::size_t k) {
      out.sequence.frames[k] = synthesize_frame(spec, static_cast<int>(k), &out.ground_truth[k]);
    });
  return out;
}

namespace detail
{

/// Random object placement around the ego's middle position with spacing
/// checks against everything already placed.
class Layout
{
public:
  Layout(SceneSpec & spec, std::uint64_t key)
  : spec_(spec), rng_(stream_rng(spec.seed, key))
  {
    const Pose mid = spec.ego_pose(spec.frame_count / 2);
    mid_x_ = mid.translation().x();
    mid_y_ = mid.translation().y();
  }

  double uniform(double lo, double hi)
  {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  Box3D shape(int cls, double cx, double cy, double yaw)
  {
    double l = 0.0;
    double w = 0.0;
    double h = 0.0;
    switch (cls) {
      case kVehicle:
        l = uniform(4.2, 5.0);
        w = uniform(1.7, 2.0);
        h = uniform(1.45, 1.75);
        break;
      case kPedestrian:
        l = uniform(0.65, 0.9);
        w = uniform(0.55, 0.75);
        h = uniform(1.6, 1.85);
        break;
      default:
        l = uniform(1.6, 1.9);
        w = uniform(0.5, 0.7);
        h = uniform(1.5, 1.8);
        break;
    }
    return Box3D(cx, cy, 0.5 * h, l, w, h, yaw, cls);
  }

  /// Centre at (range, azimuth) from the middle ego position.
  std::pair<double, double> polar(double range_lo, double range_hi)
  {
    const double r = uniform(range_lo, range_hi);
    const double phi = uniform(-kPi, kPi);
    return {mid_x_ + r * std::cos(phi), mid_y_ + r * std::sin(phi)};
  }

  /// Whether a footprint keeps `margin` from placed objects and stays off the ego lane.
  [[nodiscard]] bool fits(const Box3D & b, double margin) const
  {
    const Box3D grown(b.cx(), b.cy(), b.cz(), b.length() + 2.0 * margin,
      b.width() + 2.0 * margin, b.height(), b.yaw(), b.class_id());
    for (const auto & o : spec_.objects) {
      for (int f = 0; f < spec_.frame_count; f += std::max(1, spec_.frame_count / 4)) {
        if (bev_intersection_area(grown, o.box_at(f)) > 0.0) {
          return false;
        }
      }
    }
    for (int f = 0; f < spec_.frame_count; ++f) {
      const auto t = spec_.ego_pose(f).translation();
      const double reach = 0.5 * std::hypot(b.length(), b.width()) + 2.5;
      if (std::hypot(b.cx() - t.x(), b.cy() - t.y()) < reach) {
        return false;
      }
    }
    return true;
  }

  /// Tries up to 200 random placements; returns false when none fits.
  bool place(int cls, double range_lo, double range_hi, double density, double speed = 0.0)
  {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const auto [x, y] = polar(range_lo, range_hi);
      const double yaw = uniform(-kPi, kPi);
      ObjectSpec o{shape(cls, x, y, yaw), speed * std::cos(yaw), speed * std::sin(yaw), density, {},
        std::nullopt};
      if (speed != 0.0 && !moving_fits(o)) {
        continue;
      }
      if (fits(o.box, 1.0)) {
        spec_.objects.push_back(std::move(o));
        return true;
      }
    }
    return false;
  }

  /// Two same-class objects side by side, `gap` metres apart across their width.
  bool place_pair(int cls, double range_lo, double range_hi, double gap, double density)
  {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const auto [x, y] = polar(range_lo, range_hi);
      const double yaw = uniform(-kPi, kPi);
      const Box3D a0 = shape(cls, 0.0, 0.0, yaw);
      const Box3D b0 = shape(cls, 0.0, 0.0, yaw);
      const double nx = -std::sin(yaw);
      const double ny = std::cos(yaw);
      const double da = 0.5 * (a0.width() + gap);
      const double db = 0.5 * (b0.width() + gap);
      const Box3D a(x - da * nx, y - da * ny, a0.cz(), a0.length(), a0.width(), a0.height(), yaw,
        cls);
      const Box3D b(x + db * nx, y + db * ny, b0.cz(), b0.length(), b0.width(), b0.height(), yaw,
        cls);
      if (fits(a, 1.0) && fits(b, 1.0)) {
        spec_.objects.push_back(ObjectSpec{a, 0.0, 0.0, density, {}, std::nullopt});
        spec_.objects.push_back(ObjectSpec{b, 0.0, 0.0, density, {}, std::nullopt});
        return true;
      }
    }
    return false;
  }

  /// Static object at an explicit global position.
  bool place_at(int cls, double x, double y, double density)
  {
    for (int attempt = 0; attempt < 50; ++attempt) {
      ObjectSpec o{shape(cls, x, y, uniform(-kPi, kPi)), 0.0, 0.0, density, {}, std::nullopt};
      if (fits(o.box, 1.0)) {
        spec_.objects.push_back(std::move(o));
        return true;
      }
    }
    return false;
  }

private:
  [[nodiscard]] bool moving_fits(const ObjectSpec & o) const
  {
    for (int f = 0; f < spec_.frame_count; ++f) {
      const Box3D b = o.box_at(f);
      const double range = std::hypot(b.cx() - mid_x_, b.cy() - mid_y_);
      if (range > spec_.sensor_range - 5.0 || !fits(b, 1.0)) {
        return false;
      }
    }
    return true;
  }

  SceneSpec & spec_;
  std::mt19937_64 rng_;
  double mid_x_{0.0};
  double mid_y_{0.0};
};

}  // namespace detail

inline const std::vector<std::string> & preset_names()
{
  static const std::vector<std::string> names{
    "adjacent", "truncated", "sparse-far", "moving", "mixed", "static-heavy", "perf"};
  return names;
}

/// Scripted scenes. Layout and sampling both derive from `seed`.
inline SceneSpec make_preset(const std::string & name, std::uint64_t seed)
{
  SceneSpec spec;
  spec.seed = seed;
  detail::Layout layout(spec, 0x1A7017ULL);

  if (name == "adjacent") {
    spec.clutter_points = 1500;
    for (int i = 0; i < 3; ++i) {
      layout.place_pair(kVehicle, 8.0, 25.0, layout.uniform(0.45, 0.65), 60.0);
    }
    layout.place_pair(kPedestrian, 6.0, 15.0, layout.uniform(0.4, 0.5), 80.0);
  } else if (name == "truncated") {
    spec.clutter_points = 1500;
    for (int i = 0; i < 4; ++i) {
      if (layout.place(kVehicle, 8.0, 25.0, 60.0)) {
        auto & o = spec.objects.back();
        o.truncation = TruncationBand{layout.uniform(-0.2, 0.2) * o.box.length(), 0.8};
      }
    }
    layout.place(kCyclist, 6.0, 20.0, 80.0);
  } else if (name == "sparse-far") {
    spec.ego_speed = 1.5;
    spec.clutter_points = 1500;
    spec.dropout_per_meter = 0.004;
    for (int i = 0; i < 5; ++i) {
      layout.place(kVehicle, 40.0, 70.0, 150.0);
    }
  } else if (name == "moving") {
    for (int i = 0; i < 3; ++i) {
      layout.place(kVehicle, 8.0, 35.0, 60.0, layout.uniform(0.8, 1.5));
    }
    for (int i = 0; i < 2; ++i) {
      layout.place(kPedestrian, 6.0, 20.0, 80.0, 0.12);
    }
    for (int i = 0; i < 2; ++i) {
      layout.place(kVehicle, 8.0, 35.0, 60.0);
    }
  } else if (name == "mixed") {
    layout.place_pair(kVehicle, 10.0, 25.0, layout.uniform(0.45, 0.65), 60.0);
    if (layout.place(kVehicle, 10.0, 30.0, 60.0)) {
      auto & o = spec.objects.back();
      o.truncation = TruncationBand{layout.uniform(-0.2, 0.2) * o.box.length(), 0.8};
    }
    for (int i = 0; i < 3; ++i) {
      layout.place(kVehicle, 8.0, 50.0, 60.0);
    }
    for (int i = 0; i < 2; ++i) {
      layout.place(kVehicle, 10.0, 40.0, 60.0, layout.uniform(0.8, 1.5));
    }
    for (int i = 0; i < 2; ++i) {
      layout.place(kPedestrian, 5.0, 25.0, 80.0);
    }
    layout.place(kPedestrian, 5.0, 20.0, 80.0, 0.12);
    layout.place(kCyclist, 6.0, 30.0, 80.0);
    layout.place(kCyclist, 6.0, 30.0, 80.0, 0.4);
  } else if (name == "static-heavy") {
    spec.frame_count = 21;
    spec.ego_speed = 3.0;
    spec.clutter_points = 1500;
    for (int i = 0; i < 10; ++i) {
      const double x = layout.uniform(-15.0, 75.0);
      const double side = layout.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0;
      layout.place_at(kVehicle, x, side * layout.uniform(5.0, 15.0), 150.0);
    }
    for (int i = 0; i < 2; ++i) {
      const double x = layout.uniform(0.0, 60.0);
      layout.place_at(kPedestrian, x, layout.uniform(5.0, 12.0), 80.0);
    }
  } else if (name == "perf") {
    spec.clutter_points = 89000;
    for (int i = 0; i < 60; ++i) {
      layout.place(kVehicle, 5.0, 60.0, 150.0);
    }
    for (int i = 0; i < 30; ++i) {
      layout.place(kPedestrian, 5.0, 40.0, 150.0);
    }
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return spec;
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__SYNTHETIC_HPP_
