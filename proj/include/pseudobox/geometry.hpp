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

#ifndef PSEUDOBOX__GEOMETRY_HPP_
#define PSEUDOBOX__GEOMETRY_HPP_

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pseudobox
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

/// Smallest extent a box may have along any axis.
inline constexpr double kMinExtent = 1e-6;

/// Slack applied to the boundary-inclusive containment test so that points
/// lying exactly on a fitted face survive the rotate/unrotate round trip.
inline constexpr double kInsideTolerance = 1e-9;

/// Class 0 is background; everything above is a foreground class.
inline constexpr int kBackgroundClass = 0;

struct SemanticPoint
{
  double x{0.0};
  double y{0.0};
  double z{0.0};
  int class_id{kBackgroundClass};
  int frame_index{0};

  [[nodiscard]] bool is_foreground() const noexcept {return class_id > kBackgroundClass;}
  bool operator==(const SemanticPoint &) const = default;
};

/// Wrap an angle to [-pi, pi).
inline double normalize_yaw(double yaw) noexcept
{
  double wrapped = std::fmod(yaw + kPi, 2.0 * kPi);
  if (wrapped < 0.0) {
    wrapped += 2.0 * kPi;
  }
  double out = wrapped - kPi;
  if (out >= kPi) {
    out -= 2.0 * kPi;
  }
  return out;
}

/// Wrap an orientation (direction without sign) to [0, pi).
inline double fold_orientation(double angle) noexcept
{
  double folded = std::fmod(angle, kPi);
  if (folded < 0.0) {
    folded += kPi;
  }
  if (folded >= kPi) {
    folded -= kPi;
  }
  return folded;
}

/// Unsigned distance between two orientations, in [0, pi/2].
inline double orientation_distance(double a, double b) noexcept
{
  const double d = fold_orientation(a - b);
  return std::min(d, kPi - d);
}

/// Rigid transform from a frame's sensor coordinates into a shared frame.
class Pose
{
public:
  Pose()
  : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

  Pose(const Eigen::Matrix3d & rotation, const Eigen::Vector3d & translation)
  : rotation_(rotation), translation_(translation)
  {
    if (!rotation_.allFinite() || !translation_.allFinite()) {
      throw std::invalid_argument("pose: non-finite entries");
    }
    const double ortho_err =
      (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho_err > 1e-6 || std::abs(rotation_.determinant() - 1.0) > 1e-6) {
      throw std::invalid_argument("pose: rotation is not orthonormal with determinant +1");
    }
  }

  static Pose from_yaw(double yaw, const Eigen::Vector3d & translation)
  {
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    r(0, 0) = c;
    r(0, 1) = -s;
    r(1, 0) = s;
    r(1, 1) = c;
    return Pose(r, translation);
  }

  [[nodiscard]] const Eigen::Matrix3d & rotation() const noexcept {return rotation_;}
  [[nodiscard]] const Eigen::Vector3d & translation() const noexcept {return translation_;}

  /// Heading of the rotated x axis projected onto the ground plane.
  [[nodiscard]] double yaw() const noexcept {return std::atan2(rotation_(1, 0), rotation_(0, 0));}

  [[nodiscard]] Pose inverse() const
  {
    Pose out;
    out.rotation_ = rotation_.transpose();
    out.translation_ = -(out.rotation_ * translation_);
    return out;
  }

  [[nodiscard]] Eigen::Vector3d apply(const Eigen::Vector3d & p) const
  {
    return rotation_ * p + translation_;
  }

  /// (a * b) applies b first, then a.
  friend Pose operator*(const Pose & a, const Pose & b)
  {
    Pose out;
    out.rotation_ = a.rotation_ * b.rotation_;
    out.translation_ = a.rotation_ * b.translation_ + a.translation_;
    return out;
  }

private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

inline SemanticPoint transform_point(const SemanticPoint & p, const Pose & pose)
{
  const Eigen::Vector3d q = pose.apply(Eigen::Vector3d(p.x, p.y, p.z));
  return SemanticPoint{q.x(), q.y(), q.z(), p.class_id, p.frame_index};
}

inline std::vector<SemanticPoint> transform_points(
  std::span<const SemanticPoint> points, const Pose & pose)
{
  std::vector<SemanticPoint> out;
  out.reserve(points.size());
  for (const auto & p : points) {
    out.push_back(transform_point(p, pose));
  }
  return out;
}

/// Oriented 3D box. Construction canonicalizes the heading so that
/// length >= width and yaw lies in [-pi, pi); degenerate or non-finite
/// boxes are rejected with std::invalid_argument.
class Box3D
{
public:
  Box3D(
    double cx, double cy, double cz, double length, double width, double height, double yaw,
    int class_id)
  : cx_(cx), cy_(cy), cz_(cz), length_(length), width_(width), height_(height), yaw_(yaw),
    class_id_(class_id)
  {
    if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(cz) ||
      !std::isfinite(length) || !std::isfinite(width) || !std::isfinite(height) ||
      !std::isfinite(yaw))
    {
      throw std::invalid_argument("box: non-finite field");
    }
    if (length < kMinExtent || width < kMinExtent || height < kMinExtent) {
      throw std::invalid_argument(
              "box: degenerate extent (l=" + std::to_string(length) + ", w=" +
              std::to_string(width) + ", h=" + std::to_string(height) + ")");
    }
    if (length_ < width_) {
      std::swap(length_, width_);
      yaw_ += kHalfPi;
    }
    yaw_ = normalize_yaw(yaw_);
  }

  [[nodiscard]] double cx() const noexcept {return cx_;}
  [[nodiscard]] double cy() const noexcept {return cy_;}
  [[nodiscard]] double cz() const noexcept {return cz_;}
  [[nodiscard]] double length() const noexcept {return length_;}
  [[nodiscard]] double width() const noexcept {return width_;}
  [[nodiscard]] double height() const noexcept {return height_;}
  [[nodiscard]] double yaw() const noexcept {return yaw_;}
  [[nodiscard]] int class_id() const noexcept {return class_id_;}

  [[nodiscard]] double bev_area() const noexcept {return length_ * width_;}
  [[nodiscard]] double volume() const noexcept {return length_ * width_ * height_;}
  [[nodiscard]] double z_min() const noexcept {return cz_ - 0.5 * height_;}
  [[nodiscard]] double z_max() const noexcept {return cz_ + 0.5 * height_;}

  [[nodiscard]] Box3D with_class(int class_id) const
  {
    Box3D out = *this;
    out.class_id_ = class_id;
    return out;
  }

  bool operator==(const Box3D &) const = default;

private:
  double cx_;
  double cy_;
  double cz_;
  double length_;
  double width_;
  double height_;
  double yaw_;
  int class_id_;
};

/// Express a box given in some frame in the frame reached through `pose`.
/// The pose is assumed to rotate about the vertical axis only.
inline Box3D transform_box(const Box3D & box, const Pose & pose)
{
  const Eigen::Vector3d c = pose.apply(Eigen::Vector3d(box.cx(), box.cy(), box.cz()));
  return Box3D(
    c.x(), c.y(), c.z(), box.length(), box.width(), box.height(), box.yaw() + pose.yaw(),
    box.class_id());
}

/// Boundary-inclusive containment in the box frame.
inline bool point_in_box(double x, double y, double z, const Box3D & box) noexcept
{
  const double dz = z - box.cz();
  if (std::abs(dz) > 0.5 * box.height() + kInsideTolerance) {
    return false;
  }
  const double dx = x - box.cx();
  const double dy = y - box.cy();
  const double c = std::cos(box.yaw());
  const double s = std::sin(box.yaw());
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * box.length() + kInsideTolerance &&
         std::abs(ly) <= 0.5 * box.width() + kInsideTolerance;
}

inline bool point_in_box(const SemanticPoint & p, const Box3D & box) noexcept
{
  return point_in_box(p.x, p.y, p.z, box);
}

struct BevGridSpec
{
  double origin_x{0.0};
  double origin_y{0.0};
  double cell_size{0.3};
  int nx{1};
  int ny{1};

  void validate() const
  {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
      throw std::invalid_argument("bev grid: cell_size must be > 0");
    }
    if (nx <= 0 || ny <= 0) {
      throw std::invalid_argument("bev grid: nx and ny must be > 0");
    }
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
      throw std::invalid_argument("bev grid: origin must be finite");
    }
  }

  [[nodiscard]] std::size_t cell_count() const noexcept
  {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }

  /// Square grid centred on the origin covering [-range, range]^2.
  static BevGridSpec centered(double range, double cell_size)
  {
    BevGridSpec spec;
    spec.cell_size = cell_size;
    const int n = static_cast<int>(std::ceil(2.0 * range / cell_size));
    spec.nx = n;
    spec.ny = n;
    spec.origin_x = -0.5 * n * cell_size;
    spec.origin_y = -0.5 * n * cell_size;
    spec.validate();
    return spec;
  }
};

struct CellIndex
{
  int i{0};
  int j{0};
  bool operator==(const CellIndex &) const = default;
};

/// Cell containing (x, y), or nullopt outside [0, nx) x [0, ny).
inline std::optional<CellIndex> grid_index(double x, double y, const BevGridSpec & spec) noexcept
{
  const double fi = std::floor((x - spec.origin_x) / spec.cell_size);
  const double fj = std::floor((y - spec.origin_y) / spec.cell_size);
  if (!(fi >= 0.0) || !(fj >= 0.0) || fi >= spec.nx || fj >= spec.ny) {
    return std::nullopt;
  }
  return CellIndex{static_cast<int>(fi), static_cast<int>(fj)};
}

inline std::size_t linear_index(const CellIndex & cell, const BevGridSpec & spec) noexcept
{
  return static_cast<std::size_t>(cell.j) * static_cast<std::size_t>(spec.nx) +
         static_cast<std::size_t>(cell.i);
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__GEOMETRY_HPP_
