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

#ifndef PSEUDOBOX__BOX_FITTING_HPP_
#define PSEUDOBOX__BOX_FITTING_HPP_

#include "pseudobox/errors.hpp"
#include "pseudobox/geometry.hpp"
#include "pseudobox/iou.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace pseudobox
{

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// collinear vertices. Fewer than three distinct points are returned as is.
inline Polygon convex_hull(std::vector<Vec2> pts)
{
  std::sort(
    pts.begin(), pts.end(), [](const Vec2 & a, const Vec2 & b) {
      return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
  pts.erase(
    std::unique(
      pts.begin(), pts.end(),
      [](const Vec2 & a, const Vec2 & b) {return a.x == b.x && a.y == b.y;}),
    pts.end());
  if (pts.size() < 3) {
    return pts;
  }
  Polygon hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto & p : pts) {
    while (k >= 2 && detail::cross(hull[k - 2], hull[k - 1], p) <= 0.0) {
      --k;
    }
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0; ) {
    while (k >= lower && detail::cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Heading criterion of the rotation search.
enum class FitCriterion
{
  /// Smallest enclosing rectangle area.
  kArea,
  /// Largest sum of 1 / max(d, 0.01 m), d = distance of a point to its nearest rectangle edge.
  kCloseness,
};

inline constexpr double kClosenessFloor = 0.01;

struct FitOptions
{
  /// Rotation search step over [0, 90) degrees.
  double yaw_step_deg{1.0};
  std::size_t min_cluster_size{1};
  FitCriterion criterion{FitCriterion::kCloseness};
};

/// Oriented box over a cluster by rotation search.
///
/// Candidate headings k * step for k = 0, 1, ... below 90 degrees are tried;
/// the footprint is the axis-aligned rectangle of the points rotated into
/// that heading, and the heading with the best criterion value wins (ties
/// keep the smaller heading). Extents are the exact min/max spans so every
/// point is inside the box. Returns nullopt for clusters below the minimum
/// size or with a degenerate extent.
inline std::optional<Box3D> fit_box(
  std::span<const SemanticPoint> cluster, int class_id, const FitOptions & options = {})
{
  if (!(options.yaw_step_deg > 0.0) || options.yaw_step_deg > 90.0) {
    throw ConfigError("fit_box: yaw_step_deg must be in (0, 90]");
  }
  if (cluster.empty() || cluster.size() < options.min_cluster_size) {
    return std::nullopt;
  }
  double z_lo = std::numeric_limits<double>::infinity();
  double z_hi = -std::numeric_limits<double>::infinity();
  std::vector<Vec2> bev;
  bev.reserve(cluster.size());
  for (const auto & p : cluster) {
    bev.push_back(Vec2{p.x, p.y});
    z_lo = std::min(z_lo, p.z);
    z_hi = std::max(z_hi, p.z);
  }
  const Polygon hull = convex_hull(bev);
  const bool closeness = options.criterion == FitCriterion::kCloseness;

  const int steps = std::max(1, static_cast<int>(std::ceil(90.0 / options.yaw_step_deg - 1e-9)));
  double best_cost = std::numeric_limits<double>::infinity();
  double best_yaw = 0.0;
  double best_u[2] = {0.0, 0.0};
  double best_v[2] = {0.0, 0.0};
  for (int k = 0; k < steps; ++k) {
    const double yaw = k * options.yaw_step_deg * kPi / 180.0;
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    double u_lo = std::numeric_limits<double>::infinity();
    double u_hi = -u_lo;
    double v_lo = u_lo;
    double v_hi = -u_lo;
    for (const auto & p : hull) {
      const double u = c * p.x + s * p.y;
      const double v = -s * p.x + c * p.y;
      u_lo = std::min(u_lo, u);
      u_hi = std::max(u_hi, u);
      v_lo = std::min(v_lo, v);
      v_hi = std::max(v_hi, v);
    }
    double cost = (u_hi - u_lo) * (v_hi - v_lo);
    if (closeness) {
      cost = 0.0;
      for (const auto & p : bev) {
        const double u = c * p.x + s * p.y;
        const double v = -s * p.x + c * p.y;
        const double d = std::min(
          std::min(u - u_lo, u_hi - u), std::min(v - v_lo, v_hi - v));
        cost -= 1.0 / std::max(d, kClosenessFloor);
      }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_yaw = yaw;
      best_u[0] = u_lo;
      best_u[1] = u_hi;
      best_v[0] = v_lo;
      best_v[1] = v_hi;
    }
  }
  const double length = best_u[1] - best_u[0];
  const double width = best_v[1] - best_v[0];
  const double height = z_hi - z_lo;
  if (length < kMinExtent || width < kMinExtent || height < kMinExtent) {
    return std::nullopt;
  }
  const double uc = 0.5 * (best_u[0] + best_u[1]);
  const double vc = 0.5 * (best_v[0] + best_v[1]);
  const double c = std::cos(best_yaw);
  const double s = std::sin(best_yaw);
  return Box3D(
    c * uc - s * vc, s * uc + c * vc, 0.5 * (z_lo + z_hi), length, width, height, best_yaw,
    class_id);
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__BOX_FITTING_HPP_
