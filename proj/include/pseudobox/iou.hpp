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

#ifndef PSEUDOBOX__IOU_HPP_
#define PSEUDOBOX__IOU_HPP_

#include "pseudobox/geometry.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <vector>

namespace pseudobox
{

struct Vec2
{
  double x{0.0};
  double y{0.0};
};

using Polygon = std::vector<Vec2>;

inline constexpr double kVertexDedupTolerance = 1e-9;

/// Counter-clockwise footprint corners.
inline std::array<Vec2, 4> bev_corners(const Box3D & box) noexcept
{
  const double c = std::cos(box.yaw());
  const double s = std::sin(box.yaw());
  const double hl = 0.5 * box.length();
  const double hw = 0.5 * box.width();
  const std::array<std::array<double, 2>, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  std::array<Vec2, 4> out{};
  for (std::size_t k = 0; k < 4; ++k) {
    out[k] = Vec2{box.cx() + c * local[k][0] - s * local[k][1],
      box.cy() + s * local[k][0] + c * local[k][1]};
  }
  return out;
}

inline double polygon_area(const Polygon & poly) noexcept
{
  if (poly.size() < 3) {
    return 0.0;
  }
  double twice = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2 & a = poly[k];
    const Vec2 & b = poly[(k + 1) % poly.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(twice);
}

namespace detail
{

inline double cross(const Vec2 & o, const Vec2 & a, const Vec2 & b) noexcept
{
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline void push_unique(Polygon & poly, const Vec2 & v)
{
  if (!poly.empty()) {
    const Vec2 & last = poly.back();
    if (std::abs(last.x - v.x) <= kVertexDedupTolerance &&
      std::abs(last.y - v.y) <= kVertexDedupTolerance)
    {
      return;
    }
  }
  poly.push_back(v);
}

/// Clip `subject` against one directed edge (a -> b); keeps the left side.
inline Polygon clip_half_plane(const Polygon & subject, const Vec2 & a, const Vec2 & b)
{
  Polygon out;
  out.reserve(subject.size() + 2);
  for (std::size_t k = 0; k < subject.size(); ++k) {
    const Vec2 & cur = subject[k];
    const Vec2 & nxt = subject[(k + 1) % subject.size()];
    const double dc = cross(a, b, cur);
    const double dn = cross(a, b, nxt);
    if (dc >= 0.0) {
      push_unique(out, cur);
    }
    if ((dc >= 0.0) != (dn >= 0.0)) {
      const double t = dc / (dc - dn);
      push_unique(out, Vec2{cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  if (out.size() > 1) {
    const Vec2 & f = out.front();
    const Vec2 & l = out.back();
    if (std::abs(f.x - l.x) <= kVertexDedupTolerance &&
      std::abs(f.y - l.y) <= kVertexDedupTolerance)
    {
      out.pop_back();
    }
  }
  return out;
}

inline auto box_key(const Box3D & b)
{
  return std::make_tuple(b.cx(), b.cy(), b.cz(), b.length(), b.width(), b.height(), b.yaw());
}

}  // namespace detail

/// Convex polygon intersection (Sutherland-Hodgman). Both inputs CCW.
inline Polygon convex_intersection(const Polygon & subject, const Polygon & clip)
{
  Polygon out = subject;
  for (std::size_t k = 0; k < clip.size() && !out.empty(); ++k) {
    out = detail::clip_half_plane(out, clip[k], clip[(k + 1) % clip.size()]);
  }
  return out;
}

/// Footprint overlap area. Argument order is canonicalized so the result is
/// bitwise symmetric.
inline double bev_intersection_area(const Box3D & a, const Box3D & b)
{
  const Box3D * first = &a;
  const Box3D * second = &b;
  if (detail::box_key(b) < detail::box_key(a)) {
    std::swap(first, second);
  }
  // Cheap reject on circumscribed circles.
  const double ra = 0.5 * std::hypot(first->length(), first->width());
  const double rb = 0.5 * std::hypot(second->length(), second->width());
  if (std::hypot(first->cx() - second->cx(), first->cy() - second->cy()) > ra + rb) {
    return 0.0;
  }
  const auto ca = bev_corners(*first);
  const auto cb = bev_corners(*second);
  const Polygon pa(ca.begin(), ca.end());
  const Polygon pb(cb.begin(), cb.end());
  return polygon_area(convex_intersection(pa, pb));
}

inline double bev_iou(const Box3D & a, const Box3D & b)
{
  const double inter = bev_intersection_area(a, b);
  const double uni = a.bev_area() + b.bev_area() - inter;
  if (uni <= 1e-12) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline double iou_3d(const Box3D & a, const Box3D & b)
{
  const double z_overlap =
    std::max(0.0, std::min(a.z_max(), b.z_max()) - std::max(a.z_min(), b.z_min()));
  if (z_overlap <= 0.0) {
    return 0.0;
  }
  const double inter = bev_intersection_area(a, b) * z_overlap;
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 1e-12) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__IOU_HPP_
