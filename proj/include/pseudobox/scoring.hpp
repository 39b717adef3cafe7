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

#ifndef PSEUDOBOX__SCORING_HPP_
#define PSEUDOBOX__SCORING_HPP_

#include "pseudobox/errors.hpp"
#include "pseudobox/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pseudobox
{

/// Prior (length, width, height) of a class, in meters.
struct MetaShape
{
  double length{1.0};
  double width{1.0};
  double height{1.0};

  void validate() const
  {
    if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0)) {
      throw ConfigError("meta shape: all components must be > 0");
    }
  }
};

/// Weights of the occupancy, alignment and meta-shape sub-scores.
struct ScoreWeights
{
  double occupancy{1.0 / 3.0};
  double alignment{1.0 / 3.0};
  double meta_shape{1.0 / 3.0};

  void validate() const
  {
    if (!(occupancy >= 0.0) || !(alignment >= 0.0) || !(meta_shape >= 0.0)) {
      throw ConfigError("score weights: each weight must be >= 0");
    }
    const double sum = occupancy + alignment + meta_shape;
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("score weights: weights must sum to 1 (got " + std::to_string(sum) + ")");
    }
  }
};

/// kCorrected scores a perfect shape match as 1. kLiteral keeps the printed
/// orientation of the divergence term, where a perfect match scores 0.
enum class MetaShapeMode
{
  kCorrected,
  kLiteral,
};

struct ScoreBreakdown
{
  double occ{0.0};
  double alg{0.0};
  double ms{0.0};
  double msf{0.0};
  ScoreWeights weights{};
};

struct ScoringOptions
{
  /// Occupancy grid resolution r (r x r cells over the footprint).
  int grid_resolution{7};
  ScoreWeights weights{};
  MetaShapeMode meta_mode{MetaShapeMode::kCorrected};

  void validate() const
  {
    if (grid_resolution < 1) {
      throw ConfigError("scoring.grid_resolution: must be >= 1");
    }
    weights.validate();
  }
};

namespace detail
{

/// Footprint cell (row along length, column along width) of a point already
/// known to be inside the box.
inline std::array<int, 2> footprint_cell(const SemanticPoint & p, const Box3D & box, int r)
{
  const double dx = p.x - box.cx();
  const double dy = p.y - box.cy();
  const double c = std::cos(box.yaw());
  const double s = std::sin(box.yaw());
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  const int i = static_cast<int>(std::floor((lx / box.length() + 0.5) * r));
  const int j = static_cast<int>(std::floor((ly / box.width() + 0.5) * r));
  return {std::clamp(i, 0, r - 1), std::clamp(j, 0, r - 1)};
}

}  // namespace detail

/// Fraction of the r x r footprint cells that hold at least one in-box point.
/// Points outside the box are ignored.
inline double occupancy_score(
  const Box3D & box, std::span<const SemanticPoint> points, int resolution = 7)
{
  if (resolution < 1) {
    throw ConfigError("occupancy_score: resolution must be >= 1");
  }
  std::vector<char> occupied(static_cast<std::size_t>(resolution * resolution), 0);
  int count = 0;
  for (const auto & p : points) {
    if (!point_in_box(p, box)) {
      continue;
    }
    const auto cell = detail::footprint_cell(p, box, resolution);
    char & slot = occupied[static_cast<std::size_t>(cell[0] * resolution + cell[1])];
    if (!slot) {
      slot = 1;
      ++count;
    }
  }
  return static_cast<double>(count) / (static_cast<double>(resolution) * resolution);
}

/// Alignment between a box heading and a fitted line direction.
///
/// The line direction is compared with the nearer of the two box axes
/// (heading or heading + pi/2), treating both as orientations modulo pi:
/// delta in [0, pi/4] and the score is 1 - sin(delta).
inline double alignment_from_angles(double box_yaw, double line_angle) noexcept
{
  const double rel = fold_orientation(line_angle - box_yaw);
  const double m = std::fmod(rel, kHalfPi);
  const double delta = std::min(m, kHalfPi - m);
  return 1.0 - std::sin(delta);
}

/// Principal direction in [0, pi) of planar points (leading eigenvector of the
/// 2x2 covariance); nullopt for fewer than two points or zero spread.
inline std::optional<double> principal_direction(std::span<const SemanticPoint> points)
{
  if (points.size() < 2) {
    return std::nullopt;
  }
  double mx = 0.0;
  double my = 0.0;
  for (const auto & p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (const auto & p : points) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx + syy <= 1e-18 * static_cast<double>(points.size())) {
    return std::nullopt;
  }
  return fold_orientation(0.5 * std::atan2(2.0 * sxy, sxx - syy));
}

/// The densest footprint cell and its 8-neighbourhood supply the line fit;
/// the score compares that line with the box heading.
inline double alignment_score(
  const Box3D & box, std::span<const SemanticPoint> points, int resolution = 7)
{
  if (resolution < 1) {
    throw ConfigError("alignment_score: resolution must be >= 1");
  }
  std::vector<SemanticPoint> inside;
  std::vector<std::array<int, 2>> cells;
  std::vector<int> counts(static_cast<std::size_t>(resolution * resolution), 0);
  for (const auto & p : points) {
    if (!point_in_box(p, box)) {
      continue;
    }
    const auto cell = detail::footprint_cell(p, box, resolution);
    inside.push_back(p);
    cells.push_back(cell);
    ++counts[static_cast<std::size_t>(cell[0] * resolution + cell[1])];
  }
  if (inside.size() < 2) {
    return 0.0;
  }
  const auto densest = static_cast<int>(
    std::max_element(counts.begin(), counts.end()) - counts.begin());
  const int di = densest / resolution;
  const int dj = densest % resolution;
  std::vector<SemanticPoint> region;
  for (std::size_t k = 0; k < inside.size(); ++k) {
    if (std::abs(cells[k][0] - di) <= 1 && std::abs(cells[k][1] - dj) <= 1) {
      region.push_back(inside[k]);
    }
  }
  const auto theta = principal_direction(region);
  if (!theta) {
    return 0.0;
  }
  return alignment_from_angles(box.yaw(), *theta);
}

/// sum_k P_k log(P_k / Q_k) over proportion vectors of the prior and the box
/// dimensions. Non-negative; zero iff the proportions agree.
inline double shape_divergence(const MetaShape & meta, double length, double width, double height)
{
  const std::array<double, 3> prior{meta.length, meta.width, meta.height};
  const std::array<double, 3> dims{length, width, height};
  const double ps = prior[0] + prior[1] + prior[2];
  const double ds = dims[0] + dims[1] + dims[2];
  double d = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double p = prior[k] / ps;
    const double q = dims[k] / ds;
    d += p * std::log(p / q);
  }
  return std::max(0.0, d);
}

/// Shape plausibility against a class prior: zero when any dimension is at
/// most half or at least twice the prior; otherwise the clipped divergence
/// mapped to [0, 1] (see MetaShapeMode).
inline double meta_shape_score(
  const Box3D & box, const MetaShape & meta, MetaShapeMode mode = MetaShapeMode::kCorrected)
{
  meta.validate();
  const std::array<double, 3> dims{box.length(), box.width(), box.height()};
  const std::array<double, 3> prior{meta.length, meta.width, meta.height};
  for (std::size_t k = 0; k < 3; ++k) {
    if (dims[k] <= 0.5 * prior[k] || dims[k] >= 2.0 * prior[k]) {
      return 0.0;
    }
  }
  constexpr double kCap = 0.05;
  const double clipped = std::min(kCap, shape_divergence(meta, dims[0], dims[1], dims[2])) / kCap;
  return mode == MetaShapeMode::kCorrected ? 1.0 - clipped : clipped;
}

inline ScoreBreakdown combine_scores(double occ, double alg, double ms, const ScoreWeights & w)
{
  w.validate();
  ScoreBreakdown out;
  out.occ = occ;
  out.alg = alg;
  out.ms = ms;
  out.weights = w;
  out.msf = std::clamp(w.occupancy * occ + w.alignment * alg + w.meta_shape * ms, 0.0, 1.0);
  return out;
}

/// Combined score; `points` are foreground points of the box's class (points
/// outside the box are ignored).
inline ScoreBreakdown msf_score(
  const Box3D & box, std::span<const SemanticPoint> points, const MetaShape & meta,
  const ScoringOptions & options = {})
{
  options.validate();
  return combine_scores(
    occupancy_score(box, points, options.grid_resolution),
    alignment_score(box, points, options.grid_resolution),
    meta_shape_score(box, meta, options.meta_mode), options.weights);
}

struct LabelThresholds
{
  double low{0.4};
  double high{0.8};

  void validate() const
  {
    if (!(low >= 0.0) || !(high <= 1.0) || !(low < high)) {
      throw ConfigError(
              "label thresholds: require 0 <= low < high <= 1 (got low=" + std::to_string(low) +
              ", high=" + std::to_string(high) + ")");
    }
  }
};

/// Training weight of a label from its combined score: 0 up to `low`,
/// 1 from `high`, linear in between.
inline double label_weight(double msf, double low, double high)
{
  LabelThresholds{low, high}.validate();
  if (msf <= low) {
    return 0.0;
  }
  if (msf >= high) {
    return 1.0;
  }
  return (msf - low) / (high - low);
}

inline double label_weight(double msf, const LabelThresholds & t)
{
  return label_weight(msf, t.low, t.high);
}

enum class LabelSource
{
  kInit,
  kStcfRefined,
};

inline const char * to_string(LabelSource s)
{
  return s == LabelSource::kInit ? "init" : "stcf-refined";
}

struct PseudoLabel
{
  Box3D box;
  ScoreBreakdown scores{};
  double weight{0.0};
  LabelSource source{LabelSource::kInit};
  int frame_id{0};

  [[nodiscard]] int class_id() const noexcept {return box.class_id();}
};

}  // namespace pseudobox

#endif  // PSEUDOBOX__SCORING_HPP_
