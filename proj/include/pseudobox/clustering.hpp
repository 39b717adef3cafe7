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

#ifndef PSEUDOBOX__CLUSTERING_HPP_
#define PSEUDOBOX__CLUSTERING_HPP_

#include "pseudobox/aggregation.hpp"
#include "pseudobox/box_fitting.hpp"
#include "pseudobox/dbscan.hpp"
#include "pseudobox/errors.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

namespace pseudobox
{

struct ClusterParams
{
  /// Candidate radii per foreground class, meters.
  std::map<int, std::vector<double>> candidate_radii;
  std::size_t min_pts{5};
  /// Minimum points for a cluster to be fitted, per class.
  std::map<int, std::size_t> min_cluster_size;
  double yaw_step_deg{1.0};
  FitCriterion fit_criterion{FitCriterion::kCloseness};

  void validate() const
  {
    if (min_pts < 1) {
      throw ConfigError("clustering.min_pts: must be >= 1");
    }
    if (!(yaw_step_deg > 0.0) || yaw_step_deg > 90.0) {
      throw ConfigError("clustering.yaw_step_deg: must be in (0, 90]");
    }
    for (const auto & [cls, radii] : candidate_radii) {
      const std::string field = "clustering.candidate_radii[" + std::to_string(cls) + "]";
      if (cls <= kBackgroundClass) {
        throw ConfigError(field + ": class id must be a foreground class (> 0)");
      }
      if (radii.empty()) {
        throw ConfigError(field + ": at least one radius required");
      }
      for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!(radii[k] > 0.0)) {
          throw ConfigError(field + ": radii must be > 0");
        }
        if (k > 0 && !(radii[k] > radii[k - 1])) {
          throw ConfigError(field + ": radii must be strictly ascending without duplicates");
        }
      }
    }
  }

  [[nodiscard]] std::size_t min_cluster_size_for(int class_id) const
  {
    const auto it = min_cluster_size.find(class_id);
    return it == min_cluster_size.end() ? std::size_t{1} : std::max<std::size_t>(1, it->second);
  }
};

struct BoxCandidate
{
  Box3D box;
  double radius_used{0.0};
  /// Indices into the dense cloud, ascending.
  std::vector<std::size_t> cluster_point_indices;

  [[nodiscard]] int class_id() const noexcept {return box.class_id();}
};

/// Dense-cloud indices of the foreground points of one class, in a canonical
/// order that depends only on point values.
inline std::vector<std::size_t> canonical_class_indices(
  std::span<const SemanticPoint> points, int class_id)
{
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].class_id == class_id) {
      idx.push_back(i);
    }
  }
  std::sort(
    idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto & p = points[a];
      const auto & q = points[b];
      return std::tie(p.x, p.y, p.z, p.frame_index, a) < std::tie(q.x, q.y, q.z, q.frame_index, b);
    });
  return idx;
}

/// Cluster one class at one radius and fit a box to every cluster.
inline std::vector<BoxCandidate> cluster_class_at_radius(
  std::span<const SemanticPoint> points, std::span<const std::size_t> class_indices,
  int class_id, double radius, const ClusterParams & params)
{
  std::vector<std::array<double, 2>> bev(class_indices.size());
  for (std::size_t k = 0; k < class_indices.size(); ++k) {
    bev[k] = {points[class_indices[k]].x, points[class_indices[k]].y};
  }
  const std::vector<int> labels = dbscan<2>(bev, radius, params.min_pts);
  const int clusters = cluster_count(labels);
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(clusters));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != kNoise) {
      members[static_cast<std::size_t>(labels[k])].push_back(k);
    }
  }
  FitOptions fit;
  fit.yaw_step_deg = params.yaw_step_deg;
  fit.criterion = params.fit_criterion;
  fit.min_cluster_size = params.min_cluster_size_for(class_id);
  std::vector<BoxCandidate> out;
  std::vector<SemanticPoint> cluster;
  for (const auto & m : members) {
    cluster.clear();
    for (std::size_t k : m) {
      cluster.push_back(points[class_indices[k]]);
    }
    auto box = fit_box(cluster, class_id, fit);
    if (!box) {
      continue;
    }
    BoxCandidate cand{*box, radius, {}};
    cand.cluster_point_indices.reserve(m.size());
    for (std::size_t k : m) {
      cand.cluster_point_indices.push_back(class_indices[k]);
    }
    std::sort(cand.cluster_point_indices.begin(), cand.cluster_point_indices.end());
    out.push_back(std::move(cand));
  }
  return out;
}

/// Union over classes and candidate radii of BEV DBSCAN clusters fitted with
/// oriented boxes. Output is ordered by class, then radius, then cluster.
inline std::vector<BoxCandidate> multi_scale_cluster(
  const DenseCloud & dense, const ClusterParams & params)
{
  params.validate();
  std::vector<BoxCandidate> out;
  for (const auto & [cls, radii] : params.candidate_radii) {
    const auto idx = canonical_class_indices(dense.points, cls);
    if (idx.empty()) {
      continue;
    }
    for (double r : radii) {
      auto cands = cluster_class_at_radius(dense.points, idx, cls, r, params);
      out.insert(
        out.end(), std::make_move_iterator(cands.begin()), std::make_move_iterator(cands.end()));
    }
  }
  return out;
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__CLUSTERING_HPP_
