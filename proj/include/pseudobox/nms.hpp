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

#ifndef PSEUDOBOX__NMS_HPP_
#define PSEUDOBOX__NMS_HPP_

#include "pseudobox/clustering.hpp"
#include "pseudobox/iou.hpp"
#include "pseudobox/scoring.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <vector>

namespace pseudobox
{

struct ScoredCandidate
{
  BoxCandidate candidate;
  ScoreBreakdown scores;
};

/// Greedy per-class suppression. Candidates are visited by msf descending,
/// then occ descending, then input index; a candidate survives when its BEV
/// IoU with every survivor of its class is below `iou_threshold`. Returns the
/// surviving input indices in visiting order, grouped by ascending class id.
inline std::vector<std::size_t> nms_indices(
  std::span<const Box3D> boxes, std::span<const ScoreBreakdown> scores, double iou_threshold)
{
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    by_class[boxes[i].class_id()].push_back(i);
  }
  std::vector<std::size_t> kept_all;
  for (auto & [cls, members] : by_class) {
    std::stable_sort(
      members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a].msf != scores[b].msf) {
          return scores[a].msf > scores[b].msf;
        }
        if (scores[a].occ != scores[b].occ) {
          return scores[a].occ > scores[b].occ;
        }
        return a < b;
      });
    std::vector<std::size_t> kept;
    for (std::size_t i : members) {
      const bool suppressed = std::any_of(
        kept.begin(), kept.end(),
        [&](std::size_t k) {return bev_iou(boxes[i], boxes[k]) >= iou_threshold;});
      if (!suppressed) {
        kept.push_back(i);
      }
    }
    kept_all.insert(kept_all.end(), kept.begin(), kept.end());
  }
  return kept_all;
}

/// NMS over scored candidates; survivors become init-sourced pseudo-labels
/// weighted from their combined score.
inline std::vector<PseudoLabel> nms_select(
  std::span<const ScoredCandidate> candidates, double iou_threshold, int frame_id,
  const LabelThresholds & thresholds = {})
{
  thresholds.validate();
  std::vector<Box3D> boxes;
  std::vector<ScoreBreakdown> scores;
  boxes.reserve(candidates.size());
  scores.reserve(candidates.size());
  for (const auto & c : candidates) {
    boxes.push_back(c.candidate.box);
    scores.push_back(c.scores);
  }
  std::vector<PseudoLabel> out;
  for (std::size_t i : nms_indices(boxes, scores, iou_threshold)) {
    out.push_back(
      PseudoLabel{boxes[i], scores[i], label_weight(scores[i].msf, thresholds),
        LabelSource::kInit, frame_id});
  }
  return out;
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__NMS_HPP_
