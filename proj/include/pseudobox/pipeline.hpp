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

#ifndef PSEUDOBOX__PIPELINE_HPP_
#define PSEUDOBOX__PIPELINE_HPP_

#include "pseudobox/aggregation.hpp"
#include "pseudobox/clustering.hpp"
#include "pseudobox/config.hpp"
#include "pseudobox/nms.hpp"
#include "pseudobox/parallel.hpp"
#include "pseudobox/point_index.hpp"
#include "pseudobox/scoring.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <span>
#include <tuple>
#include <vector>

namespace pseudobox
{

/// Foreground points split by class, each class in a canonical value order
/// and indexed in BEV. Scoring a box only looks at its own class.
class ScoringContext
{
public:
  explicit ScoringContext(std::span<const SemanticPoint> points)
  {
    for (const auto & p : points) {
      if (p.is_foreground()) {
        classes_[p.class_id].points.push_back(p);
      }
    }
    for (auto & [cls, entry] : classes_) {
      std::sort(
        entry.points.begin(), entry.points.end(), [](const SemanticPoint & a,
        const SemanticPoint & b) {
          return std::tie(a.x, a.y, a.z, a.frame_index) < std::tie(b.x, b.y, b.z, b.frame_index);
        });
      entry.index = std::make_unique<BevPointIndex>(entry.points);
    }
  }

  ScoringContext(const ScoringContext &) = delete;
  ScoringContext & operator=(const ScoringContext &) = delete;
  ScoringContext(ScoringContext &&) = default;
  ScoringContext & operator=(ScoringContext &&) = default;

  /// Points of `class_id` inside `box`, canonical order.
  [[nodiscard]] std::vector<SemanticPoint> points_in_box(const Box3D & box, int class_id) const
  {
    const auto it = classes_.find(class_id);
    if (it == classes_.end()) {
      return {};
    }
    return it->second.index->points_in_box(box);
  }

  [[nodiscard]] ScoreBreakdown score(const Box3D & box, const PipelineConfig & cfg) const
  {
    const auto pts = points_in_box(box, box.class_id());
    return msf_score(box, pts, cfg.meta_for(box.class_id()), cfg.scoring);
  }

private:
  struct Entry
  {
    std::vector<SemanticPoint> points;
    std::unique_ptr<BevPointIndex> index;
  };
  std::map<int, Entry> classes_;
};

inline std::vector<ScoredCandidate> score_candidates(
  std::vector<BoxCandidate> candidates, const ScoringContext & ctx, const PipelineConfig & cfg)
{
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (auto & c : candidates) {
    const ScoreBreakdown s = ctx.score(c.box, cfg);
    out.push_back(ScoredCandidate{std::move(c), s});
  }
  return out;
}

struct FrameLabels
{
  int frame_id{0};
  std::size_t candidate_count{0};
  std::vector<PseudoLabel> labels;
};

/// Aggregate -> multi-radius cluster -> score -> NMS for one target frame.
inline FrameLabels generate_frame_labels(
  const Sequence & sequence, std::size_t target, const PipelineConfig & cfg)
{
  const DenseCloud dense = aggregate_window(sequence, target, cfg.aggregation);
  auto candidates = multi_scale_cluster(dense, cfg.clustering);
  FrameLabels out;
  out.frame_id = dense.target_frame_id;
  out.candidate_count = candidates.size();
  const ScoringContext ctx(dense.points);
  const auto scored = score_candidates(std::move(candidates), ctx, cfg);
  out.labels = nms_select(scored, cfg.nms_iou, dense.target_frame_id, cfg.thresholds);
  return out;
}

/// Labels for every frame of a sequence; frames run in parallel and the
/// result is independent of the thread count.
inline std::vector<FrameLabels> generate_sequence_labels(
  const Sequence & sequence, const PipelineConfig & cfg, unsigned threads = 1)
{
  cfg.validate();
  sequence.validate();
  std::vector<FrameLabels> out(sequence.frames.size());
  parallel_for(
    sequence.frames.size(), threads,
    [&](std::size_t i) {out[i] = generate_frame_labels(sequence, i, cfg);});
  return out;
}

/// Scoring context over a frame's aggregated window.
inline ScoringContext frame_scoring_context(
  const Sequence & sequence, std::size_t target, const PipelineConfig & cfg)
{
  const DenseCloud dense = aggregate_window(sequence, target, cfg.aggregation);
  return ScoringContext(dense.points);
}

/// Recompute score breakdowns and weights of existing labels of one frame.
inline std::vector<PseudoLabel> rescore_labels(
  std::vector<PseudoLabel> labels, const ScoringContext & ctx, const PipelineConfig & cfg)
{
  for (auto & l : labels) {
    l.scores = ctx.score(l.box, cfg);
    l.weight = label_weight(l.scores.msf, cfg.thresholds);
  }
  return labels;
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__PIPELINE_HPP_
