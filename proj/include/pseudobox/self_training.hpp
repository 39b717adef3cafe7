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

#ifndef PSEUDOBOX__SELF_TRAINING_HPP_
#define PSEUDOBOX__SELF_TRAINING_HPP_

#include "pseudobox/aggregation.hpp"
#include "pseudobox/config.hpp"
#include "pseudobox/dbscan.hpp"
#include "pseudobox/iou.hpp"
#include "pseudobox/parallel.hpp"
#include "pseudobox/pipeline.hpp"
#include "pseudobox/point_index.hpp"
#include "pseudobox/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pseudobox
{

/// A detector output box in its frame's sensor coordinates.
struct Prediction
{
  Box3D box;
  double confidence{1.0};
  int frame_id{0};

  void validate() const
  {
    if (!std::isfinite(confidence) || confidence < 0.0 || confidence > 1.0) {
      throw FormatError(
              "prediction in frame " + std::to_string(frame_id) + ": confidence must be in [0, 1]");
    }
  }
};

/// Semantic consistency check against a frame's labelled points.
///
/// A prediction is dropped when its box holds no foreground point, when the
/// most frequent foreground class inside differs from the predicted class,
/// or when two or more foreground classes are present (at least
/// `min_points` points and `min_fraction` of the box's foreground each).
inline std::vector<Prediction> semantic_consistency_filter(
  std::span<const Prediction> preds, const BevPointIndex & frame_index, const ScfOptions & options)
{
  std::vector<Prediction> out;
  const auto points = frame_index.points();
  for (const auto & pred : preds) {
    std::map<int, std::size_t> counts;
    std::size_t foreground = 0;
    for (std::size_t i : frame_index.indices_in_box(pred.box)) {
      if (points[i].is_foreground()) {
        ++counts[points[i].class_id];
        ++foreground;
      }
    }
    if (foreground == 0) {
      continue;
    }
    int majority = counts.begin()->first;
    std::size_t present = 0;
    for (const auto & [cls, n] : counts) {
      if (n > counts[majority]) {
        majority = cls;
      }
      if (n >= options.min_points &&
        static_cast<double>(n) >= options.min_fraction * static_cast<double>(foreground))
      {
        ++present;
      }
    }
    if (majority != pred.box.class_id() || present >= 2) {
      continue;
    }
    out.push_back(pred);
  }
  return out;
}

inline std::vector<Prediction> semantic_consistency_filter(
  std::span<const Prediction> preds, const Frame & frame, const ScfOptions & options)
{
  const BevPointIndex index(frame.points);
  return semantic_consistency_filter(preds, index, options);
}

/// Indices of the points kept for training: all background points, plus the
/// foreground points inside at least one label. Ascending.
inline std::vector<std::size_t> box_absent_foreground_filter(
  const Frame & frame, std::span<const Box3D> labels)
{
  std::vector<char> keep(frame.points.size(), 0);
  for (std::size_t i = 0; i < frame.points.size(); ++i) {
    keep[i] = frame.points[i].is_foreground() ? 0 : 1;
  }
  if (!labels.empty()) {
    const BevPointIndex index(frame.points);
    for (const auto & box : labels) {
      for (std::size_t i : index.indices_in_box(box)) {
        keep[i] = 1;
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) {
      out.push_back(i);
    }
  }
  return out;
}

/// Motion state of a box: each foreground point inside votes for the state
/// of its cell (ties count as moving). A box without foreground inside takes
/// the state of its centre cell.
inline CellState box_motion_state(
  const Box3D & box, const MotionGrid & grid, const BevPointIndex & foreground)
{
  const auto points = foreground.points();
  std::size_t n_static = 0;
  std::size_t n_moving = 0;
  for (std::size_t i : foreground.indices_in_box(box)) {
    if (!points[i].is_foreground()) {
      continue;
    }
    const CellState st = grid.state_at(points[i].x, points[i].y);
    n_static += st == CellState::kStatic;
    n_moving += st == CellState::kMoving;
  }
  if (n_static == 0 && n_moving == 0) {
    return grid.state_at(box.cx(), box.cy());
  }
  return n_static > n_moving ? CellState::kStatic : CellState::kMoving;
}

/// Static/moving segmentation of one frame's aggregation window, in the
/// target frame's coordinates.
struct WindowSegmentation
{
  MotionGrid grid;
  /// Registered foreground points of every frame in the window.
  std::vector<SemanticPoint> foreground;
};

inline WindowSegmentation segment_window(
  const Sequence & sequence, std::size_t target, const AggregationParams & params)
{
  if (sequence.frames.empty()) {
    throw PipelineError("empty aggregation window");
  }
  const WindowRange w = window_around(sequence.frames.size(), target, params.half_window);
  const std::span<const Frame> frames(sequence.frames.data() + w.begin, w.size());
  const auto registered =
    register_frames(frames, require_pose(sequence.frames[target]).inverse(), w.target_offset());
  WindowSegmentation seg;
  seg.grid = build_motion_grid(
    registered, BevGridSpec::centered(params.range, params.cell_size),
    effective_epsilon(params, w.size()));
  for (const auto & f : registered) {
    for (const auto & p : f) {
      if (p.is_foreground()) {
        seg.foreground.push_back(p);
      }
    }
  }
  return seg;
}

/// Box after fine-tuning, in its frame's sensor coordinates.
struct RefinedBox
{
  Box3D box;
  LabelSource source{LabelSource::kInit};
  double confidence{1.0};
};

/// Cross-frame refinement of static objects.
///
/// Each prediction is classified on the motion grid of its own frame's
/// aggregation window. Static ones are moved to global coordinates and
/// grouped per class by connected components of BEV IoU > `stcf_group_iou`.
/// Every group member is scored against the static foreground of the whole
/// sequence; the best box replaces the group in every frame where at least
/// one foreground point of its class falls inside it, displacing any
/// overlapping same-class box there. Other moving predictions pass through
/// unchanged.
inline std::vector<std::vector<RefinedBox>> spatial_temporal_fine_tune(
  const std::vector<std::vector<Prediction>> & preds, const Sequence & sequence,
  const PipelineConfig & cfg, unsigned threads = 1)
{
  const std::size_t nf = sequence.frames.size();
  if (preds.size() != nf) {
    throw PipelineError("stcf: prediction lists do not match the sequence frame count");
  }
  std::vector<Pose> poses;
  poses.reserve(nf);
  for (const auto & f : sequence.frames) {
    poses.push_back(require_pose(f));
  }

  struct FrameSplit
  {
    std::vector<Prediction> static_preds;
    std::vector<RefinedBox> moving;
    std::vector<SemanticPoint> static_points;
  };
  std::vector<FrameSplit> split(nf);
  parallel_for(
    nf, threads, [&](std::size_t k) {
      const WindowSegmentation seg = segment_window(sequence, k, cfg.aggregation);
      const BevPointIndex index(seg.foreground);
      FrameSplit & out = split[k];
      for (const auto & p : preds[k]) {
        if (box_motion_state(p.box, seg.grid, index) == CellState::kStatic) {
          out.static_preds.push_back(p);
        } else {
          out.moving.push_back(RefinedBox{p.box, LabelSource::kInit, p.confidence});
        }
      }
      for (const auto & p : sequence.frames[k].points) {
        if (p.is_foreground() && seg.grid.state_at(p.x, p.y) == CellState::kStatic) {
          out.static_points.push_back(transform_point(p, poses[k]));
        }
      }
    });

  std::vector<std::vector<RefinedBox>> out(nf);
  struct StaticEntry
  {
    Box3D global;
    double confidence;
  };
  std::vector<StaticEntry> entries;
  std::vector<SemanticPoint> static_points;
  for (std::size_t k = 0; k < nf; ++k) {
    out[k] = std::move(split[k].moving);
    for (const auto & p : split[k].static_preds) {
      entries.push_back(StaticEntry{transform_box(p.box, poses[k]), p.confidence});
    }
    static_points.insert(
      static_points.end(), split[k].static_points.begin(), split[k].static_points.end());
  }
  if (entries.empty()) {
    return out;
  }
  const ScoringContext static_ctx(static_points);

  detail::DisjointSet groups(entries.size());
  for (std::size_t a = 0; a < entries.size(); ++a) {
    for (std::size_t b = a + 1; b < entries.size(); ++b) {
      if (entries[a].global.class_id() == entries[b].global.class_id() &&
        bev_iou(entries[a].global, entries[b].global) > cfg.refine.stcf_group_iou)
      {
        groups.unite(a, b);
      }
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    by_root[groups.find(e)].push_back(e);
  }
  std::vector<std::vector<std::size_t>> members;
  members.reserve(by_root.size());
  for (auto & [root, group] : by_root) {
    members.push_back(std::move(group));
  }

  std::vector<BevPointIndex> frame_index;
  frame_index.reserve(nf);
  for (const auto & f : sequence.frames) {
    frame_index.emplace_back(f.points);
  }

  // Broadcast per group in parallel, merged in group order.
  std::vector<std::vector<std::pair<std::size_t, RefinedBox>>> broadcast(members.size());
  parallel_for(
    members.size(), threads, [&](std::size_t m) {
      const auto & group = members[m];
      std::size_t best = group.front();
      ScoreBreakdown best_score = static_ctx.score(entries[best].global, cfg);
      double confidence = entries[best].confidence;
      for (std::size_t g = 1; g < group.size(); ++g) {
        const std::size_t e = group[g];
        const ScoreBreakdown s = static_ctx.score(entries[e].global, cfg);
        confidence = std::max(confidence, entries[e].confidence);
        if (s.msf > best_score.msf || (s.msf == best_score.msf && s.occ > best_score.occ)) {
          best = e;
          best_score = s;
        }
      }
      const Box3D & winner = entries[best].global;
      for (std::size_t k = 0; k < nf; ++k) {
        const Box3D local = transform_box(winner, poses[k].inverse());
        const auto pts = frame_index[k].points();
        const auto inside = frame_index[k].indices_in_box(local);
        const bool supported = std::any_of(
          inside.begin(), inside.end(),
          [&](std::size_t i) {return pts[i].class_id == winner.class_id();});
        if (supported) {
          broadcast[m].emplace_back(k, RefinedBox{local, LabelSource::kStcfRefined, confidence});
        }
      }
    });
  // Broadcast boxes replace overlapping same-class passthrough boxes.
  std::vector<std::vector<RefinedBox>> placed(nf);
  for (const auto & list : broadcast) {
    for (const auto & [k, box] : list) {
      placed[k].push_back(box);
    }
  }
  for (std::size_t k = 0; k < nf; ++k) {
    std::erase_if(
      out[k], [&](const RefinedBox & r) {
        return std::any_of(
          placed[k].begin(), placed[k].end(), [&](const RefinedBox & b) {
            return b.box.class_id() == r.box.class_id() &&
            bev_iou(b.box, r.box) > cfg.refine.stcf_group_iou;
          });
      });
    out[k].insert(out[k].end(), placed[k].begin(), placed[k].end());
  }
  return out;
}

struct RefinedLabelSet
{
  std::vector<std::vector<PseudoLabel>> labels;
  std::vector<std::vector<std::size_t>> retained;
};

/// Group a flat prediction list by frame, aligned with `sequence.frames`.
/// Predictions for unknown frame ids raise PipelineError.
inline std::vector<std::vector<Prediction>> predictions_by_frame(
  const Sequence & sequence, std::span<const Prediction> preds)
{
  std::map<int, std::size_t> slot;
  for (std::size_t k = 0; k < sequence.frames.size(); ++k) {
    slot[sequence.frames[k].frame_id] = k;
  }
  std::vector<std::vector<Prediction>> out(sequence.frames.size());
  for (const auto & p : preds) {
    const auto it = slot.find(p.frame_id);
    if (it == slot.end()) {
      throw PipelineError(
              "prediction references unknown frame " + std::to_string(p.frame_id) +
              " in sequence '" + sequence.name + "'");
    }
    out[it->second].push_back(p);
  }
  return out;
}

/// One refinement round: confidence floor -> semantic consistency filter ->
/// static-object fine-tuning -> scoring and weights -> box-absent foreground
/// filter. Stages can be disabled through RefineOptions.
inline RefinedLabelSet refine_round(
  const Sequence & sequence, const std::vector<std::vector<Prediction>> & preds,
  const PipelineConfig & cfg, unsigned threads = 1)
{
  cfg.validate();
  sequence.validate();
  const std::size_t nf = sequence.frames.size();
  if (preds.size() != nf) {
    throw PipelineError("refine: prediction lists do not match the sequence frame count");
  }

  std::vector<std::vector<Prediction>> filtered(nf);
  parallel_for(
    nf, threads, [&](std::size_t k) {
      std::vector<Prediction> kept;
      for (const auto & p : preds[k]) {
        p.validate();
        if (p.confidence >= cfg.refine.confidence_floor) {
          kept.push_back(p);
        }
      }
      if (cfg.refine.enable_scf) {
        kept = semantic_consistency_filter(kept, sequence.frames[k], cfg.refine.scf);
      }
      filtered[k] = std::move(kept);
    });

  std::vector<std::vector<RefinedBox>> refined(nf);
  if (cfg.refine.enable_stcf && nf > 0) {
    refined = spatial_temporal_fine_tune(filtered, sequence, cfg, threads);
  } else {
    for (std::size_t k = 0; k < nf; ++k) {
      for (const auto & p : filtered[k]) {
        refined[k].push_back(RefinedBox{p.box, LabelSource::kInit, p.confidence});
      }
    }
  }

  RefinedLabelSet result;
  result.labels.resize(nf);
  result.retained.resize(nf);
  parallel_for(
    nf, threads, [&](std::size_t k) {
      const Frame & frame = sequence.frames[k];
      std::vector<PseudoLabel> labels;
      std::vector<Box3D> boxes;
      if (!refined[k].empty()) {
        const ScoringContext ctx = frame_scoring_context(sequence, k, cfg);
        for (const auto & r : refined[k]) {
          const ScoreBreakdown s = ctx.score(r.box, cfg);
          labels.push_back(
            PseudoLabel{r.box, s, label_weight(s.msf, cfg.thresholds), r.source, frame.frame_id});
          boxes.push_back(r.box);
        }
      }
      if (cfg.refine.enable_baf) {
        result.retained[k] = box_absent_foreground_filter(frame, boxes);
      } else {
        result.retained[k].resize(frame.points.size());
        for (std::size_t i = 0; i < frame.points.size(); ++i) {
          result.retained[k][i] = i;
        }
      }
      result.labels[k] = std::move(labels);
    });
  return result;
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__SELF_TRAINING_HPP_
