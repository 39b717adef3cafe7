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

#ifndef PSEUDOBOX__EVALUATION_HPP_
#define PSEUDOBOX__EVALUATION_HPP_

#include "pseudobox/errors.hpp"
#include "pseudobox/geometry.hpp"
#include "pseudobox/iou.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace pseudobox
{

struct EvalOptions
{
  std::vector<double> iou_thresholds{0.3, 0.5, 0.7};
  /// Lower edges of the ego-distance bins; the last bin is open-ended.
  std::vector<double> range_bin_edges{0.0, 30.0, 50.0};
  /// Matching threshold for the error statistics and the IoU histogram.
  double error_match_iou{0.1};
  int histogram_bins{20};
  bool class_agnostic{false};

  void validate() const
  {
    if (iou_thresholds.empty()) {
      throw ConfigError("evaluation.iou_thresholds: at least one threshold required");
    }
    for (double t : iou_thresholds) {
      if (!(t > 0.0) || t > 1.0) {
        throw ConfigError("evaluation.iou_thresholds: thresholds must be in (0, 1]");
      }
    }
    if (range_bin_edges.empty() || range_bin_edges.front() != 0.0) {
      throw ConfigError("evaluation.range_bins: must start at 0");
    }
    for (std::size_t k = 1; k < range_bin_edges.size(); ++k) {
      if (!(range_bin_edges[k] > range_bin_edges[k - 1])) {
        throw ConfigError("evaluation.range_bins: edges must be strictly ascending");
      }
    }
    if (!(error_match_iou > 0.0) || error_match_iou > 1.0) {
      throw ConfigError("evaluation.error_match_iou: must be in (0, 1]");
    }
    if (histogram_bins < 1) {
      throw ConfigError("evaluation.histogram_bins: must be >= 1");
    }
  }
};

/// A label (or prediction) with the score that orders it for matching.
struct ScoredBox
{
  Box3D box;
  double score{0.0};
};

/// Ground-truth box with the bookkeeping the evaluator needs.
struct GroundTruthBox
{
  Box3D box;
  int object_id{-1};
  bool is_static{true};
};

struct Matching
{
  /// Per label: matched gt index or -1.
  std::vector<int> label_to_gt;
  /// Per label: IoU with its matched gt (0 when unmatched).
  std::vector<double> iou;
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t fn{0};
};

namespace detail
{

inline auto geometry_key(const Box3D & b)
{
  return std::make_tuple(b.cx(), b.cy(), b.cz(), b.length(), b.width(), b.height(), b.yaw(),
           b.class_id());
}

}  // namespace detail

/// Greedy one-to-one matching with 3D IoU. Labels are visited by score
/// descending; each takes the unclaimed gt of the same class (any class when
/// class_agnostic) with the highest IoU >= threshold. Ties are broken by box
/// geometry, then index, so the result does not depend on input order.
inline Matching match_labels(
  std::span<const ScoredBox> labels, std::span<const Box3D> gts, double iou_threshold,
  bool class_agnostic = false)
{
  Matching m;
  m.label_to_gt.assign(labels.size(), -1);
  m.iou.assign(labels.size(), 0.0);
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(
    order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (labels[a].score != labels[b].score) {
        return labels[a].score > labels[b].score;
      }
      const auto ka = detail::geometry_key(labels[a].box);
      const auto kb = detail::geometry_key(labels[b].box);
      return ka != kb ? ka < kb : a < b;
    });
  std::vector<char> claimed(gts.size(), 0);
  for (std::size_t li : order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g]) {
        continue;
      }
      if (!class_agnostic && gts[g].class_id() != labels[li].box.class_id()) {
        continue;
      }
      const double v = iou_3d(labels[li].box, gts[g]);
      if (v < iou_threshold) {
        continue;
      }
      const bool better = v > best_iou ||
        (v == best_iou &&
        detail::geometry_key(gts[g]) < detail::geometry_key(gts[static_cast<std::size_t>(best)]));
      if (better) {
        best = static_cast<int>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      claimed[static_cast<std::size_t>(best)] = 1;
      m.label_to_gt[li] = best;
      m.iou[li] = best_iou;
      ++m.tp;
    } else {
      ++m.fp;
    }
  }
  m.fn = gts.size() - m.tp;
  return m;
}

struct ThresholdCounts
{
  double threshold{0.0};
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t fn{0};

  [[nodiscard]] std::optional<double> recall() const
  {
    if (tp + fn == 0) {
      return std::nullopt;
    }
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
  }

  [[nodiscard]] std::optional<double> precision() const
  {
    if (tp + fp == 0) {
      return std::nullopt;
    }
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
};

struct ErrorStats
{
  std::size_t count{0};
  double size_sum{0.0};
  double position_sum{0.0};
  double yaw_sum{0.0};

  void add(double size, double position, double yaw)
  {
    ++count;
    size_sum += size;
    position_sum += position;
    yaw_sum += yaw;
  }

  void merge(const ErrorStats & o)
  {
    count += o.count;
    size_sum += o.size_sum;
    position_sum += o.position_sum;
    yaw_sum += o.yaw_sum;
  }

  [[nodiscard]] std::optional<double> size_mae() const
  {
    return count ? std::optional<double>(size_sum / count) : std::nullopt;
  }
  [[nodiscard]] std::optional<double> position_mae() const
  {
    return count ? std::optional<double>(position_sum / count) : std::nullopt;
  }
  [[nodiscard]] std::optional<double> yaw_mae() const
  {
    return count ? std::optional<double>(yaw_sum / count) : std::nullopt;
  }
};

struct ClassReport
{
  std::vector<ThresholdCounts> thresholds;
  std::vector<std::size_t> iou_histogram;
  /// One entry per range bin.
  std::vector<ErrorStats> errors_by_range;
  ErrorStats errors;

  [[nodiscard]] const ThresholdCounts * at(double threshold) const
  {
    for (const auto & t : thresholds) {
      if (std::abs(t.threshold - threshold) < 1e-12) {
        return &t;
      }
    }
    return nullptr;
  }
};

struct EvalReport
{
  EvalOptions options;
  std::size_t frames{0};
  ClassReport overall;
  std::map<int, ClassReport> per_class;
};

struct FrameEvaluation
{
  std::vector<ScoredBox> labels;
  std::vector<Box3D> gts;
};

/// Size error: mean absolute difference of (l, w, h).
inline double size_error(const Box3D & a, const Box3D & b)
{
  return (std::abs(a.length() - b.length()) + std::abs(a.width() - b.width()) +
         std::abs(a.height() - b.height())) / 3.0;
}

/// BEV centre distance.
inline double position_error(const Box3D & a, const Box3D & b)
{
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

/// Heading error with headings folded to [0, pi), so opposite headings agree.
inline double yaw_error(const Box3D & a, const Box3D & b)
{
  return orientation_distance(a.yaw(), b.yaw());
}

inline std::size_t range_bin(double distance, std::span<const double> edges)
{
  std::size_t bin = 0;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (distance >= edges[k]) {
      bin = k;
    }
  }
  return bin;
}

namespace detail
{

inline ClassReport empty_class_report(const EvalOptions & o)
{
  ClassReport r;
  for (double t : o.iou_thresholds) {
    r.thresholds.push_back(ThresholdCounts{t, 0, 0, 0});
  }
  r.iou_histogram.assign(static_cast<std::size_t>(o.histogram_bins), 0);
  r.errors_by_range.assign(o.range_bin_edges.size(), ErrorStats{});
  return r;
}

inline void accumulate(
  ClassReport & report, std::span<const ScoredBox> labels, std::span<const Box3D> gts,
  const EvalOptions & o)
{
  for (std::size_t t = 0; t < o.iou_thresholds.size(); ++t) {
    const Matching m = match_labels(labels, gts, o.iou_thresholds[t], o.class_agnostic);
    report.thresholds[t].tp += m.tp;
    report.thresholds[t].fp += m.fp;
    report.thresholds[t].fn += m.fn;
  }
  const Matching m = match_labels(labels, gts, o.error_match_iou, o.class_agnostic);
  for (std::size_t li = 0; li < labels.size(); ++li) {
    if (m.label_to_gt[li] < 0) {
      continue;
    }
    const Box3D & gt = gts[static_cast<std::size_t>(m.label_to_gt[li])];
    const Box3D & lb = labels[li].box;
    const auto bins = static_cast<std::size_t>(o.histogram_bins);
    const auto hb = std::min(bins - 1, static_cast<std::size_t>(m.iou[li] * o.histogram_bins));
    ++report.iou_histogram[hb];
    const double s = size_error(lb, gt);
    const double p = position_error(lb, gt);
    const double y = yaw_error(lb, gt);
    report.errors.add(s, p, y);
    report.errors_by_range[range_bin(std::hypot(gt.cx(), gt.cy()), o.range_bin_edges)].add(s, p, y);
  }
}

}  // namespace detail

/// Aggregate matching statistics over frames. Per-class reports use only the
/// labels and ground truth of that class; the overall report matches all
/// boxes together.
inline EvalReport compute_report(std::span<const FrameEvaluation> frames, const EvalOptions & o)
{
  o.validate();
  EvalReport report;
  report.options = o;
  report.frames = frames.size();
  report.overall = detail::empty_class_report(o);
  for (const auto & f : frames) {
    for (const auto & l : f.labels) {
      if (!report.per_class.count(l.box.class_id())) {
        report.per_class.emplace(l.box.class_id(), detail::empty_class_report(o));
      }
    }
    for (const auto & g : f.gts) {
      if (!report.per_class.count(g.class_id())) {
        report.per_class.emplace(g.class_id(), detail::empty_class_report(o));
      }
    }
  }
  for (const auto & f : frames) {
    detail::accumulate(report.overall, f.labels, f.gts, o);
    if (o.class_agnostic) {
      continue;
    }
    for (auto & [cls, cr] : report.per_class) {
      std::vector<ScoredBox> labels;
      std::vector<Box3D> gts;
      for (const auto & l : f.labels) {
        if (l.box.class_id() == cls) {
          labels.push_back(l);
        }
      }
      for (const auto & g : f.gts) {
        if (g.class_id() == cls) {
          gts.push_back(g);
        }
      }
      detail::accumulate(cr, labels, gts, o);
    }
  }
  return report;
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__EVALUATION_HPP_
