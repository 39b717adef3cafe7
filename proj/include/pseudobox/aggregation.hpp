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

#ifndef PSEUDOBOX__AGGREGATION_HPP_
#define PSEUDOBOX__AGGREGATION_HPP_

#include "pseudobox/errors.hpp"
#include "pseudobox/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pseudobox
{

struct Frame
{
  int frame_id{0};
  double timestamp{0.0};
  /// Sensor -> global. Missing poses are reported when the frame is used.
  std::optional<Pose> pose;
  /// Sensor coordinates.
  std::vector<SemanticPoint> points;
};

struct Sequence
{
  std::string name;
  std::vector<Frame> frames;
  std::map<int, std::string> class_names;

  void validate() const
  {
    for (std::size_t k = 1; k < frames.size(); ++k) {
      if (frames[k].frame_id <= frames[k - 1].frame_id) {
        throw PipelineError(
                "sequence '" + name + "': frame ids must be strictly increasing (frame " +
                std::to_string(frames[k].frame_id) + " follows " +
                std::to_string(frames[k - 1].frame_id) + ")");
      }
    }
  }
};

enum class CellState : std::uint8_t
{
  kEmpty,
  kStatic,
  kMoving,
};

/// Per-cell longest run of consecutive frames with foreground occupancy.
struct MotionGrid
{
  BevGridSpec spec;
  int epsilon{1};
  std::vector<int> max_run;
  std::vector<CellState> state;

  [[nodiscard]] CellState state_of(const CellIndex & cell) const
  {
    return state[linear_index(cell, spec)];
  }

  /// Empty when (x, y) is outside the grid.
  [[nodiscard]] CellState state_at(double x, double y) const
  {
    const auto cell = grid_index(x, y, spec);
    return cell ? state_of(*cell) : CellState::kEmpty;
  }
};

/// Aggregated cloud in the target frame's coordinates. frame_index is the
/// source frame's offset from the target.
struct DenseCloud
{
  int target_frame_id{0};
  std::vector<SemanticPoint> points;
};

struct AggregationParams
{
  /// Window half-size n; the window spans 2n+1 frames.
  int half_window{5};
  /// Minimum run length for a static cell; 0 selects ceil(0.6 * window length).
  int epsilon{0};
  double cell_size{0.3};
  /// Half-width of the square BEV grid around the target frame.
  double range{80.0};
};

/// ceil(0.6 * window_length), at least 1.
inline int default_epsilon(std::size_t window_length)
{
  return std::max(1, static_cast<int>((6 * window_length + 9) / 10));
}

inline int effective_epsilon(const AggregationParams & params, std::size_t window_length)
{
  return params.epsilon > 0 ? params.epsilon : default_epsilon(window_length);
}

struct WindowRange
{
  std::size_t begin{0};
  std::size_t end{0};
  std::size_t target{0};

  [[nodiscard]] std::size_t size() const noexcept {return end - begin;}
  /// Position of the target inside [begin, end).
  [[nodiscard]] std::size_t target_offset() const noexcept {return target - begin;}
};

/// Frames [target - n, target + n] clipped to the sequence.
inline WindowRange window_around(std::size_t frame_count, std::size_t target, int half_window)
{
  const std::size_t n = static_cast<std::size_t>(std::max(0, half_window));
  WindowRange w;
  w.target = target;
  w.begin = target >= n ? target - n : 0;
  w.end = std::min(frame_count, target + n + 1);
  return w;
}

inline const Pose & require_pose(const Frame & frame)
{
  if (!frame.pose) {
    throw PipelineError("missing pose for frame " + std::to_string(frame.frame_id));
  }
  return *frame.pose;
}

/// Transform every frame into the coordinates reached by `global_to_reference`,
/// tagging frame_index = position - target_position.
inline std::vector<std::vector<SemanticPoint>> register_frames(
  std::span<const Frame> frames, const Pose & global_to_reference, std::size_t target_position)
{
  std::vector<std::vector<SemanticPoint>> out(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Pose to_reference = global_to_reference * require_pose(frames[k]);
    const int offset = static_cast<int>(k) - static_cast<int>(target_position);
    out[k] = transform_points(frames[k].points, to_reference);
    for (auto & p : out[k]) {
      p.frame_index = offset;
    }
  }
  return out;
}

/// Classify BEV cells of an already-registered window. A cell is static when
/// some run of consecutive frames with >= 1 foreground point in it reaches
/// `epsilon`, moving when it was occupied but never for that long.
inline MotionGrid build_motion_grid(
  std::span<const std::vector<SemanticPoint>> registered, const BevGridSpec & spec, int epsilon)
{
  if (registered.empty()) {
    throw PipelineError("empty aggregation window");
  }
  if (epsilon < 1) {
    throw ConfigError("motion grid: epsilon must be >= 1");
  }
  spec.validate();

  MotionGrid grid;
  grid.spec = spec;
  grid.epsilon = epsilon;
  grid.max_run.assign(spec.cell_count(), 0);
  grid.state.assign(spec.cell_count(), CellState::kEmpty);

  std::vector<int> run(spec.cell_count(), 0);
  std::vector<int> last_seen(spec.cell_count(), -2);
  for (std::size_t k = 0; k < registered.size(); ++k) {
    const int frame = static_cast<int>(k);
    for (const auto & p : registered[k]) {
      if (!p.is_foreground()) {
        continue;
      }
      const auto cell = grid_index(p.x, p.y, spec);
      if (!cell) {
        continue;
      }
      const std::size_t c = linear_index(*cell, spec);
      if (last_seen[c] == frame) {
        continue;
      }
      run[c] = (last_seen[c] == frame - 1) ? run[c] + 1 : 1;
      last_seen[c] = frame;
      grid.max_run[c] = std::max(grid.max_run[c], run[c]);
    }
  }
  for (std::size_t c = 0; c < grid.max_run.size(); ++c) {
    if (grid.max_run[c] == 0) {
      grid.state[c] = CellState::kEmpty;
    } else if (grid.max_run[c] >= epsilon) {
      grid.state[c] = CellState::kStatic;
    } else {
      grid.state[c] = CellState::kMoving;
    }
  }
  return grid;
}

/// Keep every point of the target frame; from other frames drop foreground
/// points that fall in moving cells. Background points are always kept.
inline DenseCloud build_dense_cloud(
  std::span<const std::vector<SemanticPoint>> registered, std::size_t target_position,
  int target_frame_id, const MotionGrid & grid)
{
  DenseCloud cloud;
  cloud.target_frame_id = target_frame_id;
  std::size_t total = 0;
  for (const auto & f : registered) {
    total += f.size();
  }
  cloud.points.reserve(total);
  for (std::size_t k = 0; k < registered.size(); ++k) {
    if (k == target_position) {
      cloud.points.insert(cloud.points.end(), registered[k].begin(), registered[k].end());
      continue;
    }
    for (const auto & p : registered[k]) {
      if (p.is_foreground() && grid.state_at(p.x, p.y) == CellState::kMoving) {
        continue;
      }
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

inline DenseCloud build_dense_cloud(
  std::span<const Frame> window, std::size_t target_position, const MotionGrid & grid)
{
  if (window.empty()) {
    throw PipelineError("empty aggregation window");
  }
  const Pose global_to_target = require_pose(window[target_position]).inverse();
  const auto registered = register_frames(window, global_to_target, target_position);
  return build_dense_cloud(registered, target_position, window[target_position].frame_id, grid);
}

/// Window selection, registration, motion grid and aggregation for one target.
inline DenseCloud aggregate_window(
  const Sequence & sequence, std::size_t target, const AggregationParams & params)
{
  if (sequence.frames.empty()) {
    throw PipelineError("empty aggregation window");
  }
  const WindowRange w = window_around(sequence.frames.size(), target, params.half_window);
  const std::span<const Frame> frames(sequence.frames.data() + w.begin, w.size());
  const Pose global_to_target = require_pose(sequence.frames[target]).inverse();
  const auto registered = register_frames(frames, global_to_target, w.target_offset());
  const auto spec = BevGridSpec::centered(params.range, params.cell_size);
  const MotionGrid grid =
    build_motion_grid(registered, spec, effective_epsilon(params, w.size()));
  return build_dense_cloud(registered, w.target_offset(), sequence.frames[target].frame_id, grid);
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__AGGREGATION_HPP_
