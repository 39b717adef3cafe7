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

#include "pseudobox/aggregation.hpp"
#include "pseudobox/synthetic.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace pseudobox
{
namespace
{

BevGridSpec unit_grid()
{
  BevGridSpec spec;
  spec.origin_x = 0.0;
  spec.origin_y = 0.0;
  spec.cell_size = 1.0;
  spec.nx = 4;
  spec.ny = 4;
  return spec;
}

// One registered frame per entry; a foreground point at (0.5, 0.5) when occupied.
std::vector<std::vector<SemanticPoint>> occupancy(const std::vector<int> & pattern)
{
  std::vector<std::vector<SemanticPoint>> frames;
  for (int occ : pattern) {
    frames.emplace_back();
    if (occ) {
      frames.back().push_back({0.5, 0.5, 0.0, kVehicle, 0});
    }
    frames.back().push_back({2.5, 2.5, 0.0, kBackgroundClass, 0});
  }
  return frames;
}

TEST(MotionGrid, InterruptedRunIsMoving)
{
  const auto g = build_motion_grid(occupancy({1, 1, 0, 1, 1}), unit_grid(), 3);
  EXPECT_EQ(g.max_run[linear_index({0, 0}, g.spec)], 2);
  EXPECT_EQ(g.state_at(0.5, 0.5), CellState::kMoving);
}

TEST(MotionGrid, FullRunIsStatic)
{
  const auto g = build_motion_grid(occupancy({1, 1, 1, 1, 1}), unit_grid(), 3);
  EXPECT_EQ(g.max_run[linear_index({0, 0}, g.spec)], 5);
  EXPECT_EQ(g.state_at(0.5, 0.5), CellState::kStatic);
}

TEST(MotionGrid, BackgroundOnlyCellIsEmpty)
{
  const auto g = build_motion_grid(occupancy({1, 1, 1, 1, 1}), unit_grid(), 3);
  EXPECT_EQ(g.state_at(2.5, 2.5), CellState::kEmpty);
  EXPECT_EQ(g.state_at(1.5, 0.5), CellState::kEmpty);
}

TEST(MotionGrid, EmptyWindowFails)
{
  const std::vector<std::vector<SemanticPoint>> none;
  try {
    build_motion_grid(none, unit_grid(), 1);
    FAIL() << "expected an error";
  } catch (const PipelineError & e) {
    EXPECT_STREQ(e.what(), "empty aggregation window");
  }
}

TEST(MotionGrid, DefaultEpsilon)
{
  EXPECT_EQ(default_epsilon(11), 7);
  EXPECT_EQ(default_epsilon(5), 3);
  EXPECT_EQ(default_epsilon(1), 1);
}

SceneSpec two_object_scene(double moving_speed)
{
  SceneSpec spec;
  spec.seed = 3;
  spec.ego_speed = 0.5;
  spec.clutter_points = 300;
  ObjectSpec parked{Box3D(15.0, 6.0, 0.8, 4.5, 1.9, 1.6, 0.3, kVehicle)};
  parked.density = 120.0;
  ObjectSpec mover{Box3D(0.0, -8.0, 0.8, 4.5, 1.9, 1.6, 0.0, kVehicle)};
  mover.vx = moving_speed;
  mover.density = 120.0;
  spec.objects = {parked, mover};
  return spec;
}

TEST(DenseCloud, StaticSceneKeepsEveryForegroundPoint)
{
  SceneSpec spec = two_object_scene(0.0);
  const auto s = generate_sequence(spec);
  AggregationParams params;
  params.half_window = 5;
  // Epsilon 1 makes every occupied cell static.
  params.epsilon = 1;
  const auto dense = aggregate_window(s.sequence, 5, params);
  std::size_t fg_total = 0;
  for (const auto & f : s.sequence.frames) {
    for (const auto & p : f.points) {
      fg_total += p.is_foreground();
    }
  }
  std::size_t fg_dense = 0;
  for (const auto & p : dense.points) {
    fg_dense += p.is_foreground();
  }
  EXPECT_EQ(fg_dense, fg_total);
}

TEST(DenseCloud, MovingObjectKeepsOnlyTargetFramePoints)
{
  const SceneSpec spec = two_object_scene(1.5);
  const auto s = generate_sequence(spec);
  const AggregationParams params;
  const std::size_t target = 5;
  const auto dense = aggregate_window(s.sequence, target, params);
  const Box3D mover_now = s.ground_truth[target][1].box;
  ASSERT_EQ(s.ground_truth[target][1].object_id, 1);
  // Points from other frames never land on the mover's current footprint.
  std::size_t target_points = 0;
  for (const auto & p : dense.points) {
    if (!p.is_foreground() || !point_in_box(p, mover_now)) {
      continue;
    }
    EXPECT_EQ(p.frame_index, 0);
    ++target_points;
  }
  std::size_t expected = 0;
  for (const auto & p : s.sequence.frames[target].points) {
    expected += p.is_foreground() && point_in_box(p, mover_now);
  }
  EXPECT_EQ(target_points, expected);
  EXPECT_GT(expected, 0u);
}

TEST(DenseCloud, SingleFrameWindowEqualsTarget)
{
  const auto s = generate_sequence(two_object_scene(1.0));
  AggregationParams params;
  params.half_window = 0;
  const auto dense = aggregate_window(s.sequence, 4, params);
  const auto & f = s.sequence.frames[4].points;
  ASSERT_EQ(dense.points.size(), f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(dense.points[i].x, f[i].x, 1e-9);
    EXPECT_NEAR(dense.points[i].y, f[i].y, 1e-9);
    EXPECT_EQ(dense.points[i].class_id, f[i].class_id);
  }
}

TEST(DenseCloud, CountBoundsAndInvariants)
{
  const auto s = generate_sequence(two_object_scene(1.5));
  const AggregationParams params;
  for (std::size_t target : {0u, 5u, 10u}) {
    const auto w = window_around(s.sequence.frames.size(), target, params.half_window);
    std::size_t window_total = 0;
    for (std::size_t k = w.begin; k < w.end; ++k) {
      window_total += s.sequence.frames[k].points.size();
    }
    const auto dense = aggregate_window(s.sequence, target, params);
    EXPECT_LE(dense.points.size(), window_total);
    EXPECT_GE(dense.points.size(), s.sequence.frames[target].points.size());

    // No non-target foreground point lies in a moving cell.
    const std::span<const Frame> frames(s.sequence.frames.data() + w.begin, w.size());
    const auto registered =
      register_frames(frames, s.sequence.frames[target].pose->inverse(), w.target_offset());
    const auto grid = build_motion_grid(
      registered, BevGridSpec::centered(params.range, params.cell_size),
      effective_epsilon(params, w.size()));
    for (const auto & p : dense.points) {
      if (p.frame_index != 0 && p.is_foreground()) {
        EXPECT_NE(grid.state_at(p.x, p.y), CellState::kMoving);
      }
    }
  }
}

TEST(DenseCloud, OversizedEpsilonKeepsOnlyTargetForeground)
{
  const auto s = generate_sequence(two_object_scene(0.0));
  AggregationParams params;
  params.half_window = 5;
  params.epsilon = 2 * params.half_window + 2;
  const auto dense = aggregate_window(s.sequence, 5, params);
  std::size_t fg = 0;
  for (const auto & p : dense.points) {
    if (p.is_foreground()) {
      EXPECT_EQ(p.frame_index, 0);
      ++fg;
    }
  }
  std::size_t expected = 0;
  for (const auto & p : s.sequence.frames[5].points) {
    expected += p.is_foreground();
  }
  EXPECT_EQ(fg, expected);
}

TEST(DenseCloud, MissingPoseNamesFrame)
{
  auto s = generate_sequence(two_object_scene(0.0));
  s.sequence.frames[3].pose.reset();
  try {
    aggregate_window(s.sequence, 5, AggregationParams{});
    FAIL() << "expected an error";
  } catch (const PipelineError & e) {
    EXPECT_NE(std::string(e.what()).find("frame 3"), std::string::npos);
  }
}

TEST(Window, ClipsAtSequenceEdges)
{
  const auto w = window_around(11, 1, 5);
  EXPECT_EQ(w.begin, 0u);
  EXPECT_EQ(w.end, 7u);
  EXPECT_EQ(w.target_offset(), 1u);
}

}  // namespace
}  // namespace pseudobox
