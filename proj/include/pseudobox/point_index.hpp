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

#ifndef PSEUDOBOX__POINT_INDEX_HPP_
#define PSEUDOBOX__POINT_INDEX_HPP_

#include "pseudobox/geometry.hpp"
#include "pseudobox/iou.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

namespace pseudobox
{

/// Uniform BEV bucket index over a point set that must outlive the index.
class BevPointIndex
{
public:
  explicit BevPointIndex(std::span<const SemanticPoint> points, double cell_size = 1.0)
  : points_(points), cell_size_(cell_size)
  {
    std::vector<std::uint64_t> keys(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      keys[i] = key(cell_of(points[i].x), cell_of(points[i].y));
    }
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::sort(
      order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
        return keys[a] != keys[b] ? keys[a] < keys[b] : a < b;
      });
    for (std::size_t k = 0; k < order_.size(); ) {
      std::size_t e = k;
      while (e < order_.size() && keys[order_[e]] == keys[order_[k]]) {
        ++e;
      }
      ranges_.emplace(keys[order_[k]], std::make_pair(k, e));
      k = e;
    }
  }

  [[nodiscard]] std::span<const SemanticPoint> points() const noexcept {return points_;}

  /// Indices of points inside `box` (boundary-inclusive), ascending.
  [[nodiscard]] std::vector<std::size_t> indices_in_box(const Box3D & box) const
  {
    std::vector<std::size_t> out;
    const auto corners = bev_corners(box);
    double x_lo = corners[0].x;
    double x_hi = corners[0].x;
    double y_lo = corners[0].y;
    double y_hi = corners[0].y;
    for (const auto & c : corners) {
      x_lo = std::min(x_lo, c.x);
      x_hi = std::max(x_hi, c.x);
      y_lo = std::min(y_lo, c.y);
      y_hi = std::max(y_hi, c.y);
    }
    const std::int64_t i_lo = cell_of(x_lo - kInsideTolerance);
    const std::int64_t i_hi = cell_of(x_hi + kInsideTolerance);
    const std::int64_t j_lo = cell_of(y_lo - kInsideTolerance);
    const std::int64_t j_hi = cell_of(y_hi + kInsideTolerance);
    for (std::int64_t i = i_lo; i <= i_hi; ++i) {
      for (std::int64_t j = j_lo; j <= j_hi; ++j) {
        const auto it = ranges_.find(key(i, j));
        if (it == ranges_.end()) {
          continue;
        }
        for (std::size_t k = it->second.first; k < it->second.second; ++k) {
          if (point_in_box(points_[order_[k]], box)) {
            out.push_back(order_[k]);
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  [[nodiscard]] std::vector<SemanticPoint> points_in_box(const Box3D & box) const
  {
    std::vector<SemanticPoint> out;
    for (std::size_t i : indices_in_box(box)) {
      out.push_back(points_[i]);
    }
    return out;
  }

private:
  [[nodiscard]] std::int64_t cell_of(double v) const
  {
    return static_cast<std::int64_t>(std::floor(v / cell_size_));
  }

  static std::uint64_t key(std::int64_t i, std::int64_t j)
  {
    return (static_cast<std::uint64_t>(i + (1LL << 31)) << 32) ^
           static_cast<std::uint64_t>(j + (1LL << 31));
  }

  std::span<const SemanticPoint> points_;
  double cell_size_;
  std::vector<std::size_t> order_;
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> ranges_;
};

}  // namespace pseudobox

#endif  // PSEUDOBOX__POINT_INDEX_HPP_
