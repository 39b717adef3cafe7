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

#ifndef PSEUDOBOX__DBSCAN_HPP_
#define PSEUDOBOX__DBSCAN_HPP_

#include "pseudobox/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

namespace pseudobox
{

inline constexpr int kNoise = -1;

namespace detail
{

template<std::size_t Dim>
struct CellKeyHash
{
  std::size_t operator()(const std::array<std::int64_t, Dim> & key) const noexcept
  {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (auto v : key) {
      h ^= static_cast<std::uint64_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

class DisjointSet
{
public:
  explicit DisjointSet(std::size_t n)
  : parent_(n)
  {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x)
  {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b) {
      if (b < a) {
        std::swap(a, b);
      }
      parent_[b] = a;
    }
  }

private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// DBSCAN with inclusive, self-counting neighbourhoods (dist <= eps).
///
/// Returns one label per point: clusters are numbered 0, 1, ... in order of
/// their lowest-index core point, noise is kNoise. A border point reachable
/// from several clusters takes the lowest-numbered one, which is the cluster
/// that reaches it first when seeds are expanded in ascending index order.
///
/// Points are bucketed on a grid of side eps / sqrt(Dim) so that every cell
/// is a clique: a cell holding >= min_pts points is all-core and the cores of
/// one cell always share a cluster. Neighbour search then only inspects the
/// (2 * 2 + 1)^Dim surrounding cells.
template<std::size_t Dim>
std::vector<int> dbscan(
  std::span<const std::array<double, Dim>> points, double eps, std::size_t min_pts)
{
  static_assert(Dim >= 1 && Dim <= 3, "dbscan supports 1 to 3 dimensions");
  if (!(eps > 0.0)) {
    throw ConfigError("dbscan: eps must be > 0");
  }
  if (min_pts < 1) {
    throw ConfigError("dbscan: min_pts must be >= 1");
  }
  const std::size_t n = points.size();
  std::vector<int> labels(n, kNoise);
  if (n == 0) {
    return labels;
  }

  using Key = std::array<std::int64_t, Dim>;
  const double side = eps / std::sqrt(static_cast<double>(Dim)) * (1.0 - 1e-9);
  const double eps2 = eps * eps;
  constexpr std::int64_t kReach = 2;

  auto dist2 = [&](std::size_t a, std::size_t b) {
      double s = 0.0;
      for (std::size_t d = 0; d < Dim; ++d) {
        const double diff = points[a][d] - points[b][d];
        s += diff * diff;
      }
      return s;
    };

  // Bucket points: cells hold contiguous index ranges of `order`.
  std::vector<Key> key_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < Dim; ++d) {
      key_of[i][d] = static_cast<std::int64_t>(std::floor(points[i][d] / side));
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(
    order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return key_of[a] != key_of[b] ? key_of[a] < key_of[b] : a < b;
    });
  struct Cell
  {
    Key key;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Cell> cells;
  std::vector<std::size_t> cell_of(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    if (cells.empty() || cells.back().key != key_of[i]) {
      cells.push_back(Cell{key_of[i], k, k});
    }
    cells.back().end = k + 1;
    cell_of[i] = cells.size() - 1;
  }
  std::unordered_map<Key, std::size_t, detail::CellKeyHash<Dim>> cell_lookup;
  cell_lookup.reserve(cells.size() * 2);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    cell_lookup.emplace(cells[c].key, c);
  }

  // Neighbouring cells, excluding offsets whose closest approach exceeds eps.
  std::vector<std::array<std::int64_t, Dim>> offsets;
  {
    std::array<std::int64_t, Dim> off{};
    auto rec = [&](auto && self, std::size_t d) -> void {
        if (d == Dim) {
          double gap2 = 0.0;
          for (std::size_t k = 0; k < Dim; ++k) {
            const double gap = std::max<std::int64_t>(0, std::abs(off[k]) - 1) * side;
            gap2 += gap * gap;
          }
          if (gap2 <= eps2) {
            offsets.push_back(off);
          }
          return;
        }
        for (std::int64_t v = -kReach; v <= kReach; ++v) {
          off[d] = v;
          self(self, d + 1);
        }
      };
    rec(rec, 0);
  }
  std::vector<std::vector<std::size_t>> neighbours(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const auto & off : offsets) {
      Key k = cells[c].key;
      for (std::size_t d = 0; d < Dim; ++d) {
        k[d] += off[d];
      }
      if (auto it = cell_lookup.find(k); it != cell_lookup.end()) {
        neighbours[c].push_back(it->second);
      }
    }
  }

  // Core points.
  std::vector<char> core(n, 0);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::size_t count = cells[c].end - cells[c].begin;
    if (count >= min_pts) {
      for (std::size_t k = cells[c].begin; k < cells[c].end; ++k) {
        core[order[k]] = 1;
      }
      continue;
    }
    for (std::size_t k = cells[c].begin; k < cells[c].end; ++k) {
      const std::size_t i = order[k];
      std::size_t found = count;
      for (std::size_t nc : neighbours[c]) {
        if (nc == c) {
          continue;
        }
        for (std::size_t m = cells[nc].begin; m < cells[nc].end && found < min_pts; ++m) {
          if (dist2(i, order[m]) <= eps2) {
            ++found;
          }
        }
        if (found >= min_pts) {
          break;
        }
      }
      core[i] = found >= min_pts ? 1 : 0;
    }
  }

  // Connect core cells that have a core pair within eps.
  std::vector<std::vector<std::size_t>> cores_in(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t k = cells[c].begin; k < cells[c].end; ++k) {
      if (core[order[k]]) {
        cores_in[c].push_back(order[k]);
      }
    }
  }
  detail::DisjointSet sets(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cores_in[c].empty()) {
      continue;
    }
    for (std::size_t nc : neighbours[c]) {
      if (nc <= c || cores_in[nc].empty() || sets.find(c) == sets.find(nc)) {
        continue;
      }
      bool linked = false;
      for (std::size_t a : cores_in[c]) {
        for (std::size_t b : cores_in[nc]) {
          if (dist2(a, b) <= eps2) {
            linked = true;
            break;
          }
        }
        if (linked) {
          break;
        }
      }
      if (linked) {
        sets.unite(c, nc);
      }
    }
  }

  // Number clusters by their lowest-index core point.
  std::vector<int> cluster_of_root(cells.size(), kNoise);
  int next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) {
      continue;
    }
    const std::size_t root = sets.find(cell_of[i]);
    if (cluster_of_root[root] == kNoise) {
      cluster_of_root[root] = next_cluster++;
    }
    labels[i] = cluster_of_root[root];
  }

  // Border points join the lowest-numbered reachable cluster.
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) {
      continue;
    }
    const std::size_t c = cell_of[i];
    int best = kNoise;
    for (std::size_t nc : neighbours[c]) {
      if (cores_in[nc].empty()) {
        continue;
      }
      const int cid = cluster_of_root[sets.find(nc)];
      if (best != kNoise && cid >= best) {
        continue;
      }
      for (std::size_t b : cores_in[nc]) {
        if (dist2(i, b) <= eps2) {
          best = cid;
          break;
        }
      }
    }
    labels[i] = best;
  }
  return labels;
}

template<std::size_t Dim>
std::vector<int> dbscan(const std::vector<std::array<double, Dim>> & points, double eps,
  std::size_t min_pts)
{
  return dbscan<Dim>(std::span<const std::array<double, Dim>>(points), eps, min_pts);
}

/// Number of clusters in a label vector.
inline int cluster_count(std::span<const int> labels)
{
  int m = kNoise;
  for (int l : labels) {
    m = std::max(m, l);
  }
  return m + 1;
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__DBSCAN_HPP_
