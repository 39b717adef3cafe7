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

#ifndef PSEUDOBOX__MOCK_DETECTOR_HPP_
#define PSEUDOBOX__MOCK_DETECTOR_HPP_

#include "pseudobox/errors.hpp"
#include "pseudobox/self_training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pseudobox
{

/// Stand-in detector: perturbs reference boxes with range-dependent noise.
/// Sigmas grow linearly with ego distance, scaled by distance / reference_range.
struct NoiseModel
{
  double position_sigma{0.3};
  double size_sigma{0.1};
  double yaw_sigma{0.05};
  double reference_range{30.0};
  double drop_probability{0.1};
  double class_flip_probability{0.1};
  /// Mean number of false positives per frame (Poisson).
  double false_positive_rate{0.0};
  double false_positive_range{40.0};
  /// Confidence = base - decay * (distance / reference_range) + N(0, jitter), clamped to [0, 1].
  double confidence_base{0.9};
  double confidence_decay{0.1};
  double confidence_jitter{0.05};

  void validate() const
  {
    auto prob = [](double p, const char * field) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
          throw ConfigError(std::string("noise.") + field + ": must be in [0, 1]");
        }
      };
    auto nonneg = [](double v, const char * field) {
        if (!std::isfinite(v) || v < 0.0) {
          throw ConfigError(std::string("noise.") + field + ": must be finite and >= 0");
        }
      };
    nonneg(position_sigma, "position_sigma");
    nonneg(size_sigma, "size_sigma");
    nonneg(yaw_sigma, "yaw_sigma");
    nonneg(false_positive_rate, "false_positive_rate");
    nonneg(confidence_decay, "confidence_decay");
    nonneg(confidence_jitter, "confidence_jitter");
    prob(drop_probability, "drop_probability");
    prob(class_flip_probability, "class_flip_probability");
    prob(confidence_base, "confidence_base");
    if (!(reference_range > 0.0)) {
      throw ConfigError("noise.reference_range: must be > 0");
    }
    if (!(false_positive_range > 0.0)) {
      throw ConfigError("noise.false_positive_range: must be > 0");
    }
  }
};

/// Named profiles: "clean" (identity, confidence 1), "default", "heavy".
inline NoiseModel noise_profile(const std::string & name)
{
  NoiseModel m;
  if (name == "clean") {
    m.position_sigma = 0.0;
    m.size_sigma = 0.0;
    m.yaw_sigma = 0.0;
    m.drop_probability = 0.0;
    m.class_flip_probability = 0.0;
    m.false_positive_rate = 0.0;
    m.confidence_base = 1.0;
    m.confidence_decay = 0.0;
    m.confidence_jitter = 0.0;
  } else if (name == "default") {
    m.false_positive_rate = 0.5;
  } else if (name == "heavy") {
    m.position_sigma = 0.6;
    m.size_sigma = 0.25;
    m.yaw_sigma = 0.15;
    m.drop_probability = 0.2;
    m.class_flip_probability = 0.2;
    m.false_positive_rate = 2.0;
  } else {
    throw ConfigError("unknown noise profile '" + name + "' (expected clean, default or heavy)");
  }
  return m;
}

namespace detail
{

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream per (seed, key).
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t key)
{
  return std::mt19937_64(splitmix64(seed ^ splitmix64(key)));
}

}  // namespace detail

/// Noisy predictions for one frame. `classes` lists the ids a flip may pick.
inline std::vector<Prediction> mock_detect_frame(
  std::span<const Box3D> reference, int frame_id, const NoiseModel & noise,
  std::span<const int> classes, std::uint64_t seed)
{
  noise.validate();
  auto rng = detail::stream_rng(seed, static_cast<std::uint64_t>(static_cast<std::int64_t>(frame_id)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto confidence = [&](double range) {
      const double c = noise.confidence_base -
        noise.confidence_decay * (range / noise.reference_range) +
        noise.confidence_jitter * normal(rng);
      return std::clamp(c, 0.0, 1.0);
    };

  std::vector<Prediction> out;
  for (const auto & b : reference) {
    // Fixed draw count per box keeps later boxes independent of earlier outcomes.
    const double u_drop = unit(rng);
    const double u_flip = unit(rng);
    const double u_cls = unit(rng);
    const double n[7] = {normal(rng), normal(rng), normal(rng), normal(rng), normal(rng),
      normal(rng), normal(rng)};
    const double range = std::hypot(b.cx(), b.cy());
    const double conf = confidence(range);
    if (u_drop < noise.drop_probability) {
      continue;
    }
    int cls = b.class_id();
    if (u_flip < noise.class_flip_probability && classes.size() > 1) {
      std::vector<int> others;
      for (int c : classes) {
        if (c != cls) {
          others.push_back(c);
        }
      }
      cls = others[std::min(others.size() - 1, static_cast<std::size_t>(u_cls * others.size()))];
    }
    const double s = range / noise.reference_range;
    const double sp = noise.position_sigma * s;
    const double ss = noise.size_sigma * s;
    const double sy = noise.yaw_sigma * s;
    out.push_back(
      Prediction{
        Box3D(
          b.cx() + sp * n[0], b.cy() + sp * n[1], b.cz() + sp * n[2],
          std::max(kMinExtent, b.length() + ss * n[3]),
          std::max(kMinExtent, b.width() + ss * n[4]),
          std::max(kMinExtent, b.height() + ss * n[5]), b.yaw() + sy * n[6], cls),
        conf, frame_id});
  }

  if (noise.false_positive_rate > 0.0 && !classes.empty()) {
    std::poisson_distribution<int> count(noise.false_positive_rate);
    const int k = count(rng);
    for (int i = 0; i < k; ++i) {
      const double r = noise.false_positive_range * std::sqrt(unit(rng));
      const double phi = 2.0 * kPi * unit(rng);
      const int cls = classes[std::min(classes.size() - 1,
          static_cast<std::size_t>(unit(rng) * classes.size()))];
      const double yaw = kPi * (2.0 * unit(rng) - 1.0);
      out.push_back(
        Prediction{Box3D(r * std::cos(phi), r * std::sin(phi), 0.8, 2.0 + 2.0 * unit(rng),
          0.8 + unit(rng), 1.5, yaw, cls), confidence(r), frame_id});
    }
  }
  return out;
}

/// Predictions for every frame; deterministic in (reference, noise, seed).
inline std::vector<std::vector<Prediction>> mock_detect(
  const std::vector<std::vector<Box3D>> & reference, std::span<const int> frame_ids,
  const NoiseModel & noise, std::span<const int> classes, std::uint64_t seed)
{
  if (reference.size() != frame_ids.size()) {
    throw PipelineError("mock detector: reference lists do not match the frame count");
  }
  std::vector<std::vector<Prediction>> out(reference.size());
  for (std::size_t k = 0; k < reference.size(); ++k) {
    out[k] = mock_detect_frame(reference[k], frame_ids[k], noise, classes, seed);
  }
  return out;
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__MOCK_DETECTOR_HPP_
