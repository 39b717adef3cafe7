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

// Acceptance suite. Each criterion prints one line "C<n> PASS|FAIL <detail>".
// Exit status: 0 when every selected criterion passes, 77 when the only
// failures depend on the host's core count, 1 otherwise.

#include "oracles/brute_force_dbscan.hpp"
#include "oracles/monte_carlo_iou.hpp"
#include "pseudobox/config.hpp"
#include "pseudobox/dbscan.hpp"
#include "pseudobox/evaluation.hpp"
#include "pseudobox/io.hpp"
#include "pseudobox/iou.hpp"
#include "pseudobox/mock_detector.hpp"
#include "pseudobox/pipeline.hpp"
#include "pseudobox/scoring.hpp"
#include "pseudobox/self_training.hpp"
#include "pseudobox/synthetic.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace
{

using namespace pseudobox;

// Tolerances and thresholds.
constexpr double kFormulaTol = 1e-12;
constexpr std::size_t kFormulaSamples = 10000;
constexpr std::size_t kDbscanInstances = 100;
constexpr std::size_t kIouPairs = 1000;
constexpr std::size_t kIouSamples = 400000;
constexpr double kIouTol = 0.01;
constexpr double kOracleBudgetSeconds = 60.0;
constexpr int kAblationSeeds = 20;
constexpr double kSignTestAlpha = 0.05;
constexpr double kSpearmanMin = 0.5;
constexpr std::size_t kSpearmanMinBoxes = 500;
constexpr int kRefineSeeds = 10;
constexpr double kFarRange = 30.0;
constexpr double kPermutationTol = 1e-9;
constexpr double kPerfBudgetSeconds = 10.0;
constexpr unsigned kPerfThreads = 8;
constexpr double kPerfSpeedupMin = 3.0;

struct Verdict
{
  bool pass{false};
  std::string detail;
  // Failure caused only by the host having too few cores.
  bool hardware_bound{false};
};

std::string fmt(const char * format, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// One-sided sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_p(int wins, int trials)
{
  double p = 0.0;
  for (int k = wins; k <= trials; ++k) {
    p += std::exp(
      std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) -
      trials * std::log(2.0));
  }
  return p;
}

std::vector<double> ranks(const std::vector<double> & v)
{
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {return v[i] < v[j];});
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size(); ) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
      ++j;
    }
    for (std::size_t k = i; k <= j; ++k) {
      r[idx[k]] = 0.5 * static_cast<double>(i + j);
    }
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double> & a, const std::vector<double> & b)
{
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<std::vector<PseudoLabel>> generate(
  const Sequence & seq, const PipelineConfig & cfg, unsigned threads = 1)
{
  std::vector<std::vector<PseudoLabel>> out;
  for (auto & f : generate_sequence_labels(seq, cfg, threads)) {
    out.push_back(std::move(f.labels));
  }
  return out;
}

EvalReport evaluate(
  const SyntheticSequence & s, const std::vector<std::vector<PseudoLabel>> & labels,
  const EvalOptions & options)
{
  std::vector<FrameEvaluation> frames;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    FrameEvaluation f;
    for (const auto & l : labels[k]) {
      f.labels.push_back({l.box, l.scores.msf});
    }
    for (const auto & g : s.ground_truth[k]) {
      f.gts.push_back(g.box);
    }
    frames.push_back(std::move(f));
  }
  return compute_report(frames, options);
}

const std::vector<int> kClasses{kVehicle, kPedestrian, kCyclist};

std::vector<std::vector<Prediction>> mock_predictions(
  const SyntheticSequence & s, const NoiseModel & noise, std::uint64_t seed)
{
  std::vector<std::vector<Box3D>> reference;
  std::vector<int> ids;
  for (std::size_t k = 0; k < s.ground_truth.size(); ++k) {
    ids.push_back(s.sequence.frames[k].frame_id);
    reference.emplace_back();
    for (const auto & g : s.ground_truth[k]) {
      reference.back().push_back(g.box);
    }
  }
  return mock_detect(reference, ids, noise, kClasses, seed);
}

// ---------------------------------------------------------------------------

Verdict criterion_1()
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double occ_err = 0.0;
  for (std::size_t t = 0; t < kFormulaSamples; ++t) {
    const int r = 7;
    const double l = 0.5 + 6.0 * unit(rng);
    const double w = 0.3 + (l - 0.3) * unit(rng);
    const double h = 0.5 + 2.0 * unit(rng);
    const Box3D box(
      100.0 * unit(rng) - 50.0, 100.0 * unit(rng) - 50.0, 2.0 * unit(rng), l, w, h,
      2.0 * kPi * unit(rng) - kPi, kVehicle);
    const double c = std::cos(box.yaw());
    const double s = std::sin(box.yaw());
    auto world = [&](double u, double v, double dz) {
        return SemanticPoint{box.cx() + c * u - s * v, box.cy() + s * u + c * v, box.cz() + dz,
          kVehicle, 0};
      };
    std::vector<SemanticPoint> pts;
    int filled = 0;
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        if (unit(rng) < 0.5) {
          continue;
        }
        ++filled;
        const int n = 1 + static_cast<int>(3.0 * unit(rng));
        for (int q = 0; q < n; ++q) {
          // Interior of cell (i, j), away from its edges.
          const double fu = (i + 0.1 + 0.8 * unit(rng)) / r - 0.5;
          const double fv = (j + 0.1 + 0.8 * unit(rng)) / r - 0.5;
          pts.push_back(world(fu * box.length(), fv * box.width(), (unit(rng) - 0.5) * 0.9 * h));
        }
      }
    }
    // Points outside the box are ignored.
    for (int q = 0; q < 5; ++q) {
      pts.push_back(world((0.6 + unit(rng)) * box.length(), 0.0, 0.0));
      pts.push_back(world(0.0, 0.0, (0.55 + unit(rng)) * h));
    }
    const double expected = static_cast<double>(filled) / (r * r);
    occ_err = std::max(occ_err, std::abs(occupancy_score(box, pts, r) - expected));
  }

  double weight_err = 0.0;
  const std::array<std::array<double, 2>, 5> hand{{
    {0.3, 0.0}, {0.4, 0.0}, {0.6, 0.5}, {0.8, 1.0}, {0.95, 1.0}}};
  for (const auto & [msf, expected] : hand) {
    weight_err = std::max(weight_err, std::abs(label_weight(msf, 0.4, 0.8) - expected));
  }
  for (std::size_t t = 0; t < kFormulaSamples; ++t) {
    const double a = unit(rng);
    const double b = unit(rng);
    const double low = std::min(a, b);
    const double high = std::max(a, b);
    if (!(low < high)) {
      continue;
    }
    const double msf = unit(rng);
    const long double expected = msf <= low ? 0.0L : msf >= high ? 1.0L :
      (static_cast<long double>(msf) - low) / (static_cast<long double>(high) - low);
    weight_err = std::max(
      weight_err, static_cast<double>(std::abs(label_weight(msf, low, high) - expected)));
  }

  double msf_err = 0.0;
  bool rejects = true;
  for (std::size_t t = 0; t < kFormulaSamples; ++t) {
    double a = unit(rng);
    double b = unit(rng);
    double c = unit(rng);
    const double sum = a + b + c;
    a /= sum;
    b /= sum;
    const ScoreWeights w{a, b, 1.0 - a - b};
    const double occ = unit(rng);
    const double alg = unit(rng);
    const double ms = unit(rng);
    const auto out = combine_scores(occ, alg, ms, w);
    msf_err = std::max(msf_err, std::abs(out.msf - (w.occupancy * occ + w.alignment * alg +
      w.meta_shape * ms)));
    try {
      combine_scores(occ, alg, ms, ScoreWeights{a, b, 1.0 - a - b + 0.01});
      rejects = false;
    } catch (const ConfigError &) {
    }
  }
  const auto equal = combine_scores(0.3, 0.6, 0.9, ScoreWeights{});
  msf_err = std::max(msf_err, std::abs(equal.msf - 0.6));

  const bool pass = occ_err <= kFormulaTol && weight_err <= kFormulaTol &&
    msf_err <= kFormulaTol && rejects;
  return {pass, fmt(
      "occupancy max err %.2e, label_weight max err %.2e, msf max err %.2e, "
      "non-unit weight sums %s (n=%zu each, tol %.0e)",
      occ_err, weight_err, msf_err, rejects ? "rejected" : "ACCEPTED", kFormulaSamples,
      kFormulaTol)};
}

// Branch formulas exactly as printed, with alpha the line angle and theta
// the box heading.
double printed_alignment(double alpha, double theta)
{
  const double d = std::abs(alpha - theta);
  if (d < kHalfPi) {
    return 1.0 - std::sin(d);
  }
  return 1.0 - std::sin(std::abs(alpha + kHalfPi - theta));
}

Verdict criterion_2()
{
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  std::array<std::size_t, 4> total{};
  std::array<std::size_t, 4> bad{};
  double max_err = 0.0;
  for (std::size_t t = 0; t < kFormulaSamples; ++t) {
    const double alpha = angle(rng);
    const double theta = angle(rng);
    const double d = std::abs(alpha - theta);
    const auto q = std::min<std::size_t>(3, static_cast<std::size_t>(d / (0.25 * kPi)));
    const double err = std::abs(alignment_from_angles(theta, alpha) -
      printed_alignment(alpha, theta));
    ++total[q];
    if (err > kFormulaTol) {
      ++bad[q];
    }
    max_err = std::max(max_err, err);
  }
  const std::size_t mismatches = bad[0] + bad[1] + bad[2] + bad[3];
  return {mismatches == 0, fmt(
      "%zu/%zu pairs differ (max |diff| %.3f); by delta quarter of [0,pi): "
      "%zu/%zu, %zu/%zu, %zu/%zu, %zu/%zu",
      mismatches, kFormulaSamples, max_err, bad[0], total[0], bad[1], total[1], bad[2],
      total[2], bad[3], total[3])};
}

Verdict criterion_3()
{
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(0, 200);
  std::uniform_real_distribution<double> eps_dist(0.05, 1.5);
  std::uniform_int_distribution<int> min_pts_dist(1, 8);
  std::size_t partition_mismatch = 0;
  for (std::size_t t = 0; t < kDbscanInstances; ++t) {
    std::uniform_real_distribution<double> coord(0.0, 2.0 + 8.0 * static_cast<double>(t % 3));
    std::vector<std::array<double, 2>> pts(static_cast<std::size_t>(count(rng)));
    for (auto & p : pts) {
      p = {coord(rng), coord(rng)};
      // Quantized coordinates produce exact-eps distances and duplicates.
      if (t % 4 == 0) {
        p = {std::round(p[0] * 4.0) / 4.0, std::round(p[1] * 4.0) / 4.0};
      }
    }
    const double eps = t % 4 == 0 ? 0.25 * static_cast<double>(1 + t % 3) : eps_dist(rng);
    const auto min_pts = static_cast<std::size_t>(min_pts_dist(rng));
    if (dbscan<2>(pts, eps, min_pts) != oracles::brute_force_dbscan<2>(pts, eps, min_pts)) {
      ++partition_mismatch;
    }
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double max_dev = 0.0;
  double mean_iou = 0.0;
  for (std::size_t t = 0; t < kIouPairs; ++t) {
    const double l = 0.5 + 5.0 * unit(rng);
    const double w = 0.3 + (l - 0.3) * unit(rng);
    const Box3D a(
      20.0 * unit(rng), 20.0 * unit(rng), 0.0, l, w, 1.0, 2.0 * kPi * unit(rng), kVehicle);
    const double spread = t % 5 == 0 ? 0.0 : 0.5 * l;
    const Box3D b(
      a.cx() + spread * (2.0 * unit(rng) - 1.0), a.cy() + spread * (2.0 * unit(rng) - 1.0),
      0.0, l * (0.6 + 0.8 * unit(rng)), w * (0.6 + 0.8 * unit(rng)), 1.0,
      t % 7 == 0 ? a.yaw() : 2.0 * kPi * unit(rng), kVehicle);
    const double exact = bev_iou(a, b);
    const double mc = oracles::monte_carlo_bev_iou(
      {a.cx(), a.cy(), a.length(), a.width(), a.yaw()},
      {b.cx(), b.cy(), b.length(), b.width(), b.yaw()}, kIouSamples, t);
    max_dev = std::max(max_dev, std::abs(exact - mc));
    mean_iou += exact / kIouPairs;
  }
  const double elapsed = seconds_since(t0);
  const bool pass = partition_mismatch == 0 && max_dev <= kIouTol &&
    elapsed < kOracleBudgetSeconds;
  return {pass, fmt(
      "dbscan partition mismatches %zu/%zu; bev_iou max |exact - MC| %.4f over %zu pairs "
      "(mean IoU %.2f, tol %.2f); %.1f s (budget %.0f s)",
      partition_mismatch, kDbscanInstances, max_dev, kIouPairs, mean_iou, kIouTol, elapsed,
      kOracleBudgetSeconds)};
}

Verdict criterion_4()
{
  int size_wins = 0;
  int size_trials = 0;
  int recall_wins = 0;
  int recall_trials = 0;
  for (int seed = 0; seed < kAblationSeeds; ++seed) {
    const auto s = generate_sequence(make_preset("sparse-far", static_cast<std::uint64_t>(seed)));
    const PipelineConfig multi;
    PipelineConfig single = multi;
    single.aggregation.half_window = 0;
    const auto rm = evaluate(s, generate(s.sequence, multi), multi.evaluation);
    const auto rs = evaluate(s, generate(s.sequence, single), single.evaluation);
    const double size_m = rm.overall.errors.size_mae().value_or(HUGE_VAL);
    const double size_s = rs.overall.errors.size_mae().value_or(HUGE_VAL);
    const double rec_m = rm.overall.at(0.5)->recall().value_or(0.0);
    const double rec_s = rs.overall.at(0.5)->recall().value_or(0.0);
    if (size_m != size_s) {
      ++size_trials;
      size_wins += size_m < size_s;
    }
    if (rec_m != rec_s) {
      ++recall_trials;
      recall_wins += rec_m > rec_s;
    }
  }
  const double p_size = sign_test_p(size_wins, size_trials);
  const double p_recall = sign_test_p(recall_wins, recall_trials);
  const bool pass = size_trials > 0 && recall_trials > 0 && p_size < kSignTestAlpha &&
    p_recall < kSignTestAlpha;
  return {pass, fmt(
      "11-frame vs single-frame over %d seeds: size MAE lower %d/%d (p=%.1e), "
      "recall@0.5 higher %d/%d (p=%.1e), ties excluded, alpha %.2f",
      kAblationSeeds, size_wins, size_trials, p_size, recall_wins, recall_trials, p_recall,
      kSignTestAlpha)};
}

Verdict criterion_5()
{
  std::size_t multi_tp = 0;
  std::size_t total = 0;
  std::size_t max_radii = 0;
  const PipelineConfig base;
  for (const auto & [cls, radii] : base.clustering.candidate_radii) {
    max_radii = std::max(max_radii, radii.size());
  }
  // single_tp[j][class]: radius j of each class's candidate list (clamped).
  std::vector<std::map<int, std::size_t>> single_tp(max_radii);
  for (int seed = 0; seed < kAblationSeeds; ++seed) {
    for (const char * preset : {"adjacent", "truncated"}) {
      const auto s = generate_sequence(make_preset(preset, static_cast<std::uint64_t>(seed)));
      const auto rm = evaluate(s, generate(s.sequence, base), base.evaluation);
      multi_tp += rm.overall.at(0.5)->tp;
      total += rm.overall.at(0.5)->tp + rm.overall.at(0.5)->fn;
      for (std::size_t j = 0; j < max_radii; ++j) {
        PipelineConfig single = base;
        for (auto & [cls, radii] : single.clustering.candidate_radii) {
          radii = {radii[std::min(j, radii.size() - 1)]};
        }
        const auto rs = evaluate(s, generate(s.sequence, single), single.evaluation);
        for (const auto & [cls, report] : rs.per_class) {
          single_tp[j][cls] += report.at(0.5)->tp;
        }
      }
    }
  }
  std::size_t best_index_tp = 0;
  std::map<int, std::size_t> best_per_class;
  std::string singles;
  for (std::size_t j = 0; j < max_radii; ++j) {
    std::size_t tp = 0;
    for (const auto & [cls, n] : single_tp[j]) {
      tp += n;
      best_per_class[cls] = std::max(best_per_class[cls], n);
    }
    best_index_tp = std::max(best_index_tp, tp);
    singles += (j ? "," : "") + std::to_string(tp);
  }
  std::size_t best_mixed_tp = 0;
  for (const auto & [cls, n] : best_per_class) {
    best_mixed_tp += n;
  }
  const double denom = static_cast<double>(std::max<std::size_t>(total, 1));
  const bool pass = total > 0 && multi_tp > best_mixed_tp;
  return {pass, fmt(
      "recall@0.5 over %d seeds x {adjacent, truncated}: multi-radius %.3f (%zu/%zu) vs "
      "best single radius %.3f (per-class best %zu, by index [%s])",
      kAblationSeeds, multi_tp / denom, multi_tp, total, best_mixed_tp / denom, best_mixed_tp,
      singles.c_str())};
}

Verdict criterion_6()
{
  const PipelineConfig cfg;
  std::vector<double> msf;
  std::vector<double> iou;
  for (int seed = 0; seed < 10; ++seed) {
    const auto s = generate_sequence(make_preset("mixed", static_cast<std::uint64_t>(seed)));
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t k = 0; k < s.sequence.frames.size(); k += 5) {
      const auto ctx = frame_scoring_context(s.sequence, k, cfg);
      for (const auto & g : s.ground_truth[k]) {
        const Box3D & b = g.box;
        for (int j = 0; j < 5; ++j) {
          const double a = 0.15 * (j + 1);
          const Box3D jittered(
            b.cx() + a * n(rng), b.cy() + a * n(rng), b.cz() + 0.3 * a * n(rng),
            std::max(0.1, b.length() * (1.0 + 0.3 * a * n(rng))),
            std::max(0.1, b.width() * (1.0 + 0.3 * a * n(rng))),
            std::max(0.1, b.height() * (1.0 + 0.3 * a * n(rng))), b.yaw() + a * n(rng),
            b.class_id());
          msf.push_back(ctx.score(jittered, cfg).msf);
          iou.push_back(iou_3d(jittered, b));
        }
      }
    }
  }
  const double rho = spearman(msf, iou);
  const bool pass = msf.size() >= kSpearmanMinBoxes && rho > kSpearmanMin;
  return {pass, fmt(
      "Spearman(msf, 3D IoU) = %.3f over %zu jittered ground-truth boxes (need > %.2f, n >= %zu)",
      rho, msf.size(), kSpearmanMin, kSpearmanMinBoxes)};
}

// Errors of far static objects, matched at the error-statistics IoU.
template<typename T, typename BoxOf>
ErrorStats far_static_errors(
  const SyntheticSequence & s, const std::vector<std::vector<T>> & lists, BoxOf box_of,
  double match_iou)
{
  ErrorStats stats;
  for (std::size_t k = 0; k < lists.size(); ++k) {
    std::vector<ScoredBox> labels;
    for (const auto & x : lists[k]) {
      labels.push_back({box_of(x), 1.0});
    }
    std::vector<Box3D> gts;
    for (const auto & g : s.ground_truth[k]) {
      gts.push_back(g.box);
    }
    const auto m = match_labels(labels, gts, match_iou);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int gi = m.label_to_gt[i];
      if (gi < 0) {
        continue;
      }
      const auto & g = s.ground_truth[k][static_cast<std::size_t>(gi)];
      if (!g.is_static || std::hypot(g.box.cx(), g.box.cy()) < kFarRange) {
        continue;
      }
      stats.add(
        size_error(labels[i].box, g.box), position_error(labels[i].box, g.box),
        yaw_error(labels[i].box, g.box));
    }
  }
  return stats;
}

Verdict criterion_7()
{
  const PipelineConfig cfg;
  NoiseModel noise;
  noise.false_positive_rate = 0.0;
  int pos_wins = 0;
  int size_wins = 0;
  double in_pos = 0.0;
  double out_pos = 0.0;
  double in_size = 0.0;
  double out_size = 0.0;
  for (int seed = 0; seed < kRefineSeeds; ++seed) {
    const auto useed = static_cast<std::uint64_t>(seed);
    const auto s = generate_sequence(make_preset("static-heavy", useed));
    const auto preds = mock_predictions(s, noise, useed);
    const auto refined = refine_round(s.sequence, preds, cfg, 1);
    const double iou = cfg.evaluation.error_match_iou;
    const auto in = far_static_errors(s, preds, [](const Prediction & p) {return p.box;}, iou);
    const auto out = far_static_errors(
      s, refined.labels, [](const PseudoLabel & p) {return p.box;}, iou);
    const double ip = in.position_mae().value_or(HUGE_VAL);
    const double op = out.position_mae().value_or(HUGE_VAL);
    const double is = in.size_mae().value_or(HUGE_VAL);
    const double os = out.size_mae().value_or(HUGE_VAL);
    pos_wins += op < ip;
    size_wins += os < is;
    in_pos += ip / kRefineSeeds;
    out_pos += op / kRefineSeeds;
    in_size += is / kRefineSeeds;
    out_size += os / kRefineSeeds;
  }
  const bool pass = pos_wins == kRefineSeeds && size_wins == kRefineSeeds;
  return {pass, fmt(
      "far (>= %.0f m) static MAE reduced on %d/%d seeds (position %.3f -> %.3f m) and "
      "%d/%d seeds (size %.3f -> %.3f m)",
      kFarRange, pos_wins, kRefineSeeds, in_pos, out_pos, size_wins, kRefineSeeds, in_size,
      out_size)};
}

Verdict criterion_8()
{
  const PipelineConfig cfg;
  std::size_t frames = 0;
  std::size_t retained_fg = 0;
  std::size_t violations = 0;
  std::size_t over_dropped = 0;
  std::size_t injected = 0;
  std::size_t dropped = 0;
  for (const char * preset : {"static-heavy", "mixed", "adjacent", "moving"}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto s = generate_sequence(make_preset(preset, seed));
      const auto refined = refine_round(s.sequence, mock_predictions(s, NoiseModel{}, seed), cfg);
      for (std::size_t k = 0; k < s.sequence.frames.size(); ++k) {
        const auto & pts = s.sequence.frames[k].points;
        const auto & labels = refined.labels[k];
        auto covered = [&](const SemanticPoint & p) {
            return std::any_of(labels.begin(), labels.end(), [&](const PseudoLabel & l) {
                       return point_in_box(p, l.box);
                     });
          };
        std::vector<char> kept(pts.size(), 0);
        for (std::size_t i : refined.retained[k]) {
          kept[i] = 1;
          if (pts[i].is_foreground()) {
            ++retained_fg;
            violations += !covered(pts[i]);
          }
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (!kept[i] && (!pts[i].is_foreground() || covered(pts[i]))) {
            ++over_dropped;
          }
        }
        ++frames;

        // Flip the class of every ground-truth box holding a single class.
        std::vector<Prediction> flipped;
        for (const auto & g : s.ground_truth[k]) {
          std::map<int, std::size_t> classes;
          for (const auto & p : pts) {
            if (p.is_foreground() && point_in_box(p, g.box)) {
              ++classes[p.class_id];
            }
          }
          if (classes.size() != 1) {
            continue;
          }
          const int other = classes.begin()->first % 3 + 1;
          const Box3D & b = g.box;
          flipped.push_back(
            {Box3D(b.cx(), b.cy(), b.cz(), b.length(), b.width(), b.height(), b.yaw(), other),
              1.0, s.sequence.frames[k].frame_id});
        }
        injected += flipped.size();
        dropped += flipped.size() -
          semantic_consistency_filter(flipped, s.sequence.frames[k], cfg.refine.scf).size();
      }
    }
  }
  const bool pass = violations == 0 && over_dropped == 0 && injected > 0 && dropped == injected;
  return {pass, fmt(
      "BAF: %zu uncovered of %zu retained foreground points over %zu frames, %zu points "
      "dropped that should be kept; SCF dropped %zu/%zu class-flipped predictions",
      violations, retained_fg, frames, over_dropped, dropped, injected)};
}

std::string serialize(
  const std::vector<std::vector<PseudoLabel>> & labels,
  const std::vector<std::vector<std::size_t>> * retained = nullptr)
{
  std::string out;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    out += format_labels(labels[k]);
    if (retained != nullptr) {
      for (std::size_t i : (*retained)[k]) {
        out += std::to_string(i) + '\n';
      }
    }
  }
  return out;
}

// Largest field difference between two label sets, HUGE_VAL on a count or
// class mismatch.
double max_box_difference(
  std::vector<std::vector<PseudoLabel>> a, std::vector<std::vector<PseudoLabel>> b)
{
  auto key = [](const PseudoLabel & l) {
      return std::make_tuple(l.class_id(), l.box.cx(), l.box.cy(), l.box.cz());
    };
  double worst = 0.0;
  if (a.size() != b.size()) {
    return HUGE_VAL;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) {
      return HUGE_VAL;
    }
    std::sort(a[k].begin(), a[k].end(), [&](auto & x, auto & y) {return key(x) < key(y);});
    std::sort(b[k].begin(), b[k].end(), [&](auto & x, auto & y) {return key(x) < key(y);});
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      const Box3D & x = a[k][i].box;
      const Box3D & y = b[k][i].box;
      if (x.class_id() != y.class_id()) {
        return HUGE_VAL;
      }
      for (const double d : {x.cx() - y.cx(), x.cy() - y.cy(), x.cz() - y.cz(),
          x.length() - y.length(), x.width() - y.width(), x.height() - y.height(),
          x.yaw() - y.yaw()})
      {
        worst = std::max(worst, std::abs(d));
      }
    }
  }
  return worst;
}

Verdict criterion_9()
{
  const PipelineConfig cfg;
  std::size_t generate_diffs = 0;
  std::size_t refine_diffs = 0;
  double worst = 0.0;
  std::size_t runs = 0;
  for (const char * preset : {"mixed", "moving", "adjacent"}) {
    for (std::uint64_t seed = 0; seed < 2; ++seed) {
      const auto s = generate_sequence(make_preset(preset, seed));
      const auto preds = mock_predictions(s, NoiseModel{}, seed);
      const auto g1 = generate(s.sequence, cfg);
      const auto g2 = generate(s.sequence, cfg);
      generate_diffs += serialize(g1) != serialize(g2);
      const auto r1 = refine_round(s.sequence, preds, cfg, 1);
      const auto r2 = refine_round(s.sequence, preds, cfg, 1);
      refine_diffs +=
        serialize(r1.labels, &r1.retained) != serialize(r2.labels, &r2.retained);

      Sequence shuffled = s.sequence;
      std::mt19937_64 rng(seed + 99);
      for (auto & frame : shuffled.frames) {
        std::shuffle(frame.points.begin(), frame.points.end(), rng);
      }
      worst = std::max(worst, max_box_difference(g1, generate(shuffled, cfg)));
      worst = std::max(worst, max_box_difference(r1.labels, refine_round(shuffled, preds, cfg).labels));
      ++runs;
    }
  }
  const bool pass = generate_diffs == 0 && refine_diffs == 0 && worst <= kPermutationTol;
  return {pass, fmt(
      "repeat runs at 1 thread: generate %zu/%zu differ, refine %zu/%zu differ; "
      "point-order permutation max box field change %.1e (tol %.0e)",
      generate_diffs, runs, refine_diffs, runs, worst, kPermutationTol)};
}

Verdict criterion_10()
{
  const auto s = generate_sequence(make_preset("perf", 0));
  std::size_t points = 0;
  for (const auto & f : s.sequence.frames) {
    points += f.points.size();
  }
  const PipelineConfig cfg;
  auto timed = [&](unsigned threads) {
      const auto t0 = std::chrono::steady_clock::now();
      std::size_t bytes = 0;
      for (const auto & labels : generate(s.sequence, cfg, threads)) {
        bytes += format_labels(labels).size();
      }
      const double t = seconds_since(t0);
      return bytes > 0 ? t : HUGE_VAL;
    };
  const double t1 = timed(1);
  const double t8 = timed(kPerfThreads);
  const double speedup = t1 / t8;
  const unsigned cores = std::thread::hardware_concurrency();
  const bool fast = t1 < kPerfBudgetSeconds;
  const bool scales = speedup >= kPerfSpeedupMin;
  Verdict v{fast && scales, fmt(
      "%zu frames, %.0f points/frame: %.2f s at 1 thread (budget %.0f s); %.2f s at %u threads, "
      "speedup %.2fx (need %.1fx; host reports %u hardware threads)",
      s.sequence.frames.size(), static_cast<double>(points) / s.sequence.frames.size(), t1,
      kPerfBudgetSeconds, t8, kPerfThreads, speedup, kPerfSpeedupMin, cores)};
  v.hardware_bound = fast && !scales && cores < kPerfThreads;
  return v;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"pseudobox acceptance suite"};
  std::vector<int> selected;
  app.add_option("-c,--criterion", selected, "Criteria to run (default: all)")
  ->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) {
    selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  }

  const std::array<std::function<Verdict()>, 10> criteria{
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
    criterion_6, criterion_7, criterion_8, criterion_9, criterion_10};
  bool hard_failure = false;
  bool hardware_failure = false;
  for (int n : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception & e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf(
      "C%d %s %s [%.1f s]\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!v.pass) {
      (v.hardware_bound ? hardware_failure : hard_failure) = true;
    }
  }
  if (hard_failure) {
    return 1;
  }
  return hardware_failure ? 77 : 0;
}
