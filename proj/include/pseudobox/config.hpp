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

#ifndef PSEUDOBOX__CONFIG_HPP_
#define PSEUDOBOX__CONFIG_HPP_

#include "pseudobox/aggregation.hpp"
#include "pseudobox/clustering.hpp"
#include "pseudobox/errors.hpp"
#include "pseudobox/evaluation.hpp"
#include "pseudobox/scoring.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace pseudobox
{

inline constexpr int kVehicle = 1;
inline constexpr int kPedestrian = 2;
inline constexpr int kCyclist = 3;

struct ScfOptions
{
  /// A class counts as present in a box with at least this many points...
  std::size_t min_points{3};
  /// ...that also make up at least this fraction of the box's foreground.
  double min_fraction{0.05};
};

struct RefineOptions
{
  ScfOptions scf{};
  /// Predictions below this confidence are discarded before filtering.
  double confidence_floor{0.3};
  /// Static predictions are grouped across frames when global BEV IoU exceeds this.
  double stcf_group_iou{0.0};
  bool enable_scf{true};
  bool enable_stcf{true};
  bool enable_baf{true};
};

/// Every tunable of the pipeline. Defaults for values not given in the method
/// description (candidate radii, meta shapes, window size, grid cell size,
/// NMS threshold, filter thresholds) are engineering choices.
struct PipelineConfig
{
  std::map<int, std::string> class_names{
    {kVehicle, "vehicle"}, {kPedestrian, "pedestrian"}, {kCyclist, "cyclist"}};
  AggregationParams aggregation{};
  ClusterParams clustering{
    {{kVehicle, {0.4, 0.7, 1.0, 1.5}}, {kPedestrian, {0.2, 0.35, 0.5}},
      {kCyclist, {0.3, 0.5, 0.8}}},
    5,
    {{kVehicle, 10}, {kPedestrian, 5}, {kCyclist, 5}},
    1.0};
  ScoringOptions scoring{};
  std::map<int, MetaShape> meta_shapes{
    {kVehicle, {4.6, 1.8, 1.6}}, {kPedestrian, {0.8, 0.8, 1.7}}, {kCyclist, {1.8, 0.6, 1.7}}};
  double nms_iou{0.2};
  LabelThresholds thresholds{};
  RefineOptions refine{};
  EvalOptions evaluation{};
  std::uint64_t seed{0};

  [[nodiscard]] const MetaShape & meta_for(int class_id) const
  {
    const auto it = meta_shapes.find(class_id);
    if (it == meta_shapes.end()) {
      throw ConfigError("scoring.meta_shapes: no meta shape for class " + std::to_string(class_id));
    }
    return it->second;
  }

  [[nodiscard]] int max_class_id() const
  {
    return class_names.empty() ? 0 : class_names.rbegin()->first;
  }

  void validate() const
  {
    if (class_names.empty()) {
      throw ConfigError("classes: at least one foreground class required");
    }
    for (const auto & [id, name] : class_names) {
      if (id <= kBackgroundClass) {
        throw ConfigError("classes: class ids must be > 0 (0 is background)");
      }
      if (name.empty()) {
        throw ConfigError("classes: empty class name for id " + std::to_string(id));
      }
    }
    if (aggregation.half_window < 0) {
      throw ConfigError("aggregation.half_window: must be >= 0");
    }
    if (aggregation.epsilon < 0) {
      throw ConfigError("aggregation.epsilon: must be >= 0 (0 selects the default)");
    }
    if (!(aggregation.cell_size > 0.0)) {
      throw ConfigError("aggregation.cell_size: must be > 0");
    }
    if (!(aggregation.range > 0.0)) {
      throw ConfigError("aggregation.range: must be > 0");
    }
    clustering.validate();
    for (const auto & [id, name] : class_names) {
      if (!clustering.candidate_radii.count(id)) {
        throw ConfigError("clustering.candidate_radii: missing radii for class '" + name + "'");
      }
      if (!meta_shapes.count(id)) {
        throw ConfigError("scoring.meta_shapes: missing meta shape for class '" + name + "'");
      }
    }
    for (const auto & [id, r] : clustering.candidate_radii) {
      if (!class_names.count(id)) {
        throw ConfigError(
                "clustering.candidate_radii: class id " + std::to_string(id) +
                " is not in the class table");
      }
    }
    try {
      scoring.validate();
    } catch (const ConfigError & e) {
      throw ConfigError(std::string("scoring.weights: ") + e.what());
    }
    for (const auto & [id, m] : meta_shapes) {
      try {
        m.validate();
      } catch (const ConfigError & e) {
        throw ConfigError("scoring.meta_shapes[" + std::to_string(id) + "]: " + e.what());
      }
    }
    if (!(nms_iou > 0.0) || nms_iou > 1.0) {
      throw ConfigError("nms.iou_threshold: must be in (0, 1]");
    }
    try {
      thresholds.validate();
    } catch (const ConfigError & e) {
      throw ConfigError(std::string("label_weight: ") + e.what());
    }
    if (refine.scf.min_points < 1) {
      throw ConfigError("self_training.scf.min_points: must be >= 1");
    }
    if (!(refine.scf.min_fraction >= 0.0) || refine.scf.min_fraction > 1.0) {
      throw ConfigError("self_training.scf.min_fraction: must be in [0, 1]");
    }
    if (!(refine.confidence_floor >= 0.0) || refine.confidence_floor > 1.0) {
      throw ConfigError("self_training.confidence_floor: must be in [0, 1]");
    }
    if (!(refine.stcf_group_iou >= 0.0) || refine.stcf_group_iou >= 1.0) {
      throw ConfigError("self_training.stcf_group_iou: must be in [0, 1)");
    }
    evaluation.validate();
  }
};

namespace detail
{

using nlohmann::json;

inline void reject_unknown(
  const json & obj, const std::string & where, std::initializer_list<const char *> allowed)
{
  if (!obj.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto & [key, value] : obj.items()) {
    if (!ok.count(key)) {
      throw ConfigError(where + (where.empty() ? "" : ".") + key + ": unknown field");
    }
  }
}

template<class T>
T get_field(const json & obj, const std::string & path, const char * key, const T & fallback)
{
  if (!obj.contains(key)) {
    return fallback;
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception &) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

inline int resolve_class(const std::map<int, std::string> & names, const std::string & key,
  const std::string & path)
{
  for (const auto & [id, name] : names) {
    if (name == key) {
      return id;
    }
  }
  try {
    std::size_t used = 0;
    const int id = std::stoi(key, &used);
    if (used == key.size()) {
      return id;
    }
  } catch (const std::exception &) {
  }
  throw ConfigError(path + "." + key + ": unknown class");
}

}  // namespace detail

/// Overlay a JSON document onto the defaults. Unknown fields, wrong types and
/// violated constraints raise ConfigError naming the field.
inline PipelineConfig config_from_json(const nlohmann::json & doc)
{
  using detail::get_field;
  using nlohmann::json;
  PipelineConfig cfg;
  detail::reject_unknown(
    doc, "", {"classes", "aggregation", "clustering", "scoring", "nms", "label_weight",
      "self_training", "evaluation", "seed"});

  if (doc.contains("classes")) {
    const json & c = doc.at("classes");
    if (!c.is_object()) {
      throw ConfigError("classes: expected an object mapping class ids to names");
    }
    cfg.class_names.clear();
    for (const auto & [key, value] : c.items()) {
      int id = 0;
      try {
        id = std::stoi(key);
      } catch (const std::exception &) {
        throw ConfigError("classes." + key + ": keys must be integer class ids");
      }
      if (!value.is_string()) {
        throw ConfigError("classes." + key + ": expected a class name");
      }
      cfg.class_names[id] = value.get<std::string>();
    }
  }
  if (doc.contains("aggregation")) {
    const json & a = doc.at("aggregation");
    detail::reject_unknown(a, "aggregation", {"half_window", "epsilon", "cell_size", "range"});
    auto & ag = cfg.aggregation;
    ag.half_window = get_field(a, "aggregation", "half_window", ag.half_window);
    ag.epsilon = get_field(a, "aggregation", "epsilon", ag.epsilon);
    ag.cell_size = get_field(a, "aggregation", "cell_size", ag.cell_size);
    ag.range = get_field(a, "aggregation", "range", ag.range);
  }
  if (doc.contains("clustering")) {
    const json & c = doc.at("clustering");
    detail::reject_unknown(
      c, "clustering", {"candidate_radii", "min_pts", "min_cluster_size", "yaw_step_deg",
        "fit_criterion"});
    auto & cl = cfg.clustering;
    if (c.contains("candidate_radii")) {
      const json & r = c.at("candidate_radii");
      if (!r.is_object()) {
        throw ConfigError("clustering.candidate_radii: expected an object");
      }
      cl.candidate_radii.clear();
      for (const auto & [key, value] : r.items()) {
        const int id = detail::resolve_class(cfg.class_names, key, "clustering.candidate_radii");
        try {
          cl.candidate_radii[id] = value.get<std::vector<double>>();
        } catch (const json::exception &) {
          throw ConfigError("clustering.candidate_radii." + key + ": expected a list of numbers");
        }
      }
    }
    const auto min_pts = get_field<long long>(c, "clustering", "min_pts",
        static_cast<long long>(cl.min_pts));
    if (min_pts < 1) {
      throw ConfigError("clustering.min_pts: must be >= 1");
    }
    cl.min_pts = static_cast<std::size_t>(min_pts);
    if (c.contains("min_cluster_size")) {
      const json & m = c.at("min_cluster_size");
      if (!m.is_object()) {
        throw ConfigError("clustering.min_cluster_size: expected an object");
      }
      for (const auto & [key, value] : m.items()) {
        const int id = detail::resolve_class(cfg.class_names, key, "clustering.min_cluster_size");
        if (!value.is_number_integer() || value.get<long long>() < 1) {
          throw ConfigError("clustering.min_cluster_size." + key + ": expected an integer >= 1");
        }
        cl.min_cluster_size[id] = value.get<std::size_t>();
      }
    }
    cl.yaw_step_deg = get_field(c, "clustering", "yaw_step_deg", cl.yaw_step_deg);
    if (c.contains("fit_criterion")) {
      const auto v = get_field<std::string>(c, "clustering", "fit_criterion", "");
      if (v == "area") {
        cl.fit_criterion = FitCriterion::kArea;
      } else if (v == "closeness") {
        cl.fit_criterion = FitCriterion::kCloseness;
      } else {
        throw ConfigError("clustering.fit_criterion: expected \"area\" or \"closeness\"");
      }
    }
  }
  if (doc.contains("scoring")) {
    const json & s = doc.at("scoring");
    detail::reject_unknown(s, "scoring", {"grid_resolution", "weights", "meta_shape_mode",
        "meta_shapes"});
    auto & sc = cfg.scoring;
    sc.grid_resolution = get_field(s, "scoring", "grid_resolution", sc.grid_resolution);
    if (s.contains("weights")) {
      const json & w = s.at("weights");
      detail::reject_unknown(w, "scoring.weights", {"occupancy", "alignment", "meta_shape"});
      sc.weights.occupancy = get_field(w, "scoring.weights", "occupancy", sc.weights.occupancy);
      sc.weights.alignment = get_field(w, "scoring.weights", "alignment", sc.weights.alignment);
      sc.weights.meta_shape = get_field(w, "scoring.weights", "meta_shape", sc.weights.meta_shape);
    }
    const auto mode = get_field<std::string>(s, "scoring", "meta_shape_mode", "corrected");
    if (mode == "corrected") {
      sc.meta_mode = MetaShapeMode::kCorrected;
    } else if (mode == "literal") {
      sc.meta_mode = MetaShapeMode::kLiteral;
    } else {
      throw ConfigError("scoring.meta_shape_mode: expected 'corrected' or 'literal'");
    }
    if (s.contains("meta_shapes")) {
      const json & m = s.at("meta_shapes");
      if (!m.is_object()) {
        throw ConfigError("scoring.meta_shapes: expected an object");
      }
      for (const auto & [key, value] : m.items()) {
        const int id = detail::resolve_class(cfg.class_names, key, "scoring.meta_shapes");
        std::vector<double> v;
        try {
          v = value.get<std::vector<double>>();
        } catch (const json::exception &) {
          v.clear();
        }
        if (v.size() != 3) {
          throw ConfigError("scoring.meta_shapes." + key + ": expected [length, width, height]");
        }
        cfg.meta_shapes[id] = MetaShape{v[0], v[1], v[2]};
      }
    }
  }
  if (doc.contains("nms")) {
    const json & n = doc.at("nms");
    detail::reject_unknown(n, "nms", {"iou_threshold"});
    cfg.nms_iou = get_field(n, "nms", "iou_threshold", cfg.nms_iou);
  }
  if (doc.contains("label_weight")) {
    const json & l = doc.at("label_weight");
    detail::reject_unknown(l, "label_weight", {"theta_low", "theta_high"});
    cfg.thresholds.low = get_field(l, "label_weight", "theta_low", cfg.thresholds.low);
    cfg.thresholds.high = get_field(l, "label_weight", "theta_high", cfg.thresholds.high);
  }
  if (doc.contains("self_training")) {
    const json & t = doc.at("self_training");
    detail::reject_unknown(t, "self_training", {"confidence_floor", "scf", "stcf_group_iou",
        "enable_scf", "enable_stcf", "enable_baf"});
    auto & r = cfg.refine;
    r.confidence_floor = get_field(t, "self_training", "confidence_floor", r.confidence_floor);
    r.stcf_group_iou = get_field(t, "self_training", "stcf_group_iou", r.stcf_group_iou);
    r.enable_scf = get_field(t, "self_training", "enable_scf", r.enable_scf);
    r.enable_stcf = get_field(t, "self_training", "enable_stcf", r.enable_stcf);
    r.enable_baf = get_field(t, "self_training", "enable_baf", r.enable_baf);
    if (t.contains("scf")) {
      const json & f = t.at("scf");
      detail::reject_unknown(f, "self_training.scf", {"min_points", "min_fraction"});
      const auto mp = get_field<long long>(f, "self_training.scf", "min_points",
          static_cast<long long>(r.scf.min_points));
      if (mp < 1) {
        throw ConfigError("self_training.scf.min_points: must be >= 1");
      }
      r.scf.min_points = static_cast<std::size_t>(mp);
      r.scf.min_fraction = get_field(f, "self_training.scf", "min_fraction", r.scf.min_fraction);
    }
  }
  if (doc.contains("evaluation")) {
    const json & e = doc.at("evaluation");
    detail::reject_unknown(e, "evaluation", {"iou_thresholds", "range_bins", "error_match_iou",
        "histogram_bins", "class_agnostic"});
    auto & ev = cfg.evaluation;
    ev.iou_thresholds = get_field(e, "evaluation", "iou_thresholds", ev.iou_thresholds);
    ev.range_bin_edges = get_field(e, "evaluation", "range_bins", ev.range_bin_edges);
    ev.error_match_iou = get_field(e, "evaluation", "error_match_iou", ev.error_match_iou);
    ev.histogram_bins = get_field(e, "evaluation", "histogram_bins", ev.histogram_bins);
    ev.class_agnostic = get_field(e, "evaluation", "class_agnostic", ev.class_agnostic);
  }
  cfg.seed = get_field<std::uint64_t>(doc, "config", "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

inline nlohmann::json config_to_json(const PipelineConfig & cfg)
{
  using nlohmann::json;
  json doc;
  json classes = json::object();
  for (const auto & [id, name] : cfg.class_names) {
    classes[std::to_string(id)] = name;
  }
  doc["classes"] = classes;
  auto class_key = [&](int id) {
      const auto it = cfg.class_names.find(id);
      return it == cfg.class_names.end() ? std::to_string(id) : it->second;
    };
  doc["aggregation"] = {
    {"half_window", cfg.aggregation.half_window}, {"epsilon", cfg.aggregation.epsilon},
    {"cell_size", cfg.aggregation.cell_size}, {"range", cfg.aggregation.range}};
  json radii = json::object();
  for (const auto & [id, r] : cfg.clustering.candidate_radii) {
    radii[class_key(id)] = r;
  }
  json mcs = json::object();
  for (const auto & [id, m] : cfg.clustering.min_cluster_size) {
    mcs[class_key(id)] = m;
  }
  doc["clustering"] = {
    {"candidate_radii", radii}, {"min_pts", cfg.clustering.min_pts}, {"min_cluster_size", mcs},
    {"yaw_step_deg", cfg.clustering.yaw_step_deg},
    {"fit_criterion", cfg.clustering.fit_criterion == FitCriterion::kArea ? "area" : "closeness"}};
  json metas = json::object();
  for (const auto & [id, m] : cfg.meta_shapes) {
    metas[class_key(id)] = {m.length, m.width, m.height};
  }
  doc["scoring"] = {
    {"grid_resolution", cfg.scoring.grid_resolution},
    {"weights", {{"occupancy", cfg.scoring.weights.occupancy},
      {"alignment", cfg.scoring.weights.alignment},
      {"meta_shape", cfg.scoring.weights.meta_shape}}},
    {"meta_shape_mode", cfg.scoring.meta_mode == MetaShapeMode::kCorrected ? "corrected" :
      "literal"},
    {"meta_shapes", metas}};
  doc["nms"] = {{"iou_threshold", cfg.nms_iou}};
  doc["label_weight"] = {{"theta_low", cfg.thresholds.low}, {"theta_high", cfg.thresholds.high}};
  doc["self_training"] = {
    {"confidence_floor", cfg.refine.confidence_floor},
    {"scf", {{"min_points", cfg.refine.scf.min_points},
      {"min_fraction", cfg.refine.scf.min_fraction}}},
    {"stcf_group_iou", cfg.refine.stcf_group_iou}, {"enable_scf", cfg.refine.enable_scf},
    {"enable_stcf", cfg.refine.enable_stcf}, {"enable_baf", cfg.refine.enable_baf}};
  doc["evaluation"] = {
    {"iou_thresholds", cfg.evaluation.iou_thresholds},
    {"range_bins", cfg.evaluation.range_bin_edges},
    {"error_match_iou", cfg.evaluation.error_match_iou},
    {"histogram_bins", cfg.evaluation.histogram_bins},
    {"class_agnostic", cfg.evaluation.class_agnostic}};
  doc["seed"] = cfg.seed;
  return doc;
}

inline PipelineConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path.string() + "'");
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception & e) {
    throw ConfigError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__CONFIG_HPP_
