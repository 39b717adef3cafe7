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

#include "pseudobox/config.hpp"
#include "pseudobox/evaluation.hpp"
#include "pseudobox/io.hpp"
#include "pseudobox/mock_detector.hpp"
#include "pseudobox/parallel.hpp"
#include "pseudobox/pipeline.hpp"
#include "pseudobox/self_training.hpp"
#include "pseudobox/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace
{

namespace fs = std::filesystem;
using namespace pseudobox;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions
{
  std::string config;
  int threads{0};
  std::optional<std::uint64_t> seed;
};

void warn(const std::string & msg)
{
  std::cerr << "warning: " << msg << "\n";
}

PipelineConfig load_effective_config(const GlobalOptions & g)
{
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
  }
  cfg.validate();
  return cfg;
}

/// Ten equal bins over [0, 1].
struct Histogram
{
  std::vector<std::size_t> bins = std::vector<std::size_t>(10, 0);

  void add(double v)
  {
    const auto b = static_cast<std::size_t>(std::clamp(v, 0.0, 1.0) * 10.0);
    ++bins[std::min<std::size_t>(b, 9)];
  }
};

nlohmann::json label_summary(
  const std::vector<std::vector<PseudoLabel>> & frames, const std::map<int, std::string> & names)
{
  Histogram msf;
  Histogram weight;
  std::map<std::string, std::size_t> per_class;
  std::size_t total = 0;
  for (const auto & f : frames) {
    for (const auto & l : f) {
      msf.add(l.scores.msf);
      weight.add(l.weight);
      const auto it = names.find(l.class_id());
      ++per_class[it != names.end() ? it->second : std::to_string(l.class_id())];
      ++total;
    }
  }
  return {{"frames", frames.size()}, {"labels", total}, {"labels_per_class", per_class},
    {"msf_histogram", msf.bins}, {"weight_histogram", weight.bins}};
}

// ------------------------------------------------------------------ synth

struct SynthOptions
{
  std::string preset;
  std::string out;
  std::string name;
  bool binary{false};
};

int run_synth(const GlobalOptions & g, const SynthOptions & o)
{
  const std::uint64_t seed = g.seed.value_or(0);
  const SceneSpec spec = make_preset(o.preset, seed);
  const std::string name = o.name.empty() ? o.preset : o.name;
  const auto synthetic = generate_sequence(spec, name, resolve_thread_count(g.threads));
  write_sequence(o.out, synthetic.sequence, &synthetic.ground_truth,
    DatasetWriteOptions{o.binary});
  std::size_t points = 0;
  std::size_t boxes = 0;
  for (std::size_t k = 0; k < synthetic.sequence.frames.size(); ++k) {
    points += synthetic.sequence.frames[k].points.size();
    boxes += synthetic.ground_truth[k].size();
  }
  std::cerr << "synth: wrote " << synthetic.sequence.frames.size() << " frames (" << points
            << " points, " << boxes << " ground-truth boxes) to " << (fs::path(o.out) / name)
            << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ generate

struct GenerateOptions
{
  std::string dataset;
  std::string out;
};

int run_generate(const GlobalOptions & g, const GenerateOptions & o)
{
  const PipelineConfig cfg = load_effective_config(g);
  const unsigned threads = resolve_thread_count(g.threads);
  nlohmann::json summary;
  summary["config"] = config_to_json(cfg);
  nlohmann::json seqs = nlohmann::json::object();
  for (const auto & dir : list_sequences(o.dataset)) {
    const Sequence seq = read_sequence(dir);
    const auto frames = generate_sequence_labels(seq, cfg, threads);
    std::vector<std::vector<PseudoLabel>> labels;
    std::size_t candidates = 0;
    for (const auto & f : frames) {
      write_labels(fs::path(o.out) / seq.name / frame_file_name(f.frame_id), f.labels);
      labels.push_back(f.labels);
      candidates += f.candidate_count;
    }
    nlohmann::json s = label_summary(labels, seq.class_names);
    s["candidates"] = candidates;
    seqs[seq.name] = s;
  }
  summary["sequences"] = seqs;
  write_json(fs::path(o.out) / "summary.json", summary);
  return kExitOk;
}

// ------------------------------------------------------------------ refine

struct RefineCliOptions
{
  std::string dataset;
  std::string preds;
  std::string out;
};

int run_refine(const GlobalOptions & g, const RefineCliOptions & o)
{
  const PipelineConfig cfg = load_effective_config(g);
  const unsigned threads = resolve_thread_count(g.threads);
  nlohmann::json seqs = nlohmann::json::object();
  for (const auto & dir : list_sequences(o.dataset)) {
    const Sequence seq = read_sequence(dir);
    const auto files = list_frame_files(fs::path(o.preds) / seq.name);
    if (files.empty()) {
      warn("no prediction files for sequence '" + seq.name + "' under " + o.preds);
    }
    std::vector<Prediction> flat;
    for (const auto & [id, path] : files) {
      for (auto & p : read_predictions(path)) {
        if (p.frame_id != id) {
          throw FormatError(
                  path.string() + ": record frame_id " + std::to_string(p.frame_id) +
                  " does not match the file name");
        }
        flat.push_back(p);
      }
    }
    const auto preds = predictions_by_frame(seq, flat);
    const RefinedLabelSet result = refine_round(seq, preds, cfg, threads);
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      const std::string file = frame_file_name(seq.frames[k].frame_id);
      write_labels(fs::path(o.out) / seq.name / file, result.labels[k]);
      write_index_list(fs::path(o.out) / seq.name / "retained" / file, result.retained[k]);
    }
    nlohmann::json s = label_summary(result.labels, seq.class_names);
    s["predictions"] = flat.size();
    std::size_t refined = 0;
    for (const auto & f : result.labels) {
      for (const auto & l : f) {
        refined += l.source == LabelSource::kStcfRefined;
      }
    }
    s["stcf_refined"] = refined;
    seqs[seq.name] = s;
  }
  write_json(fs::path(o.out) / "summary.json", {{"sequences", seqs}});
  return kExitOk;
}

// ------------------------------------------------------------------ score-labels

struct ScoreOptions
{
  std::string dataset;
  std::string labels;
  std::string out;
};

int run_score_labels(const GlobalOptions & g, const ScoreOptions & o)
{
  const PipelineConfig cfg = load_effective_config(g);
  const unsigned threads = resolve_thread_count(g.threads);
  for (const auto & dir : list_sequences(o.dataset)) {
    const Sequence seq = read_sequence(dir);
    const auto files = list_frame_files(fs::path(o.labels) / seq.name);
    std::map<int, std::size_t> slot;
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      slot[seq.frames[k].frame_id] = k;
    }
    std::vector<std::pair<int, fs::path>> work(files.begin(), files.end());
    std::vector<std::vector<std::string>> warnings(work.size());
    parallel_for(
      work.size(), threads, [&](std::size_t w) {
        const auto & [id, path] = work[w];
        const auto it = slot.find(id);
        if (it == slot.end()) {
          throw FormatError(path.string() + ": frame " + std::to_string(id) + " not in sequence");
        }
        auto labels = read_labels(path, cfg.thresholds, &warnings[w]);
        const ScoringContext ctx = frame_scoring_context(seq, it->second, cfg);
        labels = rescore_labels(std::move(labels), ctx, cfg);
        write_labels(fs::path(o.out) / seq.name / path.filename(), labels);
      });
    for (const auto & ws : warnings) {
      for (const auto & w : ws) {
        warn(w);
      }
    }
  }
  return kExitOk;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateOptions
{
  std::string labels;
  std::string gt;
  std::string report;
};

/// Label or prediction file, told apart by field count; the matching score is
/// msf for labels and confidence for predictions.
std::vector<ScoredBox> read_scored_boxes(const fs::path & path)
{
  const std::string text = io_detail::read_file(path);
  const auto records = io_detail::split_records(text);
  if (records.empty()) {
    return {};
  }
  std::vector<ScoredBox> out;
  if (records.front().fields.size() == 10) {
    for (const auto & p : read_predictions(path)) {
      out.push_back(ScoredBox{p.box, p.confidence});
    }
  } else {
    for (const auto & l : read_labels(path)) {
      out.push_back(ScoredBox{l.box, l.scores.msf});
    }
  }
  return out;
}

int run_evaluate(const GlobalOptions & g, const EvaluateOptions & o)
{
  const PipelineConfig cfg = load_effective_config(g);
  std::vector<FrameEvaluation> frames;
  std::map<int, std::string> names = cfg.class_names;
  for (const auto & dir : list_sequences(o.gt)) {
    const nlohmann::json manifest = read_manifest(dir);
    const std::string name = manifest.value("sequence", dir.filename().string());
    const auto gts = read_sequence_ground_truth(dir);
    const auto files = list_frame_files(fs::path(o.labels) / name);
    std::size_t k = 0;
    for (const auto & entry : manifest.at("frames")) {
      const int id = entry.at("frame_id").get<int>();
      FrameEvaluation fe;
      const auto it = files.find(id);
      if (it != files.end()) {
        fe.labels = read_scored_boxes(it->second);
      }
      for (const auto & gt : gts[k]) {
        fe.gts.push_back(gt.box);
      }
      frames.push_back(std::move(fe));
      ++k;
    }
  }
  const EvalReport report = compute_report(frames, cfg.evaluation);
  write_json(o.report, report_to_json(report, names));
  write_report_csvs(o.report, report, names);
  return kExitOk;
}

// ------------------------------------------------------------------ mock-detect

struct MockOptions
{
  std::string dataset;
  std::string labels;
  std::string noise{"default"};
  std::string out;
};

int run_mock_detect(const GlobalOptions & g, const MockOptions & o)
{
  const PipelineConfig cfg = load_effective_config(g);
  const NoiseModel noise = noise_profile(o.noise);
  std::vector<int> classes;
  for (const auto & [id, name] : cfg.class_names) {
    classes.push_back(id);
  }
  for (const auto & dir : list_sequences(o.dataset)) {
    const nlohmann::json manifest = read_manifest(dir);
    const std::string name = manifest.value("sequence", dir.filename().string());
    std::vector<int> ids;
    for (const auto & entry : manifest.at("frames")) {
      ids.push_back(entry.at("frame_id").get<int>());
    }
    std::vector<std::vector<Box3D>> reference(ids.size());
    if (o.labels.empty()) {
      const auto gts = read_sequence_ground_truth(dir);
      for (std::size_t k = 0; k < ids.size(); ++k) {
        for (const auto & gt : gts[k]) {
          reference[k].push_back(gt.box);
        }
      }
    } else {
      const auto files = list_frame_files(fs::path(o.labels) / name);
      for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto it = files.find(ids[k]);
        if (it == files.end()) {
          continue;
        }
        for (const auto & l : read_labels(it->second)) {
          reference[k].push_back(l.box);
        }
      }
    }
    const auto preds = mock_detect(reference, ids, noise, classes, cfg.seed);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      write_predictions(fs::path(o.out) / name / frame_file_name(ids[k]), preds[k]);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Unsupervised pseudo-label generation and refinement for LiDAR sequences"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--threads", g.threads, "Worker threads (0: $PSEUDOBOX_THREADS or all cores)")
  ->check(CLI::NonNegativeNumber);
  std::uint64_t seed = 0;
  auto * seed_opt = app.add_option("--seed", seed, "Random seed (overrides the config)");

  SynthOptions synth;
  auto * c_synth = app.add_subcommand("synth", "Write a synthetic dataset with ground truth");
  c_synth->add_option("--preset", synth.preset, "Scene preset")->required()
  ->check(CLI::IsMember(preset_names()));
  c_synth->add_option("--out", synth.out, "Dataset root")->required();
  c_synth->add_option("--name", synth.name, "Sequence name (default: preset name)");
  c_synth->add_flag("--binary", synth.binary, "Write binary point files");

  GenerateOptions gen;
  auto * c_gen = app.add_subcommand("generate", "Generate pseudo-labels for a dataset");
  c_gen->add_option("dataset", gen.dataset, "Dataset root or sequence directory")->required();
  c_gen->add_option("--out", gen.out, "Label output directory")->required();

  RefineCliOptions ref;
  auto * c_ref = app.add_subcommand("refine", "Run one self-training refinement round");
  c_ref->add_option("dataset", ref.dataset, "Dataset root or sequence directory")->required();
  c_ref->add_option("--preds", ref.preds, "Prediction directory")->required();
  c_ref->add_option("--out", ref.out, "Refined label output directory")->required();

  ScoreOptions score;
  auto * c_score = app.add_subcommand("score-labels", "Recompute score breakdowns of label files");
  c_score->add_option("dataset", score.dataset, "Dataset root or sequence directory")->required();
  c_score->add_option("--labels", score.labels, "Label directory")->required()
  ->check(CLI::ExistingDirectory);
  c_score->add_option("--out", score.out, "Output directory for rescored labels")->required();

  EvaluateOptions eval;
  auto * c_eval = app.add_subcommand("evaluate", "Evaluate labels against ground truth");
  c_eval->add_option("--labels", eval.labels, "Label or prediction directory")->required();
  c_eval->add_option("--gt", eval.gt, "Dataset with ground truth")->required()
  ->check(CLI::ExistingDirectory);
  c_eval->add_option("--report", eval.report, "Report file (JSON); CSVs are written beside it")
  ->required();

  MockOptions mock;
  auto * c_mock = app.add_subcommand("mock-detect", "Produce noisy detector predictions");
  c_mock->add_option("dataset", mock.dataset, "Dataset root or sequence directory")->required();
  c_mock->add_option("--labels", mock.labels,
    "Reference label directory (default: dataset ground truth)");
  c_mock->add_option("--noise", mock.noise, "Noise profile")
  ->check(CLI::IsMember({"clean", "default", "heavy"}));
  c_mock->add_option("--out", mock.out, "Prediction output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kExitUsage;
  }
  if (*seed_opt) {
    g.seed = seed;
  }

  try {
    if (*c_synth) {
      return run_synth(g, synth);
    }
    if (*c_gen) {
      return run_generate(g, gen);
    }
    if (*c_ref) {
      return run_refine(g, ref);
    }
    if (*c_score) {
      return run_score_labels(g, score);
    }
    if (*c_eval) {
      return run_evaluate(g, eval);
    }
    if (*c_mock) {
      return run_mock_detect(g, mock);
    }
  } catch (const ConfigError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
