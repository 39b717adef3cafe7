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

// On-disk formats. All text formats are whitespace-separated, LF-terminated,
// and allow '#' comment lines. Floats are written in shortest round-trip form.
//
//   points       x y z class_id
//   points (bin) "S2BPTS01" then records of 3 x float64 + uint16, little-endian
//   pose         3 rows of 4 values: [R | t], sensor -> global
//   labels       frame_id class_id cx cy cz l w h yaw occ alg ms msf weight source
//   predictions  frame_id class_id cx cy cz l w h yaw confidence
//   groundtruth  frame_id class_id cx cy cz l w h yaw object_id static|moving
//   retained     one point index per line
//
// Dataset layout: <root>/<sequence>/manifest.json plus points/, poses/ and gt/
// holding one <frame_id:06>.txt per frame. Label and prediction trees use
// <dir>/<sequence>/<frame_id:06>.txt.

#ifndef PSEUDOBOX__IO_HPP_
#define PSEUDOBOX__IO_HPP_

#include "pseudobox/aggregation.hpp"
#include "pseudobox/errors.hpp"
#include "pseudobox/evaluation.hpp"
#include "pseudobox/geometry.hpp"
#include "pseudobox/scoring.hpp"
#include "pseudobox/self_training.hpp"
#include "pseudobox/synthetic.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pseudobox
{

namespace fs = std::filesystem;

inline constexpr std::string_view kBinaryPointsMagic = "S2BPTS01";
inline constexpr std::size_t kBinaryPointRecord = 3 * sizeof(double) + sizeof(std::uint16_t);

namespace io_detail
{

inline void append_double(std::string & out, double v)
{
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

inline void append_int(std::string & out, long long v)
{
  std::array<char, 24> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

inline std::string read_file(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PipelineError("cannot open '" + path.string() + "' for reading");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path & path, std::string_view data)
{
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw PipelineError("cannot open '" + path.string() + "' for writing");
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) {
    throw PipelineError("write failed for '" + path.string() + "'");
  }
}

/// One non-comment line split into tokens, with its 1-based line number.
struct Record
{
  std::size_t line{0};
  std::vector<std::string_view> fields;
};

inline std::vector<Record> split_records(std::string_view text)
{
  std::vector<Record> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    Record r{line_no, {}};
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
        ++i;
      }
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') {
        ++j;
      }
      if (j > i) {
        r.fields.push_back(line.substr(i, j - i));
      }
      i = j;
    }
    if (r.fields.empty() || r.fields.front().front() == '#') {
      continue;
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Field accessor that names the file, line and field in every error.
class FieldReader
{
public:
  FieldReader(const fs::path & path, const Record & record)
  : path_(path), record_(record) {}

  [[nodiscard]] std::string where() const
  {
    return path_.string() + ":" + std::to_string(record_.line);
  }

  [[nodiscard]] std::string_view raw(std::size_t i, const char * name) const
  {
    if (i >= record_.fields.size()) {
      throw FormatError(where() + ": missing field '" + name + "'");
    }
    return record_.fields[i];
  }

  [[nodiscard]] double real(std::size_t i, const char * name) const
  {
    const auto s = raw(i, name);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw FormatError(where() + ": field '" + name + "' is not a finite number");
    }
    return v;
  }

  [[nodiscard]] long long integer(std::size_t i, const char * name) const
  {
    const auto s = raw(i, name);
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw FormatError(where() + ": field '" + name + "' is not an integer");
    }
    return v;
  }

  void expect_count(std::size_t n) const
  {
    if (record_.fields.size() > n) {
      throw FormatError(where() + ": expected " + std::to_string(n) + " fields, found " +
              std::to_string(record_.fields.size()));
    }
  }

  /// Box fields at positions [first, first + 8): class_id cx cy cz l w h yaw.
  [[nodiscard]] Box3D box(std::size_t first) const
  {
    const auto cls = integer(first, "class_id");
    try {
      return Box3D(
        real(first + 1, "cx"), real(first + 2, "cy"), real(first + 3, "cz"),
        real(first + 4, "l"), real(first + 5, "w"), real(first + 6, "h"), real(first + 7, "yaw"),
        static_cast<int>(cls));
    } catch (const std::invalid_argument & e) {
      throw FormatError(where() + ": invalid box: " + e.what());
    }
  }

private:
  const fs::path & path_;
  const Record & record_;
};

inline void append_box(std::string & out, const Box3D & b)
{
  append_int(out, b.class_id());
  for (double v : {b.cx(), b.cy(), b.cz(), b.length(), b.width(), b.height(), b.yaw()}) {
    out.push_back(' ');
    append_double(out, v);
  }
}

}  // namespace io_detail

inline std::string frame_file_name(int frame_id)
{
  if (frame_id < 0) {
    throw PipelineError("frame ids must be non-negative (got " + std::to_string(frame_id) + ")");
  }
  std::string digits = std::to_string(frame_id);
  if (digits.size() < 6) {
    digits.insert(0, 6 - digits.size(), '0');
  }
  return digits + ".txt";
}

// ---------------------------------------------------------------- points

inline void write_points_text(const fs::path & path, std::span<const SemanticPoint> points)
{
  std::string out;
  out.reserve(points.size() * 48);
  for (const auto & p : points) {
    io_detail::append_double(out, p.x);
    out.push_back(' ');
    io_detail::append_double(out, p.y);
    out.push_back(' ');
    io_detail::append_double(out, p.z);
    out.push_back(' ');
    io_detail::append_int(out, p.class_id);
    out.push_back('\n');
  }
  io_detail::write_file(path, out);
}

inline void write_points_binary(const fs::path & path, std::span<const SemanticPoint> points)
{
  static_assert(std::endian::native == std::endian::little, "binary format assumes little-endian");
  std::string out(kBinaryPointsMagic);
  out.reserve(out.size() + points.size() * kBinaryPointRecord);
  for (const auto & p : points) {
    if (p.class_id < 0 || p.class_id > 0xFFFF) {
      throw FormatError("class id " + std::to_string(p.class_id) + " does not fit uint16");
    }
    char rec[kBinaryPointRecord];
    const double xyz[3] = {p.x, p.y, p.z};
    const auto cls = static_cast<std::uint16_t>(p.class_id);
    std::memcpy(rec, xyz, sizeof(xyz));
    std::memcpy(rec + sizeof(xyz), &cls, sizeof(cls));
    out.append(rec, kBinaryPointRecord);
  }
  io_detail::write_file(path, out);
}

inline std::vector<SemanticPoint> parse_points_binary(const fs::path & path, std::string_view data)
{
  if (data.size() < kBinaryPointsMagic.size() ||
    data.substr(0, kBinaryPointsMagic.size()) != kBinaryPointsMagic)
  {
    throw FormatError(path.string() + ": bad magic (expected S2BPTS01)");
  }
  data.remove_prefix(kBinaryPointsMagic.size());
  const std::size_t n = data.size() / kBinaryPointRecord;
  if (data.size() % kBinaryPointRecord != 0) {
    throw FormatError(path.string() + ": truncated record " + std::to_string(n));
  }
  std::vector<SemanticPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const char * rec = data.data() + i * kBinaryPointRecord;
    double xyz[3];
    std::uint16_t cls = 0;
    std::memcpy(xyz, rec, sizeof(xyz));
    std::memcpy(&cls, rec + sizeof(xyz), sizeof(cls));
    out[i] = SemanticPoint{xyz[0], xyz[1], xyz[2], static_cast<int>(cls), 0};
  }
  return out;
}

inline std::vector<SemanticPoint> parse_points_text(const fs::path & path, std::string_view data)
{
  std::vector<SemanticPoint> out;
  for (const auto & rec : io_detail::split_records(data)) {
    const io_detail::FieldReader f(path, rec);
    f.expect_count(4);
    const auto cls = f.integer(3, "class_id");
    if (cls < 0) {
      throw FormatError(f.where() + ": field 'class_id' must be >= 0");
    }
    out.push_back(
      SemanticPoint{f.real(0, "x"), f.real(1, "y"), f.real(2, "z"), static_cast<int>(cls), 0});
  }
  return out;
}

/// Reads either points format, chosen by the leading magic.
inline std::vector<SemanticPoint> read_points(const fs::path & path)
{
  const std::string data = io_detail::read_file(path);
  if (data.starts_with(kBinaryPointsMagic.substr(0, 4)) || path.extension() == ".bin") {
    return parse_points_binary(path, data);
  }
  return parse_points_text(path, data);
}

// ---------------------------------------------------------------- poses

inline void write_pose(const fs::path & path, const Pose & pose)
{
  std::string out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      io_detail::append_double(out, pose.rotation()(r, c));
      out.push_back(' ');
    }
    io_detail::append_double(out, pose.translation()(r));
    out.push_back('\n');
  }
  io_detail::write_file(path, out);
}

inline Pose read_pose(const fs::path & path)
{
  const std::string data = io_detail::read_file(path);
  const auto recs = io_detail::split_records(data);
  if (recs.size() != 3) {
    throw FormatError(path.string() + ": pose needs 3 rows of 4 values");
  }
  Eigen::Matrix3d rot;
  Eigen::Vector3d t;
  for (int r = 0; r < 3; ++r) {
    const io_detail::FieldReader f(path, recs[static_cast<std::size_t>(r)]);
    f.expect_count(4);
    for (int c = 0; c < 3; ++c) {
      rot(r, c) = f.real(static_cast<std::size_t>(c), "rotation");
    }
    t(r) = f.real(3, "translation");
  }
  try {
    return Pose(rot, t);
  } catch (const std::invalid_argument & e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- boxes

inline std::string format_labels(std::span<const PseudoLabel> labels)
{
  std::string out = "# frame_id class_id cx cy cz l w h yaw occ alg ms msf weight source\n";
  for (const auto & l : labels) {
    io_detail::append_int(out, l.frame_id);
    out.push_back(' ');
    io_detail::append_box(out, l.box);
    for (double v : {l.scores.occ, l.scores.alg, l.scores.ms, l.scores.msf, l.weight}) {
      out.push_back(' ');
      io_detail::append_double(out, v);
    }
    out.push_back(' ');
    out += to_string(l.source);
    out.push_back('\n');
  }
  return out;
}

inline void write_labels(const fs::path & path, std::span<const PseudoLabel> labels)
{
  io_detail::write_file(path, format_labels(labels));
}

/// Reads a label file. When `warnings` is given, labels whose weight differs
/// from the weight implied by their msf under `thresholds` add a message.
inline std::vector<PseudoLabel> read_labels(
  const fs::path & path, const LabelThresholds & thresholds = {},
  std::vector<std::string> * warnings = nullptr)
{
  std::vector<PseudoLabel> out;
  const std::string data = io_detail::read_file(path);
  for (const auto & rec : io_detail::split_records(data)) {
    const io_detail::FieldReader f(path, rec);
    f.expect_count(15);
    PseudoLabel l{f.box(1), {}, 0.0, LabelSource::kInit,
      static_cast<int>(f.integer(0, "frame_id"))};
    l.scores.occ = f.real(9, "occ");
    l.scores.alg = f.real(10, "alg");
    l.scores.ms = f.real(11, "ms");
    l.scores.msf = f.real(12, "msf");
    l.weight = f.real(13, "weight");
    const auto src = f.raw(14, "source");
    if (src == "init") {
      l.source = LabelSource::kInit;
    } else if (src == "stcf-refined") {
      l.source = LabelSource::kStcfRefined;
    } else {
      throw FormatError(f.where() + ": field 'source' must be init or stcf-refined");
    }
    if (warnings != nullptr &&
      std::abs(l.weight - label_weight(l.scores.msf, thresholds)) > 1e-9)
    {
      warnings->push_back(
        f.where() + ": weight " + std::to_string(l.weight) +
        " is inconsistent with msf " + std::to_string(l.scores.msf));
    }
    out.push_back(l);
  }
  return out;
}

inline void write_predictions(const fs::path & path, std::span<const Prediction> preds)
{
  std::string out = "# frame_id class_id cx cy cz l w h yaw confidence\n";
  for (const auto & p : preds) {
    io_detail::append_int(out, p.frame_id);
    out.push_back(' ');
    io_detail::append_box(out, p.box);
    out.push_back(' ');
    io_detail::append_double(out, p.confidence);
    out.push_back('\n');
  }
  io_detail::write_file(path, out);
}

inline std::vector<Prediction> read_predictions(const fs::path & path)
{
  std::vector<Prediction> out;
  const std::string data = io_detail::read_file(path);
  for (const auto & rec : io_detail::split_records(data)) {
    const io_detail::FieldReader f(path, rec);
    f.expect_count(10);
    Prediction p{f.box(1), f.real(9, "confidence"), static_cast<int>(f.integer(0, "frame_id"))};
    try {
      p.validate();
    } catch (const FormatError & e) {
      throw FormatError(f.where() + ": " + e.what());
    }
    out.push_back(p);
  }
  return out;
}

inline void write_ground_truth(
  const fs::path & path, int frame_id, std::span<const GroundTruthBox> gts)
{
  std::string out = "# frame_id class_id cx cy cz l w h yaw object_id static|moving\n";
  for (const auto & g : gts) {
    io_detail::append_int(out, frame_id);
    out.push_back(' ');
    io_detail::append_box(out, g.box);
    out.push_back(' ');
    io_detail::append_int(out, g.object_id);
    out += g.is_static ? " static\n" : " moving\n";
  }
  io_detail::write_file(path, out);
}

inline std::vector<GroundTruthBox> read_ground_truth(const fs::path & path)
{
  std::vector<GroundTruthBox> out;
  const std::string data = io_detail::read_file(path);
  for (const auto & rec : io_detail::split_records(data)) {
    const io_detail::FieldReader f(path, rec);
    f.expect_count(11);
    (void)f.integer(0, "frame_id");
    const auto motion = f.raw(10, "motion");
    if (motion != "static" && motion != "moving") {
      throw FormatError(f.where() + ": field 'motion' must be static or moving");
    }
    out.push_back(
      GroundTruthBox{f.box(1), static_cast<int>(f.integer(9, "object_id")), motion == "static"});
  }
  return out;
}

inline void write_index_list(const fs::path & path, std::span<const std::size_t> indices)
{
  std::string out;
  out.reserve(indices.size() * 7);
  for (std::size_t i : indices) {
    io_detail::append_int(out, static_cast<long long>(i));
    out.push_back('\n');
  }
  io_detail::write_file(path, out);
}

inline std::vector<std::size_t> read_index_list(const fs::path & path)
{
  std::vector<std::size_t> out;
  const std::string data = io_detail::read_file(path);
  for (const auto & rec : io_detail::split_records(data)) {
    const io_detail::FieldReader f(path, rec);
    f.expect_count(1);
    const auto v = f.integer(0, "index");
    if (v < 0) {
      throw FormatError(f.where() + ": negative index");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

// ---------------------------------------------------------------- datasets

struct DatasetWriteOptions
{
  bool binary_points{false};
};

/// Writes one sequence (and its ground truth when given) under `root`.
inline void write_sequence(
  const fs::path & root, const Sequence & seq,
  const std::vector<std::vector<GroundTruthBox>> * ground_truth = nullptr,
  const DatasetWriteOptions & options = {})
{
  seq.validate();
  const fs::path dir = root / seq.name;
  nlohmann::json manifest;
  manifest["format"] = "pseudobox-dataset";
  manifest["version"] = 1;
  manifest["sequence"] = seq.name;
  nlohmann::json classes = nlohmann::json::object();
  for (const auto & [id, name] : seq.class_names) {
    classes[std::to_string(id)] = name;
  }
  manifest["classes"] = classes;
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const Frame & f = seq.frames[k];
    std::string stem = frame_file_name(f.frame_id);
    stem.resize(stem.size() - 4);
    const std::string points_rel = "points/" + stem + (options.binary_points ? ".bin" : ".txt");
    nlohmann::json entry{{"frame_id", f.frame_id}, {"timestamp", f.timestamp},
      {"points", points_rel}};
    if (options.binary_points) {
      write_points_binary(dir / points_rel, f.points);
    } else {
      write_points_text(dir / points_rel, f.points);
    }
    if (f.pose) {
      const std::string pose_rel = "poses/" + stem + ".txt";
      write_pose(dir / pose_rel, *f.pose);
      entry["pose"] = pose_rel;
    }
    if (ground_truth != nullptr) {
      const std::string gt_rel = "gt/" + stem + ".txt";
      write_ground_truth(dir / gt_rel, f.frame_id, (*ground_truth)[k]);
      entry["gt"] = gt_rel;
    }
    frames.push_back(entry);
  }
  manifest["frames"] = frames;
  io_detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline nlohmann::json read_manifest(const fs::path & seq_dir)
{
  const fs::path path = seq_dir / "manifest.json";
  try {
    return nlohmann::json::parse(io_detail::read_file(path));
  } catch (const nlohmann::json::exception & e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline Sequence read_sequence(const fs::path & seq_dir)
{
  const nlohmann::json m = read_manifest(seq_dir);
  const std::string where = (seq_dir / "manifest.json").string();
  Sequence seq;
  try {
    seq.name = m.value("sequence", seq_dir.filename().string());
    for (const auto & [key, name] : m.at("classes").items()) {
      seq.class_names[std::stoi(key)] = name.get<std::string>();
    }
    for (const auto & entry : m.at("frames")) {
      Frame f;
      f.frame_id = entry.at("frame_id").get<int>();
      f.timestamp = entry.at("timestamp").get<double>();
      f.points = read_points(seq_dir / entry.at("points").get<std::string>());
      if (entry.contains("pose")) {
        f.pose = read_pose(seq_dir / entry.at("pose").get<std::string>());
      }
      seq.frames.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception & e) {
    throw FormatError(where + ": " + e.what());
  } catch (const std::logic_error & e) {
    throw FormatError(where + ": bad class table: " + e.what());
  }
  for (const auto & f : seq.frames) {
    for (const auto & p : f.points) {
      if (p.class_id != kBackgroundClass && !seq.class_names.count(p.class_id)) {
        throw FormatError(
                where + ": frame " + std::to_string(f.frame_id) + " uses class id " +
                std::to_string(p.class_id) + " missing from the class table");
      }
    }
  }
  try {
    seq.validate();
  } catch (const std::exception & e) {
    throw FormatError(where + ": " + e.what());
  }
  return seq;
}

/// Ground truth per frame of a sequence, aligned with the manifest frame order.
inline std::vector<std::vector<GroundTruthBox>> read_sequence_ground_truth(const fs::path & seq_dir)
{
  const nlohmann::json m = read_manifest(seq_dir);
  std::vector<std::vector<GroundTruthBox>> out;
  for (const auto & entry : m.at("frames")) {
    if (!entry.contains("gt")) {
      throw FormatError(
              (seq_dir / "manifest.json").string() + ": frame " +
              std::to_string(entry.at("frame_id").get<int>()) + " has no ground truth");
    }
    out.push_back(read_ground_truth(seq_dir / entry.at("gt").get<std::string>()));
  }
  return out;
}

/// Sequence directories (those holding a manifest) under a dataset root, sorted.
inline std::vector<fs::path> list_sequences(const fs::path & root)
{
  if (!fs::is_directory(root)) {
    throw PipelineError("dataset root '" + root.string() + "' is not a directory");
  }
  std::vector<fs::path> out;
  if (fs::exists(root / "manifest.json")) {
    out.push_back(root);
    return out;
  }
  for (const auto & e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) {
    throw PipelineError("no sequences (manifest.json) found under '" + root.string() + "'");
  }
  return out;
}

/// Per-frame files of a label or prediction tree for one sequence, keyed by
/// frame id. Missing directory yields an empty map.
inline std::map<int, fs::path> list_frame_files(const fs::path & dir)
{
  std::map<int, fs::path> out;
  if (!fs::is_directory(dir)) {
    return out;
  }
  for (const auto & e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".txt") {
      continue;
    }
    const std::string stem = e.path().stem().string();
    int id = 0;
    const auto res = std::from_chars(stem.data(), stem.data() + stem.size(), id);
    if (res.ec != std::errc() || res.ptr != stem.data() + stem.size()) {
      continue;
    }
    out[id] = e.path();
  }
  return out;
}

// ---------------------------------------------------------------- reports

namespace io_detail
{

inline nlohmann::json optional_json(const std::optional<double> & v)
{
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json errors_json(const ErrorStats & e)
{
  return {{"count", e.count}, {"size_mae", optional_json(e.size_mae())},
    {"position_mae", optional_json(e.position_mae())}, {"yaw_mae", optional_json(e.yaw_mae())}};
}

inline nlohmann::json class_report_json(const ClassReport & r, const EvalOptions & o)
{
  nlohmann::json thr = nlohmann::json::array();
  for (const auto & t : r.thresholds) {
    thr.push_back(
      {{"iou", t.threshold}, {"tp", t.tp}, {"fp", t.fp}, {"fn", t.fn},
        {"recall", optional_json(t.recall())}, {"precision", optional_json(t.precision())}});
  }
  nlohmann::json ranges = nlohmann::json::array();
  for (std::size_t b = 0; b < r.errors_by_range.size(); ++b) {
    nlohmann::json e = errors_json(r.errors_by_range[b]);
    e["range_min"] = o.range_bin_edges[b];
    e["range_max"] = b + 1 < o.range_bin_edges.size() ?
      nlohmann::json(o.range_bin_edges[b + 1]) : nlohmann::json(nullptr);
    ranges.push_back(e);
  }
  return {{"thresholds", thr}, {"iou_histogram", r.iou_histogram},
    {"errors", errors_json(r.errors)}, {"errors_by_range", ranges}};
}

inline std::string csv_value(const std::optional<double> & v)
{
  if (!v) {
    return "";
  }
  std::string s;
  append_double(s, *v);
  return s;
}

}  // namespace io_detail

inline nlohmann::json report_to_json(
  const EvalReport & report, const std::map<int, std::string> & class_names)
{
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto & [cls, r] : report.per_class) {
    const auto it = class_names.find(cls);
    const std::string key = it != class_names.end() ? it->second : std::to_string(cls);
    per_class[key] = io_detail::class_report_json(r, report.options);
  }
  return {{"frames", report.frames}, {"error_match_iou", report.options.error_match_iou},
    {"class_agnostic", report.options.class_agnostic},
    {"overall", io_detail::class_report_json(report.overall, report.options)},
    {"per_class", per_class}};
}

/// Writes `<stem>_metrics.csv`, `<stem>_errors.csv` and `<stem>_histogram.csv`
/// next to the report.
inline void write_report_csvs(
  const fs::path & report_path, const EvalReport & report,
  const std::map<int, std::string> & class_names)
{
  const fs::path base = report_path.parent_path() / report_path.stem();
  std::vector<std::pair<std::string, const ClassReport *>> rows{{"overall", &report.overall}};
  for (const auto & [cls, r] : report.per_class) {
    const auto it = class_names.find(cls);
    rows.emplace_back(it != class_names.end() ? it->second : std::to_string(cls), &r);
  }
  std::string metrics = "class,iou,tp,fp,fn,recall,precision\n";
  std::string errors = "class,range_min,range_max,count,size_mae,position_mae,yaw_mae\n";
  std::string hist = "class,bin_lo,bin_hi,count\n";
  const auto & o = report.options;
  for (const auto & [name, r] : rows) {
    for (const auto & t : r->thresholds) {
      metrics += name + ",";
      io_detail::append_double(metrics, t.threshold);
      metrics += "," + std::to_string(t.tp) + "," + std::to_string(t.fp) + "," +
        std::to_string(t.fn) + "," + io_detail::csv_value(t.recall()) + "," +
        io_detail::csv_value(t.precision()) + "\n";
    }
    for (std::size_t b = 0; b < r->errors_by_range.size(); ++b) {
      const auto & e = r->errors_by_range[b];
      errors += name + ",";
      io_detail::append_double(errors, o.range_bin_edges[b]);
      errors += ",";
      if (b + 1 < o.range_bin_edges.size()) {
        io_detail::append_double(errors, o.range_bin_edges[b + 1]);
      }
      errors += "," + std::to_string(e.count) + "," + io_detail::csv_value(e.size_mae()) + "," +
        io_detail::csv_value(e.position_mae()) + "," + io_detail::csv_value(e.yaw_mae()) + "\n";
    }
    for (std::size_t b = 0; b < r->iou_histogram.size(); ++b) {
      hist += name + ",";
      io_detail::append_double(hist, static_cast<double>(b) / o.histogram_bins);
      hist += ",";
      io_detail::append_double(hist, static_cast<double>(b + 1) / o.histogram_bins);
      hist += "," + std::to_string(r->iou_histogram[b]) + "\n";
    }
  }
  io_detail::write_file(base.string() + "_metrics.csv", metrics);
  io_detail::write_file(base.string() + "_errors.csv", errors);
  io_detail::write_file(base.string() + "_histogram.csv", hist);
}

inline void write_json(const fs::path & path, const nlohmann::json & doc)
{
  io_detail::write_file(path, doc.dump(2) + "\n");
}

}  // namespace pseudobox

#endif  // PSEUDOBOX__IO_HPP_
