#include "cathseg/dataset.hpp"

#include <algorithm>
#include <cstdio>

#include "cathseg/errors.hpp"
#include "cathseg/image_io.hpp"
#include "detail/json_config.hpp"

namespace cathseg {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string centerline_json(const std::optional<Centerline>& centerline, int width, int height) {
  ordered_json j;
  j["width"] = width;
  j["height"] = height;
  j["tip_index"] = 0;
  ordered_json points = ordered_json::array();
  if (centerline)
    for (const Point2& p : centerline->points) points.push_back({p.x(), p.y()});
  j["points"] = std::move(points);
  j["success"] = centerline.has_value() && !centerline->empty();
  return j.dump(1) + "\n";
}

CenterlineRecord parse_centerline_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    CenterlineRecord r;
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    if (j.value("tip_index", 0) != 0) throw IoError("centerline: tip_index must be 0");
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) throw IoError("centerline: points must be [x, y] pairs");
      r.centerline.points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    r.success = j.value("success", !r.centerline.empty()) && !r.centerline.empty();
    return r;
  } catch (const json::exception& e) {
    throw IoError(std::string("centerline: malformed JSON: ") + e.what());
  }
}

void write_centerline(const fs::path& path, const std::optional<Centerline>& centerline, int width, int height) {
  write_file_atomic(path, centerline_json(centerline, width, height));
}

CenterlineRecord read_centerline(const fs::path& path) {
  try {
    return parse_centerline_json(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string sequence_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%04d", index);
  return buf;
}

std::string frame_file(const char* prefix, int frame, const char* extension) {
  return std::string(prefix) + "_" + std::to_string(frame) + extension;
}

void write_sequence(const fs::path& dir, const SyntheticSequence& s) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const int w = s.sequence.width(), h = s.sequence.height();
  for (std::size_t f = 0; f < s.sequence.frames.size(); ++f) {
    const int i = static_cast<int>(f);
    write_image_png(dir / frame_file("frame", i, ".png"), s.sequence.frames[f]);
    write_mask_png(dir / frame_file("mask", i, ".png"), s.sequence.masks[f]);
    write_centerline(dir / frame_file("centerline", i, ".json"), s.centerlines[f], w, h);
  }
}

fs::path generate_dataset(const SynthConfig& config, int n, const fs::path& out_dir) {
  config.validate();
  if (n < 1) throw std::invalid_argument("generate_dataset: n must be >= 1");
  ordered_json manifest;
  manifest["format"] = "cathseg-dataset/1";
  manifest["seed"] = config.seed;
  manifest["n_sequences"] = n;
  manifest["synth"] = detail::to_json(config);
  ordered_json sequences = ordered_json::array();
  for (int i = 0; i < n; ++i) {
    const SyntheticSequence s = generate_sequence(config, i);
    write_sequence(out_dir / sequence_name(i), s);
    sequences.push_back({{"name", sequence_name(i)}, {"frames", config.frames_per_seq}, {"loop", s.has_loop}});
  }
  manifest["sequences"] = std::move(sequences);
  const fs::path path = out_dir / "manifest.json";
  write_file_atomic(path, manifest.dump(2) + "\n");
  return path;
}

std::vector<fs::path> list_sequences(const fs::path& data_dir) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(data_dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(data_dir, ec))
    if (entry.is_directory() && entry.path().filename().string().rfind("seq_", 0) == 0) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

int count_frames(const fs::path& sequence_dir, const char* prefix) {
  int n = 0;
  while (fs::exists(sequence_dir / frame_file(prefix, n, ".png"))) ++n;
  return n;
}

FrameSequence load_sequence(const fs::path& sequence_dir, bool with_masks) {
  FrameSequence s;
  const int n = count_frames(sequence_dir);
  if (n == 0) throw IoError("no frame_0.png in " + sequence_dir.string());
  for (int i = 0; i < n; ++i) {
    s.frames.push_back(load_image(sequence_dir / frame_file("frame", i, ".png")));
    if (with_masks) s.masks.push_back(load_mask(sequence_dir / frame_file("mask", i, ".png")));
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(sequence_dir.string() + ": " + e.what());
  }
  return s;
}

}  // namespace cathseg
