#include <doctest.h>

#include <filesystem>
#include <map>

#include <json.hpp>

#include "cathseg/dataset.hpp"
#include "cathseg/errors.hpp"
#include "cathseg/image_io.hpp"

using namespace cathseg;

namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const char* name) : path(fs::temp_directory_path() / ("cathseg_ds_" + std::string(name))) {
    fs::remove_all(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

SynthConfig small() {
  SynthConfig cfg;
  cfg.image_size = 32;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("naming helpers") {
  CHECK(sequence_name(7) == "seq_0007");
  CHECK(frame_file("mask", 3, ".png") == "mask_3.png");
}

TEST_CASE("centerline JSON round trip") {
  Centerline c{{{1.5, 2.25}, {3, 4}, {5.125, 6}}};
  const CenterlineRecord r = parse_centerline_json(centerline_json(c, 64, 48));
  CHECK(r.width == 64);
  CHECK(r.height == 48);
  CHECK(r.success);
  CHECK(r.centerline.points == c.points);

  const auto j = nlohmann::json::parse(centerline_json(c, 64, 48));
  CHECK(j.at("tip_index") == 0);
  CHECK(j.at("points").size() == 3);

  const CenterlineRecord empty = parse_centerline_json(centerline_json(std::nullopt, 10, 10));
  CHECK_FALSE(empty.success);
  CHECK(empty.centerline.empty());

  CHECK_THROWS_AS(parse_centerline_json("{"), IoError);
  CHECK_THROWS_AS(parse_centerline_json(R"({"width": 4, "height": 4, "points": [[1]]})"), IoError);
  CHECK_THROWS_AS(parse_centerline_json(R"({"width": 4, "height": 4, "tip_index": 2, "points": []})"), IoError);
}

TEST_CASE("a one-sequence dataset has one directory of frame triples and a manifest") {
  ScratchDir dir("one");
  const fs::path manifest = generate_dataset(small(), 1, dir.path);
  CHECK(manifest == dir.path / "manifest.json");
  const auto seqs = list_sequences(dir.path);
  REQUIRE(seqs.size() == 1);
  CHECK(seqs[0].filename() == "seq_0000");
  CHECK(count_frames(seqs[0]) == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(fs::exists(seqs[0] / frame_file("frame", i, ".png")));
    CHECK(fs::exists(seqs[0] / frame_file("mask", i, ".png")));
    CHECK(fs::exists(seqs[0] / frame_file("centerline", i, ".json")));
  }
  const auto j = nlohmann::json::parse(read_file(manifest));
  CHECK(j.at("seed") == 5);
  CHECK(j.at("synth").at("image_size") == 32);
  CHECK(j.at("sequences").size() == 1);
}

TEST_CASE("the files on disk match the in-memory sequence") {
  ScratchDir dir("match");
  const SynthConfig cfg = small();
  generate_dataset(cfg, 2, dir.path);
  const SyntheticSequence s = generate_sequence(cfg, 1);
  const FrameSequence loaded = load_sequence(dir.path / "seq_0001", true);
  REQUIRE(loaded.frames.size() == 4);
  for (std::size_t f = 0; f < 4; ++f) {
    CHECK(loaded.masks[f] == s.sequence.masks[f]);
    CHECK((loaded.frames[f].pixels - s.sequence.frames[f].pixels).abs().maxCoeff() <= 1e-4f);
    const CenterlineRecord r = read_centerline(dir.path / "seq_0001" / frame_file("centerline", int(f), ".json"));
    REQUIRE(r.centerline.points.size() == s.centerlines[f].points.size());
    for (std::size_t i = 0; i < r.centerline.points.size(); ++i)
      CHECK((r.centerline.points[i] - s.centerlines[f].points[i]).norm() < 1e-9);
  }
}

TEST_CASE("two runs with the same seed write identical datasets") {
  ScratchDir a("same_a"), b("same_b");
  generate_dataset(small(), 3, a.path);
  generate_dataset(small(), 3, b.path);
  CHECK(tree(a.path) == tree(b.path));
}

TEST_CASE("dataset errors") {
  ScratchDir dir("err");
  CHECK_THROWS_AS(generate_dataset(small(), 0, dir.path), std::invalid_argument);
  fs::create_directories(dir.path / "seq_0000");
  CHECK_THROWS_AS(load_sequence(dir.path / "seq_0000", false), IoError);
  CHECK(list_sequences(dir.path).size() == 1);
}
