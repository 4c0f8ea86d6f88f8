#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cathseg/errors.hpp"
#include "cathseg/image.hpp"
#include "cathseg/nn/checkpoint.hpp"
#include "cathseg/nn/train.hpp"
#include "oracles.hpp"

using namespace cathseg;
using namespace cathseg::nn;
using namespace cathseg::testing;

namespace fs = std::filesystem;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.levels = 2;
  cfg.base_filters = 4;
  cfg.convs_per_block = 1;
  return cfg;
}

// A diagonal stroke with slightly noisy frames that show it brighter than the background.
TrainingSample stroke_sample(Rng& rng, int size, int offset) {
  TrainingSample s;
  Polyline pts{{1.0, static_cast<double>(offset)}, {size - 2.0, size - 2.0 - offset}};
  s.mask = dilate_square(rasterize_curve(pts, size, size), 1);
  for (int f = 0; f < 4; ++f) {
    Image img(size, size);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        img(x, y) = static_cast<float>(0.2 + 0.6 * s.mask(x, y) + uniform(rng, -0.05, 0.05));
    s.frames.push_back(img);
  }
  return s;
}

bool same_parameters(SegmentationNet<float>& a, SegmentationNet<float>& b) {
  auto pa = a.parameters(), pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i].name != pb[i].name || !(pa[i].values() == pb[i].values()).all()) return false;
  return true;
}

TrainOptions options(int epochs, bool augment = false) {
  TrainOptions o;
  o.epochs = epochs;
  o.batch_size = 2;
  o.augment = augment;
  o.seed = 17;
  return o;
}

fs::path scratch_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / ("cathseg_unit_" + std::string(name));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("frame stacks repeat the first frame before the sequence start") {
  std::vector<Image> frames;
  for (int i = 0; i < 3; ++i) frames.emplace_back(2, 2, static_cast<float>(i));
  const auto s0 = frame_stack(frames, 0, 4);
  REQUIRE(s0.size() == 4);
  for (const auto& f : s0) CHECK(f(0, 0) == 0.0f);
  const auto s2 = frame_stack(frames, 2, 4);
  CHECK(s2[0](0, 0) == 2.0f);
  CHECK(s2[1](0, 0) == 1.0f);
  CHECK(s2[2](0, 0) == 0.0f);
  CHECK(s2[3](0, 0) == 0.0f);

  const auto packed = pack_inputs<float>({s2});
  CHECK(packed.shape() == Shape4{1, 4, 2, 2});
  CHECK(packed(0, 1, 1, 1) == 1.0f);
}

TEST_CASE("training for zero epochs changes nothing") {
  SegmentationNet<float> net(tiny_config(), 1), ref(tiny_config(), 1);
  SgdState<float> opt;
  Rng rng(2);
  const std::vector<TrainingSample> data{stroke_sample(rng, 16, 3)};
  CHECK(train(net, opt, data, options(0)).empty());
  CHECK(same_parameters(net, ref));
}

TEST_CASE("training rejects empty or inconsistent data") {
  SegmentationNet<float> net(tiny_config(), 1);
  SgdState<float> opt;
  Rng rng(2);
  CHECK_THROWS(train(net, opt, {}, options(1)));
  CHECK_THROWS(train(net, opt, {stroke_sample(rng, 16, 3), stroke_sample(rng, 8, 1)}, options(1)));
}

TEST_CASE("a single repeated sample is memorized") {
  SegmentationNet<float> net(tiny_config(), 3);
  SgdState<float> opt;
  Rng rng(4);
  const TrainingSample s = stroke_sample(rng, 16, 4);
  const std::vector<TrainingSample> data{s, s};
  const auto trace = train(net, opt, data, options(200));
  REQUIRE(trace.size() == 200);
  CHECK(trace.back() < -0.9);
}

TEST_CASE("loss on a small overfit run decreases across ten-epoch windows") {
  SegmentationNet<float> net(tiny_config(), 5);
  SgdState<float> opt;
  Rng rng(6);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 10; ++i) data.push_back(stroke_sample(rng, 16, i % 6));
  const auto trace = train(net, opt, data, options(60));
  // Float32 jitter of about 1e-5 remains once the loss has converged.
  for (std::size_t e = 5; e + 10 < trace.size(); ++e) CHECK_MESSAGE(trace[e + 10] <= trace[e] + 1e-4, "epoch " << e);
}

TEST_CASE("training is deterministic for a fixed seed and resumable") {
  Rng rng(7);
  std::vector<TrainingSample> data;
  for (int i = 0; i < 4; ++i) data.push_back(stroke_sample(rng, 16, i));

  SegmentationNet<float> a(tiny_config(), 8), b(tiny_config(), 8);
  SgdState<float> oa, ob;
  const auto ta = train(a, oa, data, options(4, true));
  const auto tb = train(b, ob, data, options(4, true));
  CHECK(ta == tb);
  CHECK(same_parameters(a, b));

  // Two epochs, a checkpoint round trip, then two more.
  SegmentationNet<float> c(tiny_config(), 8);
  SgdState<float> oc;
  auto first = train(c, oc, data, options(2, true));
  Checkpoint ck = deserialize_checkpoint(serialize_checkpoint(c, &oc, 2));
  REQUIRE(ck.optimizer.has_value());
  CHECK(ck.epochs_done == 2);
  TrainOptions rest = options(2, true);
  rest.first_epoch = 2;
  const auto second = train(ck.net, *ck.optimizer, data, rest);
  first.insert(first.end(), second.begin(), second.end());
  CHECK(first == ta);
  CHECK(same_parameters(ck.net, a));
}

TEST_CASE("checkpoint round trip preserves configuration, parameters and outputs") {
  ModelConfig cfg = tiny_config();
  cfg.dropout_blocks = {1};
  cfg.dropout_rate = 0.25;
  SegmentationNet<float> net(cfg, 9);
  // Move the running statistics off their defaults.
  {
    Rng rng(1);
    Tape<float> tape;
    (void)net.forward(tape, tape.input(random_tensor(rng, {2, 4, 8, 8}).cast<float>()), Mode::train, rng);
  }
  const fs::path dir = scratch_dir("checkpoint");
  save_checkpoint(dir / "model.ckpt", net);
  Checkpoint back = load_checkpoint(dir / "model.ckpt");
  CHECK(back.net.config() == cfg);
  CHECK_FALSE(back.optimizer.has_value());
  CHECK(same_parameters(back.net, net));

  Rng rng(2);
  const auto x = random_tensor(rng, {1, 4, 8, 8}).cast<float>();
  CHECK(back.net.infer(x) == net.infer(x));

  std::ifstream in(dir / "model.ckpt", std::ios::binary);
  char magic[5];
  in.read(magic, 5);
  CHECK(std::string(magic, 5) == "CATH1");
  fs::remove_all(dir);
}

TEST_CASE("malformed checkpoints are rejected") {
  SegmentationNet<float> net(tiny_config(), 0);
  const std::string bytes = serialize_checkpoint(net, nullptr, 0);
  CHECK_THROWS_AS(deserialize_checkpoint("XXXX1" + bytes.substr(5)), IoError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), IoError);
  CHECK_THROWS_AS(deserialize_checkpoint(""), IoError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.ckpt"), IoError);
}
