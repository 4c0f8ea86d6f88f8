#include <doctest.h>

#include <map>

#include "cathseg/nn/model.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace cathseg;
using namespace cathseg::nn;
using namespace cathseg::testing;

namespace {

ModelConfig small_config(int levels = 3, int base = 4) {
  ModelConfig cfg;
  cfg.levels = levels;
  cfg.base_filters = base;
  return cfg;
}

}  // namespace

TEST_CASE("model config validation") {
  ModelConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.levels = 1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.convs_per_block = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.dropout_rate = 1.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  CHECK(cfg.effective_dropout_blocks() == std::vector<int>{2, 3});
  CHECK(cfg.size_multiple() == 8);
}

TEST_CASE("an n-conv block with zero kernels and zero gamma passes its input through") {
  Rng rng(1);
  auto block = make_nconv_block<double>(3, 3, 2, rng);
  CHECK_FALSE(block.projection.has_value());
  for (auto& c : block.convs) c.params.kernel.array().setZero();
  for (auto& n : block.norms) n.params.gamma.setZero();
  const auto x = random_tensor(rng, {2, 3, 5, 5});
  Tape<double> tape;
  const auto y = nconv_block(tape, tape.input(x), block, Mode::train);
  CHECK(tape.value(y) == x);
}

TEST_CASE("a one-conv block equals conv, batchnorm, relu and the residual sum") {
  Rng rng(2);
  auto block = make_nconv_block<double>(2, 2, 1, rng);
  const auto x = random_tensor(rng, {2, 2, 6, 6});
  auto norm = block.norms[0].params;
  const auto conv = conv2d(x, block.convs[0].params, block.convs[0].geometry);
  const auto act = relu(batchnorm(conv, norm, Mode::train));
  const Tensor4<double> expected(x.shape(), act.array() + x.array());

  Tape<double> tape;
  const auto y = nconv_block(tape, tape.input(x), block, Mode::train);
  CHECK(tape.value(y) == expected);
}

TEST_CASE("an n-conv block projects the residual when channel counts differ") {
  Rng rng(3);
  auto block = make_nconv_block<double>(2, 5, 2, rng);
  REQUIRE(block.projection.has_value());
  CHECK(block.projection->params.kernel.shape() == Shape4{5, 2, 1, 1});
  Tape<double> tape;
  const auto y = nconv_block(tape, tape.input(random_tensor(rng, {1, 2, 4, 4})), block, Mode::infer);
  CHECK(tape.value(y).shape() == Shape4{1, 5, 4, 4});
}

TEST_CASE("untrained network output lies strictly inside (0, 1)") {
  Rng rng(4);
  SegmentationNet<double> net(small_config(), 7);
  const auto x = random_tensor(rng, {2, 4, 16, 16}, 3.0);
  const auto y = net.infer(x);
  CHECK(y.shape() == Shape4{2, 1, 16, 16});
  CHECK(((y.array() > 0) && (y.array() < 1)).all());

  Tape<double> tape;
  const auto out = net.forward(tape, tape.input(x), Mode::train, rng);
  CHECK(((tape.value(out).array() > 0) && (tape.value(out).array() < 1)).all());
}

TEST_CASE("duplicated batch entries give identical outputs") {
  Rng rng(5);
  SegmentationNet<float> net(small_config(), 3);
  const auto one = random_tensor(rng, {1, 4, 8, 8}).cast<float>();
  Tensor4<float> two({2, 4, 8, 8});
  two.array().head(one.size()) = one.array();
  two.array().tail(one.size()) = one.array();
  const auto maps = model_forward(net, two);
  REQUIRE(maps.size() == 2);
  CHECK(maps[0] == maps[1]);
  CHECK(maps[0].width() == 8);
}

TEST_CASE("shape schedule of a three-level network on 64x64 input") {
  SegmentationNet<float> net(small_config(3, 8), 1);
  std::vector<StageShape> stages;
  (void)net.infer(Tensor4<float>({1, 4, 64, 64}), &stages);
  std::map<std::string, Shape4> by_name;
  for (const auto& s : stages) by_name[s.stage] = s.shape;
  CHECK(by_name.at("input") == Shape4{1, 4, 64, 64});
  CHECK(by_name.at("enc0") == Shape4{1, 8, 64, 64});
  CHECK(by_name.at("down1") == Shape4{1, 16, 32, 32});
  CHECK(by_name.at("enc1") == Shape4{1, 16, 32, 32});
  CHECK(by_name.at("down2") == Shape4{1, 32, 16, 16});
  CHECK(by_name.at("enc2") == Shape4{1, 32, 16, 16});
  CHECK(by_name.at("up1") == Shape4{1, 16, 32, 32});
  CHECK(by_name.at("dec1") == Shape4{1, 16, 32, 32});
  CHECK(by_name.at("up0") == Shape4{1, 8, 64, 64});
  CHECK(by_name.at("dec0") == Shape4{1, 8, 64, 64});
  CHECK(by_name.at("out") == Shape4{1, 1, 64, 64});
}

TEST_CASE("output size equals input size for every admissible size") {
  Rng rng(6);
  for (int levels = 2; levels <= 4; ++levels) {
    SegmentationNet<float> net(small_config(levels, 2), 9);
    const int m = net.config().size_multiple();
    for (int trial = 0; trial < 3; ++trial) {
      const int h = m * uniform_int(rng, 1, 3), w = m * uniform_int(rng, 1, 3);
      CHECK(net.infer(Tensor4<float>({1, 4, h, w})).shape() == Shape4{1, 1, h, w});
    }
  }
}

TEST_CASE("input shape errors name the required padding") {
  const ModelConfig cfg = small_config(3);
  CHECK_NOTHROW(check_input_shape(cfg, {1, 4, 16, 12}));
  CHECK_THROWS_WITH_AS(check_input_shape(cfg, {1, 3, 16, 16}), doctest::Contains("4 channels"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(check_input_shape(cfg, {1, 4, 18, 13}),
                       doctest::Contains("pad width by 3 and height by 2"), std::invalid_argument);
  SegmentationNet<float> net(cfg, 0);
  CHECK_THROWS_AS(model_forward(net, Tensor4<float>({1, 4, 10, 8})), std::invalid_argument);
}

TEST_CASE("parameter slots cover every tensor once") {
  SegmentationNet<double> net(small_config(), 0);
  const auto params = net.parameters();
  std::map<std::string, int> names;
  Eigen::Index trainable = 0;
  for (const auto& p : params) {
    ++names[p.name];
    CHECK(p.size == p.shape.count());
    if (p.trainable()) trainable += p.size;
  }
  for (const auto& [name, n] : names) CHECK_MESSAGE(n == 1, name);
  CHECK(trainable > 0);

  for (const auto& p : params)
    if (p.trainable()) p.grads().setConstant(1.0);
  net.zero_grad();
  for (const auto& p : params)
    if (p.trainable()) CHECK((p.grads() == 0).all());
}

TEST_CASE("initialization is reproducible from the seed") {
  SegmentationNet<float> a(small_config(), 42), b(small_config(), 42), c(small_config(), 43);
  auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool all_same = true, any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    all_same = all_same && (pa[i].values() == pb[i].values()).all();
    any_diff = any_diff || !(pa[i].values() == pc[i].values()).all();
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("block and network gradients match central differences") {
  Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const GradCheck block = check_nconv_block(rng);
    INFO(block.config);
    CHECK(block.error < 1e-4);
  }
  for (int trial = 0; trial < 2; ++trial) {
    const GradCheck model = check_model(rng);
    INFO(model.config);
    CHECK(model.error < 1e-4);
  }
}
