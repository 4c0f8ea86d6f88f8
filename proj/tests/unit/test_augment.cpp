#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cathseg/augment.hpp"
#include "cathseg/metrics.hpp"
#include "oracles.hpp"

using namespace cathseg;
using namespace cathseg::testing;

namespace {

Image random_image(Rng& rng, int w, int h) {
  Image img(w, h);
  for (Eigen::Index i = 0; i < img.pixels.size(); ++i) img.pixels(i) = static_cast<float>(uniform(rng, 0, 1));
  return img;
}

BinaryMask disk(int size, double cx, double cy, double r) {
  BinaryMask m(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) m(x, y) = std::hypot(x - cx, y - cy) <= r;
  return m;
}

bool strictly_binary(const BinaryMask& m) { return ((m.pixels == 0) || (m.pixels == 1)).all(); }

}  // namespace

TEST_CASE("augment config validation") {
  CHECK_NOTHROW(AugmentConfig{}.validate());
  AugmentConfig c;
  c.p_augment = 1.5;
  CHECK_THROWS(c.validate());
  c = {};
  c.scale_min = 1.2;
  CHECK_THROWS(c.validate());
  c = {};
  c.noise_sigma = -0.1;
  CHECK_THROWS(c.validate());
}

TEST_CASE("the no-augment branch returns the inputs unchanged") {
  Rng rng(1);
  AugmentConfig cfg;
  cfg.p_augment = 0.0;
  const std::vector<Image> frames{random_image(rng, 12, 10), random_image(rng, 12, 10)};
  const BinaryMask mask = random_blob_mask(rng, 12, 10);
  const auto out = augment_sample(frames, mask, cfg, rng);
  CHECK(out.frames[0] == frames[0]);
  CHECK(out.frames[1] == frames[1]);
  CHECK(out.mask == mask);
}

TEST_CASE("identity warp parameters reproduce the image exactly") {
  Rng rng(2);
  const Image img = random_image(rng, 17, 9);
  CHECK(warp(img, WarpParams{}, Interpolation::bilinear) == img);
  CHECK(warp(img, WarpParams{}, Interpolation::nearest) == img);
}

TEST_CASE("a double flip is an involution on the mask and the frames") {
  Rng rng(3);
  AugmentParams p;
  p.apply = true;
  p.warp.flip_h = p.warp.flip_v = true;
  const BinaryMask mask = random_blob_mask(rng, 20, 14);
  const std::vector<Image> frames{random_image(rng, 20, 14)};
  const auto once = apply_augment(frames, mask, p, 0.0, rng);
  for (int y = 0; y < 14; ++y)
    for (int x = 0; x < 20; ++x) {
      CHECK(once.mask(x, y) == mask(19 - x, 13 - y));
      CHECK(once.frames[0](x, y) == frames[0](19 - x, 13 - y));
    }
  const auto twice = apply_augment(once.frames, once.mask, p, 0.0, rng);
  CHECK(twice.mask == mask);
  CHECK(twice.frames[0] == frames[0]);
}

TEST_CASE("translation moves a bright pixel") {
  Image img(20, 20);
  img(7, 11) = 1.0f;
  WarpParams p;
  p.tx = 5;
  const Image out = warp(img, p);
  CHECK(out(12, 11) == 1.0f);
  CHECK(out.pixels.sum() == 1.0f);
}

TEST_CASE("scaling a centered disk by two doubles its radius") {
  const int size = 64;
  const double c = (size - 1) / 2.0, r = 8.0;
  WarpParams p;
  p.scale = 2.0;
  const BinaryMask out = warp_mask(disk(size, c, c, r), p);
  const double radius = std::sqrt(static_cast<double>(count_ones(out)) / std::numbers::pi);
  CHECK(std::abs(radius - 2 * r) <= 1.0);
}

TEST_CASE("rotating the mask forth and back loses little") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const BinaryMask mask = random_blob_mask(rng, 48, 48);
    WarpParams fwd, back;
    fwd.angle_deg = 9.0;
    back.angle_deg = -9.0;
    const BinaryMask round = warp_mask(warp_mask(mask, fwd), back);
    CHECK(dice_coefficient(mask, round) >= 0.9);
  }
}

TEST_CASE("forward and inverse warp maps agree") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    WarpParams p;
    p.flip_h = uniform(rng, 0, 1) < 0.5;
    p.flip_v = uniform(rng, 0, 1) < 0.5;
    p.angle_deg = uniform(rng, -180, 180);
    p.scale = uniform(rng, 0.5, 2);
    p.tx = uniform(rng, -10, 10);
    p.ty = uniform(rng, -10, 10);
    const Point2 q(uniform(rng, 0, 30), uniform(rng, 0, 20));
    CHECK((warp_inverse(p, 31, 21, warp_forward(p, 31, 21, q)) - q).norm() < 1e-9);
  }
}

TEST_CASE("frames and mask receive the same geometric transform") {
  Rng rng(6);
  AugmentConfig cfg;
  cfg.p_augment = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask mask = random_blob_mask(rng, 32, 24);
    Rng draw(trial);
    const AugmentParams params = sample_augment_params(cfg, 32, 24, draw);
    // A frame equal to the mask must warp onto the warped mask.
    const Image as_frame(mask.pixels.cast<float>().eval());
    AugmentParams geometric = params;
    geometric.intensity_shift = 0.0;
    const auto out = apply_augment({as_frame, as_frame}, mask, geometric, 0.0, rng);
    for (const Image& f : out.frames)
      for (Eigen::Index i = 0; i < f.pixels.size(); ++i) CHECK((f.pixels(i) >= 0.5f) == (out.mask.pixels(i) == 1));
    CHECK(strictly_binary(out.mask));
  }
}

TEST_CASE("augmented masks are always strictly binary") {
  Rng rng(7);
  AugmentConfig cfg;
  cfg.p_augment = 0.8;
  for (int trial = 0; trial < 40; ++trial) {
    const BinaryMask mask = random_blob_mask(rng, 24, 24);
    const auto out = augment_sample({random_image(rng, 24, 24)}, mask, cfg, rng);
    CHECK(strictly_binary(out.mask));
  }
}

TEST_CASE("additive Gaussian noise statistics") {
  Rng rng(8);
  AugmentParams p;
  p.apply = true;
  const Image zero(1000, 1000);
  const auto out = apply_augment({zero}, BinaryMask(1000, 1000), p, 0.03, rng);
  const auto v = out.frames[0].pixels.cast<double>();
  const double mean = v.mean();
  const double sigma = std::sqrt((v - mean).square().mean());
  CHECK(std::abs(mean) <= 0.001);
  CHECK(std::abs(sigma - 0.03) <= 0.005);
}

TEST_CASE("intensity shift stays within its range and is not clamped") {
  Rng rng(9);
  AugmentConfig cfg;
  cfg.p_augment = 1.0;
  cfg.noise_sigma = 0.0;
  bool below_zero = false, above_one = false;
  for (int trial = 0; trial < 40; ++trial) {
    Image img = random_image(rng, 16, 16);
    img(0, 0) = 0.0f;
    img(15, 15) = 1.0f;
    const auto out = augment_sample({img}, BinaryMask(16, 16), cfg, rng);
    CHECK(out.frames[0].pixels.minCoeff() >= -0.07f - 1e-6f);
    CHECK(out.frames[0].pixels.maxCoeff() <= 1.07f + 1e-6f);
    below_zero = below_zero || out.frames[0].pixels.minCoeff() < 0.0f;
    above_one = above_one || out.frames[0].pixels.maxCoeff() > 1.0f;
  }
  CHECK(below_zero);
  CHECK(above_one);
}

TEST_CASE("sampled parameters respect the configured ranges") {
  Rng rng(10);
  const AugmentConfig cfg;
  int applied = 0, flipped = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto p = sample_augment_params(cfg, 100, 50, rng);
    if (!p.apply) continue;
    ++applied;
    flipped += p.warp.flip_h;
    CHECK(std::abs(p.warp.angle_deg) <= 9.0);
    CHECK(p.warp.scale >= 0.9);
    CHECK(p.warp.scale <= 1.1);
    CHECK(std::abs(p.warp.tx) <= 16.0);
    CHECK(std::abs(p.warp.ty) <= 8.0);
    CHECK(std::abs(p.intensity_shift) <= 0.07);
  }
  CHECK(applied > 900);
  CHECK(applied < 1100);
  CHECK(flipped > applied * 0.4);
  CHECK(flipped < applied * 0.6);
}

TEST_CASE("augmentation rejects mismatched sizes") {
  Rng rng(11);
  CHECK_THROWS_AS(augment_sample({Image(4, 4)}, BinaryMask(5, 4), AugmentConfig{}, rng), std::invalid_argument);
}
