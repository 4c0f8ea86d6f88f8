#include <doctest.h>

#include <cmath>
#include <limits>

#include "cathseg/nn/loss.hpp"
#include "cathseg/nn/optimizer.hpp"
#include "oracles.hpp"

using namespace cathseg;
using namespace cathseg::nn;
using namespace cathseg::testing;

namespace {

BinaryMask row_mask(std::initializer_list<int> v) {
  BinaryMask m(static_cast<int>(v.size()), 1);
  int i = 0;
  for (int x : v) m(i++, 0) = static_cast<std::uint8_t>(x);
  return m;
}

ProbabilityMap row_map(std::initializer_list<float> v) {
  ProbabilityMap m(static_cast<int>(v.size()), 1);
  int i = 0;
  for (float x : v) m(i++, 0) = x;
  return m;
}

// One trainable scalar exposed as a parameter slot.
struct Scalar1 {
  Vector<double> w = Vector<double>::Zero(1);
  Vector<double> g = Vector<double>::Zero(1);
  std::vector<ParamSlot<double>> slots() { return {{"w", {1, 1, 1, 1}, w.data(), g.data(), 1}}; }
};

}  // namespace

TEST_CASE("dice loss of a perfect prediction is -1") {
  const BinaryMask b = row_mask({0, 1, 1, 0, 1});
  CHECK(std::abs(dice_loss(b, to_probability(b)) + 1.0) < 1e-6);
}

TEST_CASE("dice loss of disjoint supports is 0") {
  CHECK(dice_loss(row_mask({1, 1, 0, 0}), row_map({0, 0, 1, 1})) == 0.0);
  CHECK(dice_loss(row_mask({0, 0, 0, 0}), row_map({0, 0, 0, 0})) == 0.0);
}

TEST_CASE("dice loss of a half overlap") {
  // -2 * 1 / (2 + 1)
  CHECK(dice_loss(row_mask({1, 1, 0, 0}), row_map({1, 0, 0, 0})) == doctest::Approx(-2.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("dice loss stays in [-1, 0] and the batch form averages samples") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor4<double> target({2, 1, 4, 5}), pred({2, 1, 4, 5});
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      target.array()(i) = uniform(rng, 0, 1) < 0.3;
      pred.array()(i) = uniform(rng, 0, 1);
    }
    const double loss = dice_loss(target, pred);
    CHECK(loss >= -1.0);
    CHECK(loss <= 0.0);

    double per_sample = 0.0;
    for (int b = 0; b < 2; ++b) {
      BinaryMask t(5, 4);
      ProbabilityMap p(5, 4);
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 5; ++x) {
          t(x, y) = static_cast<std::uint8_t>(target(b, 0, y, x));
          p(x, y) = static_cast<float>(pred(b, 0, y, x));
        }
      per_sample += dice_loss(t, p);
    }
    CHECK(loss == doctest::Approx(per_sample / 2).epsilon(1e-6));
  }
}

TEST_CASE("sgd with zero gradient, velocity and decay leaves parameters unchanged") {
  Scalar1 p;
  p.w << 0.7;
  SgdState<double> state{{0.01, 0.0, 0.99}, {}};
  sgd_step(p.slots(), state);
  CHECK(p.w(0) == 0.7);
}

TEST_CASE("sgd weight decay acts as an L2 term") {
  Scalar1 p;
  p.w << 1.0;
  SgdState<double> state{{0.01, 5e-4, 0.0}, {}};
  sgd_step(p.slots(), state);
  CHECK(p.w(0) == doctest::Approx(0.999995).epsilon(1e-12));
}

TEST_CASE("sgd heavy-ball momentum over two steps") {
  Scalar1 p;
  p.g << 1.0;
  SgdState<double> state{{0.01, 0.0, 0.99}, {}};
  sgd_step(p.slots(), state);
  CHECK(p.w(0) == doctest::Approx(-0.01).epsilon(1e-12));
  sgd_step(p.slots(), state);
  CHECK(p.w(0) - (-0.01) == doctest::Approx(-0.0199).epsilon(1e-12));
  REQUIRE(state.velocity.size() == 1);
  CHECK(state.velocity[0](0) == doctest::Approx(-0.0199).epsilon(1e-12));
}

TEST_CASE("sgd rejects non-finite gradients by name") {
  Scalar1 p;
  p.g << std::numeric_limits<double>::quiet_NaN();
  SgdState<double> state{{}, {}};
  CHECK_THROWS_WITH_AS(sgd_step(p.slots(), state), doctest::Contains("w"), std::runtime_error);
}

TEST_CASE("sgd settings validation") {
  CHECK_NOTHROW(SgdSettings{}.validate());
  CHECK_THROWS(SgdSettings{0.0, 0.0, 0.5}.validate());
  CHECK_THROWS(SgdSettings{0.01, -1.0, 0.5}.validate());
  CHECK_THROWS(SgdSettings{0.01, 0.0, 1.0}.validate());
}
