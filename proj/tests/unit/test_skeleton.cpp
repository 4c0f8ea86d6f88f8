#include <doctest.h>

#include "cathseg/skeleton.hpp"
#include "oracles.hpp"

using namespace cathseg;
using namespace cathseg::testing;

namespace {

bool subset(const BinaryMask& a, const BinaryMask& b) { return (a.pixels <= b.pixels).all(); }

}  // namespace

TEST_CASE("threshold uses a greater-or-equal comparison") {
  CHECK(count_ones(threshold(ProbabilityMap(8, 6, 0.0f), 0.01)) == 0);
  CHECK(count_ones(threshold(ProbabilityMap(8, 6, 0.25f), 0.25)) == 48);
  CHECK_THROWS(threshold(ProbabilityMap(2, 2), 0.0));
  CHECK_THROWS(threshold(ProbabilityMap(2, 2), 1.0));

  Rng rng(1);
  ProbabilityMap map(20, 15);
  for (Eigen::Index i = 0; i < map.pixels.size(); ++i) map.pixels(i) = static_cast<float>(uniform(rng, 0, 1));
  const double alpha = 0.37;
  const BinaryMask b = threshold(map, alpha);
  for (int y = 0; y < 15; ++y)
    for (int x = 0; x < 20; ++x) CHECK(b(x, y) == (map(x, y) >= static_cast<float>(alpha) ? 1 : 0));
}

TEST_CASE("thinning keeps a one-pixel line and an isolated pixel") {
  BinaryMask line(12, 5);
  for (int x = 1; x <= 10; ++x) line(x, 2) = 1;
  CHECK(skeletonize(line) == line);

  BinaryMask dot(5, 5);
  dot(2, 2) = 1;
  CHECK(skeletonize(dot) == dot);
  CHECK(count_ones(skeletonize(BinaryMask(6, 6))) == 0);
}

TEST_CASE("thinning a filled 3x9 bar matches the reference") {
  BinaryMask bar(13, 7);
  for (int y = 2; y <= 4; ++y)
    for (int x = 2; x <= 10; ++x) bar(x, y) = 1;
  const BinaryMask skel = skeletonize(bar);
  CHECK(skel == thinning_reference(bar));
  // The result is a piece of the middle row.
  for (int x = 0; x < 13; ++x) {
    CHECK(skel(x, 2) == 0);
    CHECK(skel(x, 4) == 0);
  }
  CHECK(count_ones(skel) >= 1);
}

TEST_CASE("thinning matches the reference on random masks") {
  Rng rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const BinaryMask mask = random_blob_mask(rng, uniform_int(rng, 8, 40), uniform_int(rng, 8, 40));
    const BinaryMask skel = skeletonize(mask);
    CHECK(skel == thinning_reference(mask));
    CHECK(subset(skel, mask));
    CHECK(components_reference(skel) == components_reference(mask));
  }
}

TEST_CASE("square-block removal leaves a thin skeleton with the same components") {
  Rng rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const BinaryMask mask = random_blob_mask(rng, uniform_int(rng, 8, 40), uniform_int(rng, 8, 40));
    const BinaryMask skel = skeletonize(mask);
    const BinaryMask thin = thin_square_blocks(skel);
    CHECK_FALSE(has_square_block(thin));
    CHECK(subset(thin, skel));
    CHECK(components_reference(thin) == components_reference(mask));
  }
}

TEST_CASE("square-block removal on a crossing") {
  BinaryMask m(7, 7);
  for (int i = 1; i <= 5; ++i) {
    m(i, 3) = 1;
    m(3, i) = 1;
  }
  m(4, 4) = 1;
  REQUIRE(has_square_block(m));
  const BinaryMask thin = thin_square_blocks(m);
  CHECK_FALSE(has_square_block(thin));
  CHECK(count_ones(thin) == count_ones(m) - 1);
  CHECK(components_reference(thin) == 1);

  BinaryMask lone(4, 4);
  lone(1, 1) = lone(2, 1) = lone(1, 2) = lone(2, 2) = 1;
  const BinaryMask t = thin_square_blocks(lone);
  CHECK(count_ones(t) == 3);
  CHECK(components_reference(t) == 1);
}
