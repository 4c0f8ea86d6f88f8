#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cathseg/spline.hpp"
#include "oracles.hpp"

using namespace cathseg;
using namespace cathseg::testing;

TEST_CASE("polyline length and cumulative length") {
  const Polyline p{{0, 0}, {3, 4}, {3, 10}};
  CHECK(polyline_length(p) == 11.0);
  CHECK(cumulative_length(p) == std::vector<double>{0, 5, 11});
  CHECK(polyline_length({}) == 0.0);
  CHECK(polyline_length({{1, 1}}) == 0.0);
}

TEST_CASE("resampling at a fixed spacing") {
  const Polyline p{{0, 0}, {10, 0}, {10, 2.5}};
  const Polyline r = resample_polyline(p, 1.0);
  REQUIRE(r.size() == 14);
  for (std::size_t i = 1; i + 1 < r.size(); ++i) CHECK((r[i] - r[i - 1]).norm() <= 1.0 + 1e-12);
  CHECK((r[11] - Point2(10, 1)).norm() < 1e-12);
  CHECK((r.back() - Point2(10, 2.5)).norm() < 1e-12);
  CHECK_THROWS(resample_polyline(p, 0.0));
}

TEST_CASE("resampled points lie on the polyline") {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    Polyline p;
    const int n = uniform_int(rng, 2, 8);
    for (int i = 0; i < n; ++i) p.emplace_back(uniform(rng, 0, 50), uniform(rng, 0, 50));
    const Polyline r = resample_polyline(p, uniform(rng, 0.3, 3));
    CHECK((r.front() - p.front()).norm() < 1e-12);
    CHECK((r.back() - p.back()).norm() < 1e-12);
    CHECK(polyline_length(r) <= polyline_length(p) + 1e-9);
    for (const Point2& q : r) {
      double best = 1e9;
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const Eigen::Vector2d ab = p[i + 1] - p[i];
        const double t = ab.squaredNorm() > 0 ? std::clamp((q - p[i]).dot(ab) / ab.squaredNorm(), 0.0, 1.0) : 0.0;
        best = std::min(best, (q - (p[i] + t * ab)).norm());
      }
      CHECK(best < 1e-9);
    }
  }
}

TEST_CASE("centripetal Catmull-Rom passes through its control points") {
  const Polyline ctrl{{0, 0}, {10, 5}, {20, -3}, {25, 12}};
  const Polyline dense = catmull_rom_centripetal(ctrl, 16);
  for (const Point2& c : ctrl) {
    double best = 1e9;
    for (const Point2& q : dense) best = std::min(best, (q - c).norm());
    CHECK(best < 1e-9);
  }
  CHECK((dense.front() - ctrl.front()).norm() < 1e-12);
  CHECK((dense.back() - ctrl.back()).norm() < 1e-12);
}

TEST_CASE("collinear control points give a straight spline") {
  const Polyline ctrl{{0, 0}, {2, 1}, {10, 5}, {12, 6}};
  for (const Point2& q : catmull_rom_centripetal(ctrl)) CHECK(std::abs(q.y() - 0.5 * q.x()) < 1e-9);
  const Polyline dup{{0, 0}, {0, 0}, {4, 0}};
  for (const Point2& q : catmull_rom_centripetal(dup)) CHECK(std::abs(q.y()) < 1e-12);
}

TEST_CASE("B-spline basis is a partition of unity") {
  for (int n = 4; n <= 9; ++n)
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      const Eigen::VectorXd b = CubicBSpline::basis(n, t);
      CHECK(b.size() == n);
      CHECK(b.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(b.minCoeff() >= -1e-15);
    }
  const Eigen::VectorXd start = CubicBSpline::basis(6, 0.0), end = CubicBSpline::basis(6, 1.0);
  CHECK(start(0) == doctest::Approx(1.0));
  CHECK(end(5) == doctest::Approx(1.0));
}

TEST_CASE("a clamped B-spline interpolates its end control points") {
  const CubicBSpline s({{0, 0}, {1, 3}, {4, 4}, {6, 1}, {8, 0}});
  CHECK((s(0.0) - Point2(0, 0)).norm() < 1e-12);
  CHECK((s(1.0) - Point2(8, 0)).norm() < 1e-12);
}

TEST_CASE("least-squares fit reproduces samples of a cubic B-spline") {
  const CubicBSpline truth({{0, 0}, {5, 8}, {12, 3}, {18, 9}, {25, 2}});
  Polyline samples;
  std::vector<double> params;
  for (int i = 0; i <= 60; ++i) {
    params.push_back(i / 60.0);
    samples.push_back(truth(i / 60.0));
  }
  const CubicBSpline fit = CubicBSpline::fit(samples, params, 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK((fit.control_points()[i] - truth.control_points()[i]).norm() < 1e-8);
}

TEST_CASE("a circle sampled densely has the right length") {
  Polyline circle;
  for (int i = 0; i <= 720; ++i) {
    const double t = 2 * std::numbers::pi * i / 720;
    circle.emplace_back(10 * std::cos(t), 10 * std::sin(t));
  }
  CHECK(polyline_length(circle) == doctest::Approx(20 * std::numbers::pi).epsilon(1e-4));
}
