#pragma once

#include <vector>

#include "cathseg/image.hpp"

namespace cathseg {

using Polyline = std::vector<Point2>;

double polyline_length(const Polyline& points);

/// Cumulative arc length at every vertex; front() == 0.
std::vector<double> cumulative_length(const Polyline& points);

/// Points at arc-length positions 0, spacing, 2*spacing, ... plus the final
/// vertex when it is not already within 1e-9 of the last sample.
Polyline resample_polyline(const Polyline& points, double spacing);

/// Dense samples of the centripetal (alpha = 0.5) Catmull-Rom spline through
/// `points`. End tangents come from mirrored phantom points, so collinear
/// input stays on its line. Consecutive duplicate points are dropped first.
Polyline catmull_rom_centripetal(const Polyline& points, int samples_per_segment = 16);

/// Clamped uniform cubic B-spline.
class CubicBSpline {
 public:
  CubicBSpline() = default;
  explicit CubicBSpline(Polyline control_points);

  /// Least-squares fit with `num_control` control points to samples placed
  /// at parameters `params` (expected in [0, 1], nondecreasing).
  static CubicBSpline fit(const Polyline& samples, const std::vector<double>& params,
                          int num_control);

  Point2 operator()(double t) const;
  const Polyline& control_points() const { return control_; }

  /// Basis weights of every control point at `t` (size == control count).
  static Eigen::VectorXd basis(int num_control, double t);

 private:
  Polyline control_;
};

}  // namespace cathseg
