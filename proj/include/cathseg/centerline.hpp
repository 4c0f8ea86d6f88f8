#pragma once

#include <optional>

#include "cathseg/branches.hpp"
#include "cathseg/spline.hpp"

namespace cathseg {

struct ExtractParams {
  double alpha = 0.01;  // probability threshold
  double d_max = 5.0;   // pixels, first linking pass
  double d_max2 = 20.0;  // pixels, second linking pass
  double b_min = 30.0;  // pixels, minimum loop / side-branch length

  void validate() const;
  bool operator==(const ExtractParams&) const = default;
};

/// Ordered sub-pixel points, tip first.
struct Centerline {
  Polyline points;

  const Point2& tip() const { return points.front(); }
  bool empty() const { return points.empty(); }
  double length() const { return polyline_length(points); }
};

/// Least-squares cubic B-spline with max(4, n / 10) control points over
/// chord-length parameters, resampled every 1 px of arc length. Fewer than
/// four points come back unchanged.
Centerline smooth_spline(const Polyline& points);

/// Distance from a pixel to the nearest image border.
int border_distance(Pixel p, int width, int height);

/// Orients `chain` so that its tip comes first: the endpoint farthest from
/// the border, ties going to the larger y, then the larger x.
std::vector<Pixel> orient_tip_first(std::vector<Pixel> chain, int width, int height);

/// Every intermediate product of one extraction, for inspection.
struct ExtractionTrace {
  BinaryMask mask;
  BinaryMask skeleton;
  BranchGraph initial;
  BranchGraph linked;
  std::vector<Pixel> chain;  // tip first
};

/// Threshold, thin, split into branches, link twice (d_max then d_max2),
/// close the remaining side branches, keep the longest chain, choose the
/// tip and smooth. Returns nothing when the mask is empty or the chain has
/// fewer than four pixels.
std::optional<Centerline> extract_centerline(const ProbabilityMap& map, const ExtractParams& params = {},
                                             ExtractionTrace* trace = nullptr);

}  // namespace cathseg
