#include "cathseg/centerline.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

#include "cathseg/skeleton.hpp"

namespace cathseg {

void ExtractParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("extract: alpha must be in (0, 1)");
  if (!(d_max > 0.0 && d_max <= d_max2)) throw std::invalid_argument("extract: need 0 < d_max <= d_max2");
  if (!(b_min > 0.0)) throw std::invalid_argument("extract: b_min must be > 0");
}

Centerline smooth_spline(const Polyline& points) {
  if (points.size() < 4) return Centerline{points};
  const std::vector<double> along = cumulative_length(points);
  const double total = along.back();
  if (total <= 0.0) return Centerline{{points.front()}};
  std::vector<double> params(along.size());
  for (std::size_t i = 0; i < along.size(); ++i) params[i] = along[i] / total;

  const int num_control = std::max(4, static_cast<int>(points.size()) / 10);
  const CubicBSpline spline = CubicBSpline::fit(points, params, num_control);
  const int samples = std::max(16, static_cast<int>(total * 4.0));
  Polyline dense;
  dense.reserve(static_cast<std::size_t>(samples) + 1);
  for (int i = 0; i <= samples; ++i) dense.push_back(spline(static_cast<double>(i) / samples));
  return Centerline{resample_polyline(dense, 1.0)};
}

int border_distance(Pixel p, int width, int height) {
  return std::min({p.x, p.y, width - 1 - p.x, height - 1 - p.y});
}

std::vector<Pixel> orient_tip_first(std::vector<Pixel> chain, int width, int height) {
  if (chain.size() < 2) return chain;
  auto key = [&](Pixel p) { return std::make_tuple(border_distance(p, width, height), p.y, p.x); };
  if (key(chain.back()) > key(chain.front())) std::reverse(chain.begin(), chain.end());
  return chain;
}

std::optional<Centerline> extract_centerline(const ProbabilityMap& map, const ExtractParams& params,
                                             ExtractionTrace* trace) {
  params.validate();
  BinaryMask mask = threshold(map, params.alpha);
  if (count_ones(mask) == 0) {
    if (trace) trace->mask = std::move(mask);
    return std::nullopt;
  }
  BinaryMask skeleton = thin_square_blocks(skeletonize(mask));
  BranchGraph graph = extract_branches(skeleton);
  if (trace) {
    trace->mask = mask;
    trace->skeleton = skeleton;
    trace->initial = graph;
  }

  for (const double d : {params.d_max, params.d_max2}) {
    graph = link_longest(find_connections(std::move(graph), d));
    graph = merge_loops(std::move(graph), d, params.b_min);
  }
  graph = close_remaining(std::move(graph), params.d_max2, params.b_min);
  if (trace) trace->linked = graph;

  const int main = graph.longest();
  if (main < 0) return std::nullopt;
  std::vector<Pixel> chain =
      orient_tip_first(graph.branches[static_cast<std::size_t>(main)].pixels, map.width(), map.height());
  if (trace) trace->chain = chain;
  if (chain.size() < 4) return std::nullopt;

  Polyline points;
  points.reserve(chain.size());
  for (const Pixel& p : chain) points.push_back(p.point());
  Centerline c = smooth_spline(points);
  if (c.points.size() < 2) return std::nullopt;
  return c;
}

}  // namespace cathseg
