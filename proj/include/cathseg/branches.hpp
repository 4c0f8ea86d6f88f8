#pragma once

#include <compare>
#include <vector>

#include "cathseg/image.hpp"
#include "cathseg/spline.hpp"

namespace cathseg {

struct Pixel {
  int x = 0;
  int y = 0;

  Point2 point() const { return {static_cast<double>(x), static_cast<double>(y)}; }
  auto operator<=>(const Pixel&) const = default;
};

double distance(Pixel a, Pixel b);

/// Ordered chain of skeleton pixels. Linking may join chains across small
/// gaps and out-and-back traversals repeat pixels, so consecutive pixels
/// are 8-neighbors only for branches straight out of extract_branches.
struct Branch {
  std::vector<Pixel> pixels;

  int size() const { return static_cast<int>(pixels.size()); }
  bool empty() const { return pixels.empty(); }
  double length() const;
  Polyline points() const;
};

/// Closest pixel pair between two branches.
struct Connection {
  int branch_a = 0;
  int index_a = 0;
  int branch_b = 0;
  int index_b = 0;
  double distance = 0.0;
};

/// Two pixels of one branch that are spatially close but far apart along it.
struct Loop {
  int branch = 0;
  int first = 0;
  int second = 0;
};

struct BranchGraph {
  int width = 0;
  int height = 0;
  std::vector<Branch> branches;
  std::vector<Connection> connections;
  std::vector<Loop> loops;

  std::size_t pixel_count() const;
  /// Index of the branch with the largest arc length (lowest index on ties), -1 if none.
  int longest() const;
};

/// Splits a thin skeleton into junction-free chains. Adjacency is 8-connected,
/// except that a diagonal step is ignored when both pixels also share a
/// 4-neighbor; junctions are pixels with three or more remaining neighbors
/// and belong to no branch. Throws std::invalid_argument for a 2x2 block.
BranchGraph extract_branches(const BinaryMask& skeleton);

/// Records one connection per branch pair whose closest pixels lie within `d`.
/// Existing connections are replaced.
BranchGraph find_connections(BranchGraph graph, double d);

/// Visits connections by increasing distance. Both branches are cut at the
/// connection pixels and the halves re-paired so the longest resulting chain
/// is as long as possible; keeping the branches wins ties, and equally long
/// pairings prefer the smallest turning angle. Clears the connection list.
BranchGraph link_longest(BranchGraph graph);

/// Inside each branch, looks for pixel pairs within `d` whose along-branch
/// distance is at least `b_min`. Where reversing the stretch between them
/// lowers the turning angle at the crossing, the stretch is reversed so the
/// path continues straight through. Every detected loop is recorded.
BranchGraph merge_loops(BranchGraph graph, double d, double b_min);

/// Attaches side branches to the longest chain: branches within `d` of it and
/// at least `b_min` long are appended when they start near one of its ends and
/// traversed out and back otherwise; shorter ones within `d` are dropped.
/// Branches farther than `d` are left alone.
BranchGraph close_remaining(BranchGraph graph, double d, double b_min);

/// Unit direction of travel at the last point of `points`, from a
/// least-squares line through the last `window` points. Zero when fewer
/// than two distinct points are available.
Eigen::Vector2d arrival_direction(const Polyline& points, int window = 5);

/// Turning angle (radians) for leaving a chain that arrives with direction
/// `in`, crossing the gap `gap`, and continuing with direction `out`. Gaps
/// shorter than 1.5 px are ignored. Zero directions contribute nothing.
double turning_cost(const Eigen::Vector2d& in, const Eigen::Vector2d& gap, const Eigen::Vector2d& out);

}  // namespace cathseg
