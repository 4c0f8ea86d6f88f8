#include "cathseg/branches.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "cathseg/skeleton.hpp"

namespace cathseg {

double distance(Pixel a, Pixel b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

double Branch::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < pixels.size(); ++i) total += distance(pixels[i - 1], pixels[i]);
  return total;
}

Polyline Branch::points() const {
  Polyline out;
  out.reserve(pixels.size());
  for (const Pixel& p : pixels) out.push_back(p.point());
  return out;
}

std::size_t BranchGraph::pixel_count() const {
  std::size_t n = 0;
  for (const auto& b : branches) n += b.pixels.size();
  return n;
}

int BranchGraph::longest() const {
  int best = -1;
  double best_len = -1.0;
  for (int i = 0; i < static_cast<int>(branches.size()); ++i) {
    const double len = branches[static_cast<std::size_t>(i)].length();
    if (len > best_len + 1e-9) {
      best = i;
      best_len = len;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

bool on(const BinaryMask& m, int x, int y) { return m.contains(x, y) && m(x, y); }

// Reduced 8-adjacency: a diagonal step is dropped when the two pixels also
// touch through a shared 4-neighbor.
std::vector<Pixel> reduced_neighbors(const BinaryMask& m, Pixel p) {
  std::vector<Pixel> out;
  for (int k = 0; k < 8; ++k) {
    const int nx = p.x + kDx[k], ny = p.y + kDy[k];
    if (!on(m, nx, ny)) continue;
    if (kDx[k] != 0 && kDy[k] != 0 && (on(m, nx, p.y) || on(m, p.x, ny))) continue;
    out.push_back({nx, ny});
  }
  return out;
}

}  // namespace

BranchGraph extract_branches(const BinaryMask& skeleton) {
  if (has_square_block(skeleton)) throw std::invalid_argument("extract_branches: skeleton contains a 2x2 block");
  const int w = skeleton.width(), h = skeleton.height();
  BranchGraph g;
  g.width = w;
  g.height = h;

  // Chains live on the non-junction pixels; 2 = junction.
  PixelGrid<std::uint8_t> keep = PixelGrid<std::uint8_t>::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (skeleton(x, y)) keep(y, x) = reduced_neighbors(skeleton, {x, y}).size() >= 3 ? 2 : 1;
  const BinaryMask chains((keep == 1).cast<std::uint8_t>());
  // Adjacency stays that of the full skeleton, so a removed junction does not
  // bring back the diagonal links it was shadowing.
  auto chain_neighbors = [&](Pixel p) {
    std::vector<Pixel> out = reduced_neighbors(skeleton, p);
    std::erase_if(out, [&](Pixel q) { return keep(q.y, q.x) != 1; });
    return out;
  };

  PixelGrid<std::uint8_t> seen = PixelGrid<std::uint8_t>::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!chains(x, y) || seen(y, x)) continue;
      // Collect the component, then walk it from its first endpoint in scan order.
      std::vector<Pixel> component{{x, y}};
      seen(y, x) = 1;
      for (std::size_t i = 0; i < component.size(); ++i)
        for (const Pixel& q : chain_neighbors(component[i]))
          if (!seen(q.y, q.x)) {
            seen(q.y, q.x) = 1;
            component.push_back(q);
          }
      std::sort(component.begin(), component.end(),
                [](Pixel a, Pixel b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
      Pixel start = component.front();
      for (const Pixel& p : component)
        if (chain_neighbors(p).size() <= 1) {
          start = p;
          break;
        }

      Branch branch;
      PixelGrid<std::uint8_t> walked = PixelGrid<std::uint8_t>::Zero(h, w);
      Pixel cur = start;
      while (true) {
        branch.pixels.push_back(cur);
        walked(cur.y, cur.x) = 1;
        bool moved = false;
        for (const Pixel& q : chain_neighbors(cur))
          if (!walked(q.y, q.x)) {
            cur = q;
            moved = true;
            break;
          }
        if (!moved) break;
      }
      g.branches.push_back(std::move(branch));
    }
  return g;
}

// ---------------------------------------------------------------------------

namespace {

struct Box {
  int x0, y0, x1, y1;
};

Box bounds(const Branch& b) {
  Box box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::min(),
          std::numeric_limits<int>::min()};
  for (const Pixel& p : b.pixels) {
    box.x0 = std::min(box.x0, p.x);
    box.y0 = std::min(box.y0, p.y);
    box.x1 = std::max(box.x1, p.x);
    box.y1 = std::max(box.y1, p.y);
  }
  return box;
}

double box_gap(const Box& a, const Box& b) {
  const int dx = std::max({0, a.x0 - b.x1, b.x0 - a.x1});
  const int dy = std::max({0, a.y0 - b.y1, b.y0 - a.y1});
  return std::hypot(double(dx), double(dy));
}

// Closest pixel pair; distance is infinite when the boxes are farther than `limit`.
Connection closest_pair(const Branch& a, const Branch& b, double limit) {
  Connection c;
  c.distance = std::numeric_limits<double>::infinity();
  if (a.empty() || b.empty() || box_gap(bounds(a), bounds(b)) > limit) return c;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) {
      const Pixel p = a.pixels[static_cast<std::size_t>(i)], q = b.pixels[static_cast<std::size_t>(j)];
      const double d2 = double(p.x - q.x) * (p.x - q.x) + double(p.y - q.y) * (p.y - q.y);
      if (d2 < best) {
        best = d2;
        c.index_a = i;
        c.index_b = j;
      }
    }
  c.distance = std::sqrt(best);
  return c;
}

}  // namespace

BranchGraph find_connections(BranchGraph g, double d) {
  if (!(d > 0.0)) throw std::invalid_argument("find_connections: d must be > 0");
  g.connections.clear();
  const int n = static_cast<int>(g.branches.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      Connection c = closest_pair(g.branches[static_cast<std::size_t>(a)], g.branches[static_cast<std::size_t>(b)], d);
      if (c.distance <= d) {
        c.branch_a = a;
        c.branch_b = b;
        g.connections.push_back(c);
      }
    }
  return g;
}

// ---------------------------------------------------------------------------

Eigen::Vector2d arrival_direction(const Polyline& points, int window) {
  const int n = static_cast<int>(points.size());
  const int first = std::max(0, n - window);
  if (n - first < 2) return Eigen::Vector2d::Zero();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (int i = first; i < n; ++i) mean += points[static_cast<std::size_t>(i)];
  mean /= (n - first);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (int i = first; i < n; ++i) {
    const Eigen::Vector2d d = points[static_cast<std::size_t>(i)] - mean;
    cov += d * d.transpose();
  }
  if (cov.trace() < 1e-12) return Eigen::Vector2d::Zero();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Eigen::Vector2d dir = eig.eigenvectors().col(1);
  if (dir.dot(points.back() - points[static_cast<std::size_t>(first)]) < 0) dir = -dir;
  return dir.normalized();
}

namespace {

double angle_between(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

}  // namespace

double turning_cost(const Eigen::Vector2d& in, const Eigen::Vector2d& gap, const Eigen::Vector2d& out) {
  const bool has_in = in.squaredNorm() > 0.5, has_out = out.squaredNorm() > 0.5;
  if (gap.norm() >= 1.5) {
    const Eigen::Vector2d g = gap.normalized();
    return (has_in ? angle_between(in, g) : 0.0) + (has_out ? angle_between(g, out) : 0.0);
  }
  return has_in && has_out ? angle_between(in, out) : 0.0;
}

namespace {

constexpr int kTangentWindow = 5;

Polyline to_points(const std::vector<Pixel>& pixels, std::size_t first, std::size_t last_exclusive, bool reversed) {
  Polyline out;
  if (!reversed) {
    for (std::size_t i = first; i < last_exclusive; ++i) out.push_back(pixels[i].point());
  } else {
    for (std::size_t i = last_exclusive; i-- > first;) out.push_back(pixels[i].point());
  }
  return out;
}

// Cost of the transition from `in_chain` (travelled towards its last pixel)
// into `out_chain` (travelled from its first pixel).
double transition_cost(const std::vector<Pixel>& in_chain, const std::vector<Pixel>& out_chain) {
  const std::size_t ni = in_chain.size(), no = out_chain.size();
  const std::size_t wi = std::min<std::size_t>(ni, kTangentWindow), wo = std::min<std::size_t>(no, kTangentWindow);
  const Eigen::Vector2d tin = arrival_direction(to_points(in_chain, ni - wi, ni, false));
  const Eigen::Vector2d tout = -arrival_direction(to_points(out_chain, 0, wo, true));
  return turning_cost(tin, out_chain.front().point() - in_chain.back().point(), tout);
}

std::vector<Pixel> reversed(std::vector<Pixel> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

double chain_length(const std::vector<Pixel>& v) {
  double total = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) total += distance(v[i - 1], v[i]);
  return total;
}

// A half without its cut pixel.
double leftover_length(const std::vector<Pixel>& half) {
  return half.size() < 2 ? 0.0 : chain_length(half) - distance(half[0], half[1]);
}

// Pieces of a chain cut at `index`, each starting at the cut pixel.
std::vector<std::vector<Pixel>> halves(const std::vector<Pixel>& chain, int index) {
  const auto i = static_cast<std::size_t>(index);
  if (chain.size() == 1) return {chain};
  if (i == 0) return {chain};
  if (i + 1 == chain.size()) return {reversed(chain)};
  return {reversed(std::vector<Pixel>(chain.begin(), chain.begin() + index + 1)),
          std::vector<Pixel>(chain.begin() + index, chain.end())};
}

struct Owner {
  PixelGrid<int> branch;
  PixelGrid<int> index;
};

Owner owners(const BranchGraph& g) {
  Owner o{PixelGrid<int>::Constant(g.height, g.width, -1), PixelGrid<int>::Constant(g.height, g.width, -1)};
  for (int b = 0; b < static_cast<int>(g.branches.size()); ++b) {
    const auto& px = g.branches[static_cast<std::size_t>(b)].pixels;
    for (int i = 0; i < static_cast<int>(px.size()); ++i) {
      const Pixel p = px[static_cast<std::size_t>(i)];
      o.branch(p.y, p.x) = b;
      o.index(p.y, p.x) = i;
    }
  }
  return o;
}

}  // namespace

BranchGraph link_longest(BranchGraph g) {
  std::vector<Connection> order = g.connections;
  std::stable_sort(order.begin(), order.end(),
                   [](const Connection& a, const Connection& b) { return a.distance < b.distance; });
  std::vector<std::pair<Pixel, Pixel>> links;
  for (const auto& c : order)
    links.emplace_back(g.branches.at(static_cast<std::size_t>(c.branch_a)).pixels.at(static_cast<std::size_t>(c.index_a)),
                       g.branches.at(static_cast<std::size_t>(c.branch_b)).pixels.at(static_cast<std::size_t>(c.index_b)));
  g.connections.clear();

  for (const auto& [pa, pb] : links) {
    const Owner own = owners(g);
    const int a = own.branch(pa.y, pa.x), b = own.branch(pb.y, pb.x);
    if (a < 0 || b < 0 || a == b) continue;
    const auto& ca = g.branches[static_cast<std::size_t>(a)].pixels;
    const auto& cb = g.branches[static_cast<std::size_t>(b)].pixels;
    const auto ha = halves(ca, own.index(pa.y, pa.x));
    const auto hb = halves(cb, own.index(pb.y, pb.x));

    const double keep_longest = std::max(chain_length(ca), chain_length(cb));
    double best_longest = keep_longest, best_cost = std::numeric_limits<double>::infinity();
    int best_x = -1, best_y = -1;
    for (int x = 0; x < static_cast<int>(ha.size()); ++x)
      for (int y = 0; y < static_cast<int>(hb.size()); ++y) {
        const auto& hx = ha[static_cast<std::size_t>(x)];
        const auto& hy = hb[static_cast<std::size_t>(y)];
        double longest = chain_length(hx) + distance(pa, pb) + chain_length(hy);
        if (ha.size() == 2) longest = std::max(longest, leftover_length(ha[static_cast<std::size_t>(1 - x)]));
        if (hb.size() == 2) longest = std::max(longest, leftover_length(hb[static_cast<std::size_t>(1 - y)]));
        if (longest <= keep_longest + 1e-9) continue;
        const double cost = transition_cost(reversed(hx), hy);
        if (longest > best_longest + 1e-9 || (longest > best_longest - 1e-9 && cost < best_cost)) {
          best_longest = std::max(best_longest, longest);
          best_cost = cost;
          best_x = x;
          best_y = y;
        }
      }
    if (best_x < 0) continue;

    std::vector<Branch> pieces;
    Branch joined{reversed(ha[static_cast<std::size_t>(best_x)])};
    const auto& hy = hb[static_cast<std::size_t>(best_y)];
    joined.pixels.insert(joined.pixels.end(), hy.begin(), hy.end());
    pieces.push_back(std::move(joined));
    // Leftover halves give up the cut pixel, which now belongs to the joined chain.
    if (ha.size() == 2) {
      const auto& rest = ha[static_cast<std::size_t>(1 - best_x)];
      pieces.push_back(Branch{std::vector<Pixel>(rest.begin() + 1, rest.end())});
    }
    if (hb.size() == 2) {
      const auto& rest = hb[static_cast<std::size_t>(1 - best_y)];
      pieces.push_back(Branch{std::vector<Pixel>(rest.begin() + 1, rest.end())});
    }

    std::vector<Branch> next;
    for (int i = 0; i < static_cast<int>(g.branches.size()); ++i) {
      if (i == a) next.push_back(std::move(pieces.front()));
      else if (i != b) next.push_back(std::move(g.branches[static_cast<std::size_t>(i)]));
    }
    for (std::size_t i = 1; i < pieces.size(); ++i)
      if (!pieces[i].empty()) next.push_back(std::move(pieces[i]));
    g.branches = std::move(next);
  }
  return g;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kMinLoopGain = 0.1;  // radians

struct LoopCandidate {
  int i = 0, j = 0;
  double gain = 0.0;
  double distance = 0.0;
};

std::vector<Pixel> slice(const std::vector<Pixel>& v, int first, int last_exclusive) {
  first = std::max(first, 0);
  last_exclusive = std::min(last_exclusive, static_cast<int>(v.size()));
  return {v.begin() + first, v.begin() + last_exclusive};
}

// Cost of crossing from pixel i to j in the kept order versus after
// reversing pixels (i, j], counting both affected transitions.
double reversal_gain(const std::vector<Pixel>& c, int i, int j) {
  const int n = static_cast<int>(c.size());
  const int w = kTangentWindow;
  const auto before_i = slice(c, i - w + 1, i + 1);
  double keep = transition_cost(before_i, slice(c, i + 1, i + 1 + w));
  double flip = transition_cost(before_i, reversed(slice(c, j - w + 1, j + 1)));
  if (j + 1 < n) {
    const auto after_j = slice(c, j + 1, j + 1 + w);
    keep += transition_cost(slice(c, j - w + 1, j + 1), after_j);
    flip += transition_cost(reversed(slice(c, i + 1, i + 1 + w)), after_j);
  }
  return keep - flip;
}

}  // namespace

BranchGraph merge_loops(BranchGraph g, double d, double b_min) {
  if (!(d > 0.0) || !(b_min > 0.0)) throw std::invalid_argument("merge_loops: d and b_min must be > 0");
  constexpr int kMaxRewires = 8;
  for (int bi = 0; bi < static_cast<int>(g.branches.size()); ++bi) {
    auto& chain = g.branches[static_cast<std::size_t>(bi)].pixels;
    bool rewired = false;
    for (int round = 0; round < kMaxRewires; ++round) {
      const int n = static_cast<int>(chain.size());
      std::vector<double> along(static_cast<std::size_t>(n), 0.0);
      for (int k = 1; k < n; ++k)
        along[static_cast<std::size_t>(k)] =
            along[static_cast<std::size_t>(k - 1)] +
            distance(chain[static_cast<std::size_t>(k - 1)], chain[static_cast<std::size_t>(k)]);

      std::optional<LoopCandidate> best, closest;
      const double d2 = d * d;
      for (int i = 0; i + 1 < n; ++i) {
        const Pixel p = chain[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) {
          if (along[static_cast<std::size_t>(j)] - along[static_cast<std::size_t>(i)] < b_min) continue;
          const Pixel q = chain[static_cast<std::size_t>(j)];
          const double dist2 = double(p.x - q.x) * (p.x - q.x) + double(p.y - q.y) * (p.y - q.y);
          if (dist2 > d2) continue;
          const LoopCandidate cand{i, j, reversal_gain(chain, i, j), std::sqrt(dist2)};
          if (!closest || cand.distance < closest->distance) closest = cand;
          if (cand.gain > kMinLoopGain && (!best || cand.gain > best->gain)) best = cand;
        }
      }
      if (!best) {
        if (closest && !rewired) g.loops.push_back({bi, closest->i, closest->j});
        break;
      }
      std::reverse(chain.begin() + best->i + 1, chain.begin() + best->j + 1);
      g.loops.push_back({bi, best->i, best->j});
      rewired = true;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

BranchGraph close_remaining(BranchGraph g, double d, double b_min) {
  if (!(d > 0.0) || !(b_min > 0.0)) throw std::invalid_argument("close_remaining: d and b_min must be > 0");
  bool changed = true;
  while (changed && g.branches.size() > 1) {
    changed = false;
    const int main = g.longest();
    std::vector<int> order(g.branches.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      return g.branches[static_cast<std::size_t>(x)].length() > g.branches[static_cast<std::size_t>(y)].length();
    });
    for (int other : order) {
      if (other == main) continue;
      const Branch& m = g.branches[static_cast<std::size_t>(main)];
      Branch side = g.branches[static_cast<std::size_t>(other)];
      const Connection c = closest_pair(side, m, d);
      if (!(c.distance <= d)) continue;

      if (side.length() >= b_min) {
        // Travel the side branch starting from the end nearest the main chain.
        if (c.index_a > side.size() / 2) std::reverse(side.pixels.begin(), side.pixels.end());
        std::vector<Pixel> merged;
        const Pixel near = side.pixels.front();
        if (distance(near, m.pixels.back()) <= d) {
          merged = m.pixels;
          merged.insert(merged.end(), side.pixels.begin(), side.pixels.end());
        } else if (distance(near, m.pixels.front()) <= d) {
          merged = reversed(side.pixels);
          merged.insert(merged.end(), m.pixels.begin(), m.pixels.end());
        } else {
          const auto at = m.pixels.begin() + c.index_b + 1;
          merged.assign(m.pixels.begin(), at);
          merged.insert(merged.end(), side.pixels.begin(), side.pixels.end());
          merged.insert(merged.end(), side.pixels.rbegin() + 1, side.pixels.rend());
          merged.insert(merged.end(), at, m.pixels.end());
        }
        g.branches[static_cast<std::size_t>(main)].pixels = std::move(merged);
      }
      g.branches.erase(g.branches.begin() + other);
      changed = true;
      break;
    }
  }
  g.connections.clear();
  return g;
}

}  // namespace cathseg
