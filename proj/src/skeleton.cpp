#include "cathseg/skeleton.hpp"

#include <array>
#include <cstdlib>
#include <stdexcept>

namespace cathseg {

BinaryMask threshold(const ProbabilityMap& map, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("threshold: alpha must be in (0, 1)");
  BinaryMask out(map.width(), map.height(), 0);
  for (Eigen::Index i = 0; i < map.pixels.size(); ++i)
    out.pixels(i) = static_cast<double>(map.pixels(i)) >= alpha ? 1 : 0;
  return out;
}

namespace {

// Neighborhood code: bit k set when P(k+2) is foreground, with P2 = north
// and P3..P9 following clockwise.
using Table = std::array<bool, 256>;

std::array<Table, 2> build_tables() {
  std::array<Table, 2> tables{};
  for (int code = 0; code < 256; ++code) {
    std::array<int, 8> p{};
    for (int k = 0; k < 8; ++k) p[static_cast<std::size_t>(k)] = (code >> k) & 1;
    const int p2 = p[0], p4 = p[2], p6 = p[4], p8 = p[6];
    int b = 0, a = 0;
    for (int k = 0; k < 8; ++k) {
      b += p[static_cast<std::size_t>(k)];
      if (p[static_cast<std::size_t>(k)] == 0 && p[static_cast<std::size_t>((k + 1) % 8)] == 1) ++a;
    }
    const bool common = b >= 2 && b <= 6 && a == 1;
    tables[0][static_cast<std::size_t>(code)] = common && p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0;
    tables[1][static_cast<std::size_t>(code)] = common && p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0;
  }
  return tables;
}

/// True when the foreground neighbors of `i` form one 8-connected group
/// without it, so removing `i` keeps them connected.
bool is_simple(const std::vector<std::uint8_t>& buf, int i, const std::array<int, 8>& offsets) {
  // Ring positions in the same clockwise order as `offsets`, starting north.
  static constexpr std::array<std::array<int, 2>, 8> ring{
      {{0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};
  std::array<bool, 8> on{}, seen{};
  int first = -1, total = 0;
  for (std::size_t k = 0; k < 8; ++k) {
    on[k] = buf[static_cast<std::size_t>(i + offsets[k])] != 0;
    if (on[k]) {
      ++total;
      if (first < 0) first = static_cast<int>(k);
    }
  }
  if (total == 0) return false;
  std::array<std::size_t, 8> stack{};
  std::size_t top = 0;
  int reached = 0;
  stack[top++] = static_cast<std::size_t>(first);
  seen[static_cast<std::size_t>(first)] = true;
  while (top > 0) {
    const std::size_t k = stack[--top];
    ++reached;
    for (std::size_t m = 0; m < 8; ++m)
      if (on[m] && !seen[m] && std::abs(ring[k][0] - ring[m][0]) <= 1 && std::abs(ring[k][1] - ring[m][1]) <= 1) {
        seen[m] = true;
        stack[top++] = m;
      }
  }
  return reached == total;
}

const std::array<Table, 2>& tables() {
  static const std::array<Table, 2> t = build_tables();
  return t;
}

}  // namespace

namespace {

/// Mask copied into a buffer with a one-pixel zero border, plus the indices of its ones.
struct Padded {
  int width, height, stride;
  std::vector<std::uint8_t> buf;
  std::vector<int> live;
  std::array<int, 8> offsets;

  explicit Padded(const BinaryMask& mask)
      : width(mask.width()),
        height(mask.height()),
        stride(width + 2),
        buf(static_cast<std::size_t>(stride) * static_cast<std::size_t>(height + 2), 0),
        offsets{-stride, -stride + 1, 1, stride + 1, stride, stride - 1, -1, -stride - 1} {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (mask(x, y)) {
          const int i = (y + 1) * stride + x + 1;
          buf[static_cast<std::size_t>(i)] = 1;
          live.push_back(i);
        }
  }

  BinaryMask mask() const {
    BinaryMask out(width, height, 0);
    for (int i : live) out((i % stride) - 1, (i / stride) - 1) = 1;
    return out;
  }
};

}  // namespace

BinaryMask skeletonize(const BinaryMask& mask) {
  Padded p(mask);
  auto& buf = p.buf;
  auto& live = p.live;
  const auto& offsets = p.offsets;
  const std::vector<int> original = live;
  std::vector<int> removed_in(buf.size(), -1);
  std::vector<int> doomed;
  int pass = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Table& table : tables()) {
      ++pass;
      doomed.clear();
      for (int i : live) {
        int code = 0;
        for (int k = 0; k < 8; ++k) code |= buf[static_cast<std::size_t>(i + offsets[static_cast<std::size_t>(k)])] << k;
        if (table[static_cast<std::size_t>(code)]) doomed.push_back(i);
      }
      if (doomed.empty()) continue;
      changed = true;
      for (int i : doomed) {
        buf[static_cast<std::size_t>(i)] = 0;
        removed_in[static_cast<std::size_t>(i)] = pass;
      }
      std::erase_if(live, [&](int i) { return buf[static_cast<std::size_t>(i)] == 0; });
    }
  }

  // The sub-passes erase a 2x2 residue completely. A component left without
  // pixels gets back its last removed pixel, the first in scan order on ties.
  std::vector<char> seen(buf.size(), 0);
  std::vector<int> stack;
  for (int start : original) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    seen[static_cast<std::size_t>(start)] = 1;
    stack.assign(1, start);
    bool survived = false;
    int keep = start;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      const auto iu = static_cast<std::size_t>(i);
      survived = survived || removed_in[iu] < 0;
      const auto ku = static_cast<std::size_t>(keep);
      if (removed_in[iu] > removed_in[ku] || (removed_in[iu] == removed_in[ku] && i < keep)) keep = i;
      for (int o : offsets) {
        const auto j = static_cast<std::size_t>(i + o);
        const bool foreground = buf[j] || removed_in[j] >= 0;
        if (foreground && !seen[j]) {
          seen[j] = 1;
          stack.push_back(i + o);
        }
      }
    }
    if (!survived) {
      buf[static_cast<std::size_t>(keep)] = 1;
      live.push_back(keep);
    }
  }
  return p.mask();
}

BinaryMask thin_square_blocks(const BinaryMask& skeleton) {
  Padded p(skeleton);
  auto& buf = p.buf;
  auto& live = p.live;
  const auto& offsets = p.offsets;
  const int stride = p.stride;
  bool blocks = true;
  while (blocks) {
    blocks = false;
    for (int i : live) {
      if (!buf[static_cast<std::size_t>(i)]) continue;
      const std::array<int, 4> block{i, i + 1, i + stride, i + stride + 1};
      bool full = true;
      for (int j : block) full = full && buf[static_cast<std::size_t>(j)];
      if (!full) continue;
      int victim = -1, fewest = 9;
      for (int j : block) {
        if (!is_simple(buf, j, offsets)) continue;
        int count = 0;
        for (int o : offsets) count += buf[static_cast<std::size_t>(j + o)];
        if (count < fewest) {
          fewest = count;
          victim = j;
        }
      }
      buf[static_cast<std::size_t>(victim >= 0 ? victim : i)] = 0;
      blocks = true;
    }
    std::erase_if(live, [&](int i) { return buf[static_cast<std::size_t>(i)] == 0; });
  }

  return p.mask();
}

bool has_square_block(const BinaryMask& mask) {
  for (int y = 0; y + 1 < mask.height(); ++y)
    for (int x = 0; x + 1 < mask.width(); ++x)
      if (mask(x, y) && mask(x + 1, y) && mask(x, y + 1) && mask(x + 1, y + 1)) return true;
  return false;
}

}  // namespace cathseg
