#include "cathseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "cathseg/spline.hpp"

namespace cathseg {

void FrameSequence::validate() const {
  for (const auto& f : frames)
    if (!same_size(f, frames.front()))
      throw std::invalid_argument("FrameSequence: frames differ in size");
  if (!masks.empty()) {
    if (masks.size() != frames.size())
      throw std::invalid_argument("FrameSequence: mask count does not match frame count");
    for (const auto& m : masks)
      if (!same_size(m, frames.front()))
        throw std::invalid_argument("FrameSequence: mask size differs from frame size");
  }
}

PixelSpacing::PixelSpacing(double mm_per_pixel) : mm_per_pixel_(mm_per_pixel) {
  if (!std::isfinite(mm_per_pixel) || mm_per_pixel <= 0.0)
    throw std::invalid_argument("PixelSpacing: mm_per_pixel must be finite and > 0");
}

std::size_t count_ones(const BinaryMask& mask) {
  return static_cast<std::size_t>((mask.pixels != 0).count());
}

BinaryMask to_binary(const ProbabilityMap& map, float threshold) {
  return BinaryMask((map.pixels >= threshold).cast<std::uint8_t>());
}

ProbabilityMap to_probability(const BinaryMask& mask) {
  return ProbabilityMap((mask.pixels != 0).cast<float>());
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile_nearest_rank: empty input");
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile_nearest_rank: p outside [0, 100]");
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::ptrdiff_t>(std::ceil(p * n / 100.0)) - 1;
  rank = std::clamp<std::ptrdiff_t>(rank, 0, static_cast<std::ptrdiff_t>(values.size()) - 1);
  std::nth_element(values.begin(), values.begin() + rank, values.end());
  return values[static_cast<std::size_t>(rank)];
}

NormalizeResult normalize_percentile(const PixelGrid<double>& raw, double low, double high) {
  if (raw.size() == 0) throw std::invalid_argument("normalize_percentile: empty image");
  if (!(low < high)) throw std::invalid_argument("normalize_percentile: low must be below high");
  if (!raw.isFinite().all()) throw std::invalid_argument("normalize_percentile: non-finite pixel");

  std::vector<double> values(raw.data(), raw.data() + raw.size());
  NormalizeResult result;
  result.low_value = percentile_nearest_rank(values, low);
  result.high_value = percentile_nearest_rank(std::move(values), high);

  const double range = result.high_value - result.low_value;
  if (!(range > 0.0)) {
    result.degenerate = true;
    result.image = Image(static_cast<int>(raw.cols()), static_cast<int>(raw.rows()), 0.0f);
    return result;
  }
  result.image = Image(((raw - result.low_value) / range).max(0.0).min(1.0).cast<float>());
  return result;
}

BinaryMask dilate_square(const BinaryMask& mask, int radius) {
  if (radius < 0) throw std::invalid_argument("dilate_square: negative radius");
  const int w = mask.width(), h = mask.height();
  // Separable: max over rows, then over columns.
  PixelGrid<std::uint8_t> rows = PixelGrid<std::uint8_t>::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      for (int dx = std::max(0, x - radius); dx <= std::min(w - 1, x + radius); ++dx) rows(y, dx) = 1;
    }
  BinaryMask out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!rows(y, x)) continue;
      for (int dy = std::max(0, y - radius); dy <= std::min(h - 1, y + radius); ++dy) out(x, dy) = 1;
    }
  return out;
}

namespace {

struct IPoint {
  int x;
  int y;
  bool operator==(const IPoint&) const = default;
};

bool adjacent8(const IPoint& a, const IPoint& b) {
  return std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1;
}

void append_line(std::vector<IPoint>& chain, IPoint to) {
  // Bresenham from chain.back() (exclusive) to `to` (inclusive).
  IPoint p = chain.back();
  const int dx = std::abs(to.x - p.x), sx = p.x < to.x ? 1 : -1;
  const int dy = -std::abs(to.y - p.y), sy = p.y < to.y ? 1 : -1;
  int err = dx + dy;
  while (!(p == to)) {
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; p.x += sx; }
    if (e2 <= dx) { err += dx; p.y += sy; }
    chain.push_back(p);
  }
}

}  // namespace

BinaryMask rasterize_curve(const std::vector<Point2>& points, int width, int height) {
  if (points.size() < 2) throw std::invalid_argument("rasterize_curve: need at least two points");
  if (width <= 0 || height <= 0) throw std::invalid_argument("rasterize_curve: empty image size");
  for (const auto& p : points)
    if (!(p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width - 1 && p.y() <= height - 1))
      throw std::invalid_argument("rasterize_curve: point outside image bounds");

  double longest = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) longest = std::max(longest, (points[i] - points[i - 1]).norm());
  const int per_segment = std::clamp(static_cast<int>(std::ceil(longest * 4.0)), 16, 4096);
  const Polyline dense = resample_polyline(catmull_rom_centripetal(points, per_segment), 0.25);

  std::vector<IPoint> chain;
  chain.reserve(dense.size());
  for (const auto& p : dense) {
    const IPoint q{std::clamp(static_cast<int>(std::lround(p.x())), 0, width - 1),
                   std::clamp(static_cast<int>(std::lround(p.y())), 0, height - 1)};
    if (chain.empty()) {
      chain.push_back(q);
    } else if (!(q == chain.back())) {
      if (adjacent8(q, chain.back())) chain.push_back(q);
      else append_line(chain, q);
    }
  }

  // Drop corner pixels whose neighbors along the chain already touch diagonally.
  std::vector<IPoint> thin;
  thin.reserve(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (!thin.empty() && i + 1 < chain.size() && adjacent8(thin.back(), chain[i + 1]) &&
        !(thin.back() == chain[i + 1]))
      continue;
    thin.push_back(chain[i]);
  }

  BinaryMask mask(width, height, 0);
  for (const auto& p : thin) mask(p.x, p.y) = 1;
  return mask;
}

int count_components(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  PixelGrid<std::uint8_t> seen = PixelGrid<std::uint8_t>::Zero(h, w);
  int components = 0;
  std::deque<IPoint> queue;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y) || seen(y, x)) continue;
      ++components;
      seen(y, x) = 1;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const IPoint p = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (mask.contains(nx, ny) && mask(nx, ny) && !seen(ny, nx)) {
              seen(ny, nx) = 1;
              queue.push_back({nx, ny});
            }
          }
      }
    }
  return components;
}

}  // namespace cathseg
