#include "cathseg/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>

namespace cathseg {

void SynthConfig::validate() const {
  if (image_size < 32) throw std::invalid_argument("synth: image_size must be >= 32");
  if (frames_per_seq < 1) throw std::invalid_argument("synth: frames_per_seq must be >= 1");
  if (control_points_min < 2 || control_points_max < control_points_min)
    throw std::invalid_argument("synth: need 2 <= control_points_min <= control_points_max");
  if (!(motion_px >= 0.0)) throw std::invalid_argument("synth: motion_px must be >= 0");
  if (!(intensity_min > 0.0 && intensity_min <= intensity_max))
    throw std::invalid_argument("synth: need 0 < intensity_min <= intensity_max");
  if (!(profile_sigma > 0.0)) throw std::invalid_argument("synth: profile_sigma must be > 0");
  if (!(background_texture_scale >= 0.0)) throw std::invalid_argument("synth: background_texture_scale must be >= 0");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("synth: noise_sigma must be >= 0");
  if (!(loop_probability >= 0.0 && loop_probability <= 1.0))
    throw std::invalid_argument("synth: loop_probability must be in [0, 1]");
}

namespace {

constexpr double kLoopShape = 2.2;     // prolate cycloid ratio; crossing angle about 92 degrees
constexpr double kMinSeparation = 8.0;  // px between strands that are far apart along the curve
constexpr double kSeparationAlong = 16.0;
constexpr double kCrossingClearance = 10.0;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Eigen::Vector2d rotate(const Eigen::Vector2d& v, double angle) {
  return {std::cos(angle) * v.x() - std::sin(angle) * v.y(), std::sin(angle) * v.x() + std::cos(angle) * v.y()};
}

// Proper intersection of segments ab and cd.
std::optional<Point2> intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const Eigen::Vector2d r = b - a, s = d - c;
  const double den = r.x() * s.y() - r.y() * s.x();
  if (std::abs(den) < 1e-12) return std::nullopt;
  const Eigen::Vector2d ac = c - a;
  const double t = (ac.x() * s.y() - ac.y() * s.x()) / den;
  const double u = (ac.x() * r.y() - ac.y() * r.x()) / den;
  if (t < 0.0 || t >= 1.0 || u < 0.0 || u >= 1.0) return std::nullopt;
  return a + t * r;
}

std::vector<Point2> self_intersections(const Polyline& p) {
  std::vector<Point2> out;
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    for (std::size_t j = i + 2; j + 1 < p.size(); ++j)
      if (auto x = intersect(p[i], p[i + 1], p[j], p[j + 1])) out.push_back(*x);
  return out;
}

// Checks the geometric constraints a usable catheter must satisfy.
bool valid_curve(const Polyline& control, int size, bool loop, double margin) {
  const Polyline dense = resample_polyline(catmull_rom_centripetal(control, 16), 1.0);
  if (dense.size() < 8) return false;
  for (const Point2& p : dense)
    if (p.x() < 0.0 || p.y() < 0.0 || p.x() > size - 1 || p.y() > size - 1) return false;

  const Point2& tip = dense.back();
  const double tip_border = std::min({tip.x(), tip.y(), size - 1 - tip.x(), size - 1 - tip.y()});
  if (tip_border < margin) return false;

  const std::vector<Point2> crossings = self_intersections(dense);
  if (crossings.size() != (loop ? 1u : 0u)) return false;

  const std::vector<double> along = cumulative_length(dense);
  auto near_crossing = [&](const Point2& p) {
    for (const Point2& c : crossings)
      if ((p - c).norm() < kCrossingClearance) return true;
    return false;
  };
  for (std::size_t i = 0; i < dense.size(); ++i)
    for (std::size_t j = i + 1; j < dense.size(); ++j) {
      if (along[j] - along[i] < kSeparationAlong) continue;
      if ((dense[i] - dense[j]).norm() >= kMinSeparation) continue;
      if (near_crossing(dense[i]) && near_crossing(dense[j])) continue;
      return false;
    }
  return true;
}

double curve_margin(int size) { return std::max(3.0, 0.08 * size); }

}  // namespace

Polyline random_catheter(const SynthConfig& config, bool loop, Rng& rng) {
  config.validate();
  const int size = config.image_size;
  const double margin = curve_margin(size);
  const double lo = margin, hi = size - 1 - margin;
  auto inside = [&](const Point2& p) { return p.x() >= lo && p.y() >= lo && p.x() <= hi && p.y() <= hi; };

  for (int attempt = 0; attempt < 2000; ++attempt) {
    const int side = std::uniform_int_distribution<int>(0, 3)(rng);
    const double pos = uniform(rng, 0.2, 0.8) * (size - 1);
    Point2 entry;
    Eigen::Vector2d inward;
    switch (side) {
      case 0: entry = {pos, 0.0}; inward = {0.0, 1.0}; break;
      case 1: entry = {size - 1.0, pos}; inward = {-1.0, 0.0}; break;
      case 2: entry = {pos, size - 1.0}; inward = {0.0, -1.0}; break;
      default: entry = {0.0, pos}; inward = {1.0, 0.0}; break;
    }
    const int count = std::uniform_int_distribution<int>(config.control_points_min, config.control_points_max)(rng);
    const double step = uniform(rng, 0.14, 0.2) * size;
    Eigen::Vector2d dir = rotate(inward, uniform(rng, -0.6, 0.6));

    Polyline pts{entry};
    Point2 first = entry + step * dir;
    if (!inside(first)) continue;
    pts.push_back(first);

    // The loop follows the walk's current point and heading.
    const int loop_at = loop ? std::uniform_int_distribution<int>(1, std::max(1, count - 2))(rng) : -1;
    const double radius = uniform(rng, 0.085, 0.11) * size;
    const double turn_side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;

    bool ok = true;
    for (int i = 2; i < count + (loop ? 1 : 0) && ok; ++i) {
      if (static_cast<int>(pts.size()) - 1 == loop_at) {
        const Point2 base = pts.back();
        const Eigen::Vector2d u = dir, v = turn_side * Eigen::Vector2d(-dir.y(), dir.x());
        for (int k = 1; k <= 8; ++k) {
          const double t = -std::numbers::pi + k * std::numbers::pi / 4.0;
          const Point2 q = base + radius * ((t + std::numbers::pi - kLoopShape * std::sin(t)) * u -
                                            kLoopShape * (1.0 + std::cos(t)) * v);
          if (!inside(q)) ok = false;
          pts.push_back(q);
        }
        continue;
      }
      bool placed = false;
      for (int tries = 0; tries < 12 && !placed; ++tries) {
        const Eigen::Vector2d d = rotate(dir, std::normal_distribution<double>(0.0, 0.5)(rng));
        const Point2 p = pts.back() + step * d;
        if (inside(p)) {
          pts.push_back(p);
          dir = d;
          placed = true;
        }
      }
      ok = placed;
    }
    if (!ok || static_cast<int>(pts.size()) < config.control_points_min) continue;
    if (valid_curve(pts, size, loop, margin)) return pts;
  }
  throw std::runtime_error("synth: could not place a catheter curve; image_size too small for the requested shape");
}

PixelGrid<double> random_background(int size, double texture_scale, Rng& rng) {
  PixelGrid<double> bg = PixelGrid<double>::Constant(size, size, 0.6);
  if (texture_scale <= 0.0) return bg;
  const int gratings = std::uniform_int_distribution<int>(3, 5)(rng);
  for (int g = 0; g < gratings; ++g) {
    const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double cycles = uniform(rng, 0.3, 2.0);
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double amp = texture_scale * uniform(rng, 0.04, 0.12);
    const double kx = 2.0 * std::numbers::pi * cycles * std::cos(angle) / size;
    const double ky = 2.0 * std::numbers::pi * cycles * std::sin(angle) / size;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) bg(y, x) += amp * std::cos(kx * x + ky * y + phase);
  }
  return bg;
}

Image render_frame(const PixelGrid<double>& background, const Polyline& dense_curve, double contrast, double sigma,
                   double noise_sigma, Rng& rng) {
  const int h = static_cast<int>(background.rows()), w = static_cast<int>(background.cols());
  PixelGrid<double> dist = PixelGrid<double>::Constant(h, w, std::numeric_limits<double>::infinity());
  const double reach = 4.0 * sigma + 1.0;
  for (std::size_t i = 0; i + 1 < dense_curve.size() || (dense_curve.size() == 1 && i == 0); ++i) {
    const Point2 a = dense_curve[i];
    const Point2 b = dense_curve.size() == 1 ? a : dense_curve[i + 1];
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - reach)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - reach)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + reach)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d p(x, y);
        const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        dist(y, x) = std::min(dist(y, x), (p - (a + t * ab)).norm());
      }
  }
  PixelGrid<double> raw = background - contrast * (-(dist.square()) / (2.0 * sigma * sigma)).exp();
  if (noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += noise(rng);
  }
  return normalize_percentile(raw).image;
}

SyntheticSequence generate_sequence(const SynthConfig& config, Rng& rng) {
  config.validate();
  SyntheticSequence out;
  const int size = config.image_size;
  out.has_loop = uniform(rng, 0.0, 1.0) < config.loop_probability;
  const Polyline base = random_catheter(config, out.has_loop, rng);
  const PixelGrid<double> background = random_background(size, config.background_texture_scale, rng);
  const double contrast = uniform(rng, config.intensity_min, config.intensity_max);
  const double margin = curve_margin(size);

  for (int f = 0; f < config.frames_per_seq; ++f) {
    Polyline control = base;
    if (config.motion_px > 0.0) {
      for (int attempt = 0; attempt < 50; ++attempt) {
        Polyline moved = base;
        for (std::size_t i = 0; i < moved.size(); ++i) {
          const Eigen::Vector2d jitter(uniform(rng, -config.motion_px, config.motion_px),
                                       uniform(rng, -config.motion_px, config.motion_px));
          if (i == 0) {
            // The entry point slides along its border.
            Point2& e = moved[0];
            if (e.y() == 0.0 || e.y() == size - 1.0) e.x() = std::clamp(e.x() + jitter.x(), 0.0, size - 1.0);
            else e.y() = std::clamp(e.y() + jitter.y(), 0.0, size - 1.0);
          } else {
            moved[i] += jitter;
          }
        }
        if (valid_curve(moved, size, out.has_loop, margin)) {
          control = std::move(moved);
          break;
        }
      }
    }
    Polyline dense = resample_polyline(catmull_rom_centripetal(control, 16), 1.0);
    std::reverse(dense.begin(), dense.end());
    out.sequence.masks.push_back(dilate_5x5(rasterize_curve(dense, size, size)));
    out.sequence.frames.push_back(
        render_frame(background, dense, contrast, config.profile_sigma, config.noise_sigma, rng));
    out.centerlines.push_back(Centerline{std::move(dense)});
    out.control_points.push_back(std::move(control));
  }
  return out;
}

SyntheticSequence generate_sequence(const SynthConfig& config, int index) {
  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(index)));
  return generate_sequence(config, rng);
}

}  // namespace cathseg
