#include "cathseg/augment.hpp"

#include <cmath>
#include <Eigen/LU>
#include <numbers>
#include <stdexcept>

namespace cathseg {

void AugmentConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("augment: ") + name + " must be in [0, 1]");
  };
  prob(p_augment, "p_augment");
  prob(p_flip, "p_flip");
  if (!(rot_deg >= 0.0 && rot_deg <= 180.0)) throw std::invalid_argument("augment: rot_deg must be in [0, 180]");
  if (!(scale_min > 0.0 && scale_min <= scale_max)) throw std::invalid_argument("augment: need 0 < scale_min <= scale_max");
  if (!(translate_frac >= 0.0 && translate_frac <= 1.0))
    throw std::invalid_argument("augment: translate_frac must be in [0, 1]");
  if (!(intensity_shift >= 0.0)) throw std::invalid_argument("augment: intensity_shift must be >= 0");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("augment: noise_sigma must be >= 0");
}

namespace {

struct Affine {
  Eigen::Matrix2d a;  // maps (p - c) for the forward direction
  Eigen::Vector2d c;
  Eigen::Vector2d t;
};

Affine make_affine(const WarpParams& p, int width, int height) {
  if (!(p.scale > 0.0)) throw std::invalid_argument("warp: scale must be > 0");
  if (!(std::abs(p.angle_deg) <= 180.0)) throw std::invalid_argument("warp: |angle| must be <= 180");
  const double th = p.angle_deg * std::numbers::pi / 180.0;
  Eigen::Matrix2d rot;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Eigen::Matrix2d flip = Eigen::Vector2d(p.flip_h ? -1.0 : 1.0, p.flip_v ? -1.0 : 1.0).asDiagonal();
  return {p.scale * rot * flip, Eigen::Vector2d((width - 1) / 2.0, (height - 1) / 2.0), Eigen::Vector2d(p.tx, p.ty)};
}

}  // namespace

Point2 warp_forward(const WarpParams& params, int width, int height, const Point2& in) {
  const Affine f = make_affine(params, width, height);
  return f.c + f.a * (in - f.c) + f.t;
}

Point2 warp_inverse(const WarpParams& params, int width, int height, const Point2& out) {
  const Affine f = make_affine(params, width, height);
  return f.c + f.a.inverse() * (out - f.c - f.t);
}

PixelGrid<float> warp(const PixelGrid<float>& image, const WarpParams& params, Interpolation interpolation) {
  if (params.is_identity()) return image;
  const int w = static_cast<int>(image.cols()), h = static_cast<int>(image.rows());
  const Affine f = make_affine(params, w, h);
  const Eigen::Matrix2d inv = f.a.inverse();
  PixelGrid<float> out = PixelGrid<float>::Zero(h, w);
  auto at = [&](int x, int y) -> double { return (x >= 0 && y >= 0 && x < w && y < h) ? image(y, x) : 0.0; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector2d src = f.c + inv * (Eigen::Vector2d(x, y) - f.c - f.t);
      if (interpolation == Interpolation::nearest) {
        out(y, x) = static_cast<float>(at(static_cast<int>(std::lround(src.x())), static_cast<int>(std::lround(src.y()))));
        continue;
      }
      const double fx = std::floor(src.x()), fy = std::floor(src.y());
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      if (x0 < -1 || y0 < -1 || x0 >= w || y0 >= h) continue;
      const double ax = src.x() - fx, ay = src.y() - fy;
      const double v = (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
                       ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
      out(y, x) = static_cast<float>(v);
    }
  return out;
}

Image warp(const Image& image, const WarpParams& params, Interpolation interpolation) {
  return Image(warp(image.pixels, params, interpolation));
}

BinaryMask warp_mask(const BinaryMask& mask, const WarpParams& params) {
  if (params.is_identity()) return mask;
  const PixelGrid<float> soft = warp(PixelGrid<float>(mask.pixels.cast<float>()), params, Interpolation::bilinear);
  return BinaryMask(PixelGrid<std::uint8_t>((soft >= 0.5f).cast<std::uint8_t>()));
}

AugmentParams sample_augment_params(const AugmentConfig& config, int width, int height, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentParams p;
  p.apply = unit(rng) < config.p_augment;
  if (!p.apply) return p;
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  p.warp.flip_h = unit(rng) < config.p_flip;
  p.warp.flip_v = unit(rng) < config.p_flip;
  p.warp.angle_deg = range(-config.rot_deg, config.rot_deg);
  p.warp.scale = range(config.scale_min, config.scale_max);
  p.warp.tx = range(-config.translate_frac, config.translate_frac) * width;
  p.warp.ty = range(-config.translate_frac, config.translate_frac) * height;
  p.intensity_shift = range(-config.intensity_shift, config.intensity_shift);
  return p;
}

AugmentedSample apply_augment(const std::vector<Image>& frames, const BinaryMask& mask, const AugmentParams& params,
                              double noise_sigma, Rng& rng) {
  for (const Image& f : frames)
    if (!same_size(f, mask)) throw std::invalid_argument("augment: frames and mask differ in size");
  if (!params.apply) return {frames, mask};
  AugmentedSample out;
  out.mask = warp_mask(mask, params.warp);
  std::normal_distribution<double> noise(0.0, noise_sigma);
  for (const Image& f : frames) {
    Image g = warp(f, params.warp);
    for (Eigen::Index i = 0; i < g.pixels.size(); ++i) {
      double v = g.pixels(i) + params.intensity_shift;
      if (noise_sigma > 0.0) v += noise(rng);
      g.pixels(i) = static_cast<float>(v);
    }
    out.frames.push_back(std::move(g));
  }
  return out;
}

AugmentedSample augment_sample(const std::vector<Image>& frames, const BinaryMask& mask, const AugmentConfig& config,
                               Rng& rng) {
  if (frames.empty()) throw std::invalid_argument("augment: no frames");
  const AugmentParams params = sample_augment_params(config, mask.width(), mask.height(), rng);
  return apply_augment(frames, mask, params, config.noise_sigma, rng);
}

}  // namespace cathseg
