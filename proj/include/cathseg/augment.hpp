#pragma once

#include <vector>

#include "cathseg/image.hpp"
#include "cathseg/random.hpp"

namespace cathseg {

struct AugmentConfig {
  double p_augment = 0.5;
  double p_flip = 0.5;  // per axis
  double rot_deg = 9.0;  // rotation drawn from [-rot_deg, rot_deg]
  double scale_min = 0.9;
  double scale_max = 1.1;
  double translate_frac = 0.16;  // of width / height, both signs
  double intensity_shift = 0.07;
  double noise_sigma = 0.03;

  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

/// Geometric part of an augmentation. Applied about the image center
/// ((w-1)/2, (h-1)/2) in the order flip, rotate, scale, translate.
struct WarpParams {
  bool flip_h = false;  // mirror x
  bool flip_v = false;  // mirror y
  double angle_deg = 0.0;
  double scale = 1.0;
  double tx = 0.0;  // pixels
  double ty = 0.0;

  bool is_identity() const {
    return !flip_h && !flip_v && angle_deg == 0.0 && scale == 1.0 && tx == 0.0 && ty == 0.0;
  }
};

enum class Interpolation { bilinear, nearest };

/// Output-to-input mapping of `params` for a width x height image.
Point2 warp_inverse(const WarpParams& params, int width, int height, const Point2& out);
/// Input-to-output mapping.
Point2 warp_forward(const WarpParams& params, int width, int height, const Point2& in);

/// Single resampling pass of the composed affine; samples outside read 0.
PixelGrid<float> warp(const PixelGrid<float>& image, const WarpParams& params, Interpolation interpolation);
Image warp(const Image& image, const WarpParams& params, Interpolation interpolation = Interpolation::bilinear);
/// Bilinear resampling followed by thresholding at 0.5.
BinaryMask warp_mask(const BinaryMask& mask, const WarpParams& params);

struct AugmentParams {
  bool apply = false;
  WarpParams warp;
  double intensity_shift = 0.0;
};

AugmentParams sample_augment_params(const AugmentConfig& config, int width, int height, Rng& rng);

struct AugmentedSample {
  std::vector<Image> frames;
  BinaryMask mask;
};

/// Applies `params` to every frame and the mask; the intensity shift and
/// Gaussian noise (drawn from `rng`) touch the frames only and are not clamped.
AugmentedSample apply_augment(const std::vector<Image>& frames, const BinaryMask& mask, const AugmentParams& params,
                              double noise_sigma, Rng& rng);

AugmentedSample augment_sample(const std::vector<Image>& frames, const BinaryMask& mask, const AugmentConfig& config,
                               Rng& rng);

}  // namespace cathseg
