#pragma once

#include <cstdint>
#include <vector>

#include "cathseg/centerline.hpp"
#include "cathseg/random.hpp"

namespace cathseg {

struct SynthConfig {
  int image_size = 64;
  int frames_per_seq = 4;
  int control_points_min = 4;
  int control_points_max = 8;
  double motion_px = 1.0;  // per-frame control-point jitter, uniform in [-motion_px, motion_px]
  double intensity_min = 0.3;  // catheter darkening relative to the background
  double intensity_max = 0.6;
  double profile_sigma = 2.0;  // Gaussian cross-section, pixels
  double background_texture_scale = 1.0;  // 0 gives a flat background
  double noise_sigma = 0.04;
  double loop_probability = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

struct SyntheticSequence {
  FrameSequence sequence;
  std::vector<Centerline> centerlines;  // ground truth per frame, 1 px spacing, tip first
  std::vector<Polyline> control_points;  // per frame, entry point first
  bool has_loop = false;
};

/// Draws control points for one catheter: the first lies on the image
/// border, the rest wander inward. With `loop` the path contains a single
/// self-crossing; otherwise none. Throws std::runtime_error if no valid
/// curve is found.
Polyline random_catheter(const SynthConfig& config, bool loop, Rng& rng);

/// Renders a frame: smooth background minus a Gaussian ridge along the dense
/// curve, plus noise, percentile-normalized. `background` has the image size.
Image render_frame(const PixelGrid<double>& background, const Polyline& dense_curve, double contrast, double sigma,
                   double noise_sigma, Rng& rng);

/// Sum of 3-5 random low-frequency cosine gratings around 0.6.
PixelGrid<double> random_background(int size, double texture_scale, Rng& rng);

SyntheticSequence generate_sequence(const SynthConfig& config, Rng& rng);
/// Sequence `index` of a dataset seeded by config.seed.
SyntheticSequence generate_sequence(const SynthConfig& config, int index);

}  // namespace cathseg
