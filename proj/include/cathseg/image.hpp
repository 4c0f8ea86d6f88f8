#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace cathseg {

/// Row-major pixel storage; rows are image lines, so element (y, x).
template <typename Scalar>
using PixelGrid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Point2 = Eigen::Vector2d;  // (x, y), pixel centers at integer coordinates

/// A 2D raster with a tag that fixes its meaning, so an intensity image,
/// a binary mask and a network prediction cannot be mixed up by accident.
template <typename Scalar, typename Kind>
struct Raster {
  using scalar_type = Scalar;

  PixelGrid<Scalar> pixels;

  Raster() = default;
  Raster(int width, int height, Scalar fill = Scalar(0))
      : pixels(PixelGrid<Scalar>::Constant(height, width, fill)) {}
  explicit Raster(PixelGrid<Scalar> grid) : pixels(std::move(grid)) {}

  int width() const { return static_cast<int>(pixels.cols()); }
  int height() const { return static_cast<int>(pixels.rows()); }
  bool empty() const { return pixels.size() == 0; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width() && y < height(); }

  Scalar operator()(int x, int y) const { return pixels(y, x); }
  Scalar& operator()(int x, int y) { return pixels(y, x); }

  template <typename OtherKind>
  bool same_size(const Raster<Scalar, OtherKind>& other) const {
    return width() == other.width() && height() == other.height();
  }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.pixels.rows() == b.pixels.rows() && a.pixels.cols() == b.pixels.cols() &&
           (a.pixels == b.pixels).all();
  }
};

namespace kind {
struct Intensity;
struct Binary;
struct Probability;
}  // namespace kind

using Image = Raster<float, kind::Intensity>;
using BinaryMask = Raster<std::uint8_t, kind::Binary>;
using ProbabilityMap = Raster<float, kind::Probability>;

template <typename S1, typename K1, typename S2, typename K2>
bool same_size(const Raster<S1, K1>& a, const Raster<S2, K2>& b) {
  return a.width() == b.width() && a.height() == b.height();
}

/// Ordered frames I_1..I_s, optionally paired with their ground-truth masks.
struct FrameSequence {
  std::vector<Image> frames;
  std::vector<BinaryMask> masks;

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  /// Throws std::invalid_argument when frames disagree in size or masks do not align.
  void validate() const;
};

class PixelSpacing {
 public:
  explicit PixelSpacing(double mm_per_pixel = 1.0);
  double mm_per_pixel() const { return mm_per_pixel_; }
  double to_mm(double px) const { return px * mm_per_pixel_; }

 private:
  double mm_per_pixel_;
};

std::size_t count_ones(const BinaryMask& mask);
BinaryMask to_binary(const ProbabilityMap& map, float threshold);
ProbabilityMap to_probability(const BinaryMask& mask);

// ---------------------------------------------------------------------------
// Normalization

struct NormalizeResult {
  Image image;
  double low_value = 0.0;   // raw intensity at the low percentile
  double high_value = 0.0;  // raw intensity at the high percentile
  bool degenerate = false;  // zero dynamic range; image is all zeros
};

/// Nearest-rank percentile: the smallest sample with at least p% of the
/// samples at or below it. `p` in [0, 100].
double percentile_nearest_rank(std::vector<double> values, double p);

/// Linear map of [P_low, P_high] onto [0, 1] with clamping outside.
NormalizeResult normalize_percentile(const PixelGrid<double>& raw, double low = 2.0,
                                     double high = 98.0);

template <typename Derived>
NormalizeResult normalize_percentile(const Eigen::DenseBase<Derived>& raw, double low = 2.0,
                                     double high = 98.0) {
  PixelGrid<double> grid = raw.derived().template cast<double>();
  return normalize_percentile(grid, low, high);
}

// ---------------------------------------------------------------------------
// Morphology and ground-truth rasterization

/// Dilation with a (2r+1)x(2r+1) square; the neighborhood is clipped at the border.
BinaryMask dilate_square(const BinaryMask& mask, int radius);
inline BinaryMask dilate_5x5(const BinaryMask& mask) { return dilate_square(mask, 2); }

/// Thin, 8-connected rasterization of the centripetal Catmull-Rom spline
/// through `points`. Throws std::invalid_argument for fewer than two points
/// or points outside the image.
BinaryMask rasterize_curve(const std::vector<Point2>& points, int width, int height);

/// Number of 8-connected components of ones.
int count_components(const BinaryMask& mask);

}  // namespace cathseg
