#pragma once

#include <functional>
#include <vector>

#include "cathseg/image.hpp"
#include "cathseg/nn/layers.hpp"
#include "cathseg/random.hpp"
#include "cathseg/spline.hpp"

namespace cathseg::testing {

// ---------------------------------------------------------------------------
// Generators

double uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive

nn::Tensor4<double> random_tensor(Rng& rng, nn::Shape4 shape, double scale = 1.0);
/// Entries uniform in [-1, 1] with magnitude at least `gap`, to stay clear of ReLU kinks.
nn::Tensor4<double> random_tensor_away_from_zero(Rng& rng, nn::Shape4 shape, double gap);
nn::ConvParams<double> random_conv(Rng& rng, nn::Shape4 kernel_shape);

/// Union of random discs, rectangles and thick strokes, then opened with a
/// 3x3 square so that no component is thinner than three pixels.
BinaryMask random_blob_mask(Rng& rng, int width, int height);

// ---------------------------------------------------------------------------
// Oracles

/// Direct sum over the zero-padded input.
nn::Tensor4<double> conv2d_reference(const nn::Tensor4<double>& x, const nn::ConvParams<double>& p,
                                     nn::ConvGeometry g);
/// Scatter form: every input pixel adds a weighted copy of the kernel.
nn::Tensor4<double> transposed_conv2d_reference(const nn::Tensor4<double>& x, const nn::ConvParams<double>& p,
                                                nn::ConvGeometry g);

/// Textbook two-subiteration thinning on a full copy of the image, plus the
/// rule that an erased component keeps its last erased pixel.
BinaryMask thinning_reference(const BinaryMask& mask);

/// 8-connected components by breadth-first search.
int components_reference(const BinaryMask& mask);

/// Mean of the two directed mean closest-point distances between polylines,
/// by exhaustive search.
double symmetric_mean_distance(const Polyline& a, const Polyline& b);
/// max over a of min over b, both directions.
double hausdorff_distance(const Polyline& a, const Polyline& b);

// ---------------------------------------------------------------------------
// Finite differences

/// Central difference of f at `x` along every coordinate.
std::vector<double> numeric_gradient(const std::function<double()>& f, double* x, std::size_t n, double h = 1e-6);

/// ||a - b|| / max(||a||, ||b||, floor).
double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-3);

template <typename Derived>
std::vector<double> to_vector(const Eigen::DenseBase<Derived>& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v.derived().coeff(i);
  return out;
}

}  // namespace cathseg::testing
