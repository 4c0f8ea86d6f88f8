#pragma once

#include "cathseg/nn/tensor.hpp"
#include "cathseg/random.hpp"

namespace cathseg::nn {

enum class Mode { train, infer };

using cathseg::Rng;

template <typename Scalar>
using Vector = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

struct ConvGeometry {
  int stride = 1;
  int pad = 0;
};

/// Convolution weights. For conv2d the kernel is (out, in, kh, kw); the
/// transposed convolution reads the same tensor as (in, out, kh, kw), so one
/// kernel drives a conv2d and its adjoint.
template <typename Scalar>
struct ConvParams {
  Tensor4<Scalar> kernel;
  Vector<Scalar> bias;
};

template <typename Scalar>
struct ConvGradients {
  Tensor4<Scalar> input;
  Tensor4<Scalar> kernel;
  Vector<Scalar> bias;
};

Shape4 conv2d_output_shape(const Shape4& input, const Shape4& kernel, ConvGeometry geometry);
Shape4 transposed_conv2d_output_shape(const Shape4& input, const Shape4& kernel, ConvGeometry geometry);

template <typename Scalar>
Tensor4<Scalar> conv2d(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p, ConvGeometry geometry);

template <typename Scalar>
ConvGradients<Scalar> conv2d_backward(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p,
                                      ConvGeometry geometry, const Tensor4<Scalar>& grad_out);

template <typename Scalar>
Tensor4<Scalar> transposed_conv2d(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p, ConvGeometry geometry);

template <typename Scalar>
ConvGradients<Scalar> transposed_conv2d_backward(const Tensor4<Scalar>& x, const ConvParams<Scalar>& p,
                                                 ConvGeometry geometry, const Tensor4<Scalar>& grad_out);

// ---------------------------------------------------------------------------

template <typename Scalar>
struct BatchNormParams {
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
  Vector<Scalar> running_mean;
  Vector<Scalar> running_var;

  static BatchNormParams identity(int channels) {
    return {Vector<Scalar>::Ones(channels), Vector<Scalar>::Zero(channels), Vector<Scalar>::Zero(channels),
            Vector<Scalar>::Ones(channels)};
  }
  int channels() const { return static_cast<int>(gamma.size()); }
};

struct BatchNormSettings {
  double epsilon = 1e-5;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
};

template <typename Scalar>
struct BatchNormCache {
  Tensor4<Scalar> normalized;
  Vector<double> inv_std;
  Mode mode = Mode::train;
};

template <typename Scalar>
struct BatchNormGradients {
  Tensor4<Scalar> input;
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
};

/// Train mode normalizes with batch statistics over (batch, h, w) and
/// updates the running statistics in `p`.
template <typename Scalar>
Tensor4<Scalar> batchnorm(const Tensor4<Scalar>& x, BatchNormParams<Scalar>& p, Mode mode,
                          BatchNormCache<Scalar>* cache = nullptr, BatchNormSettings settings = {});

/// Inference with running statistics; leaves `p` untouched.
template <typename Scalar>
Tensor4<Scalar> batchnorm_infer(const Tensor4<Scalar>& x, const BatchNormParams<Scalar>& p,
                                BatchNormSettings settings = {});

template <typename Scalar>
BatchNormGradients<Scalar> batchnorm_backward(const Tensor4<Scalar>& grad_out, const BatchNormParams<Scalar>& p,
                                              const BatchNormCache<Scalar>& cache);

// ---------------------------------------------------------------------------

template <typename Scalar>
Tensor4<Scalar> relu(const Tensor4<Scalar>& x);
template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& x, const Tensor4<Scalar>& grad_out);

/// `mask` holds 0 for dropped values and 1/(1-rate) for kept ones.
template <typename Scalar>
struct DropoutResult {
  Tensor4<Scalar> output;
  Tensor4<Scalar> mask;
};

template <typename Scalar>
DropoutResult<Scalar> dropout(const Tensor4<Scalar>& x, double rate, Rng& rng, Mode mode);

template <typename Scalar>
Tensor4<Scalar> sigmoid(const Tensor4<Scalar>& x);
/// Takes the forward output y = sigmoid(x).
template <typename Scalar>
Tensor4<Scalar> sigmoid_backward(const Tensor4<Scalar>& y, const Tensor4<Scalar>& grad_out);

/// Stacks channels of `a` then `b`.
template <typename Scalar>
Tensor4<Scalar> concat_channels(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b);

/// Channels [first, first + count) of `x`.
template <typename Scalar>
Tensor4<Scalar> slice_channels(const Tensor4<Scalar>& x, int first, int count);

}  // namespace cathseg::nn
