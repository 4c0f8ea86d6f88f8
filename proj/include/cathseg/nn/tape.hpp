#pragma once

#include <functional>
#include <vector>

#include "cathseg/nn/layers.hpp"

namespace cathseg::nn {

/// A convolution with its gradient accumulators.
template <typename Scalar>
struct ConvLayer {
  ConvParams<Scalar> params;
  ConvParams<Scalar> grads;
  ConvGeometry geometry;
  bool transposed = false;

  void zero_grad() {
    grads.kernel = Tensor4<Scalar>::zeros_like(params.kernel);
    grads.bias = Vector<Scalar>::Zero(params.bias.size());
  }
};

template <typename Scalar>
struct BatchNormLayer {
  BatchNormParams<Scalar> params;
  Vector<Scalar> grad_gamma;
  Vector<Scalar> grad_beta;

  void zero_grad() {
    grad_gamma = Vector<Scalar>::Zero(params.gamma.size());
    grad_beta = Vector<Scalar>::Zero(params.beta.size());
  }
};

/// Reverse-mode tape. Every op evaluates eagerly, stores its output and
/// registers a closure that pushes the output gradient to its inputs and
/// into the layer gradient accumulators.
template <typename Scalar>
class Tape {
 public:
  using Tensor = Tensor4<Scalar>;

  struct Var {
    int id = -1;
  };

  Var input(Tensor value);

  Var conv(Var x, ConvLayer<Scalar>& layer);
  Var batchnorm(Var x, BatchNormLayer<Scalar>& layer, Mode mode);
  Var relu(Var x);
  Var dropout(Var x, double rate, Rng& rng, Mode mode);
  Var sigmoid(Var x);
  Var add(Var a, Var b);
  Var concat(Var a, Var b);

  const Tensor& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
  /// Zero tensor when nothing flowed back into `v`.
  Tensor grad(Var v) const;

  /// Seeds d(loss)/d(out) and runs every recorded closure in reverse order.
  void backward(Var out, const Tensor& seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, const Tensor&)> backprop;
  };

  Var push(Tensor value, std::function<void(Tape&, const Tensor&)> backprop);
  void accumulate(Var v, const Tensor& g);

  std::vector<Node> nodes_;
};

}  // namespace cathseg::nn
