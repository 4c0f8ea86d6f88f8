#include "cathseg/nn/tape.hpp"

namespace cathseg::nn {

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::push(Tensor value, std::function<void(Tape&, const Tensor&)> backprop) {
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backprop)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename Scalar>
void Tape<Scalar>::accumulate(Var v, const Tensor& g) {
  Node& node = nodes_.at(static_cast<std::size_t>(v.id));
  if (node.grad.empty()) node.grad = g;
  else node.grad.array() += g.array();
}

template <typename Scalar>
typename Tape<Scalar>::Tensor Tape<Scalar>::grad(Var v) const {
  const Node& node = nodes_.at(static_cast<std::size_t>(v.id));
  return node.grad.empty() ? Tensor::zeros_like(node.value) : node.grad;
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::input(Tensor value) {
  return push(std::move(value), nullptr);
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::conv(Var x, ConvLayer<Scalar>& layer) {
  Tensor out = layer.transposed ? transposed_conv2d(value(x), layer.params, layer.geometry)
                                : conv2d(value(x), layer.params, layer.geometry);
  return push(std::move(out), [x, &layer](Tape& tape, const Tensor& g) {
    const Tensor& in = tape.value(x);
    ConvGradients<Scalar> grads = layer.transposed ? transposed_conv2d_backward(in, layer.params, layer.geometry, g)
                                                   : conv2d_backward(in, layer.params, layer.geometry, g);
    if (layer.grads.kernel.empty()) layer.zero_grad();
    layer.grads.kernel.array() += grads.kernel.array();
    layer.grads.bias += grads.bias;
    tape.accumulate(x, grads.input);
  });
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::batchnorm(Var x, BatchNormLayer<Scalar>& layer, Mode mode) {
  BatchNormCache<Scalar> cache;
  Tensor out = nn::batchnorm(value(x), layer.params, mode, &cache);
  return push(std::move(out), [x, &layer, cache = std::move(cache)](Tape& tape, const Tensor& g) {
    BatchNormGradients<Scalar> grads = batchnorm_backward(g, layer.params, cache);
    if (layer.grad_gamma.size() == 0) layer.zero_grad();
    layer.grad_gamma += grads.gamma;
    layer.grad_beta += grads.beta;
    tape.accumulate(x, grads.input);
  });
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::relu(Var x) {
  return push(nn::relu(value(x)), [x](Tape& tape, const Tensor& g) {
    tape.accumulate(x, relu_backward(tape.value(x), g));
  });
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::dropout(Var x, double rate, Rng& rng, Mode mode) {
  DropoutResult<Scalar> r = nn::dropout(value(x), rate, rng, mode);
  return push(std::move(r.output), [x, mask = std::move(r.mask)](Tape& tape, const Tensor& g) {
    tape.accumulate(x, Tensor(g.shape(), g.array() * mask.array()));
  });
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::sigmoid(Var x) {
  const int id = static_cast<int>(nodes_.size());
  return push(nn::sigmoid(value(x)), [x, id](Tape& tape, const Tensor& g) {
    tape.accumulate(x, sigmoid_backward(tape.value(Var{id}), g));
  });
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::add(Var a, Var b) {
  if (!(value(a).shape() == value(b).shape()))
    throw std::invalid_argument("add: " + value(a).shape().str() + " vs " + value(b).shape().str());
  return push(Tensor(value(a).shape(), value(a).array() + value(b).array()), [a, b](Tape& tape, const Tensor& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

template <typename Scalar>
typename Tape<Scalar>::Var Tape<Scalar>::concat(Var a, Var b) {
  const int ca = value(a).channels(), cb = value(b).channels();
  return push(concat_channels(value(a), value(b)), [a, b, ca, cb](Tape& tape, const Tensor& g) {
    tape.accumulate(a, slice_channels(g, 0, ca));
    tape.accumulate(b, slice_channels(g, ca, cb));
  });
}

template <typename Scalar>
void Tape<Scalar>::backward(Var out, const Tensor& seed) {
  if (!(seed.shape() == value(out).shape())) throw std::invalid_argument("backward: seed shape mismatch");
  accumulate(out, seed);
  for (int id = out.id; id >= 0; --id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.backprop || node.grad.empty()) continue;
    // Closures only accumulate into earlier nodes; the vector never grows here.
    node.backprop(*this, node.grad);
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace cathseg::nn
