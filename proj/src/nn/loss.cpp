#include "cathseg/nn/loss.hpp"

namespace cathseg::nn {

double dice_loss(const BinaryMask& target, const ProbabilityMap& prediction, double epsilon) {
  if (!same_size(target, prediction)) throw std::invalid_argument("dice_loss: size mismatch");
  const auto b = target.pixels.cast<double>();
  const auto p = prediction.pixels.cast<double>();
  return -2.0 * (b * p).sum() / (b.sum() + p.sum() + epsilon);
}

template <typename Scalar>
double dice_loss(const Tensor4<Scalar>& target, const Tensor4<Scalar>& prediction, Tensor4<Scalar>* grad,
                 double epsilon) {
  if (!(target.shape() == prediction.shape())) throw std::invalid_argument("dice_loss: shape mismatch");
  if (target.channels() != 1) throw std::invalid_argument("dice_loss: expected one channel");
  const int n = target.batch();
  if (n == 0) throw std::invalid_argument("dice_loss: empty batch");
  if (grad) *grad = Tensor4<Scalar>(prediction.shape());
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    const auto b = target.sample(s).template cast<double>().array();
    const auto p = prediction.sample(s).template cast<double>().array();
    const double inter = (b * p).sum();
    const double denom = b.sum() + p.sum() + epsilon;
    total += -2.0 * inter / denom;
    if (grad) {
      // d/dP_k of -2I/D = -2 B_k / D + 2 I / D^2
      grad->sample(s).array() = ((-2.0 * b / denom + 2.0 * inter / (denom * denom)) / n).template cast<Scalar>();
    }
  }
  return total / n;
}

template double dice_loss(const Tensor4<float>&, const Tensor4<float>&, Tensor4<float>*, double);
template double dice_loss(const Tensor4<double>&, const Tensor4<double>&, Tensor4<double>*, double);

}  // namespace cathseg::nn
