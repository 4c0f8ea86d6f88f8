#pragma once

#include "cathseg/image.hpp"
#include "cathseg/nn/tensor.hpp"

namespace cathseg::nn {

inline constexpr double kDiceEpsilon = 1e-7;

/// -2 sum(B * P) / (sum(B) + sum(P) + eps) for one sample; in [-1, 0].
double dice_loss(const BinaryMask& target, const ProbabilityMap& prediction, double epsilon = kDiceEpsilon);

/// Mean per-sample Dice loss over a (N, 1, H, W) batch. When `grad` is
/// given it receives d(loss)/d(prediction).
template <typename Scalar>
double dice_loss(const Tensor4<Scalar>& target, const Tensor4<Scalar>& prediction, Tensor4<Scalar>* grad = nullptr,
                 double epsilon = kDiceEpsilon);

}  // namespace cathseg::nn
