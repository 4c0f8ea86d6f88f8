#pragma once

#include <vector>

#include "cathseg/nn/model.hpp"

namespace cathseg::nn {

struct SgdSettings {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;  // L2 term added to the gradient
  double momentum = 0.99;

  void validate() const;
  bool operator==(const SgdSettings&) const = default;
};

/// Heavy-ball momentum SGD. One velocity buffer per trainable slot, created
/// as zeros on the first step.
template <typename Scalar>
struct SgdState {
  SgdSettings settings;
  std::vector<Vector<Scalar>> velocity;
};

/// g' = g + decay * w; v = momentum * v - lr * g'; w += v.
/// Throws std::runtime_error naming the first parameter with a non-finite gradient.
template <typename Scalar>
void sgd_step(const std::vector<ParamSlot<Scalar>>& params, SgdState<Scalar>& state);

}  // namespace cathseg::nn
