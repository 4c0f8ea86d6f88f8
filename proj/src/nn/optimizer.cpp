#include "cathseg/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace cathseg::nn {

void SgdSettings::validate() const {
  if (!(std::isfinite(learning_rate) && learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(std::isfinite(weight_decay) && weight_decay >= 0)) throw std::invalid_argument("weight_decay must be >= 0");
  if (!(momentum >= 0 && momentum < 1)) throw std::invalid_argument("momentum must be in [0, 1)");
}

template <typename Scalar>
void sgd_step(const std::vector<ParamSlot<Scalar>>& params, SgdState<Scalar>& state) {
  std::vector<const ParamSlot<Scalar>*> trainable;
  for (const auto& p : params)
    if (p.trainable()) trainable.push_back(&p);

  for (const auto* p : trainable)
    if (!p->grads().isFinite().all()) throw std::runtime_error("non-finite gradient in parameter " + p->name);

  if (state.velocity.empty())
    for (const auto* p : trainable) state.velocity.push_back(Vector<Scalar>::Zero(p->size));
  if (state.velocity.size() != trainable.size()) throw std::invalid_argument("sgd_step: velocity count mismatch");

  const SgdSettings& s = state.settings;
  for (std::size_t i = 0; i < trainable.size(); ++i) {
    const ParamSlot<Scalar>& p = *trainable[i];
    Vector<Scalar>& v = state.velocity[i];
    if (v.size() != p.size) throw std::invalid_argument("sgd_step: velocity shape mismatch for " + p.name);
    auto w = p.values();
    const auto g = p.grads();
    for (Eigen::Index k = 0; k < p.size; ++k) {
      const double gk = static_cast<double>(g(k)) + s.weight_decay * static_cast<double>(w(k));
      const double vk = s.momentum * static_cast<double>(v(k)) - s.learning_rate * gk;
      v(k) = static_cast<Scalar>(vk);
      w(k) = static_cast<Scalar>(static_cast<double>(w(k)) + vk);
    }
  }
}

template void sgd_step(const std::vector<ParamSlot<float>>&, SgdState<float>&);
template void sgd_step(const std::vector<ParamSlot<double>>&, SgdState<double>&);

}  // namespace cathseg::nn
