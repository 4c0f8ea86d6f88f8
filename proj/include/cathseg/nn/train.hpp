#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cathseg/augment.hpp"
#include "cathseg/nn/model.hpp"
#include "cathseg/nn/optimizer.hpp"

namespace cathseg::nn {

/// One network input: frames[0] is the current image I_i, frames[k] is I_{i-k}.
struct TrainingSample {
  std::vector<Image> frames;
  BinaryMask mask;
};

/// Frame stack for frame `index` of `frames`; positions before the start of
/// the sequence repeat frame 0.
std::vector<Image> frame_stack(const std::vector<Image>& frames, int index, int depth);

/// One sample per annotated frame. Requires masks.
std::vector<TrainingSample> samples_from_sequence(const FrameSequence& sequence, int depth);

/// Packs frame stacks into a (N, depth, H, W) tensor.
template <typename Scalar>
Tensor4<Scalar> pack_inputs(const std::vector<std::vector<Image>>& stacks);

struct TrainOptions {
  int epochs = 0;
  int first_epoch = 0;  // epochs already completed, for resuming
  int batch_size = 4;
  bool augment = true;
  AugmentConfig augment_config;
  std::uint64_t seed = 0;
  /// Called after every epoch with (epoch index, mean loss).
  std::function<void(int, double)> on_epoch;
};

/// Mini-batch SGD on the Dice loss. Each epoch draws its shuffle, dropout and
/// augmentation randomness from a stream derived from (seed, epoch), so a
/// resumed run reproduces the uninterrupted one. Returns per-epoch mean loss.
std::vector<double> train(SegmentationNet<float>& net, SgdState<float>& optimizer,
                          const std::vector<TrainingSample>& data, const TrainOptions& options);

}  // namespace cathseg::nn
