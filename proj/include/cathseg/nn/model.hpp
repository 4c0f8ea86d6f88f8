#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cathseg/image.hpp"
#include "cathseg/nn/tape.hpp"

namespace cathseg::nn {

/// Encoder-decoder topology. Level l works at 1/2^l resolution with
/// base_filters * 2^l channels; every block is `convs_per_block`
/// conv3x3-BN-ReLU stages plus a residual path.
struct ModelConfig {
  int input_frames = 4;
  int levels = 4;
  int base_filters = 16;
  int convs_per_block = 2;
  double dropout_rate = 0.5;
  /// Encoder blocks followed by dropout; empty selects the last two.
  std::vector<int> dropout_blocks;

  void validate() const;
  std::vector<int> effective_dropout_blocks() const;
  int filters(int level) const { return base_filters << level; }
  /// Input height and width must be multiples of this.
  int size_multiple() const { return 1 << (levels - 1); }
  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar>
struct NConvBlock {
  std::vector<ConvLayer<Scalar>> convs;
  std::vector<BatchNormLayer<Scalar>> norms;
  /// 1x1 projection on the residual path when in/out channel counts differ.
  std::optional<ConvLayer<Scalar>> projection;

  int convs_count() const { return static_cast<int>(convs.size()); }
};

/// Flat view of one parameter or statistics buffer, in declaration order.
template <typename Scalar>
struct ParamSlot {
  std::string name;
  Shape4 shape;
  Scalar* value = nullptr;
  Scalar* grad = nullptr;  // null for running statistics
  Eigen::Index size = 0;

  bool trainable() const { return grad != nullptr; }
  Eigen::Map<Vector<Scalar>> values() const { return {value, size}; }
  Eigen::Map<Vector<Scalar>> grads() const { return {grad, size}; }
};

/// Output after every stage of a forward pass, for shape inspection.
struct StageShape {
  std::string stage;
  Shape4 shape;
};

template <typename Scalar>
class SegmentationNet {
 public:
  using Var = typename Tape<Scalar>::Var;

  /// He-uniform kernels, zero bias, unit gamma, zero beta.
  explicit SegmentationNet(ModelConfig config, std::uint64_t seed = 0);

  const ModelConfig& config() const { return config_; }

  /// Records the forward pass on `tape`; returns the sigmoid output node.
  Var forward(Tape<Scalar>& tape, Var input, Mode mode, Rng& rng);

  /// Inference with running statistics; safe to call concurrently.
  Tensor4<Scalar> infer(const Tensor4<Scalar>& input, std::vector<StageShape>* stages = nullptr) const;

  std::vector<ParamSlot<Scalar>> parameters();
  void zero_grad();

  std::vector<NConvBlock<Scalar>>& encoder() { return encoder_; }

  template <typename Other>
  SegmentationNet<Other> cast() const;

 private:
  template <typename Other>
  friend class SegmentationNet;

  template <typename Self, typename Exec>
  static typename Exec::Value run(Self& self, Exec& exec, typename Exec::Value x);

  ModelConfig config_;
  std::vector<NConvBlock<Scalar>> encoder_;
  std::vector<ConvLayer<Scalar>> down_;
  std::vector<BatchNormLayer<Scalar>> down_norm_;
  std::vector<ConvLayer<Scalar>> up_;
  std::vector<BatchNormLayer<Scalar>> up_norm_;
  std::vector<NConvBlock<Scalar>> decoder_;
  ConvLayer<Scalar> head_;
};

/// A block with zero gradients and He-uniform kernels.
template <typename Scalar>
NConvBlock<Scalar> make_nconv_block(int in_channels, int out_channels, int n, Rng& rng);

/// y = F(x) + R(x); F is n x (conv3x3, BN, ReLU), R is identity or a 1x1 projection.
template <typename Scalar>
typename Tape<Scalar>::Var nconv_block(Tape<Scalar>& tape, typename Tape<Scalar>::Var x, NConvBlock<Scalar>& block,
                                       Mode mode);

/// Channels are I_i, I_{i-1}, I_{i-2}, I_{i-3}. Throws std::invalid_argument
/// for a wrong channel count or sizes that the down/up schedule cannot map
/// back onto themselves.
template <typename Scalar>
std::vector<ProbabilityMap> model_forward(const SegmentationNet<Scalar>& net, const Tensor4<Scalar>& frames);

/// Validates input against the config; the message names the padding needed.
void check_input_shape(const ModelConfig& config, const Shape4& input);

}  // namespace cathseg::nn
