#include "cathseg/nn/model.hpp"

#include <algorithm>
#include <cmath>

namespace cathseg::nn {

void ModelConfig::validate() const {
  if (input_frames < 1) throw std::invalid_argument("ModelConfig: input_frames must be >= 1");
  if (levels < 2) throw std::invalid_argument("ModelConfig: levels must be >= 2");
  if (levels > 12) throw std::invalid_argument("ModelConfig: levels must be <= 12");
  if (base_filters < 1) throw std::invalid_argument("ModelConfig: base_filters must be >= 1");
  if (convs_per_block < 1) throw std::invalid_argument("ModelConfig: convs_per_block must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("ModelConfig: dropout_rate must be in [0, 1)");
  for (int b : dropout_blocks)
    if (b < 0 || b >= levels) throw std::invalid_argument("ModelConfig: dropout block index out of range");
}

std::vector<int> ModelConfig::effective_dropout_blocks() const {
  if (!dropout_blocks.empty()) return dropout_blocks;
  return {levels - 2, levels - 1};
}

void check_input_shape(const ModelConfig& config, const Shape4& input) {
  if (input.c != config.input_frames)
    throw std::invalid_argument("model input must have " + std::to_string(config.input_frames) + " channels, got " +
                                std::to_string(input.c));
  const int m = config.size_multiple();
  if (input.h <= 0 || input.w <= 0 || input.h % m != 0 || input.w % m != 0) {
    const int ph = (m - input.h % m) % m, pw = (m - input.w % m) % m;
    throw std::invalid_argument("model input " + std::to_string(input.w) + "x" + std::to_string(input.h) +
                                " must be a multiple of " + std::to_string(m) + "; pad width by " + std::to_string(pw) +
                                " and height by " + std::to_string(ph));
  }
}

namespace {

template <typename Scalar>
ConvLayer<Scalar> make_conv(int in, int out, int k, ConvGeometry g, bool transposed, Rng& rng) {
  ConvLayer<Scalar> layer;
  layer.geometry = g;
  layer.transposed = transposed;
  const Shape4 shape = transposed ? Shape4{in, out, k, k} : Shape4{out, in, k, k};
  const double fan_in = transposed ? double(in) * k * k / (g.stride * g.stride) : double(in) * k * k;
  const double bound = std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> uniform(-bound, bound);
  layer.params.kernel = Tensor4<Scalar>(shape);
  for (Eigen::Index i = 0; i < layer.params.kernel.size(); ++i)
    layer.params.kernel.array()(i) = static_cast<Scalar>(uniform(rng));
  layer.params.bias = Vector<Scalar>::Zero(out);
  layer.zero_grad();
  return layer;
}

template <typename Scalar>
BatchNormLayer<Scalar> make_norm(int channels) {
  BatchNormLayer<Scalar> layer{BatchNormParams<Scalar>::identity(channels), {}, {}};
  layer.zero_grad();
  return layer;
}

template <typename Scalar>
struct TapeExec {
  using Value = typename Tape<Scalar>::Var;
  Tape<Scalar>& tape;
  Mode mode;
  Rng& rng;

  Value conv(Value x, ConvLayer<Scalar>& l) { return tape.conv(x, l); }
  Value norm(Value x, BatchNormLayer<Scalar>& l) { return tape.batchnorm(x, l, mode); }
  Value relu(Value x) { return tape.relu(x); }
  Value dropout(Value x, double rate) { return tape.dropout(x, rate, rng, mode); }
  Value add(Value a, Value b) { return tape.add(a, b); }
  Value concat(Value a, Value b) { return tape.concat(a, b); }
  Value sigmoid(Value x) { return tape.sigmoid(x); }
  void record(const std::string&, Value) {}
};

template <typename Scalar>
struct EvalExec {
  using Value = Tensor4<Scalar>;
  std::vector<StageShape>* stages = nullptr;

  Value conv(const Value& x, const ConvLayer<Scalar>& l) {
    return l.transposed ? transposed_conv2d(x, l.params, l.geometry) : conv2d(x, l.params, l.geometry);
  }
  Value norm(const Value& x, const BatchNormLayer<Scalar>& l) { return batchnorm_infer(x, l.params); }
  Value relu(const Value& x) { return nn::relu(x); }
  Value dropout(const Value& x, double) { return x; }
  Value add(const Value& a, const Value& b) { return Value(a.shape(), a.array() + b.array()); }
  Value concat(const Value& a, const Value& b) { return concat_channels(a, b); }
  Value sigmoid(const Value& x) { return nn::sigmoid(x); }
  void record(const std::string& stage, const Value& v) {
    if (stages) stages->push_back({stage, v.shape()});
  }
};

template <typename Exec, typename Block>
typename Exec::Value run_block(Exec& exec, Block& block, typename Exec::Value x) {
  typename Exec::Value y = x;
  for (std::size_t i = 0; i < block.convs.size(); ++i) {
    y = exec.conv(y, block.convs[i]);
    y = exec.norm(y, block.norms[i]);
    y = exec.relu(y);
  }
  if (block.projection) return exec.add(y, exec.conv(x, *block.projection));
  return exec.add(y, x);
}

template <typename Block, typename F>
void visit_block(Block& block, const std::string& prefix, F&& f) {
  for (std::size_t i = 0; i < block.convs.size(); ++i) {
    const std::string conv = prefix + ".conv" + std::to_string(i);
    const std::string bn = prefix + ".bn" + std::to_string(i);
    f(conv, block.convs[i]);
    f(bn, block.norms[i]);
  }
  if (block.projection) f(prefix + ".proj", *block.projection);
}

}  // namespace

template <typename Scalar>
NConvBlock<Scalar> make_nconv_block(int in_channels, int out_channels, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("nconv block needs n >= 1");
  NConvBlock<Scalar> block;
  for (int i = 0; i < n; ++i) {
    block.convs.push_back(make_conv<Scalar>(i == 0 ? in_channels : out_channels, out_channels, 3, {1, 1}, false, rng));
    block.norms.push_back(make_norm<Scalar>(out_channels));
  }
  if (in_channels != out_channels) block.projection = make_conv<Scalar>(in_channels, out_channels, 1, {1, 0}, false, rng);
  return block;
}

template <typename Scalar>
typename Tape<Scalar>::Var nconv_block(Tape<Scalar>& tape, typename Tape<Scalar>::Var x, NConvBlock<Scalar>& block,
                                       Mode mode) {
  Rng unused;
  TapeExec<Scalar> exec{tape, mode, unused};
  return run_block(exec, block, x);
}

template <typename Scalar>
SegmentationNet<Scalar>::SegmentationNet(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const int levels = config_.levels, n = config_.convs_per_block;
  encoder_.push_back(make_nconv_block<Scalar>(config_.input_frames, config_.filters(0), n, rng));
  for (int l = 1; l < levels; ++l) {
    down_.push_back(make_conv<Scalar>(config_.filters(l - 1), config_.filters(l), 3, {2, 1}, false, rng));
    down_norm_.push_back(make_norm<Scalar>(config_.filters(l)));
    encoder_.push_back(make_nconv_block<Scalar>(config_.filters(l), config_.filters(l), n, rng));
  }
  up_.resize(static_cast<std::size_t>(levels - 1));
  up_norm_.resize(static_cast<std::size_t>(levels - 1));
  decoder_.resize(static_cast<std::size_t>(levels - 1));
  for (int l = levels - 2; l >= 0; --l) {
    const auto i = static_cast<std::size_t>(l);
    up_[i] = make_conv<Scalar>(config_.filters(l + 1), config_.filters(l), 2, {2, 0}, true, rng);
    up_norm_[i] = make_norm<Scalar>(config_.filters(l));
    decoder_[i] = make_nconv_block<Scalar>(2 * config_.filters(l), config_.filters(l), n, rng);
  }
  head_ = make_conv<Scalar>(config_.filters(0), 1, 1, {1, 0}, false, rng);
}

template <typename Scalar>
template <typename Self, typename Exec>
typename Exec::Value SegmentationNet<Scalar>::run(Self& self, Exec& exec, typename Exec::Value x) {
  const ModelConfig& cfg = self.config_;
  const std::vector<int> drop = cfg.effective_dropout_blocks();
  auto dropped = [&](int l) { return std::find(drop.begin(), drop.end(), l) != drop.end(); };

  std::vector<typename Exec::Value> skips;
  for (int l = 0; l < cfg.levels; ++l) {
    const auto i = static_cast<std::size_t>(l);
    if (l > 0) {
      x = exec.conv(x, self.down_[i - 1]);
      x = exec.norm(x, self.down_norm_[i - 1]);
      x = exec.relu(x);
      exec.record("down" + std::to_string(l), x);
    }
    x = run_block(exec, self.encoder_[i], x);
    if (dropped(l) && cfg.dropout_rate > 0.0) x = exec.dropout(x, cfg.dropout_rate);
    exec.record("enc" + std::to_string(l), x);
    skips.push_back(x);
  }
  for (int l = cfg.levels - 2; l >= 0; --l) {
    const auto i = static_cast<std::size_t>(l);
    x = exec.conv(x, self.up_[i]);
    x = exec.norm(x, self.up_norm_[i]);
    x = exec.relu(x);
    exec.record("up" + std::to_string(l), x);
    x = exec.concat(skips[i], x);
    x = run_block(exec, self.decoder_[i], x);
    exec.record("dec" + std::to_string(l), x);
  }
  x = exec.conv(x, self.head_);
  x = exec.sigmoid(x);
  exec.record("out", x);
  return x;
}

template <typename Scalar>
typename SegmentationNet<Scalar>::Var SegmentationNet<Scalar>::forward(Tape<Scalar>& tape, Var input, Mode mode,
                                                                       Rng& rng) {
  check_input_shape(config_, tape.value(input).shape());
  TapeExec<Scalar> exec{tape, mode, rng};
  return run(*this, exec, input);
}

template <typename Scalar>
Tensor4<Scalar> SegmentationNet<Scalar>::infer(const Tensor4<Scalar>& input, std::vector<StageShape>* stages) const {
  check_input_shape(config_, input.shape());
  EvalExec<Scalar> exec{stages};
  exec.record("input", input);
  return run(*this, exec, input);
}

template <typename Scalar>
std::vector<ParamSlot<Scalar>> SegmentationNet<Scalar>::parameters() {
  std::vector<ParamSlot<Scalar>> slots;
  auto vec_shape = [](Eigen::Index n) { return Shape4{static_cast<int>(n), 1, 1, 1}; };
  auto add = [&](const std::string& name, auto& layer) {
    using Layer = std::decay_t<decltype(layer)>;
    if constexpr (std::is_same_v<Layer, ConvLayer<Scalar>>) {
      slots.push_back({name + ".kernel", layer.params.kernel.shape(), layer.params.kernel.data(),
                       layer.grads.kernel.data(), layer.params.kernel.size()});
      slots.push_back({name + ".bias", vec_shape(layer.params.bias.size()), layer.params.bias.data(),
                       layer.grads.bias.data(), layer.params.bias.size()});
    } else {
      auto& p = layer.params;
      const Shape4 s = vec_shape(p.gamma.size());
      slots.push_back({name + ".gamma", s, p.gamma.data(), layer.grad_gamma.data(), p.gamma.size()});
      slots.push_back({name + ".beta", s, p.beta.data(), layer.grad_beta.data(), p.beta.size()});
      slots.push_back({name + ".running_mean", s, p.running_mean.data(), nullptr, p.running_mean.size()});
      slots.push_back({name + ".running_var", s, p.running_var.data(), nullptr, p.running_var.size()});
    }
  };
  for (int l = 0; l < config_.levels; ++l) {
    const auto i = static_cast<std::size_t>(l);
    if (l > 0) {
      add("down" + std::to_string(l) + ".conv", down_[i - 1]);
      add("down" + std::to_string(l) + ".bn", down_norm_[i - 1]);
    }
    visit_block(encoder_[i], "enc" + std::to_string(l), add);
  }
  for (int l = config_.levels - 2; l >= 0; --l) {
    const auto i = static_cast<std::size_t>(l);
    add("up" + std::to_string(l) + ".conv", up_[i]);
    add("up" + std::to_string(l) + ".bn", up_norm_[i]);
    visit_block(decoder_[i], "dec" + std::to_string(l), add);
  }
  add("head.conv", head_);
  return slots;
}

template <typename Scalar>
void SegmentationNet<Scalar>::zero_grad() {
  for (auto& slot : parameters())
    if (slot.trainable()) slot.grads().setZero();
}

template <typename Scalar>
template <typename Other>
SegmentationNet<Other> SegmentationNet<Scalar>::cast() const {
  SegmentationNet<Other> out(config_);
  auto src = const_cast<SegmentationNet&>(*this).parameters();
  auto dst = out.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].values() = src[i].values().template cast<Other>();
  return out;
}

template <typename Scalar>
std::vector<ProbabilityMap> model_forward(const SegmentationNet<Scalar>& net, const Tensor4<Scalar>& frames) {
  const Tensor4<Scalar> out = net.infer(frames);
  std::vector<ProbabilityMap> maps;
  for (int b = 0; b < out.batch(); ++b) {
    ProbabilityMap map(out.width(), out.height());
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) map(x, y) = static_cast<float>(out(b, 0, y, x));
    maps.push_back(std::move(map));
  }
  return maps;
}

template class SegmentationNet<float>;
template class SegmentationNet<double>;
template SegmentationNet<double> SegmentationNet<float>::cast<double>() const;
template SegmentationNet<float> SegmentationNet<double>::cast<float>() const;
template NConvBlock<float> make_nconv_block<float>(int, int, int, Rng&);
template NConvBlock<double> make_nconv_block<double>(int, int, int, Rng&);
template Tape<float>::Var nconv_block<float>(Tape<float>&, Tape<float>::Var, NConvBlock<float>&, Mode);
template Tape<double>::Var nconv_block<double>(Tape<double>&, Tape<double>::Var, NConvBlock<double>&, Mode);
template std::vector<ProbabilityMap> model_forward(const SegmentationNet<float>&, const Tensor4<float>&);
template std::vector<ProbabilityMap> model_forward(const SegmentationNet<double>&, const Tensor4<double>&);

}  // namespace cathseg::nn
