#include "cathseg/nn/train.hpp"

#include <numeric>
#include <stdexcept>

#include "cathseg/nn/loss.hpp"

namespace cathseg::nn {

std::vector<Image> frame_stack(const std::vector<Image>& frames, int index, int depth) {
  if (index < 0 || index >= static_cast<int>(frames.size())) throw std::out_of_range("frame_stack: index out of range");
  std::vector<Image> stack;
  for (int k = 0; k < depth; ++k) stack.push_back(frames[static_cast<std::size_t>(std::max(index - k, 0))]);
  return stack;
}

std::vector<TrainingSample> samples_from_sequence(const FrameSequence& sequence, int depth) {
  sequence.validate();
  if (sequence.masks.size() != sequence.frames.size()) throw std::invalid_argument("sequence has no masks");
  std::vector<TrainingSample> samples;
  for (int i = 0; i < static_cast<int>(sequence.frames.size()); ++i)
    samples.push_back({frame_stack(sequence.frames, i, depth), sequence.masks[static_cast<std::size_t>(i)]});
  return samples;
}

template <typename Scalar>
Tensor4<Scalar> pack_inputs(const std::vector<std::vector<Image>>& stacks) {
  if (stacks.empty() || stacks.front().empty()) throw std::invalid_argument("pack_inputs: empty batch");
  const Image& first = stacks.front().front();
  const int depth = static_cast<int>(stacks.front().size());
  Tensor4<Scalar> out(Shape4{static_cast<int>(stacks.size()), depth, first.height(), first.width()});
  for (std::size_t b = 0; b < stacks.size(); ++b) {
    if (static_cast<int>(stacks[b].size()) != depth) throw std::invalid_argument("pack_inputs: ragged frame stacks");
    for (int c = 0; c < depth; ++c) {
      const Image& img = stacks[b][static_cast<std::size_t>(c)];
      if (!same_size(img, first)) throw std::invalid_argument("pack_inputs: frame size mismatch");
      out.sample(static_cast<int>(b)).row(c) =
          Eigen::Map<const Eigen::RowVectorXf>(img.pixels.data(), img.pixels.size()).template cast<Scalar>();
    }
  }
  return out;
}

template Tensor4<float> pack_inputs(const std::vector<std::vector<Image>>&);
template Tensor4<double> pack_inputs(const std::vector<std::vector<Image>>&);

std::vector<double> train(SegmentationNet<float>& net, SgdState<float>& optimizer,
                          const std::vector<TrainingSample>& data, const TrainOptions& options) {
  if (options.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (options.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (options.epochs == 0) return {};
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  optimizer.settings.validate();
  options.augment_config.validate();
  for (const auto& s : data) {
    if (!same_size(s.mask, data.front().mask)) throw std::invalid_argument("train: samples differ in size");
    if (static_cast<int>(s.frames.size()) != net.config().input_frames)
      throw std::invalid_argument("train: frame stack depth does not match the model");
  }

  const int n = static_cast<int>(data.size());
  const int h = data.front().mask.height(), w = data.front().mask.width();
  std::vector<double> trace;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int e = 0; e < options.epochs; ++e) {
    const int epoch = options.first_epoch + e;
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }

    double loss_sum = 0.0;
    for (int start = 0; start < n; start += options.batch_size) {
      const int count = std::min(options.batch_size, n - start);
      std::vector<std::vector<Image>> stacks;
      Tensor4<float> target(Shape4{count, 1, h, w});
      for (int b = 0; b < count; ++b) {
        const TrainingSample& s = data[static_cast<std::size_t>(order[static_cast<std::size_t>(start + b)])];
        BinaryMask mask = s.mask;
        if (options.augment) {
          AugmentedSample a = augment_sample(s.frames, s.mask, options.augment_config, rng);
          stacks.push_back(std::move(a.frames));
          mask = std::move(a.mask);
        } else {
          stacks.push_back(s.frames);
        }
        target.sample(b).row(0) =
            Eigen::Map<const Eigen::Matrix<std::uint8_t, 1, Eigen::Dynamic>>(mask.pixels.data(), mask.pixels.size())
                .cast<float>();
      }

      Tape<float> tape;
      net.zero_grad();
      const auto input = tape.input(pack_inputs<float>(stacks));
      const auto out = net.forward(tape, input, Mode::train, rng);
      Tensor4<float> grad;
      const double loss = dice_loss(target, tape.value(out), &grad);
      tape.backward(out, grad);
      sgd_step(net.parameters(), optimizer);
      loss_sum += loss * count;
    }
    trace.push_back(loss_sum / n);
    if (options.on_epoch) options.on_epoch(epoch, trace.back());
  }
  return trace;
}

}  // namespace cathseg::nn
