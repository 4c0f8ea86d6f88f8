#include "cathseg/nn/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "cathseg/errors.hpp"
#include "cathseg/image_io.hpp"

namespace cathseg::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[] = "CATH1";
constexpr char kOptimizerTag[] = "OPT1";

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    bytes_.append(buf, sizeof(T));
  }
  void raw(const char* data, std::size_t n) { bytes_.append(data, n); }
  void floats(const float* data, Eigen::Index n) {
    put<std::uint32_t>(static_cast<std::uint32_t>(n));
    raw(reinterpret_cast<const char*>(data), static_cast<std::size_t>(n) * sizeof(float));
  }
  std::string take() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, need(sizeof(T)), sizeof(T));
    return value;
  }
  bool match(const char* tag, std::size_t n) {
    if (pos_ + n > bytes_.size() || bytes_.compare(pos_, n, tag, n) != 0) return false;
    pos_ += n;
    return true;
  }
  void floats(float* data, Eigen::Index n, const std::string& name) {
    if (get<std::uint32_t>() != static_cast<std::uint32_t>(n))
      throw IoError("checkpoint: size mismatch for tensor " + name);
    std::memcpy(data, need(static_cast<std::size_t>(n) * sizeof(float)), static_cast<std::size_t>(n) * sizeof(float));
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const char* need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw IoError("checkpoint: unexpected end of file");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(SegmentationNet<float>& net, const SgdState<float>* optimizer, int epochs_done) {
  Writer out;
  out.raw(kMagic, 5);
  const ModelConfig& c = net.config();
  out.put<std::int32_t>(c.input_frames);
  out.put<std::int32_t>(c.levels);
  out.put<std::int32_t>(c.base_filters);
  out.put<std::int32_t>(c.convs_per_block);
  out.put<float>(static_cast<float>(c.dropout_rate));
  out.put<std::int32_t>(static_cast<std::int32_t>(c.dropout_blocks.size()));
  for (int b : c.dropout_blocks) out.put<std::int32_t>(b);

  const auto params = net.parameters();
  out.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) out.floats(p.value, p.size);

  if (optimizer) {
    out.raw(kOptimizerTag, 4);
    out.put<std::int32_t>(epochs_done);
    out.put<double>(optimizer->settings.learning_rate);
    out.put<double>(optimizer->settings.weight_decay);
    out.put<double>(optimizer->settings.momentum);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(optimizer->velocity.size()));
    for (const auto& v : optimizer->velocity) out.floats(v.data(), v.size());
  }
  return out.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (!in.match(kMagic, 5)) throw IoError("checkpoint: bad magic");
  ModelConfig c;
  c.input_frames = in.get<std::int32_t>();
  c.levels = in.get<std::int32_t>();
  c.base_filters = in.get<std::int32_t>();
  c.convs_per_block = in.get<std::int32_t>();
  c.dropout_rate = in.get<float>();
  const auto nblocks = in.get<std::int32_t>();
  if (nblocks < 0 || nblocks > 64) throw IoError("checkpoint: corrupt config block");
  for (int i = 0; i < nblocks; ++i) c.dropout_blocks.push_back(in.get<std::int32_t>());
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("checkpoint: invalid config: ") + e.what());
  }

  Checkpoint ck{SegmentationNet<float>(c), std::nullopt, 0};
  const auto params = ck.net.parameters();
  if (in.get<std::uint32_t>() != params.size()) throw IoError("checkpoint: tensor count does not match config");
  for (const auto& p : params) in.floats(p.value, p.size, p.name);

  if (in.match(kOptimizerTag, 4)) {
    SgdState<float> state;
    ck.epochs_done = in.get<std::int32_t>();
    state.settings.learning_rate = in.get<double>();
    state.settings.weight_decay = in.get<double>();
    state.settings.momentum = in.get<double>();
    const auto count = in.get<std::uint32_t>();
    std::vector<const ParamSlot<float>*> trainable;
    for (const auto& p : params)
      if (p.trainable()) trainable.push_back(&p);
    if (count != 0 && count != trainable.size()) throw IoError("checkpoint: velocity count mismatch");
    for (std::uint32_t i = 0; i < count; ++i) {
      Vector<float> v(trainable[i]->size);
      in.floats(v.data(), v.size(), trainable[i]->name + ".velocity");
      state.velocity.push_back(std::move(v));
    }
    ck.optimizer = std::move(state);
  }
  if (!in.done()) throw IoError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, SegmentationNet<float>& net, const SgdState<float>* optimizer,
                     int epochs_done) {
  write_file_atomic(path, serialize_checkpoint(net, optimizer, epochs_done));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace cathseg::nn
