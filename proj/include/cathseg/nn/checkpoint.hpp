#pragma once

#include <filesystem>
#include <optional>

#include "cathseg/nn/model.hpp"
#include "cathseg/nn/optimizer.hpp"

namespace cathseg::nn {

struct Checkpoint {
  SegmentationNet<float> net;
  /// Present when the file carries optimizer state (written by training).
  std::optional<SgdState<float>> optimizer;
  int epochs_done = 0;
};

/// Layout: "CATH1", config block, every parameter and statistics tensor in
/// declaration order as little-endian float32, then optionally an "OPT1"
/// section with the epoch count, optimizer settings and velocities.
std::string serialize_checkpoint(SegmentationNet<float>& net, const SgdState<float>* optimizer, int epochs_done);
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// Atomic write. Throws IoError.
void save_checkpoint(const std::filesystem::path& path, SegmentationNet<float>& net,
                     const SgdState<float>* optimizer = nullptr, int epochs_done = 0);
/// Throws IoError for unreadable or malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cathseg::nn
