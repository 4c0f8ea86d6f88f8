#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cathseg/centerline.hpp"
#include "cathseg/synthgen.hpp"

namespace cathseg {

/// Contents of a centerline JSON file.
struct CenterlineRecord {
  int width = 0;
  int height = 0;
  bool success = false;
  Centerline centerline;  // empty when unsuccessful
};

std::string centerline_json(const std::optional<Centerline>& centerline, int width, int height);
CenterlineRecord parse_centerline_json(const std::string& text);
void write_centerline(const std::filesystem::path& path, const std::optional<Centerline>& centerline, int width,
                      int height);
/// Throws IoError.
CenterlineRecord read_centerline(const std::filesystem::path& path);

std::string sequence_name(int index);  // seq_0000
std::string frame_file(const char* prefix, int frame, const char* extension);  // e.g. frame_3.png

/// Writes frame_#.png, mask_#.png and centerline_#.json into `dir`.
void write_sequence(const std::filesystem::path& dir, const SyntheticSequence& sequence);

/// Generates `n` sequences under `out_dir` plus manifest.json; returns the manifest path.
std::filesystem::path generate_dataset(const SynthConfig& config, int n, const std::filesystem::path& out_dir);

/// Sorted seq_* subdirectories.
std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& data_dir);
/// Number of consecutive frame_#.png files starting at 0.
int count_frames(const std::filesystem::path& sequence_dir, const char* prefix = "frame");
/// Loads frame_#.png (normalized) and, when `with_masks`, mask_#.png.
FrameSequence load_sequence(const std::filesystem::path& sequence_dir, bool with_masks);

}  // namespace cathseg
