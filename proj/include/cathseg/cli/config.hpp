#pragma once

#include <filesystem>
#include <string>

#include "cathseg/augment.hpp"
#include "cathseg/centerline.hpp"
#include "cathseg/nn/model.hpp"
#include "cathseg/nn/optimizer.hpp"
#include "cathseg/synthgen.hpp"

namespace cathseg::cli {

struct TrainSettings {
  int epochs = 100;
  int batch_size = 4;
  bool augment = true;
  std::uint64_t seed = 0;

  bool operator==(const TrainSettings&) const = default;
};

struct EvaluateSettings {
  double threshold_mm = 1.0;  // for the percent-under-threshold statistic

  bool operator==(const EvaluateSettings&) const = default;
};

/// Default locations, used when the matching command-line flag is absent.
struct PathSettings {
  std::string data;
  std::string checkpoint;
  std::string output;

  bool operator==(const PathSettings&) const = default;
};

/// Everything a run needs. The JSON form has one object per member:
/// model, optimizer, augment, extract, synth, train, evaluate, paths and
/// the number pixel_spacing (mm per pixel). Every key is optional.
struct RunConfig {
  nn::ModelConfig model;
  nn::SgdSettings optimizer;
  AugmentConfig augment;
  ExtractParams extract;
  SynthConfig synth;
  TrainSettings train;
  EvaluateSettings evaluate;
  PathSettings paths;
  double pixel_spacing = 1.0;

  /// Throws ConfigError.
  void validate() const;
};

/// Throws ConfigError on malformed JSON, unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const std::string& text);
/// Throws ConfigError when the file is missing or invalid.
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& config);

}  // namespace cathseg::cli
