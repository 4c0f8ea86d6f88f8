#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

#include "cathseg/cli/config.hpp"

namespace cathseg::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kMismatch = 4 };

struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;  // overrides the seed of the running command
  int threads = 1;
};

struct GenDataOptions {
  std::optional<std::filesystem::path> out;
  int n = 1;
};

struct TrainCommandOptions {
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> checkpoint;
  std::optional<int> epochs;
  /// Continue from this checkpoint and its loss trace.
  std::optional<std::filesystem::path> resume;
  /// Defaults to the checkpoint path with extension ".loss.csv".
  std::optional<std::filesystem::path> loss_csv;
};

struct ExtractOptions {
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> input;  // one sequence directory or a dataset of seq_* directories
  std::optional<std::filesystem::path> out;
  bool no_model = false;  // extract from mask_#.png instead of running the network
};

struct EvaluateOptions {
  std::optional<std::filesystem::path> predictions;
  std::optional<std::filesystem::path> ground_truth;
  std::optional<std::filesystem::path> out;  // defaults to the predictions directory
  std::optional<double> pixel_spacing;
  std::optional<double> threshold_mm;
};

/// The commands return an ExitCode and report on the two streams.
int gen_data(const CommonOptions& common, const GenDataOptions& options, std::ostream& out, std::ostream& err);
int train(const CommonOptions& common, const TrainCommandOptions& options, std::ostream& out, std::ostream& err);
int extract(const CommonOptions& common, const ExtractOptions& options, std::ostream& out, std::ostream& err);
int evaluate(const CommonOptions& common, const EvaluateOptions& options, std::ostream& out, std::ostream& err);

/// Parses `cathseg <command> [flags]` and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::filesystem::path default_loss_csv(const std::filesystem::path& checkpoint);

}  // namespace cathseg::cli
