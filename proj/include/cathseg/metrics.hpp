#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cathseg/centerline.hpp"

namespace cathseg {

/// Euclidean distance between the two tips. Throws std::invalid_argument on empty input.
double tip_distance(const Centerline& gt, const Centerline& seg);

/// Mean over the points of `a` of the distance to the nearest point of `b`.
/// Directional; throws std::invalid_argument on empty input.
double centerline_distance(const Centerline& a, const Centerline& b);

/// 2|A n B| / (|A| + |B|), 1 when both are empty.
double dice_coefficient(const BinaryMask& a, const BinaryMask& b);

double population_std(const std::vector<double>& values);
/// Mean of the two middle values for even counts. Throws on empty input.
double median(std::vector<double> values);

struct FrameResult {
  std::string sequence;
  int frame = 0;
  bool success = false;  // extraction produced a centerline
  double tip_px = 0.0;
  double gt_to_seg_px = 0.0;
  double seg_to_gt_px = 0.0;
  double tip_mm = 0.0;
  double gt_to_seg_mm = 0.0;
  double seg_to_gt_mm = 0.0;

  /// Mean of both directional distances.
  double centerline_px() const { return 0.5 * (gt_to_seg_px + seg_to_gt_px); }
  double centerline_mm() const { return 0.5 * (gt_to_seg_mm + seg_to_gt_mm); }
};

/// Both centerlines are resampled at 1 px before measuring. A missing or
/// empty segmentation gives an unsuccessful result with zero distances.
FrameResult evaluate_frame(const std::string& sequence, int frame, const Centerline& gt,
                           const std::optional<Centerline>& seg, const PixelSpacing& spacing);

struct SequencePrecision {
  std::string sequence;
  double tip_std_px = 0.0;
  double tip_std_mm = 0.0;
  int frames = 0;
};

struct PrecisionSummary {
  std::vector<SequencePrecision> sequences;
  /// Sequences with fewer than two successful frames.
  std::vector<std::string> excluded;
  double median_mm = 0.0;
  double mean_mm = 0.0;
  double min_mm = 0.0;
  double max_mm = 0.0;
};

/// Population standard deviation of the tip error within each sequence,
/// over successful frames, plus statistics across sequences.
PrecisionSummary tip_precision(const std::vector<FrameResult>& results);

struct EvaluationSummary {
  int frames = 0;
  int failures = 0;
  double median_tip_px = 0.0;
  double median_tip_mm = 0.0;
  double mean_tip_mm = 0.0;
  double median_centerline_px = 0.0;
  double median_centerline_mm = 0.0;
  double mean_centerline_mm = 0.0;
  double median_gt_to_seg_mm = 0.0;
  double median_seg_to_gt_mm = 0.0;
  double threshold_mm = 1.0;
  /// Share of all frames (failures included, counted as above) whose mean
  /// centerline distance is at most `threshold_mm`, in percent.
  double percent_under_threshold = 0.0;
  PrecisionSummary precision;
};

/// Distance statistics use successful frames only.
EvaluationSummary summarize(const std::vector<FrameResult>& results, double threshold_mm);

}  // namespace cathseg
