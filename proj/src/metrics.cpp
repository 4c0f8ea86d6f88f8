#include "cathseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace cathseg {

double tip_distance(const Centerline& gt, const Centerline& seg) {
  if (gt.empty() || seg.empty()) throw std::invalid_argument("tip_distance: empty centerline");
  return (gt.tip() - seg.tip()).norm();
}

double centerline_distance(const Centerline& a, const Centerline& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("centerline_distance: empty centerline");
  double total = 0.0;
  for (const Point2& p : a.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point2& q : b.points) best = std::min(best, (p - q).squaredNorm());
    total += std::sqrt(best);
  }
  return total / static_cast<double>(a.points.size());
}

double dice_coefficient(const BinaryMask& a, const BinaryMask& b) {
  if (!same_size(a, b)) throw std::invalid_argument("dice_coefficient: size mismatch");
  const auto na = (a.pixels != 0).count(), nb = (b.pixels != 0).count();
  if (na + nb == 0) return 1.0;
  const auto both = ((a.pixels != 0) && (b.pixels != 0)).count();
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double population_std(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("population_std: empty input");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

FrameResult evaluate_frame(const std::string& sequence, int frame, const Centerline& gt,
                           const std::optional<Centerline>& seg, const PixelSpacing& spacing) {
  FrameResult r;
  r.sequence = sequence;
  r.frame = frame;
  if (gt.empty()) throw std::invalid_argument("evaluate_frame: empty ground truth");
  if (!seg || seg->empty()) return r;
  const Centerline a{resample_polyline(gt.points, 1.0)};
  const Centerline b{resample_polyline(seg->points, 1.0)};
  r.success = true;
  r.tip_px = tip_distance(a, b);
  r.gt_to_seg_px = centerline_distance(a, b);
  r.seg_to_gt_px = centerline_distance(b, a);
  r.tip_mm = spacing.to_mm(r.tip_px);
  r.gt_to_seg_mm = spacing.to_mm(r.gt_to_seg_px);
  r.seg_to_gt_mm = spacing.to_mm(r.seg_to_gt_px);
  return r;
}

namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

PrecisionSummary tip_precision(const std::vector<FrameResult>& results) {
  std::map<std::string, std::vector<const FrameResult*>> groups;
  for (const auto& r : results) groups[r.sequence];
  for (const auto& r : results)
    if (r.success) groups[r.sequence].push_back(&r);

  PrecisionSummary s;
  std::vector<double> stds;
  for (const auto& [name, frames] : groups) {
    if (frames.size() < 2) {
      s.excluded.push_back(name);
      continue;
    }
    std::vector<double> px, mm;
    for (const auto* r : frames) {
      px.push_back(r->tip_px);
      mm.push_back(r->tip_mm);
    }
    s.sequences.push_back({name, population_std(px), population_std(mm), static_cast<int>(frames.size())});
    stds.push_back(s.sequences.back().tip_std_mm);
  }
  if (!stds.empty()) {
    s.median_mm = median(stds);
    s.mean_mm = mean(stds);
    s.min_mm = *std::min_element(stds.begin(), stds.end());
    s.max_mm = *std::max_element(stds.begin(), stds.end());
  }
  return s;
}

EvaluationSummary summarize(const std::vector<FrameResult>& results, double threshold_mm) {
  EvaluationSummary s;
  s.frames = static_cast<int>(results.size());
  s.threshold_mm = threshold_mm;
  std::vector<double> tip_px, tip_mm, cl_px, cl_mm, g2s, s2g;
  int under = 0;
  for (const auto& r : results) {
    if (!r.success) {
      ++s.failures;
      continue;
    }
    tip_px.push_back(r.tip_px);
    tip_mm.push_back(r.tip_mm);
    cl_px.push_back(r.centerline_px());
    cl_mm.push_back(r.centerline_mm());
    g2s.push_back(r.gt_to_seg_mm);
    s2g.push_back(r.seg_to_gt_mm);
    if (r.centerline_mm() <= threshold_mm) ++under;
  }
  if (!tip_px.empty()) {
    s.median_tip_px = median(tip_px);
    s.median_tip_mm = median(tip_mm);
    s.mean_tip_mm = mean(tip_mm);
    s.median_centerline_px = median(cl_px);
    s.median_centerline_mm = median(cl_mm);
    s.mean_centerline_mm = mean(cl_mm);
    s.median_gt_to_seg_mm = median(g2s);
    s.median_seg_to_gt_mm = median(s2g);
  }
  if (s.frames > 0) s.percent_under_threshold = 100.0 * under / s.frames;
  s.precision = tip_precision(results);
  return s;
}

}  // namespace cathseg
