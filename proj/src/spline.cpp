#include "cathseg/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace cathseg {

double polyline_length(const Polyline& points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
  return total;
}

std::vector<double> cumulative_length(const Polyline& points) {
  std::vector<double> s(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) s[i] = s[i - 1] + (points[i] - points[i - 1]).norm();
  return s;
}

Polyline resample_polyline(const Polyline& points, double spacing) {
  if (spacing <= 0.0) throw std::invalid_argument("resample_polyline: spacing must be positive");
  if (points.size() < 2) return points;
  const auto s = cumulative_length(points);
  const double total = s.back();
  Polyline out;
  out.reserve(static_cast<std::size_t>(total / spacing) + 2);
  std::size_t seg = 0;
  for (int k = 0;; ++k) {
    const double target = k * spacing;
    if (target > total + 1e-12) break;
    while (seg + 2 < points.size() && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double u = len > 0.0 ? std::clamp((target - s[seg]) / len, 0.0, 1.0) : 0.0;
    out.push_back(points[seg] + u * (points[seg + 1] - points[seg]));
  }
  if ((out.back() - points.back()).norm() > 1e-9) out.push_back(points.back());
  return out;
}

namespace {

Point2 lerp_knots(const Point2& a, const Point2& b, double ta, double tb, double t) {
  if (tb - ta <= 0.0) return a;
  return ((tb - t) / (tb - ta)) * a + ((t - ta) / (tb - ta)) * b;
}

// Barry-Goldman evaluation of one centripetal Catmull-Rom segment p1 -> p2.
Point2 catmull_rom_point(const Point2& p0, const Point2& p1, const Point2& p2, const Point2& p3,
                         double t0, double t1, double t2, double t3, double t) {
  const Point2 a1 = lerp_knots(p0, p1, t0, t1, t);
  const Point2 a2 = lerp_knots(p1, p2, t1, t2, t);
  const Point2 a3 = lerp_knots(p2, p3, t2, t3, t);
  const Point2 b1 = lerp_knots(a1, a2, t0, t2, t);
  const Point2 b2 = lerp_knots(a2, a3, t1, t3, t);
  return lerp_knots(b1, b2, t1, t2, t);
}

}  // namespace

Polyline catmull_rom_centripetal(const Polyline& input, int samples_per_segment) {
  if (samples_per_segment < 1) throw std::invalid_argument("catmull_rom_centripetal: samples_per_segment < 1");
  Polyline pts;
  for (const auto& p : input)
    if (pts.empty() || (p - pts.back()).norm() > 1e-12) pts.push_back(p);
  if (pts.size() < 2) return pts;

  const std::size_t n = pts.size();
  auto at = [&](std::ptrdiff_t i) -> Point2 {
    if (i < 0) return 2.0 * pts[0] - pts[1];
    if (i >= static_cast<std::ptrdiff_t>(n)) return 2.0 * pts[n - 1] - pts[n - 2];
    return pts[static_cast<std::size_t>(i)];
  };

  Polyline out;
  out.reserve((n - 1) * static_cast<std::size_t>(samples_per_segment) + 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto si = static_cast<std::ptrdiff_t>(i);
    const Point2 p0 = at(si - 1), p1 = at(si), p2 = at(si + 1), p3 = at(si + 2);
    const double t0 = 0.0;
    const double t1 = t0 + std::sqrt((p1 - p0).norm());
    const double t2 = t1 + std::sqrt((p2 - p1).norm());
    const double t3 = t2 + std::sqrt((p3 - p2).norm());
    for (int k = 0; k < samples_per_segment; ++k) {
      const double t = t1 + (t2 - t1) * k / samples_per_segment;
      out.push_back(catmull_rom_point(p0, p1, p2, p3, t0, t1, t2, t3, t));
    }
  }
  out.push_back(pts.back());
  return out;
}

CubicBSpline::CubicBSpline(Polyline control_points) : control_(std::move(control_points)) {
  if (control_.size() < 4) throw std::invalid_argument("CubicBSpline: need at least 4 control points");
}

namespace {

constexpr int kDegree = 3;

// Knot k of the clamped uniform vector with `spans` interior intervals.
double knot(int k, int spans) {
  return std::clamp(static_cast<double>(k - kDegree) / spans, 0.0, 1.0);
}

// The degree+1 basis functions that can be nonzero at t; returns the index
// of the first one.
int nonzero_basis(int num_control, double t, double (&local)[kDegree + 1]) {
  const int spans = num_control - kDegree;
  t = std::clamp(t, 0.0, 1.0);
  if (t >= 1.0) {
    for (double& v : local) v = 0.0;
    local[kDegree] = 1.0;
    return num_control - kDegree - 1;
  }
  int span = kDegree + std::min(static_cast<int>(t * spans), spans - 1);
  while (span > kDegree && knot(span, spans) > t) --span;
  while (span + 1 < num_control && knot(span + 1, spans) <= t) ++span;

  // De Boor's triangular scheme.
  double left[kDegree + 1], right[kDegree + 1];
  local[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = t - knot(span + 1 - j, spans);
    right[j] = knot(span + j, spans) - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? local[r] / denom : 0.0;
      local[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    local[j] = saved;
  }
  return span - kDegree;
}

}  // namespace

Eigen::VectorXd CubicBSpline::basis(int num_control, double t) {
  if (num_control < 4) throw std::invalid_argument("CubicBSpline::basis: need at least 4 control points");
  double local[kDegree + 1];
  const int first = nonzero_basis(num_control, t, local);
  Eigen::VectorXd n = Eigen::VectorXd::Zero(num_control);
  for (int j = 0; j <= kDegree; ++j) n(first + j) = local[j];
  return n;
}

CubicBSpline CubicBSpline::fit(const Polyline& samples, const std::vector<double>& params,
                               int num_control) {
  if (num_control < 4) throw std::invalid_argument("CubicBSpline::fit: need at least 4 control points");
  if (samples.size() != params.size()) throw std::invalid_argument("CubicBSpline::fit: size mismatch");
  if (samples.size() < static_cast<std::size_t>(num_control))
    throw std::invalid_argument("CubicBSpline::fit: fewer samples than control points");

  // Normal equations; each sample touches only degree+1 columns.
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(num_control, num_control);
  Eigen::MatrixXd atb = Eigen::MatrixXd::Zero(num_control, 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double local[kDegree + 1];
    const int first = nonzero_basis(num_control, params[i], local);
    for (int r = 0; r <= kDegree; ++r) {
      atb.row(first + r) += local[r] * samples[i].transpose();
      for (int c = 0; c <= kDegree; ++c) ata(first + r, first + c) += local[r] * local[c];
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  Eigen::MatrixXd c;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12) {
    c = ldlt.solve(atb);
  } else {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(samples.size()), num_control);
    Eigen::MatrixXd b(static_cast<Eigen::Index>(samples.size()), 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      a.row(static_cast<Eigen::Index>(i)) = basis(num_control, params[i]).transpose();
      b.row(static_cast<Eigen::Index>(i)) = samples[i].transpose();
    }
    c = a.colPivHouseholderQr().solve(b);
  }
  Polyline control(static_cast<std::size_t>(num_control));
  for (int i = 0; i < num_control; ++i) control[static_cast<std::size_t>(i)] = c.row(i).transpose();
  return CubicBSpline(std::move(control));
}

Point2 CubicBSpline::operator()(double t) const {
  double local[kDegree + 1];
  const int first = nonzero_basis(static_cast<int>(control_.size()), t, local);
  Point2 p = Point2::Zero();
  for (int j = 0; j <= kDegree; ++j) p += local[j] * control_[static_cast<std::size_t>(first + j)];
  return p;
}

}  // namespace cathseg
