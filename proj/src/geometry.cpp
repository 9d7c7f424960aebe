#include "ohg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ohg {

Box::Box(double x, double y, double w, double h) : x_(x), y_(y), w_(w), h_(h) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h)) {
    throw InvalidArgument("box fields must be finite");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw InvalidArgument("box width and height must be positive");
  }
}

double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Box box_from_points(std::span<const Point2> points, double top_extend) {
  if (points.empty()) throw InvalidArgument("box_from_points: empty point set");
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  for (const Point2& p : points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  double w = x1 - x0;
  double h = y1 - y0;
  if (!(w > 0.0) || !(h > 0.0)) throw InvalidArgument("box_from_points: points have zero extent");
  const double top = y0 - top_extend * h;
  h = y1 - top;
  // Rounding in x0 + w may land short of the extreme point; nudge outward.
  while (x0 + w < x1) w = std::nextafter(w, std::numeric_limits<double>::infinity());
  while (top + h < y1) h = std::nextafter(h, std::numeric_limits<double>::infinity());
  return Box(x0, top, w, h);
}

namespace {

double frame_scale(FrameKind kind) { return kind == FrameKind::Score ? kScoreToInput : 1.0; }

const Box& require_box(const CoordFrame& f) {
  if (!f.detection_box) throw InvalidArgument("map_point: frame mapping through the original image needs a detection box");
  return *f.detection_box;
}

}  // namespace

Point2 map_point(Point2 p, const CoordFrame& from, const CoordFrame& to) {
  if (from.kind == to.kind && (from.kind == FrameKind::Original || from.detection_box == to.detection_box ||
                               !from.detection_box || !to.detection_box)) {
    return p;
  }
  const bool via_original = from.kind == FrameKind::Original || to.kind == FrameKind::Original ||
                            (from.detection_box && to.detection_box && !(*from.detection_box == *to.detection_box));
  if (!via_original) {
    const double s = frame_scale(from.kind) / frame_scale(to.kind);
    return {p.x * s, p.y * s};
  }

  Point2 orig = p;
  if (from.kind != FrameKind::Original) {
    const Box& b = require_box(from);
    const double s = frame_scale(from.kind);
    orig = {b.x() + p.x * s * b.w() / kInputSize, b.y() + p.y * s * b.h() / kInputSize};
  }
  if (to.kind == FrameKind::Original) return orig;
  const Box& b = require_box(to);
  const double s = frame_scale(to.kind);
  return {(orig.x - b.x()) * kInputSize / b.w() / s, (orig.y - b.y()) * kInputSize / b.h() / s};
}

}  // namespace ohg
