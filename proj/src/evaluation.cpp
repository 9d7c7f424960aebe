#include "ohg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ohg {

MatchResult match_detections(std::span<const ScoredBox> dets, std::span<const Box> gts, double iou_thresh) {
  MatchResult r;
  r.det_scores.reserve(dets.size());
  for (const auto& d : dets) r.det_scores.push_back(d.score);
  r.det_match.assign(dets.size(), std::nullopt);
  r.gt_matched.assign(gts.size(), false);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  for (std::size_t d : order) {
    double best = -1.0;
    std::optional<std::size_t> best_gt;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (r.gt_matched[g]) continue;
      const double o = iou(dets[d].box, gts[g]);
      if (o >= iou_thresh && o > best) {
        best = o;
        best_gt = g;
      }
    }
    if (best_gt) {
      r.det_match[d] = best_gt;
      r.gt_matched[*best_gt] = true;
    }
  }
  return r;
}

std::string PRCurve::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "threshold,precision,recall,tp,fp,fn\n";
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    os << thresholds[i] << ',' << precision[i] << ',' << recall[i] << ',' << tp[i] << ',' << fp[i] << ',' << fn[i]
       << '\n';
  }
  return os.str();
}

namespace {

void push_point(PRCurve& c, double t, std::size_t tp, std::size_t fp, std::size_t positives) {
  c.thresholds.push_back(t);
  c.tp.push_back(tp);
  c.fp.push_back(fp);
  c.fn.push_back(positives - tp);
  c.precision.push_back(tp + fp == 0 ? 1.0 : double(tp) / double(tp + fp));
  c.recall.push_back(double(tp) / double(positives));
}

}  // namespace

PRCurve pr_curve(std::span<const MatchResult> results) {
  std::size_t n_gt = 0;
  std::vector<std::pair<double, bool>> scored;
  for (const auto& r : results) {
    n_gt += r.num_gt();
    for (std::size_t i = 0; i < r.det_scores.size(); ++i) scored.emplace_back(r.det_scores[i], r.det_match[i].has_value());
  }
  if (n_gt == 0) throw MetricError("pr_curve: no ground-truth faces");

  PRCurve c;
  if (scored.empty()) {
    push_point(c, std::numeric_limits<double>::infinity(), 0, 0, n_gt);
    return c;
  }
  // Descending sweep, emitted ascending.
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::tuple<double, std::size_t, std::size_t>> pts;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    (scored[i].second ? tp : fp) += 1;
    if (i + 1 == scored.size() || scored[i + 1].first != scored[i].first) pts.emplace_back(scored[i].first, tp, fp);
  }
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) push_point(c, std::get<0>(*it), std::get<1>(*it), std::get<2>(*it), n_gt);
  return c;
}

double average_precision(const PRCurve& curve) {
  // Points ordered by increasing recall = decreasing threshold.
  std::vector<std::pair<double, double>> rp;
  for (std::size_t i = curve.thresholds.size(); i-- > 0;) rp.emplace_back(curve.recall[i], curve.precision[i]);
  for (std::size_t i = rp.size(); i-- > 1;) rp[i - 1].second = std::max(rp[i - 1].second, rp[i].second);
  double ap = 0.0, prev_r = 0.0;
  for (const auto& [r, p] : rp) {
    ap += (r - prev_r) * p;
    prev_r = r;
  }
  return ap;
}

PRCurve occlusion_pr(std::span<const double> occ_scores, const std::vector<bool>& gt_occluded,
                     std::span<const double> thresholds) {
  if (occ_scores.size() != gt_occluded.size()) throw InvalidArgument("occlusion_pr: score/label length mismatch");
  const std::size_t positives = std::size_t(std::count(gt_occluded.begin(), gt_occluded.end(), true));
  if (positives == 0) throw MetricError("occlusion_pr: no occluded landmarks in ground truth, recall undefined");
  std::vector<double> ts(thresholds.begin(), thresholds.end());
  std::sort(ts.begin(), ts.end());
  PRCurve c;
  for (double t : ts) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < occ_scores.size(); ++i) {
      if (occ_scores[i] < t) (gt_occluded[i] ? tp : fp) += 1;
    }
    push_point(c, t, tp, fp, positives);
  }
  return c;
}

YawMetrics yaw_metrics(std::span<const YawSample> samples, double success_deg) {
  YawMetrics m;
  m.num_faces = samples.size();
  if (samples.empty()) throw MetricError("yaw_metrics: no ground-truth faces");
  std::vector<double> err;
  for (const auto& s : samples) {
    if (!s.predicted) continue;
    double d = std::remainder(*s.predicted - s.ground_truth, 360.0);
    err.push_back(std::abs(d));
  }
  m.num_detected = err.size();
  m.detection_rate = double(err.size()) / double(samples.size());
  if (err.empty()) return m;
  const double n = double(err.size());
  const double mean = std::accumulate(err.begin(), err.end(), 0.0) / n;
  double var = 0.0;
  std::size_t ok = 0;
  for (double e : err) {
    var += (e - mean) * (e - mean);
    ok += e <= success_deg ? 1 : 0;
  }
  m.success_rate = double(ok) / n;
  m.mean_abs_err = mean;
  m.std_abs_err = std::sqrt(var / n);
  return m;
}

namespace {

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool usable(const LandmarkSet& lms, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    if (!lms.detected[i] || lms.occ_flag[i]) return false;
  }
  return true;
}

std::optional<double> one_eye(const LandmarkSet& lms, std::size_t c0, std::size_t u1, std::size_t u2, std::size_t c1,
                              std::size_t l2, std::size_t l1) {
  const double width = dist(lms.points[c0], lms.points[c1]);
  if (!(width > 0.0)) return std::nullopt;
  return 0.5 * (dist(lms.points[u1], lms.points[l1]) + dist(lms.points[u2], lms.points[l2])) / width;
}

Point2 mean_of(const LandmarkSet& lms, std::size_t begin, std::size_t end) {
  Point2 c{0, 0};
  for (std::size_t i = begin; i < end; ++i) {
    c.x += lms.points[i].x;
    c.y += lms.points[i].y;
  }
  return {c.x / double(end - begin), c.y / double(end - begin)};
}

}  // namespace

EyeOpening eye_opening(const LandmarkSet& lms) {
  lms.validate();
  EyeOpening e;
  if (usable(lms, 36, 42)) e.left = one_eye(lms, 36, 37, 38, 39, 40, 41);
  if (usable(lms, 42, 48)) e.right = one_eye(lms, 42, 43, 44, 45, 46, 47);
  return e;
}

double polygon_area(std::span<const Point2> pts) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point2& a = pts[i];
    const Point2& b = pts[(i + 1) % pts.size()];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(s);
}

double inter_ocular_distance(const LandmarkSet& lms) { return dist(mean_of(lms, 36, 42), mean_of(lms, 42, 48)); }

MouthOpening mouth_opening(const LandmarkSet& lms, double occluded_fraction) {
  lms.validate();
  MouthOpening m;
  std::size_t flagged = 0;
  for (std::size_t i = lm::kMouthBegin; i < kNumLandmarks; ++i) flagged += lms.occ_flag[i] ? 1 : 0;
  m.occluded = double(flagged) > occluded_fraction * double(kNumLandmarks - lm::kMouthBegin);

  static constexpr std::array<std::size_t, 6> ring{61, 62, 63, 65, 66, 67};
  for (std::size_t i : ring) {
    if (!lms.detected[i]) return m;
  }
  for (std::size_t i = 36; i < 48; ++i) {
    if (!lms.detected[i]) return m;
  }
  const double iod = inter_ocular_distance(lms);
  if (!(iod > 0.0)) return m;
  std::array<Point2, 6> poly;
  for (std::size_t k = 0; k < ring.size(); ++k) poly[k] = lms.points[ring[k]];
  m.area_ratio = polygon_area(poly) / (iod * iod);
  return m;
}

std::vector<std::optional<double>> min_max_normalize(std::span<const std::optional<double>> series) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& v : series) {
    if (v) {
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  }
  std::vector<std::optional<double>> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i]) out[i] = hi > lo ? (*series[i] - lo) / (hi - lo) : 0.0;
  }
  return out;
}

}  // namespace ohg
