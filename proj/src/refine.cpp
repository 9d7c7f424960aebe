#include "ohg/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ohg/sampling.hpp"

namespace ohg {

namespace {

Heatmap ideal_magnitude(Point2 loc, double sigma) {
  Heatmap ideal;
  render_gaussian(ideal, loc, 1.0, sigma);
  return ideal;
}

double score_against(const Heatmap& actual, const Heatmap& ideal) {
  double s = 0.0;
  const auto a = actual.values();
  const auto b = ideal.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(std::abs(b[i])) - double(std::abs(a[i]));
    s += d * d;
  }
  return -s;
}

Box landmark_box_or(const LandmarkSet& lms, const Box& fallback, double top_extend) {
  if (lms.num_detected() < 2) return fallback;
  try {
    return box_from_landmarks(lms, top_extend);
  } catch (const InvalidArgument&) {
    return fallback;
  }
}

}  // namespace

double landmark_score(const Heatmap& actual, Point2 loc, double sigma) {
  if (actual.width() != kScoreSize || actual.height() != kScoreSize) {
    throw InvalidArgument("landmark_score: heatmap must be 64x64");
  }
  return score_against(actual, ideal_magnitude(loc, sigma));
}

double missing_landmark_score(double sigma) {
  return landmark_score(Heatmap(), {0.5 * kScoreSize, 0.5 * kScoreSize}, sigma);
}

double face_score(const HeatmapStack& stack, std::span<const std::optional<Point2>> locs, double sigma) {
  if (locs.size() != stack.size()) throw InvalidArgument("face_score: one location per heatmap required");
  double total = 0.0;
  const double missing = missing_landmark_score(sigma);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    total += locs[i] ? landmark_score(stack[i], *locs[i], sigma) : missing;
  }
  return total;
}

ScoredDetection score_detection(const Detection& det, std::size_t index, const RefineParams& params) {
  validate_stack(det.stack);
  const CoordFrame score = CoordFrame::score(det.box);
  const CoordFrame orig = CoordFrame::original();
  ScoredDetection out{index, det.box, det.box, 0.0, {}};
  out.landmarks.lm_score.emplace(kNumLandmarks, 0.0);
  const double missing = missing_landmark_score(params.sigma);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto d = decode(det.stack[i], params.decode);
    double s = missing;
    if (d) {
      out.landmarks.points[i] = map_point(d->location, score, orig);
      out.landmarks.occ_score[i] = d->raw_value;
      s = landmark_score(det.stack[i], d->location, params.sigma);
    } else {
      out.landmarks.detected[i] = false;
      out.landmarks.occ_score[i] = 0.0;
      out.landmarks.points[i] = det.box.center();
    }
    (*out.landmarks.lm_score)[i] = s;
    out.face_score += s;
  }
  out.landmarks.apply_threshold(params.occ_threshold);
  out.refined_box = landmark_box_or(out.landmarks, det.box, params.top_extend);
  return out;
}

std::vector<DetectionGroup> nms_group(std::span<const ScoredDetection> dets, double overlap) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].face_score != dets[b].face_score) return dets[a].face_score > dets[b].face_score;
    return dets[a].index < dets[b].index;
  });

  std::vector<bool> taken(dets.size(), false);
  std::vector<DetectionGroup> groups;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t best = order[oi];
    if (taken[best]) continue;
    taken[best] = true;
    DetectionGroup g;
    g.members.push_back(best);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t cand = order[oj];
      if (taken[cand]) continue;
      if (iou(dets[best].refined_box, dets[cand].refined_box) >= overlap) {
        taken[cand] = true;
        g.members.push_back(cand);
      }
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

HeatmapStack align_and_sum(std::span<const Detection> dets, std::span<const ScoredDetection> scored,
                           const DetectionGroup& group) {
  if (group.members.empty()) throw InvalidArgument("align_and_sum: empty group");
  const Box& anchor = scored[group.anchor()].original_box;
  HeatmapStack sum(kNumLandmarks, Heatmap());

  std::vector<double> ux(kScoreSize), uy(kScoreSize);
  for (std::size_t m : group.members) {
    const Detection& det = dets[m];
    validate_stack(det.stack);
    const Box& b = scored[m].original_box;
    // The mapping is separable: anchor score column -> member score column.
    for (int i = 0; i < kScoreSize; ++i) {
      const double ox = anchor.x() + (i + 0.5) * anchor.w() / kScoreSize;
      const double oy = anchor.y() + (i + 0.5) * anchor.h() / kScoreSize;
      ux[std::size_t(i)] = (ox - b.x()) * kScoreSize / b.w();
      uy[std::size_t(i)] = (oy - b.y()) * kScoreSize / b.h();
    }
    for (std::size_t l = 0; l < kNumLandmarks; ++l) {
      const Heatmap& src = det.stack[l];
      Heatmap& dst = sum[l];
      for (int y = 0; y < kScoreSize; ++y) {
        for (int x = 0; x < kScoreSize; ++x) {
          const double v = sample_bilinear(kScoreSize, kScoreSize, ux[std::size_t(x)], uy[std::size_t(y)],
                                           [&src](int i, int j) { return double(src.at(i, j)); });
          dst.at(x, y) = float(double(dst.at(x, y)) + v);
        }
      }
    }
  }
  return sum;
}

std::optional<HeatmapStack> normalize_stack(const HeatmapStack& stack) {
  float peak = 0.0f;
  for (const Heatmap& h : stack) peak = std::max(peak, h.max_abs());
  if (!(peak > 0.0f) || !std::isfinite(peak)) return std::nullopt;
  HeatmapStack out = stack;
  for (Heatmap& h : out) {
    for (float& v : h.values()) v = v / peak;
  }
  return out;
}

std::optional<RefinedFace> refine_group(std::span<const Detection> dets, std::span<const ScoredDetection> scored,
                                        const DetectionGroup& group, const RefineParams& params) {
  const auto fused = normalize_stack(align_and_sum(dets, scored, group));
  if (!fused) return std::nullopt;

  const ScoredDetection& anchor = scored[group.anchor()];
  const CoordFrame score = CoordFrame::score(anchor.original_box);
  const CoordFrame orig = CoordFrame::original();

  RefinedFace face{anchor.original_box, anchor.original_box, 0.0, anchor.face_score,
                   dets[group.anchor()].det_score, {}, {}};
  face.landmarks.lm_score.emplace(kNumLandmarks, 0.0);
  std::vector<std::optional<Point2>> locs(kNumLandmarks);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto d = decode((*fused)[i], params.decode);
    if (d) {
      locs[i] = d->location;
      face.landmarks.points[i] = map_point(d->location, score, orig);
      face.landmarks.occ_score[i] = d->raw_value;
      (*face.landmarks.lm_score)[i] = landmark_score((*fused)[i], d->location, params.sigma);
    } else {
      face.landmarks.detected[i] = false;
      face.landmarks.occ_score[i] = 0.0;
      face.landmarks.points[i] = anchor.original_box.center();
      (*face.landmarks.lm_score)[i] = missing_landmark_score(params.sigma);
    }
  }
  face.landmarks.apply_threshold(params.occ_threshold);
  face.face_score = face_score(*fused, locs, params.sigma);
  face.box = landmark_box_or(face.landmarks, anchor.original_box, params.top_extend);
  for (std::size_t m : group.members) face.members.push_back(scored[m].index);
  return face;
}

std::vector<RefinedFace> refine_detections(std::span<const Detection> dets, const RefineParams& params) {
  std::vector<ScoredDetection> scored;
  scored.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) scored.push_back(score_detection(dets[i], i, params));
  const auto groups = nms_group(scored, params.nms_overlap);
  std::vector<RefinedFace> faces;
  for (const auto& g : groups) {
    if (auto f = refine_group(dets, scored, g, params)) faces.push_back(std::move(*f));
  }
  return faces;
}

}  // namespace ohg
