#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ohg/geometry.hpp"
#include "ohg/heatmap.hpp"
#include "ohg/landmarks.hpp"

namespace ohg {

/// A face-detector output box together with the 68 score images the
/// landmark network produced for its crop.
struct Detection {
  Box box;
  double det_score = 0.0;
  HeatmapStack stack;
};

/// Sum of squared magnitude differences between `actual` and an ideal
/// visible Gaussian at `loc`, negated. Always <= 0. The occlusion sign of
/// either map does not matter.
double landmark_score(const Heatmap& actual, Point2 loc, double sigma = 1.5);

/// Landmark score of a landmark with no location: the all-zero map scored
/// against an ideal blob at the grid center.
double missing_landmark_score(double sigma = 1.5);

/// Sum of the 68 landmark scores. `locs` are score-frame locations;
/// std::nullopt marks an undetected landmark, scored with
/// missing_landmark_score().
double face_score(const HeatmapStack& stack, std::span<const std::optional<Point2>> locs, double sigma = 1.5);

struct RefineParams {
  double occ_threshold = 0.2;
  double nms_overlap = 0.2;
  double sigma = 1.5;
  double top_extend = 0.2;
  DecodeParams decode;
};

/// Per-detection first stage: initial landmarks, re-localized box and score.
struct ScoredDetection {
  std::size_t index = 0;  // position in the input list
  Box original_box;
  Box refined_box;
  double face_score = 0.0;
  LandmarkSet landmarks;  // original frame
};

ScoredDetection score_detection(const Detection& det, std::size_t index, const RefineParams& params = {});

/// A greedy NMS cluster. members[0] is the anchor (highest score).
struct DetectionGroup {
  std::vector<std::size_t> members;  // indices into the scored list
  std::size_t anchor() const { return members.front(); }
};

/// Greedy grouping: sort by descending face_score (ties by input index),
/// repeatedly take the best remaining detection and absorb every remaining
/// one whose refined box has IOU >= overlap with it.
std::vector<DetectionGroup> nms_group(std::span<const ScoredDetection> dets, double overlap = 0.2);

/// Resamples each member's maps into a 64x64 frame over the anchor's
/// original detection box and sums them per landmark, without dividing by
/// the member count. `dets` and `scored` are indexed by the group.
HeatmapStack align_and_sum(std::span<const Detection> dets, std::span<const ScoredDetection> scored,
                           const DetectionGroup& group);

/// Divides the stack by its global max |value|, keeping signs. Returns
/// nullopt for an all-zero stack.
std::optional<HeatmapStack> normalize_stack(const HeatmapStack& stack);

struct RefinedFace {
  Box box;                      // landmark box of the fused landmarks
  Box anchor_box;               // anchor's original detection box (fusion frame)
  double face_score = 0.0;      // recomputed on the fused stack
  double anchor_face_score = 0.0;  // anchor's per-detection score
  double det_score = 0.0;       // anchor's upstream detector score
  LandmarkSet landmarks;        // original frame, occ_score normalized
  std::vector<std::size_t> members;  // input indices, anchor first
};

/// Fuses a group: normalize(align_and_sum), decode each fused map, read the
/// signed fused value at the refined location as the occlusion score and
/// threshold it. Returns nullopt when the fused stack is all zero.
std::optional<RefinedFace> refine_group(std::span<const Detection> dets, std::span<const ScoredDetection> scored,
                                        const DetectionGroup& group, const RefineParams& params = {});

/// Full second stage over all detections of one image: score each
/// detection, group, fuse. Groups whose fused stack is all zero are dropped.
std::vector<RefinedFace> refine_detections(std::span<const Detection> dets, const RefineParams& params = {});

}  // namespace ohg
