#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ohg/geometry.hpp"
#include "ohg/landmarks.hpp"

namespace ohg {

struct ScoredBox {
  Box box;
  double score = 0.0;
};

/// Detection-to-ground-truth assignment for one image.
struct MatchResult {
  std::vector<double> det_scores;
  std::vector<std::optional<std::size_t>> det_match;  // matched gt index per detection
  std::vector<bool> gt_matched;
  std::size_t num_gt() const { return gt_matched.size(); }
};

/// Greedy PASCAL matching: detections in descending score order (ties by
/// index) each take the unmatched gt of highest IOU, if that IOU >= thresh.
MatchResult match_detections(std::span<const ScoredBox> dets, std::span<const Box> gts, double iou_thresh = 0.5);

/// Precision/recall at each threshold, thresholds ascending. A detection
/// counts as predicted at threshold t when its score >= t (detection PR) or
/// when its occlusion score < t (occlusion PR). Precision is 1 when nothing
/// is predicted.
struct PRCurve {
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<std::size_t> tp, fp, fn;

  std::string to_csv() const;
};

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Detection PR over pooled per-image results, one point per distinct score.
/// Throws MetricError when there are no ground-truth faces.
PRCurve pr_curve(std::span<const MatchResult> results);

/// Average precision (all-point interpolation over the curve).
double average_precision(const PRCurve& curve);

/// Occlusion PR: occluded is the positive class, predicted when
/// score < theta. Throws MetricError when no landmark is occluded in gt.
PRCurve occlusion_pr(std::span<const double> occ_scores, const std::vector<bool>& gt_occluded,
                     std::span<const double> thresholds);

struct YawSample {
  std::optional<double> predicted;  // none when the face was not detected
  double ground_truth = 0.0;
};

struct YawMetrics {
  double detection_rate = 0.0;
  std::optional<double> success_rate;
  std::optional<double> mean_abs_err;
  std::optional<double> std_abs_err;  // population standard deviation
  std::size_t num_faces = 0;
  std::size_t num_detected = 0;
};

/// Detection rate over all faces; success rate (|error| <= success_deg) and
/// absolute-error statistics over detected faces only. Errors wrap to
/// [-180, 180].
YawMetrics yaw_metrics(std::span<const YawSample> samples, double success_deg = 15.0);

struct EyeOpening {
  std::optional<double> left;   // image-left eye (36-41)
  std::optional<double> right;  // image-right eye (42-47)
};

/// Mean of the two lid distances over the corner distance, per eye. An eye
/// with any undetected or occluded landmark has no value.
EyeOpening eye_opening(const LandmarkSet& lms);

/// Shoelace area of a closed polygon, as an absolute value. Self-intersecting
/// polygons are taken as ordered.
double polygon_area(std::span<const Point2> pts);

struct MouthOpening {
  std::optional<double> area_ratio;  // inner-mouth area / inter-ocular distance^2
  bool occluded = false;
};

/// Area of the six non-corner inner-lip landmarks normalized by squared
/// inter-ocular distance. Flagged occluded when more than
/// `occluded_fraction` of the 20 mouth landmarks carry occ_flag.
MouthOpening mouth_opening(const LandmarkSet& lms, double occluded_fraction = 0.5);

double inter_ocular_distance(const LandmarkSet& lms);

/// Min-max normalization of a time series to [0, 1]; absent entries stay
/// absent. A constant series maps to 0.
std::vector<std::optional<double>> min_max_normalize(std::span<const std::optional<double>> series);

}  // namespace ohg
