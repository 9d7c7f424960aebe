#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ohg/geometry.hpp"

namespace ohg {

inline constexpr std::size_t kNumLandmarks = 68;

// Zero-based indices into the 68-point Multi-PIE / 300-W scheme.
namespace lm {
inline constexpr std::size_t kChin = 8;
inline constexpr std::size_t kNoseTip = 30;
inline constexpr std::size_t kNoseLeft = 31;
inline constexpr std::size_t kNoseRight = 35;
inline constexpr std::size_t kEyeLeftOuter = 36;   // image-left eye
inline constexpr std::size_t kEyeLeftInner = 39;
inline constexpr std::size_t kEyeRightInner = 42;  // image-right eye
inline constexpr std::size_t kEyeRightOuter = 45;
inline constexpr std::size_t kMouthLeft = 48;
inline constexpr std::size_t kMouthRight = 54;
inline constexpr std::size_t kMouthBegin = 48;     // outer + inner mouth: [48, 68)
inline constexpr std::size_t kInnerMouthBegin = 60;
}  // namespace lm

/// Index of the mirrored counterpart of each landmark under a left-right
/// flip. Self-symmetric landmarks (nose bridge, lip midpoints, chin) map to
/// themselves.
const std::array<std::size_t, kNumLandmarks>& mirror_table();

/// Symmetric landmark pairs (image-left index, image-right index) used to
/// level a face: eye corners, brow corners, nose corners, mouth corners.
std::span<const std::array<std::size_t, 2>> level_pairs();

/// 68 landmarks with per-landmark occlusion data.
///
/// `detected[i]` is false when the landmark could not be decoded; its point
/// is then meaningless. `occ_score` holds the signed heatmap value at the
/// landmark, `occ_flag` the thresholded occlusion decision and `lm_score`
/// the optional landmark score.
struct LandmarkSet {
  std::vector<Point2> points = std::vector<Point2>(kNumLandmarks);
  std::vector<double> occ_score = std::vector<double>(kNumLandmarks, 1.0);
  std::vector<bool> occ_flag = std::vector<bool>(kNumLandmarks, false);
  std::vector<bool> detected = std::vector<bool>(kNumLandmarks, true);
  std::optional<std::vector<double>> lm_score;

  LandmarkSet() = default;
  explicit LandmarkSet(std::vector<Point2> pts);

  std::size_t size() const { return points.size(); }
  std::size_t num_detected() const;
  std::vector<Point2> detected_points() const;
  /// Sets occ_flag[i] = occ_score[i] < threshold for every landmark.
  void apply_threshold(double threshold);
  /// Throws InvalidArgument unless every array has 68 entries.
  void validate() const;
};

/// Bounding box of the detected landmarks, extended upward by `top_extend`
/// of its height.
Box box_from_landmarks(const LandmarkSet& lms, double top_extend = 0.2);

/// Applies `f` to every point.
template <typename F>
LandmarkSet transform_points(LandmarkSet lms, F&& f) {
  for (auto& p : lms.points) p = f(p);
  return lms;
}

/// Parameters of the analytic frontal face used by synthetic tests and the
/// synthetic predictor. Coordinates are `center + scale * template`, the
/// template spanning roughly [-1, 1] horizontally, chin at +1.
struct FaceShape {
  Point2 center{128.0, 128.0};
  double scale = 80.0;
  double mouth_open = 0.0;  // inner-lip gap, template units
  double eye_open = 0.12;   // lid gap, template units
};

/// Upright, exactly left-right symmetric 68-point face.
LandmarkSet canonical_face(const FaceShape& shape = {});

}  // namespace ohg
