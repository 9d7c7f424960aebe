#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ohg/geometry.hpp"
#include "ohg/landmarks.hpp"

namespace ohg {

/// Signed score image, row-major float32. Values are nominally in [-1, 1]
/// but nothing enforces that; network output may exceed it.
class Heatmap {
 public:
  Heatmap() : Heatmap(kScoreSize, kScoreSize) {}
  Heatmap(int width, int height, float fill = 0.0f);
  Heatmap(int width, int height, std::vector<float> values);

  int width() const { return width_; }
  int height() const { return height_; }
  float at(int x, int y) const { return values_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
  float& at(int x, int y) { return values_[std::size_t(y) * std::size_t(width_) + std::size_t(x)]; }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  float max_abs() const;
  /// Bilinear sample of the signed values; zero outside the grid.
  double sample(Point2 p) const;

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  int width_, height_;
  std::vector<float> values_;
};

/// One heatmap per landmark, all of identical dimensions.
using HeatmapStack = std::vector<Heatmap>;

/// Throws InvalidArgument unless the stack holds 68 maps of 64x64.
void validate_stack(const HeatmapStack& stack);

enum class LandmarkState { Visible, Occluded, Negative };

struct EncodeParams {
  double sigma = 1.5;  // score pixels, shared by both axes
  double amplitude_visible = 1.0;
  double amplitude_occluded = -1.0;
  double amplitude_negative = 0.0;

  double amplitude(LandmarkState s) const;
};

/// Adds A * exp(-|c - p|^2 / (2 sigma^2)), evaluated at every pixel center c,
/// to `map`. No range checks; the blob may be partly or fully off-grid.
void render_gaussian(Heatmap& map, Point2 center, double amplitude, double sigma);

/// Training label for one landmark in score-frame coordinates. Throws when a
/// visible or occluded landmark lies outside [0, 64)^2.
Heatmap encode(Point2 p, LandmarkState state, const EncodeParams& params = {});

/// Labels for a full landmark set expressed in the score frame. Occlusion
/// state comes from occ_flag; `negative` produces an all-zero stack.
HeatmapStack encode_stack(const LandmarkSet& lms_score_frame, bool negative = false, const EncodeParams& params = {});

/// 8-connected component labeling. Labels are 1..count in order of each
/// component's first pixel in row-major scan; background is 0.
struct Components {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<int> labels;
  std::vector<int> sizes;  // sizes[k - 1] = pixel count of label k

  int label(int x, int y) const { return labels[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
};

Components connected_components(int width, int height, std::span<const std::uint8_t> mask);

enum class CentroidWeighting {
  /// Weight = |h| - threshold. Unbiased up to discretization for the
  /// Gaussian labels; default.
  AboveThreshold,
  /// Weight = |h|, intensity-weighted centroid of the thresholded group.
  Magnitude,
};

struct DecodeParams {
  double relative_threshold = 0.6;
  CentroidWeighting weighting = CentroidWeighting::AboveThreshold;
};

struct DecodedPoint {
  Point2 location;   // score frame
  double raw_value;  // signed heatmap value at location
};

/// Thresholds |h| at relative_threshold * max|h|, takes the 8-connected
/// component containing the first global maximum and returns its weighted
/// centroid. Returns nullopt for a map whose max |h| is zero or non-finite.
std::optional<DecodedPoint> decode(const Heatmap& h, const DecodeParams& params = {});

/// Decodes every map and maps locations score -> input -> original using
/// the detection box. occ_score is the raw signed value and occ_flag is
/// set at `occ_threshold`. Undecodable maps leave the landmark undetected
/// with occ_score 0.
LandmarkSet decode_stack(const HeatmapStack& stack, const Box& detection_box, double occ_threshold = 0.2,
                         const DecodeParams& params = {});

}  // namespace ohg
