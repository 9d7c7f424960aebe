#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ohg/geometry.hpp"
#include "ohg/heatmap.hpp"
#include "ohg/image.hpp"
#include "ohg/landmarks.hpp"

namespace ohg {

using Rng = std::mt19937_64;

/// Independent stream for task `index` under `seed`.
Rng make_rng(std::uint64_t seed, std::uint64_t index = 0);

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LevelResult {
  Image image;
  LandmarkSet landmarks;
  double angle_deg;  // rotation applied (rotate() convention)
};

/// Rotation angle that minimizes the squared vertical offsets of the
/// symmetric landmark pairs. Throws InvalidArgument if every pair is
/// coincident.
double level_angle(const LandmarkSet& lms);

/// Rotates image and landmarks about the landmark centroid by level_angle().
LevelResult derotate_roll(const Image& img, const LandmarkSet& lms);

struct SamplerConfig {
  double pos_min_iou = 0.7;
  double neg_max_iou = 0.05;
  double roll_range_deg = 15.0;
  int pos_per_face = 90;
  int neg_per_image = 60;
  double top_extend = 0.2;
  // Proposal distribution for positives: side = sqrt(gt area) * U(scale),
  // center offset = U(+-shift) * side per axis.
  double pos_scale_min = 0.6;
  double pos_scale_max = 1.4;
  double pos_shift = 0.3;
  double neg_min_side = 24.0;
  int max_attempts = 10000;

  void validate() const;
};

/// Square window with IOU >= pos_min_iou against the ground-truth box.
Box sample_positive(const Box& gt, const SamplerConfig& cfg, Rng& rng);

/// Square window fully inside the image with IOU < neg_max_iou against
/// every ground-truth box.
Box sample_negative(int image_width, int image_height, const std::vector<Box>& gts, const SamplerConfig& cfg,
                    Rng& rng);

enum class OccluderCategory { Object, Hand, Sunglasses };

std::string to_string(OccluderCategory c);

struct Occluder {
  Image image;  // RGBA
  OccluderCategory category = OccluderCategory::Object;
};

/// Occluders grouped by category. pick() draws a category uniformly among
/// the non-empty ones, then an instance uniformly within it.
class OccluderLibrary {
 public:
  void add(Occluder occ);
  /// Loads `<root>/<category>/*.png`; category directories are `object`,
  /// `hand` and `sunglasses`. PNGs must carry an alpha channel.
  static OccluderLibrary load(const std::filesystem::path& root);

  bool empty() const;
  std::size_t size() const;
  const Occluder& pick(Rng& rng) const;

 private:
  std::vector<std::vector<Occluder>> by_category_ = std::vector<std::vector<Occluder>>(3);
};

/// Random placement: occluder width uniform in [min_frac, max_frac] of the
/// face box width, aspect preserved, center uniform inside the face box.
Box random_placement(const Box& face_box, const Occluder& occ, Rng& rng, double min_frac = 0.15,
                     double max_frac = 0.6);

/// Alpha-composites the occluder stretched over `placement`. Every landmark
/// covered by occluder alpha > 0.5 gets occ_flag = true and occ_score = -1;
/// other labels are unchanged.
std::pair<Image, LandmarkSet> composite_occluder(const Image& face, const LandmarkSet& lms, const Occluder& occ,
                                                 const Box& placement);

/// Synthetic stand-in for network output.
struct NoiseModel {
  double pixel_noise_sigma = 0.0;    // additive Gaussian, heatmap units
  double center_jitter_sigma = 0.0;  // score pixels, per axis
  double amplitude_min = 1.0;        // |A| ~ U(amplitude_min, amplitude_max)
  double amplitude_max = 1.0;
  double dropout_prob = 0.0;         // probability a landmark map is zeroed

  void validate() const;
};

struct SynthPrediction {
  HeatmapStack stack;
  std::vector<Point2> centers;  // rendered blob centers, score frame
  std::vector<bool> dropped;
};

/// Renders each landmark (score frame) at a jittered center with a random
/// amplitude whose sign follows occ_flag, adds pixel noise and applies
/// dropout. A zero-noise model reproduces encode_stack exactly.
SynthPrediction synth_predict_detailed(const LandmarkSet& gt_score_frame, const NoiseModel& noise, Rng& rng,
                                       double sigma = 1.5);
HeatmapStack synth_predict(const LandmarkSet& gt_score_frame, const NoiseModel& noise, Rng& rng, double sigma = 1.5);

/// One training crop with its label maps.
struct TrainingSample {
  Image image;  // 256x256
  bool positive = false;
  bool flipped = false;
  Box window{0.0, 0.0, 1.0, 1.0};  // in the leveled source image
  LandmarkSet landmarks;   // input frame (256x256); empty for negatives
  HeatmapStack labels;     // 68 x 64x64
};

struct AugmentOptions {
  SamplerConfig sampler;
  ClaheParams clahe;
  EncodeParams encode;
  double occlusion_prob = 0.5;
  double flip_prob = 0.5;
};

/// Positive samples of one annotated face: CLAHE, level the face, random
/// roll in +-roll_range, positive windows, optional occluder, random flip,
/// 256x256 crops and signed Gaussian labels. All original landmarks are
/// labeled visible; only synthetic occlusion marks landmarks occluded.
/// Landmarks falling outside a window get an all-zero label map.
std::vector<TrainingSample> generate_positives(const Image& image, const LandmarkSet& lms,
                                               const OccluderLibrary& occluders, const AugmentOptions& opt, Rng& rng,
                                               int count);

/// Negative samples of one image with known face boxes, all-zero labels.
std::vector<TrainingSample> generate_negatives(const Image& image, const std::vector<Box>& faces,
                                               const AugmentOptions& opt, Rng& rng, int count);

}  // namespace ohg
