#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ohg/augment.hpp"
#include "ohg/evaluation.hpp"
#include "ohg/io.hpp"
#include "ohg/pose.hpp"
#include "ohg/refine.hpp"

namespace ohg {

/// Runs fn(0..n-1) on up to `jobs` threads. Results must be written to
/// per-index slots by the caller; the first exception is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// --- Synthetic data --------------------------------------------------------------

/// 68 3D points (mm) of a generic head whose 8 rigid points coincide with
/// `model`; used to render synthetic faces with known pose.
std::vector<Eigen::Vector3d> synthetic_head_68(const FaceModel3D& model);

struct SynthConfig {
  int faces = 50;
  int dets_per_face = 5;
  int negatives_per_image = 1;  // false-positive boxes with empty maps
  int image_width = 640;
  int image_height = 480;
  double yaw_range = 40.0;  // degrees, uniform +-range
  double pitch_range = 15.0;
  double roll_range = 10.0;
  double tz_min = 600.0;  // mm
  double tz_max = 1200.0;
  double occlusion_prob = 0.7;  // chance a face gets a rectangular occluder
  double box_margin = 1.3;      // detection side over the landmark box side
  double box_shift = 0.08;      // detection center jitter, fraction of side
  double box_scale = 0.1;       // detection side jitter, +-fraction
  NoiseModel noise;
  std::uint64_t seed = 0;
};

struct SynthImage {
  std::string id;
  GroundTruthFace truth;
  std::vector<Detection> detections;
};

/// Deterministic in cfg.seed; image i uses stream (seed, i).
std::vector<SynthImage> generate_synthetic(const SynthConfig& cfg, const FaceModel3D& model, const EncodeParams& enc);

/// Synthetic detections for given ground-truth landmarks (original frame):
/// jittered boxes around the landmark box, maps from synth_predict.
std::vector<Detection> synth_detections(const LandmarkSet& gt, const SynthConfig& cfg, const EncodeParams& enc,
                                        Rng& rng);

/// Writes heatmaps/<id>_d<k>.ohm, detections.jsonl and ground_truth.jsonl.
void write_synthetic(const std::filesystem::path& dir, const std::vector<SynthImage>& images);

// --- Refinement over records -------------------------------------------------------

struct PoseOptions {
  bool enabled = true;
  std::optional<double> focal;  // default: image width from the record
  FaceModel3D model = FaceModel3D::generic();
  bool exclude_occluded = false;
};

/// Groups records by image (first-appearance order), loads each record's
/// heatmap file (relative paths resolve against base_dir), refines, and
/// emits one refined record per face in input order. Records without a
/// heatmap are skipped. Pose is attached when a focal length is known.
std::vector<Json> refine_records(const std::vector<Json>& records, const std::filesystem::path& base_dir,
                                 const RefineParams& params, const PoseOptions& pose, int jobs = 1);

// --- Evaluation over records ----------------------------------------------------------

struct FacePair {
  std::size_t refined;
  std::size_t truth;
};

/// Per image, PASCAL-matches refined boxes (ranked by face_score) against
/// ground-truth boxes.
struct DatasetMatch {
  std::vector<MatchResult> per_image;
  std::vector<FacePair> pairs;
};

DatasetMatch match_records(const std::vector<Json>& refined, const std::vector<GroundTruthFace>& truth,
                           double iou_thresh = 0.5);

PRCurve eval_detection(const std::vector<Json>& refined, const std::vector<GroundTruthFace>& truth,
                       double iou_thresh = 0.5);

/// Occlusion PR over landmarks of matched faces.
PRCurve eval_occlusion(const std::vector<Json>& refined, const std::vector<GroundTruthFace>& truth,
                       std::span<const double> thresholds, double iou_thresh = 0.5);

/// Default occlusion threshold sweep: -1 to 1 in steps of 0.05.
std::vector<double> default_occlusion_thresholds();

YawMetrics eval_yaw(const std::vector<Json>& refined, const std::vector<GroundTruthFace>& truth,
                    double iou_thresh = 0.5, double success_deg = 15.0);

std::string yaw_metrics_csv(const YawMetrics& m);

/// One row per refined record: frame, left/right eye opening, mouth area
/// ratio, mouth occluded flag, and min-max normalized copies.
std::string features_csv(const std::vector<Json>& refined);

}  // namespace ohg
