#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ohg/geometry.hpp"
#include "ohg/heatmap.hpp"
#include "ohg/image.hpp"
#include "ohg/landmarks.hpp"
#include "ohg/pose.hpp"
#include "ohg/refine.hpp"

namespace ohg {

/// Malformed or unsupported file content. The message carries
/// `file:line:` context where a line is meaningful.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- Heatmap stack files -----------------------------------------------------
//
// "OHM1", then little-endian uint32 n_maps, height, width, then
// n_maps * height * width little-endian float32 values, row-major within a
// map, maps in landmark order.

inline constexpr char kHeatmapMagic[4] = {'O', 'H', 'M', '1'};

std::size_t heatmap_file_size(std::size_t n_maps, std::size_t height, std::size_t width);
std::vector<std::uint8_t> serialize_heatmaps(const HeatmapStack& stack);
/// Throws FormatError on bad magic, truncated or oversized payload, or mixed
/// map dimensions. `source` names the input in error messages.
HeatmapStack parse_heatmaps(const std::vector<std::uint8_t>& bytes, const std::string& source = "<memory>");
void write_heatmaps(const std::filesystem::path& path, const HeatmapStack& stack);
HeatmapStack read_heatmaps(const std::filesystem::path& path);

// --- 300-W .pts files ----------------------------------------------------------

std::string format_pts(const std::vector<Point2>& points);
/// Parses `version: 1`, `n_points: 68`, `{`, 68 `x y` lines, `}`.
std::vector<Point2> parse_pts(const std::string& text, const std::string& source = "<memory>");
void write_pts(const std::filesystem::path& path, const std::vector<Point2>& points);
std::vector<Point2> read_pts(const std::filesystem::path& path);

// --- PNG -----------------------------------------------------------------------

/// 8-bit gray, RGB or RGBA. Palette and 16-bit images are converted.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

// --- JSON Lines records ----------------------------------------------------------

using Json = nlohmann::json;

/// One face-detector output: image id, box, detector score and optionally
/// the heatmap file of its crop and the source image size.
struct DetectionRecord {
  std::string image;
  Box box{0.0, 0.0, 1.0, 1.0};
  double det_score = 0.0;
  std::optional<std::string> heatmap;
  std::optional<std::pair<double, double>> image_size;
};

Json box_to_json(const Box& b);
Box box_from_json(const Json& j);

Json to_json(const DetectionRecord& r);
DetectionRecord detection_from_json(const Json& j);

/// Landmark arrays: "landmarks" [[x, y] ...], "occ_scores", "occ_flags",
/// "detected" and, when present, "lm_scores".
Json landmarks_to_json(const LandmarkSet& lms);
LandmarkSet landmarks_from_json(const Json& j);

Json to_json(const PoseAngles& p);
PoseAngles pose_from_json(const Json& j);

/// Refinement output record.
Json refined_to_json(const std::string& image, const RefinedFace& face, const std::optional<PoseAngles>& pose);

/// Ground-truth face: image id, box, landmarks, occ_flags, optional yaw.
struct GroundTruthFace {
  std::string image;
  Box box{0.0, 0.0, 1.0, 1.0};
  LandmarkSet landmarks;
  std::optional<double> yaw;
  std::optional<std::pair<double, double>> image_size;
};

Json to_json(const GroundTruthFace& g);
GroundTruthFace ground_truth_from_json(const Json& j);

/// Reads a JSON Lines file, skipping blank lines. Parse errors report
/// file:line.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

}  // namespace ohg
