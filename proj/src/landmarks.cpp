#include "ohg/landmarks.hpp"

#include <cmath>
#include <numbers>

namespace ohg {

const std::array<std::size_t, kNumLandmarks>& mirror_table() {
  static const std::array<std::size_t, kNumLandmarks> table = [] {
    std::array<std::size_t, kNumLandmarks> t{};
    for (std::size_t i = 0; i < kNumLandmarks; ++i) t[i] = i;
    auto pair = [&t](std::size_t a, std::size_t b) {
      t[a] = b;
      t[b] = a;
    };
    for (std::size_t i = 0; i < 8; ++i) pair(i, 16 - i);  // jaw
    for (std::size_t i = 0; i < 5; ++i) pair(17 + i, 26 - i);  // brows
    pair(31, 35);  // nostrils
    pair(32, 34);
    pair(36, 45);  // eye corners
    pair(39, 42);
    pair(37, 44);  // upper lids
    pair(38, 43);
    pair(41, 46);  // lower lids
    pair(40, 47);
    pair(48, 54);  // outer mouth
    pair(49, 53);
    pair(50, 52);
    pair(59, 55);
    pair(58, 56);
    pair(60, 64);  // inner mouth
    pair(61, 63);
    pair(67, 65);
    return t;
  }();
  return table;
}

std::span<const std::array<std::size_t, 2>> level_pairs() {
  static constexpr std::array<std::array<std::size_t, 2>, 7> pairs{{
      {36, 45}, {39, 42}, {17, 26}, {21, 22}, {31, 35}, {48, 54}, {60, 64},
  }};
  return pairs;
}

LandmarkSet::LandmarkSet(std::vector<Point2> pts) : points(std::move(pts)) {
  occ_score.assign(points.size(), 1.0);
  occ_flag.assign(points.size(), false);
  detected.assign(points.size(), true);
}

std::size_t LandmarkSet::num_detected() const {
  std::size_t n = 0;
  for (bool d : detected) n += d ? 1 : 0;
  return n;
}

std::vector<Point2> LandmarkSet::detected_points() const {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (detected[i]) out.push_back(points[i]);
  }
  return out;
}

void LandmarkSet::apply_threshold(double threshold) {
  for (std::size_t i = 0; i < occ_score.size(); ++i) occ_flag[i] = occ_score[i] < threshold;
}

void LandmarkSet::validate() const {
  const bool ok = points.size() == kNumLandmarks && occ_score.size() == kNumLandmarks &&
                  occ_flag.size() == kNumLandmarks && detected.size() == kNumLandmarks &&
                  (!lm_score || lm_score->size() == kNumLandmarks);
  if (!ok) throw InvalidArgument("landmark set must have 68 entries in every array");
}

Box box_from_landmarks(const LandmarkSet& lms, double top_extend) {
  const auto pts = lms.detected_points();
  return box_from_points(pts, top_extend);
}

LandmarkSet canonical_face(const FaceShape& shape) {
  std::vector<Point2> t(kNumLandmarks);
  const double pi = std::numbers::pi;

  // Jaw: lower half-ellipse from the image-left ear to the image-right ear.
  for (std::size_t i = 0; i <= 16; ++i) {
    const double phi = pi * double(i) / 16.0;
    t[i] = {-std::cos(phi), -0.2 + 1.2 * std::sin(phi)};
  }
  // Brows, each traced outer-to-inner for the left and inner-to-outer for
  // the right, arched by a half sine.
  for (std::size_t k = 0; k < 5; ++k) {
    const double arch = 0.1 * std::sin(pi * double(k) / 4.0);
    t[17 + k] = {-0.8 + 0.1625 * double(k), -0.55 - arch};
    t[22 + k] = {0.15 + 0.1625 * double(k), -0.55 - arch};
  }
  // Nose bridge down to the tip, then the nostril arc.
  for (std::size_t k = 0; k < 4; ++k) t[27 + k] = {0.0, -0.35 + 0.1 * double(k)};
  for (std::size_t k = 0; k < 5; ++k) {
    const double dk = std::abs(double(k) - 2.0);
    t[31 + k] = {-0.2 + 0.1 * double(k), 0.08 + 0.04 * (1.0 - dk / 2.0)};
  }
  // Eyes: corner, two upper-lid points, corner, two lower-lid points,
  // traced clockwise on screen.
  const double ew = 0.16, eh = 0.5 * shape.eye_open;
  const Point2 le{-0.42, -0.3}, re{0.42, -0.3};
  t[36] = {le.x - ew, le.y};
  t[37] = {le.x - ew / 3, le.y - eh};
  t[38] = {le.x + ew / 3, le.y - eh};
  t[39] = {le.x + ew, le.y};
  t[40] = {le.x + ew / 3, le.y + eh};
  t[41] = {le.x - ew / 3, le.y + eh};
  t[42] = {re.x - ew, re.y};
  t[43] = {re.x - ew / 3, re.y - eh};
  t[44] = {re.x + ew / 3, re.y - eh};
  t[45] = {re.x + ew, re.y};
  t[46] = {re.x + ew / 3, re.y + eh};
  t[47] = {re.x - ew / 3, re.y + eh};
  // Outer lips.
  const std::array<Point2, 12> outer{{{-0.35, 0.45}, {-0.22, 0.38}, {-0.08, 0.35}, {0.0, 0.37},
                                      {0.08, 0.35}, {0.22, 0.38}, {0.35, 0.45}, {0.22, 0.55},
                                      {0.1, 0.6}, {0.0, 0.61}, {-0.1, 0.6}, {-0.22, 0.55}}};
  for (std::size_t k = 0; k < outer.size(); ++k) t[48 + k] = outer[k];
  // Inner lips.
  const double up = 0.45 - 0.5 * shape.mouth_open - 0.01, lo = 0.45 + 0.5 * shape.mouth_open + 0.01;
  t[60] = {-0.25, 0.45};
  t[61] = {-0.1, up};
  t[62] = {0.0, up};
  t[63] = {0.1, up};
  t[64] = {0.25, 0.45};
  t[65] = {0.1, lo};
  t[66] = {0.0, lo};
  t[67] = {-0.1, lo};

  for (auto& p : t) p = {shape.center.x + shape.scale * p.x, shape.center.y + shape.scale * p.y};
  return LandmarkSet(std::move(t));
}

}  // namespace ohg
