#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ohg/augment.hpp"

using namespace ohg;

namespace {

Image textured(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> v(0, 255);
  Image img(w, h, 3);
  for (auto& b : img.data()) b = std::uint8_t(v(rng));
  return img;
}

Occluder solid(int w, int h, std::uint8_t alpha, OccluderCategory cat = OccluderCategory::Object) {
  Image img(w, h, 4);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = 10;
      img.at(x, y, 1) = 20;
      img.at(x, y, 2) = 30;
      img.at(x, y, 3) = alpha;
    }
  }
  return {img, cat};
}

}  // namespace

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a = make_rng(5, 1), b = make_rng(5, 1), c = make_rng(5, 2), d = make_rng(6, 1);
  const auto va = a(), vb = b(), vc = c(), vd = d();
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
}

TEST_CASE("leveling examples") {
  const LandmarkSet face = canonical_face({{200, 150}, 60});
  CHECK(std::abs(level_angle(face)) < 1e-6);
  const Image img = textured(400, 300, 1);

  const auto lvl = derotate_roll(img, face);
  CHECK(std::abs(lvl.angle_deg) < 1e-6);

  for (double pre : {10.0, -7.5, 25.0}) {
    const auto [rimg, rl] = rotate(img, pre, {210, 140}, face);
    CHECK(level_angle(rl) == doctest::Approx(-pre).epsilon(1e-9));
    const auto once = derotate_roll(rimg, rl);
    CHECK(std::abs(once.angle_deg + pre) < 0.01);
    CHECK(std::abs(level_angle(once.landmarks)) < 1e-9);
    const auto twice = derotate_roll(once.image, once.landmarks);
    CHECK(std::abs(twice.angle_deg) < 1e-9);
  }
}

TEST_CASE("level_angle needs a non-degenerate pair") {
  LandmarkSet lms(std::vector<Point2>(kNumLandmarks, Point2{5, 5}));
  CHECK_THROWS_AS(level_angle(lms), InvalidArgument);
}

TEST_CASE("positive windows keep IOU at least 0.7") {
  Rng rng = make_rng(1);
  const SamplerConfig cfg;
  const Box gt(100, 80, 120, 150);
  double lo = 1.0, hi = 0.0;
  std::vector<int> hist(6, 0);
  for (int t = 0; t < 10000; ++t) {
    const Box b = sample_positive(gt, cfg, rng);
    const double v = iou(b, gt);
    CHECK(v >= 0.7);
    CHECK(b.w() == b.h());
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++hist[std::size_t(std::min(5.0, (v - 0.7) / 0.05))];
  }
  // A square window overlaps a 120x150 box by at most 16080 / 19876.
  CHECK(lo < 0.71);
  CHECK(hi > 0.80);
  CHECK(hi <= 120.0 * 134 / (134.0 * 134 + 120 * 150 - 120 * 134) + 1e-3);

  // Square boxes: the draws cover [0.7, 1.0).
  Rng r2 = make_rng(2);
  const Box sq(10, 10, 50, 50);
  for (int t = 0; t < 10000; ++t) {
    const double v = iou(sample_positive(sq, cfg, r2), sq);
    CHECK(v >= 0.7);
    ++hist[std::size_t(std::min(5.0, (v - 0.7) / 0.05))];
  }
  for (int k = 0; k < 6; ++k) CHECK(hist[std::size_t(k)] > 0);
}

TEST_CASE("the gt box itself is an admissible positive") {
  const Box gt(0, 0, 40, 40);
  CHECK(iou(gt, gt) >= SamplerConfig{}.pos_min_iou);
}

TEST_CASE("negative windows stay clear of every face") {
  Rng rng = make_rng(3);
  const SamplerConfig cfg;
  const std::vector<Box> gts{Box(100, 80, 120, 150), Box(400, 200, 90, 90)};
  for (int t = 0; t < 10000; ++t) {
    const Box b = sample_negative(640, 480, gts, cfg, rng);
    for (const Box& g : gts) CHECK(iou(b, g) < 0.05);
    CHECK(b.x() >= 0.0);
    CHECK(b.right() <= 640.0);
    CHECK(b.bottom() <= 480.0);
  }
  // Any window is fine when there are no faces.
  CHECK_NOTHROW(sample_negative(64, 64, {}, cfg, rng));
  // A window equal to a gt box fails the constraint.
  CHECK_FALSE(iou(gts[0], gts[0]) < cfg.neg_max_iou);
}

TEST_CASE("samplers report an exhausted budget") {
  Rng rng = make_rng(4);
  SamplerConfig cfg;
  cfg.max_attempts = 50;
  const std::vector<Box> whole{Box(0, 0, 64, 64)};
  cfg.neg_min_side = 60;
  CHECK_THROWS_AS(sample_negative(64, 64, whole, cfg, rng), SamplingError);
  cfg.pos_min_iou = 0.9999;
  cfg.pos_scale_min = 0.6;
  CHECK_THROWS_AS(sample_positive(Box(0, 0, 10, 40), cfg, rng), SamplingError);
  SamplerConfig bad;
  bad.neg_max_iou = 0.8;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(sample_negative(10, 10, {}, SamplerConfig{}, rng), InvalidArgument);
}

TEST_CASE("composite occluder examples") {
  const Image face = textured(256, 256, 2);
  const LandmarkSet lms = canonical_face();

  const auto [same, l0] = composite_occluder(face, lms, solid(20, 20, 0), Box(0, 0, 256, 256));
  CHECK(same == face);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) CHECK_FALSE(l0.occ_flag[i]);

  const auto [covered, lall] = composite_occluder(face, lms, solid(20, 20, 255), Box(-10, -10, 276, 276));
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    CHECK(lall.occ_flag[i]);
    CHECK(lall.occ_score[i] == -1.0);
  }
  CHECK(covered.at(100, 100, 0) == 10);
  CHECK(covered.at(100, 100, 2) == 30);

  // The tight mouth box padded by one pixel holds only mouth landmarks.
  std::vector<Point2> mouth(lms.points.begin() + 48, lms.points.end());
  const Box tight = box_from_points(mouth, 0.0);
  const Box place(tight.x() - 1, tight.y() - 1, tight.w() + 2, tight.h() + 2);
  const auto [m, lm] = composite_occluder(face, lms, solid(8, 4, 255), place);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) CHECK(lm.occ_flag[i] == (i >= 48));
  CHECK(m.at(10, 10, 0) == face.at(10, 10, 0));
}

TEST_CASE("half transparent occluders blend but do not label") {
  const Image face(64, 64, 1, 200);
  const LandmarkSet lms = canonical_face({{32, 32}, 20});
  const auto [img, l] = composite_occluder(face, lms, solid(4, 4, 127), Box(0, 0, 64, 64));
  for (std::size_t i = 0; i < kNumLandmarks; ++i) CHECK_FALSE(l.occ_flag[i]);
  const auto [img2, l2] = composite_occluder(face, lms, solid(4, 4, 128), Box(0, 0, 64, 64));
  for (std::size_t i = 0; i < kNumLandmarks; ++i) CHECK(l2.occ_flag[i]);
  CHECK(std::abs(int(img.at(5, 5)) - 110) <= 1);
}

TEST_CASE("occluder library picks category then instance") {
  OccluderLibrary lib;
  CHECK(lib.empty());
  Rng rng = make_rng(9);
  CHECK_THROWS_AS(lib.pick(rng), InvalidArgument);
  for (int i = 0; i < 9; ++i) lib.add(solid(2 + i, 2, 255, OccluderCategory::Object));
  lib.add(solid(3, 3, 255, OccluderCategory::Hand));
  CHECK(lib.size() == 10);
  int hands = 0;
  for (int t = 0; t < 4000; ++t) hands += lib.pick(rng).category == OccluderCategory::Hand;
  CHECK(hands > 1800);
  CHECK(hands < 2200);
  CHECK_THROWS_AS(lib.add({Image(2, 2, 3), OccluderCategory::Hand}), InvalidArgument);
}

TEST_CASE("random placement size range") {
  Rng rng = make_rng(10);
  const Box face(50, 50, 100, 120);
  const Occluder occ = solid(40, 20, 255);
  for (int t = 0; t < 1000; ++t) {
    const Box p = random_placement(face, occ, rng);
    CHECK(p.w() >= 15.0);
    CHECK(p.w() <= 60.0);
    CHECK(p.h() == doctest::Approx(p.w() / 2));
    CHECK(face.contains(p.center()));
  }
}

TEST_CASE("synth_predict examples") {
  LandmarkSet sf = canonical_face({{32, 32}, 20});
  sf.occ_flag[3] = true;
  Rng rng = make_rng(11);
  CHECK(synth_predict(sf, {}, rng) == encode_stack(sf));

  NoiseModel drop;
  drop.dropout_prob = 1.0;
  for (const auto& h : synth_predict(sf, drop, rng)) CHECK(h.max_abs() == 0.0f);

  NoiseModel amp;
  amp.amplitude_min = 0.5;
  amp.amplitude_max = 0.9;
  const auto s = synth_predict(sf, amp, rng);
  const auto d = decode(s[3]);
  CHECK(d->raw_value < 0.0);
  CHECK(decode(s[4])->raw_value > 0.0);

  NoiseModel bad;
  bad.dropout_prob = 2.0;
  CHECK_THROWS_AS(synth_predict(sf, bad, rng), InvalidArgument);
}

TEST_CASE("pixel noise 0.05 keeps decoding within half a pixel") {
  Rng rng = make_rng(12);
  std::uniform_real_distribution<double> u(6, 58);
  NoiseModel noise;
  noise.pixel_noise_sigma = 0.05;
  int good = 0, total = 0;
  for (int t = 0; t < 1000 / 68 + 1; ++t) {
    LandmarkSet sf;
    for (auto& p : sf.points) p = {u(rng), u(rng)};
    const auto stack = synth_predict(sf, noise, rng);
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
      const auto d = decode(stack[i]);
      good += d && std::hypot(d->location.x - sf.points[i].x, d->location.y - sf.points[i].y) < 0.5;
      ++total;
    }
  }
  CHECK(double(good) / total >= 0.99);
}

TEST_CASE("deterministic replay") {
  const Image img = textured(320, 240, 3);
  const LandmarkSet lms = canonical_face({{160, 120}, 60});
  OccluderLibrary lib;
  lib.add(solid(10, 10, 255));
  lib.add(solid(10, 5, 255, OccluderCategory::Sunglasses));
  AugmentOptions opt;
  opt.occlusion_prob = 1.0;
  Rng a = make_rng(42), b = make_rng(42);
  const auto sa = generate_positives(img, lms, lib, opt, a, 5);
  const auto sb = generate_positives(img, lms, lib, opt, b, 5);
  for (std::size_t k = 0; k < sa.size(); ++k) {
    CHECK(sa[k].image == sb[k].image);
    CHECK(sa[k].labels == sb[k].labels);
    CHECK(sa[k].window == sb[k].window);
    CHECK(sa[k].landmarks.occ_flag == sb[k].landmarks.occ_flag);
  }
  Rng na = make_rng(43), nb = make_rng(43);
  const auto ga = generate_negatives(img, {box_from_landmarks(lms)}, opt, na, 4);
  const auto gb = generate_negatives(img, {box_from_landmarks(lms)}, opt, nb, 4);
  for (std::size_t k = 0; k < ga.size(); ++k) CHECK(ga[k].image == gb[k].image);
}

TEST_CASE("positive samples carry consistent labels") {
  const Image img = textured(320, 240, 4);
  LandmarkSet lms = canonical_face({{160, 120}, 50});
  lms.occ_flag[10] = true;  // source occlusion labels are ignored
  OccluderLibrary lib;
  lib.add(solid(10, 10, 255));
  AugmentOptions opt;
  opt.occlusion_prob = 0.5;
  Rng rng = make_rng(7);
  const auto samples = generate_positives(img, lms, lib, opt, rng, 40);
  int occluded_samples = 0, flipped = 0;
  for (const auto& s : samples) {
    CHECK(s.positive);
    CHECK(s.image.width() == 256);
    CHECK(s.labels.size() == kNumLandmarks);
    flipped += s.flipped;
    bool any = false;
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
      const Point2 p = s.landmarks.points[i];
      const bool inside = p.x >= 0 && p.x < 256 && p.y >= 0 && p.y < 256;
      if (!inside) {
        CHECK(s.labels[i].max_abs() == 0.0f);
        continue;
      }
      const auto d = decode(s.labels[i]);
      REQUIRE(d.has_value());
      // Blobs cut by the crop border decode with a bias; check the interior only.
      const bool interior = p.x >= 16 && p.x < 240 && p.y >= 16 && p.y < 240;
      if (interior) CHECK(std::hypot(d->location.x * 4 - p.x, d->location.y * 4 - p.y) < 0.5);
      CHECK((d->raw_value < 0) == bool(s.landmarks.occ_flag[i]));
      any |= s.landmarks.occ_flag[i];
    }
    occluded_samples += any;
  }
  CHECK(occluded_samples > 5);
  CHECK(occluded_samples < 35);
  CHECK(flipped > 5);
  CHECK(flipped < 35);
}

TEST_CASE("negative samples have zero labels and clear windows") {
  const Image img = textured(320, 240, 5);
  const std::vector<Box> faces{Box(100, 60, 100, 120)};
  Rng rng = make_rng(8);
  for (const auto& s : generate_negatives(img, faces, {}, rng, 20)) {
    CHECK_FALSE(s.positive);
    CHECK(iou(s.window, faces[0]) < 0.05);
    for (const auto& h : s.labels) CHECK(h.max_abs() == 0.0f);
  }
}
