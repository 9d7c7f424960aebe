#include "ohg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ohg/io.hpp"

namespace ohg {

namespace {

double uniform(Rng& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(Rng& rng, double sigma) {
  if (!(sigma > 0.0)) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

std::uint8_t clamp_u8(double v) { return std::uint8_t(std::clamp(std::lround(v), 0L, 255L)); }

Point2 centroid(const std::vector<Point2>& pts) {
  Point2 c{0.0, 0.0};
  for (const auto& p : pts) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= double(pts.size());
  c.y /= double(pts.size());
  return c;
}

// Crop of rotate(img, angle, center) over `window`, resampled once.
Image crop_rotated(const Image& img, Point2 center, double angle_deg, const Box& window, int out_size) {
  Image out(out_size, out_size, img.channels());
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      const Point2 q{window.x() + (x + 0.5) * window.w() / out_size, window.y() + (y + 0.5) * window.h() / out_size};
      const Point2 src = rotate_point(q, -angle_deg, center);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = clamp_u8(img.sample(src.x, src.y, c));
    }
  }
  return out;
}

HeatmapStack label_stack(const LandmarkSet& input_frame, const EncodeParams& enc) {
  HeatmapStack stack;
  stack.reserve(kNumLandmarks);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const Point2 p = map_point(input_frame.points[i], CoordFrame::input(), CoordFrame::score());
    const bool inside = p.x >= 0.0 && p.x < kScoreSize && p.y >= 0.0 && p.y < kScoreSize;
    if (!inside) {
      stack.emplace_back();
      continue;
    }
    stack.push_back(encode(p, input_frame.occ_flag[i] ? LandmarkState::Occluded : LandmarkState::Visible, enc));
  }
  return stack;
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(index), std::uint32_t(index >> 32)};
  return Rng(seq);
}

double level_angle(const LandmarkSet& lms) {
  lms.validate();
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& pr : level_pairs()) {
    if (!lms.detected[pr[0]] || !lms.detected[pr[1]]) continue;
    const double dx = lms.points[pr[1]].x - lms.points[pr[0]].x;
    const double dy = lms.points[pr[1]].y - lms.points[pr[0]].y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx + syy > 0.0)) throw InvalidArgument("level_angle: symmetric landmark pairs are coincident");
  return 0.5 * std::atan2(sxy, 0.5 * (sxx - syy)) * 180.0 / std::numbers::pi;
}

LevelResult derotate_roll(const Image& img, const LandmarkSet& lms) {
  const double angle = level_angle(lms);
  const Point2 c = centroid(lms.detected_points());
  auto [out, pts] = rotate(img, angle, c, lms);
  return {std::move(out), std::move(pts), angle};
}

void SamplerConfig::validate() const {
  if (!(0.0 <= neg_max_iou && neg_max_iou < pos_min_iou && pos_min_iou <= 1.0)) {
    throw InvalidArgument("sampler: need 0 <= neg_max_iou < pos_min_iou <= 1");
  }
  if (!(pos_scale_min > 0.0 && pos_scale_max >= pos_scale_min) || pos_shift < 0.0 || !(neg_min_side > 0.0) ||
      max_attempts < 1) {
    throw InvalidArgument("sampler: invalid proposal parameters");
  }
}

Box sample_positive(const Box& gt, const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  const double side0 = std::sqrt(gt.area());
  const Point2 c = gt.center();
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const double side = side0 * uniform(rng, cfg.pos_scale_min, cfg.pos_scale_max);
    const double cx = c.x + uniform(rng, -cfg.pos_shift, cfg.pos_shift) * side;
    const double cy = c.y + uniform(rng, -cfg.pos_shift, cfg.pos_shift) * side;
    Box b(cx - 0.5 * side, cy - 0.5 * side, side, side);
    if (iou(b, gt) >= cfg.pos_min_iou) return b;
  }
  throw SamplingError("sample_positive: rejection budget exhausted");
}

Box sample_negative(int image_width, int image_height, const std::vector<Box>& gts, const SamplerConfig& cfg,
                    Rng& rng) {
  cfg.validate();
  const double max_side = std::min(image_width, image_height);
  if (max_side < cfg.neg_min_side) throw InvalidArgument("sample_negative: image too small for a window");
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const double side = uniform(rng, cfg.neg_min_side, max_side);
    const double x = uniform(rng, 0.0, image_width - side);
    const double y = uniform(rng, 0.0, image_height - side);
    Box b(x, y, side, side);
    const bool ok = std::all_of(gts.begin(), gts.end(), [&](const Box& g) { return iou(b, g) < cfg.neg_max_iou; });
    if (ok) return b;
  }
  throw SamplingError("sample_negative: rejection budget exhausted");
}

std::string to_string(OccluderCategory c) {
  switch (c) {
    case OccluderCategory::Object:
      return "object";
    case OccluderCategory::Hand:
      return "hand";
    case OccluderCategory::Sunglasses:
      return "sunglasses";
  }
  return "object";
}

void OccluderLibrary::add(Occluder occ) {
  if (occ.image.channels() != 4) throw InvalidArgument("occluder image must be RGBA");
  by_category_[std::size_t(occ.category)].push_back(std::move(occ));
}

OccluderLibrary OccluderLibrary::load(const std::filesystem::path& root) {
  OccluderLibrary lib;
  for (OccluderCategory cat : {OccluderCategory::Object, OccluderCategory::Hand, OccluderCategory::Sunglasses}) {
    const auto dir = root / to_string(cat);
    if (!std::filesystem::is_directory(dir)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      Image img = read_png(f);
      if (img.channels() != 4) throw FormatError(f.string() + ": occluder PNG has no alpha channel");
      lib.add({std::move(img), cat});
    }
  }
  return lib;
}

bool OccluderLibrary::empty() const { return size() == 0; }

std::size_t OccluderLibrary::size() const {
  std::size_t n = 0;
  for (const auto& c : by_category_) n += c.size();
  return n;
}

const Occluder& OccluderLibrary::pick(Rng& rng) const {
  std::vector<std::size_t> cats;
  for (std::size_t i = 0; i < by_category_.size(); ++i) {
    if (!by_category_[i].empty()) cats.push_back(i);
  }
  if (cats.empty()) throw InvalidArgument("occluder library is empty");
  const std::size_t c = cats[std::uniform_int_distribution<std::size_t>(0, cats.size() - 1)(rng)];
  const auto& items = by_category_[c];
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

Box random_placement(const Box& face_box, const Occluder& occ, Rng& rng, double min_frac, double max_frac) {
  const double w = face_box.w() * uniform(rng, min_frac, max_frac);
  const double h = w * double(occ.image.height()) / double(occ.image.width());
  const double cx = uniform(rng, face_box.x(), face_box.right());
  const double cy = uniform(rng, face_box.y(), face_box.bottom());
  return Box(cx - 0.5 * w, cy - 0.5 * h, w, h);
}

std::pair<Image, LandmarkSet> composite_occluder(const Image& face, const LandmarkSet& lms, const Occluder& occ,
                                                 const Box& placement) {
  if (occ.image.channels() != 4) throw InvalidArgument("composite_occluder: occluder must be RGBA");
  const Image& o = occ.image;
  const double sx = o.width() / placement.w(), sy = o.height() / placement.h();
  auto to_occ = [&](Point2 p) { return Point2{(p.x - placement.x()) * sx, (p.y - placement.y()) * sy}; };

  Image out = face;
  const int x0 = std::max(0, int(std::floor(placement.x())));
  const int x1 = std::min(face.width(), int(std::ceil(placement.right())));
  const int y0 = std::max(0, int(std::floor(placement.y())));
  const int y1 = std::min(face.height(), int(std::ceil(placement.bottom())));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const Point2 q = to_occ({x + 0.5, y + 0.5});
      const double a = o.sample(q.x, q.y, 3) / 255.0;
      if (a <= 0.0) continue;
      const double r = o.sample(q.x, q.y, 0), g = o.sample(q.x, q.y, 1), b = o.sample(q.x, q.y, 2);
      if (face.channels() == 1) {
        const double l = 0.299 * r + 0.587 * g + 0.114 * b;
        out.at(x, y, 0) = clamp_u8(a * l + (1.0 - a) * face.at(x, y, 0));
      } else {
        const double rgb[3] = {r, g, b};
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = clamp_u8(a * rgb[c] + (1.0 - a) * face.at(x, y, c));
      }
    }
  }

  LandmarkSet labels = lms;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Point2 q = to_occ(labels.points[i]);
    if (o.sample(q.x, q.y, 3) / 255.0 > 0.5) {
      labels.occ_flag[i] = true;
      labels.occ_score[i] = -1.0;
    }
  }
  return {std::move(out), std::move(labels)};
}

void NoiseModel::validate() const {
  if (pixel_noise_sigma < 0.0 || center_jitter_sigma < 0.0 || amplitude_min < 0.0 || amplitude_max < amplitude_min ||
      dropout_prob < 0.0 || dropout_prob > 1.0) {
    throw InvalidArgument("noise model parameters must be non-negative (dropout in [0, 1])");
  }
}

SynthPrediction synth_predict_detailed(const LandmarkSet& gt, const NoiseModel& noise, Rng& rng, double sigma) {
  gt.validate();
  noise.validate();
  SynthPrediction out;
  out.stack.assign(kNumLandmarks, Heatmap());
  out.centers.resize(kNumLandmarks);
  out.dropped.assign(kNumLandmarks, false);
  std::bernoulli_distribution drop(noise.dropout_prob);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const bool dropped = noise.dropout_prob > 0.0 && drop(rng);
    const Point2 c{gt.points[i].x + normal(rng, noise.center_jitter_sigma),
                   gt.points[i].y + normal(rng, noise.center_jitter_sigma)};
    const double amp = uniform(rng, noise.amplitude_min, noise.amplitude_max) * (gt.occ_flag[i] ? -1.0 : 1.0);
    out.centers[i] = c;
    out.dropped[i] = dropped;
    Heatmap& h = out.stack[i];
    if (dropped) continue;
    render_gaussian(h, c, amp, sigma);
    if (noise.pixel_noise_sigma > 0.0) {
      std::normal_distribution<double> pn(0.0, noise.pixel_noise_sigma);
      for (float& v : h.values()) v = float(double(v) + pn(rng));
    }
  }
  return out;
}

HeatmapStack synth_predict(const LandmarkSet& gt, const NoiseModel& noise, Rng& rng, double sigma) {
  return synth_predict_detailed(gt, noise, rng, sigma).stack;
}

std::vector<TrainingSample> generate_positives(const Image& image, const LandmarkSet& lms,
                                               const OccluderLibrary& occluders, const AugmentOptions& opt, Rng& rng,
                                               int count) {
  LandmarkSet labels = lms;
  // Source annotations are treated as fully visible.
  std::fill(labels.occ_flag.begin(), labels.occ_flag.end(), false);
  std::fill(labels.occ_score.begin(), labels.occ_score.end(), 1.0);

  const Image eq = clahe(image, opt.clahe);
  const LevelResult level = derotate_roll(eq, labels);
  const Point2 c = centroid(level.landmarks.detected_points());

  std::vector<TrainingSample> out;
  out.reserve(std::size_t(std::max(count, 0)));
  for (int s = 0; s < count; ++s) {
    const double roll = uniform(rng, -opt.sampler.roll_range_deg, opt.sampler.roll_range_deg);
    LandmarkSet pts = level.landmarks;
    for (auto& p : pts.points) p = rotate_point(p, roll, c);
    const Box gt = box_from_landmarks(pts, opt.sampler.top_extend);
    const Box win = sample_positive(gt, opt.sampler, rng);

    TrainingSample ts;
    ts.positive = true;
    ts.window = win;
    ts.image = crop_rotated(level.image, c, roll, win, kInputSize);
    const CoordFrame input = CoordFrame::input(win);
    ts.landmarks = transform_points(pts, [&](Point2 p) { return map_point(p, CoordFrame::original(), input); });

    if (!occluders.empty() && uniform(rng, 0.0, 1.0) < opt.occlusion_prob) {
      const Occluder& occ = occluders.pick(rng);
      const Box face_in = Box((gt.x() - win.x()) * kInputSize / win.w(), (gt.y() - win.y()) * kInputSize / win.h(),
                              gt.w() * kInputSize / win.w(), gt.h() * kInputSize / win.h());
      const Box place = random_placement(face_in, occ, rng);
      std::tie(ts.image, ts.landmarks) = composite_occluder(ts.image, ts.landmarks, occ, place);
    }
    if (uniform(rng, 0.0, 1.0) < opt.flip_prob) {
      std::tie(ts.image, ts.landmarks) = flip_horizontal(ts.image, ts.landmarks);
      ts.flipped = true;
    }
    ts.labels = label_stack(ts.landmarks, opt.encode);
    out.push_back(std::move(ts));
  }
  return out;
}

std::vector<TrainingSample> generate_negatives(const Image& image, const std::vector<Box>& faces,
                                               const AugmentOptions& opt, Rng& rng, int count) {
  const Image eq = clahe(image, opt.clahe);
  std::vector<TrainingSample> out;
  for (int s = 0; s < count; ++s) {
    const Box win = sample_negative(image.width(), image.height(), faces, opt.sampler, rng);
    TrainingSample ts;
    ts.window = win;
    ts.image = crop_resize(eq, win, kInputSize);
    if (uniform(rng, 0.0, 1.0) < opt.flip_prob) {
      ts.image = flip_horizontal(ts.image, LandmarkSet{}).first;
      ts.flipped = true;
    }
    ts.labels.assign(kNumLandmarks, Heatmap());
    out.push_back(std::move(ts));
  }
  return out;
}

}  // namespace ohg
