#include "ohg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace ohg {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::size_t(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Synthetic data

std::vector<Eigen::Vector3d> synthetic_head_68(const FaceModel3D& model) {
  constexpr double kScale = 75.0;  // template unit -> mm
  const LandmarkSet tmpl = canonical_face({{0.0, 0.0}, 1.0, 0.15, 0.12});
  const Point2 tip = tmpl.points[lm::kNoseTip];
  std::vector<Eigen::Vector3d> pts(kNumLandmarks);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const double tx = tmpl.points[i].x - tip.x, ty = tmpl.points[i].y - tip.y;
    // Rounded head: depth grows away from the vertical midline; the nose
    // ridge rises toward the tip.
    double z = 25.0 + 55.0 * tx * tx;
    if (i >= 27 && i <= 30) z = 8.0 * (30.0 - double(i));
    pts[i] = Eigen::Vector3d(kScale * tx, kScale * ty, z);
  }
  const auto& rigid = rigid_point_indices();
  for (std::size_t k = 0; k < kNumRigid; ++k) pts[rigid[k]] = model.points[k];
  return pts;
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(Rng& rng, double sigma) {
  if (!(sigma > 0.0)) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

std::string face_id(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "face_%04d", i);
  return buf;
}

}  // namespace

std::vector<Detection> synth_detections(const LandmarkSet& gt, const SynthConfig& cfg, const EncodeParams& enc,
                                        Rng& rng) {
  const Box gt_box = box_from_landmarks(gt);
  const double side0 = cfg.box_margin * std::max(gt_box.w(), gt_box.h());
  std::vector<Detection> dets;
  for (int k = 0; k < cfg.dets_per_face; ++k) {
    const double side = side0 * (1.0 + uniform(rng, -cfg.box_scale, cfg.box_scale));
    const Point2 c{gt_box.center().x + normal(rng, cfg.box_shift * side),
                   gt_box.center().y + normal(rng, cfg.box_shift * side)};
    const Box box(c.x - 0.5 * side, c.y - 0.5 * side, side, side);
    const CoordFrame score = CoordFrame::score(box);
    LandmarkSet in_score =
        transform_points(gt, [&](Point2 p) { return map_point(p, CoordFrame::original(), score); });
    Detection d{box, 1.0 - 0.01 * k, synth_predict(in_score, cfg.noise, rng, enc.sigma)};
    dets.push_back(std::move(d));
  }
  return dets;
}

std::vector<SynthImage> generate_synthetic(const SynthConfig& cfg, const FaceModel3D& model, const EncodeParams& enc) {
  const auto head = synthetic_head_68(model);
  const CameraIntrinsics cam = CameraIntrinsics::for_image(cfg.image_width, cfg.image_height);
  std::vector<SynthImage> out;
  for (int i = 0; i < cfg.faces; ++i) {
    Rng rng = make_rng(cfg.seed, std::uint64_t(i));
    SynthImage im;
    im.id = face_id(i);

    const PoseAngles pose{uniform(rng, -cfg.yaw_range, cfg.yaw_range), uniform(rng, -cfg.pitch_range, cfg.pitch_range),
                          uniform(rng, -cfg.roll_range, cfg.roll_range)};
    const Eigen::Matrix3d rot = camera_to_head_frame(euler_to_rotation(pose));
    const double tz = uniform(rng, cfg.tz_min, cfg.tz_max);
    const Eigen::Vector3d t(uniform(rng, -0.15, 0.15) * tz, uniform(rng, -0.1, 0.1) * tz, tz);

    std::vector<Point2> pts(kNumLandmarks);
    for (std::size_t l = 0; l < kNumLandmarks; ++l) {
      const Eigen::Vector3d c = rot * head[l] + t;
      pts[l] = {cam.principal.x + cam.focal * c.x() / c.z(), cam.principal.y + cam.focal * c.y() / c.z()};
    }
    LandmarkSet gt(std::move(pts));
    const Box face_box = box_from_landmarks(gt);
    if (uniform(rng, 0.0, 1.0) < cfg.occlusion_prob) {
      const double w = face_box.w() * uniform(rng, 0.25, 0.6);
      const double h = face_box.h() * uniform(rng, 0.25, 0.6);
      const double cx = uniform(rng, face_box.x(), face_box.right());
      const double cy = uniform(rng, face_box.y(), face_box.bottom());
      const Box occ(cx - 0.5 * w, cy - 0.5 * h, w, h);
      for (std::size_t l = 0; l < kNumLandmarks; ++l) {
        if (occ.contains(gt.points[l])) {
          gt.occ_flag[l] = true;
          gt.occ_score[l] = -1.0;
        }
      }
    }
    im.truth = {im.id, face_box, gt, pose.yaw, std::pair{double(cfg.image_width), double(cfg.image_height)}};
    im.detections = synth_detections(gt, cfg, enc, rng);

    SamplerConfig neg;
    neg.neg_min_side = std::min(48.0, 0.5 * std::min(cfg.image_width, cfg.image_height));
    for (int k = 0; k < cfg.negatives_per_image; ++k) {
      const Box b = sample_negative(cfg.image_width, cfg.image_height, {face_box}, neg, rng);
      HeatmapStack empty(kNumLandmarks, Heatmap());
      if (cfg.noise.pixel_noise_sigma > 0.0) {
        std::normal_distribution<double> pn(0.0, cfg.noise.pixel_noise_sigma);
        for (auto& h : empty) {
          for (float& v : h.values()) v = float(pn(rng));
        }
      }
      im.detections.push_back({b, 0.5, std::move(empty)});
    }
    out.push_back(std::move(im));
  }
  return out;
}

void write_synthetic(const std::filesystem::path& dir, const std::vector<SynthImage>& images) {
  std::filesystem::create_directories(dir / "heatmaps");
  std::vector<Json> dets, truth;
  for (const auto& im : images) {
    for (std::size_t k = 0; k < im.detections.size(); ++k) {
      const std::string rel = "heatmaps/" + im.id + "_d" + std::to_string(k) + ".ohm";
      write_heatmaps(dir / rel, im.detections[k].stack);
      DetectionRecord r{im.id, im.detections[k].box, im.detections[k].det_score, rel, im.truth.image_size};
      dets.push_back(to_json(r));
    }
    truth.push_back(to_json(im.truth));
  }
  write_jsonl(dir / "detections.jsonl", dets);
  write_jsonl(dir / "ground_truth.jsonl", truth);
}

// ---------------------------------------------------------------------------
// Refinement over records

std::vector<Json> refine_records(const std::vector<Json>& records, const std::filesystem::path& base_dir,
                                 const RefineParams& params, const PoseOptions& pose, int jobs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<DetectionRecord>> by_image;
  for (const Json& j : records) {
    DetectionRecord r = detection_from_json(j);
    if (!r.heatmap) continue;
    if (!by_image.count(r.image)) order.push_back(r.image);
    by_image[r.image].push_back(std::move(r));
  }

  std::vector<std::vector<Json>> per_image(order.size());
  parallel_for(order.size(), jobs, [&](std::size_t gi) {
    const auto& recs = by_image.at(order[gi]);
    std::vector<Detection> dets;
    dets.reserve(recs.size());
    for (const auto& r : recs) {
      std::filesystem::path p(*r.heatmap);
      if (p.is_relative()) p = base_dir / p;
      dets.push_back({r.box, r.det_score, read_heatmaps(p)});
    }
    const auto faces = refine_detections(dets, params);
    const auto& size = recs.front().image_size;
    for (const auto& f : faces) {
      std::optional<PoseAngles> angles;
      if (pose.enabled && size) {
        CameraIntrinsics cam = CameraIntrinsics::for_image(size->first, size->second);
        if (pose.focal) cam.focal = *pose.focal;
        try {
          angles = estimate_head_pose(f.landmarks, pose.model, cam, pose.exclude_occluded);
        } catch (const PoseError&) {
          angles.reset();
        }
      }
      per_image[gi].push_back(refined_to_json(order[gi], f, angles));
    }
  });

  std::vector<Json> out;
  for (auto& v : per_image) {
    for (auto& j : v) out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation over records

DatasetMatch match_records(const std::vector<Json>& refined, const std::vector<GroundTruthFace>& truth,
                           double iou_thresh) {
  std::vector<std::string> images;
  std::map<std::string, std::vector<std::size_t>> det_idx, gt_idx;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!gt_idx.count(truth[i].image) && !det_idx.count(truth[i].image)) images.push_back(truth[i].image);
    gt_idx[truth[i].image].push_back(i);
  }
  for (std::size_t i = 0; i < refined.size(); ++i) {
    const std::string img = refined[i].at("image").get<std::string>();
    if (!gt_idx.count(img) && !det_idx.count(img)) images.push_back(img);
    det_idx[img].push_back(i);
  }

  DatasetMatch dm;
  for (const auto& img : images) {
    const auto& di = det_idx[img];
    const auto& gi = gt_idx[img];
    std::vector<ScoredBox> dets;
    for (std::size_t i : di) {
      dets.push_back({box_from_json(refined[i].at("box")), refined[i].at("face_score").get<double>()});
    }
    std::vector<Box> gts;
    for (std::size_t i : gi) gts.push_back(truth[i].box);
    MatchResult m = match_detections(dets, gts, iou_thresh);
    for (std::size_t k = 0; k < di.size(); ++k) {
      if (m.det_match[k]) dm.pairs.push_back({di[k], gi[*m.det_match[k]]});
    }
    dm.per_image.push_back(std::move(m));
  }
  return dm;
}

PRCurve eval_detection(const std::vector<Json>& refined, const std::vector<GroundTruthFace>& truth,
                       double iou_thresh) {
  return pr_curve(match_records(refined, truth, iou_thresh).per_image);
}

PRCurve eval_occlusion(const std::vector<Json>& refined, const std::vector<GroundTruthFace>& truth,
                       std::span<const double> thresholds, double iou_thresh) {
  const DatasetMatch dm = match_records(refined, truth, iou_thresh);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const auto& p : dm.pairs) {
    const auto occ = refined[p.refined].at("occ_scores").get<std::vector<double>>();
    const auto& gt = truth[p.truth].landmarks;
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
      scores.push_back(occ.at(i));
      labels.push_back(gt.occ_flag[i]);
    }
  }
  return occlusion_pr(scores, labels, thresholds);
}

std::vector<double> default_occlusion_thresholds() {
  std::vector<double> t;
  for (int i = -20; i <= 20; ++i) t.push_back(0.05 * i);
  return t;
}

YawMetrics eval_yaw(const std::vector<Json>& refined, const std::vector<GroundTruthFace>& truth,
                    double iou_thresh, double success_deg) {
  const DatasetMatch dm = match_records(refined, truth, iou_thresh);
  std::map<std::size_t, std::size_t> gt_to_refined;
  for (const auto& p : dm.pairs) gt_to_refined[p.truth] = p.refined;
  std::vector<YawSample> samples;
  for (std::size_t g = 0; g < truth.size(); ++g) {
    if (!truth[g].yaw) continue;
    YawSample s{std::nullopt, *truth[g].yaw};
    if (auto it = gt_to_refined.find(g); it != gt_to_refined.end()) {
      const Json& r = refined[it->second];
      if (r.contains("pose")) s.predicted = pose_from_json(r.at("pose")).yaw;
    }
    samples.push_back(s);
  }
  return yaw_metrics(samples, success_deg);
}

namespace {

std::string opt_cell(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os.precision(10);
  os << *v;
  return os.str();
}

}  // namespace

std::string yaw_metrics_csv(const YawMetrics& m) {
  std::ostringstream os;
  os.precision(10);
  os << "faces,detected,DR,SR,mean_abs_err,std_abs_err\n";
  os << m.num_faces << ',' << m.num_detected << ',' << m.detection_rate << ',' << opt_cell(m.success_rate) << ','
     << opt_cell(m.mean_abs_err) << ',' << opt_cell(m.std_abs_err) << '\n';
  return os.str();
}

std::string features_csv(const std::vector<Json>& refined) {
  std::vector<std::optional<double>> left, right, mouth;
  std::vector<bool> mouth_occ;
  for (const Json& r : refined) {
    const LandmarkSet lms = landmarks_from_json(r);
    const EyeOpening e = eye_opening(lms);
    const MouthOpening m = mouth_opening(lms);
    left.push_back(e.left);
    right.push_back(e.right);
    mouth.push_back(m.area_ratio);
    mouth_occ.push_back(m.occluded);
  }
  const auto nl = min_max_normalize(left), nr = min_max_normalize(right), nm = min_max_normalize(mouth);
  std::ostringstream os;
  os << "frame,image,eye_left,eye_right,mouth,mouth_occluded,eye_left_norm,eye_right_norm,mouth_norm\n";
  for (std::size_t i = 0; i < refined.size(); ++i) {
    os << i << ',' << refined[i].value("image", std::string{}) << ',' << opt_cell(left[i]) << ',' << opt_cell(right[i])
       << ',' << opt_cell(mouth[i]) << ',' << (mouth_occ[i] ? 1 : 0) << ',' << opt_cell(nl[i]) << ','
       << opt_cell(nr[i]) << ',' << opt_cell(nm[i]) << '\n';
  }
  return os.str();
}

}  // namespace ohg
