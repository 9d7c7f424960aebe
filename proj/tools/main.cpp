// ohg: command-line front end for the post-network face pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ohg/augment.hpp"
#include "ohg/evaluation.hpp"
#include "ohg/io.hpp"
#include "ohg/pipeline.hpp"
#include "ohg/pose.hpp"
#include "ohg/refine.hpp"

namespace fs = std::filesystem;
using namespace ohg;

namespace {

struct Globals {
  double occ_threshold = 0.2;
  double nms_overlap = 0.2;
  double sigma = 1.5;
  std::optional<double> focal;
  std::string model;
  std::uint64_t seed = 0;
  int jobs = 1;

  RefineParams refine() const {
    RefineParams p;
    p.occ_threshold = occ_threshold;
    p.nms_overlap = nms_overlap;
    p.sigma = sigma;
    return p;
  }
  EncodeParams encode() const {
    EncodeParams e;
    e.sigma = sigma;
    return e;
  }
  FaceModel3D face_model() const {
    FaceModel3D m = model.empty() ? FaceModel3D::generic() : FaceModel3D::load_csv(model);
    m.validate();
    return m;
  }
};

Box parse_box(const std::vector<double>& v) {
  if (v.size() != 4) throw InvalidArgument("--box takes x y w h");
  return Box(v[0], v[1], v[2], v[3]);
}

// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open file for writing");
  out << text;
}

std::string jsonl_text(const std::vector<Json>& recs) {
  std::string s;
  for (const auto& r : recs) s += r.dump() + "\n";
  return s;
}

std::vector<GroundTruthFace> read_truth(const std::string& path) {
  std::vector<GroundTruthFace> out;
  std::size_t line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(ground_truth_from_json(j));
    } catch (const FormatError& e) {
      throw FormatError(path + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

LandmarkSet with_occluded(std::vector<Point2> pts, const std::vector<std::size_t>& occluded) {
  LandmarkSet lms(std::move(pts));
  for (std::size_t i : occluded) {
    if (i >= kNumLandmarks) throw InvalidArgument("--occluded index out of range: " + std::to_string(i));
    lms.occ_flag[i] = true;
    lms.occ_score[i] = -1.0;
  }
  return lms;
}

LandmarkSet to_score_frame(const LandmarkSet& lms, const Box& box) {
  return transform_points(lms, [&](Point2 p) { return map_point(p, CoordFrame::original(), CoordFrame::score(box)); });
}

NoiseModel noise_from(double pixel, double jitter, double amp_min, double amp_max, double dropout) {
  NoiseModel n;
  n.pixel_noise_sigma = pixel;
  n.center_jitter_sigma = jitter;
  n.amplitude_min = amp_min;
  n.amplitude_max = amp_max;
  n.dropout_prob = dropout;
  n.validate();
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-aware facial landmark post-processing: heatmap codec, refinement, pose, evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file mirroring the flags; explicit flags win");

  Globals g;
  app.add_option("--occ-threshold", g.occ_threshold, "Occlusion score threshold")->capture_default_str();
  app.add_option("--nms-overlap", g.nms_overlap, "IOU for grouping detections")->capture_default_str();
  app.add_option("--sigma", g.sigma, "Gaussian sigma in score pixels")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--focal", g.focal, "Focal length in pixels (default: image width)")->check(CLI::PositiveNumber);
  app.add_option("--model", g.model, "3D face model CSV (default: built-in generic model)");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.fallthrough();

  // encode
  auto* enc = app.add_subcommand("encode", "pts + detection box -> heatmap file");
  std::string enc_pts, enc_out;
  std::vector<double> enc_box;
  std::vector<std::size_t> enc_occ;
  bool enc_negative = false;
  enc->add_option("--pts", enc_pts, "Landmarks in original-image coordinates")->check(CLI::ExistingFile);
  enc->add_option("--box", enc_box, "Detection box x y w h")->expected(4)->required();
  enc->add_option("--occluded", enc_occ, "Zero-based indices of occluded landmarks")->delimiter(',');
  enc->add_flag("--negative", enc_negative, "Write an all-zero non-face label");
  enc->add_option("--out", enc_out, "Output .ohm file")->required();

  // decode
  auto* dec = app.add_subcommand("decode", "heatmap file + detection box -> landmarks JSON");
  std::string dec_heatmap, dec_out, dec_pts;
  std::vector<double> dec_box;
  dec->add_option("--heatmap", dec_heatmap, "Input .ohm file")->required()->check(CLI::ExistingFile);
  dec->add_option("--box", dec_box, "Detection box x y w h")->expected(4)->required();
  dec->add_option("--out", dec_out, "Output JSON (default stdout)");
  dec->add_option("--pts-out", dec_pts, "Also write the points as a .pts file");

  // refine
  auto* ref = app.add_subcommand("refine", "detections JSONL -> refined faces JSONL");
  std::string ref_in, ref_out, ref_base;
  bool ref_no_pose = false, ref_excl = false;
  ref->add_option("--detections", ref_in, "Detection records")->required()->check(CLI::ExistingFile);
  ref->add_option("--out", ref_out, "Output JSONL (default stdout)");
  ref->add_option("--base-dir", ref_base, "Directory for relative heatmap paths (default: detections dir)");
  ref->add_flag("--no-pose", ref_no_pose, "Skip head-pose estimation");
  ref->add_flag("--exclude-occluded", ref_excl, "Leave occluded rigid landmarks out of pose");

  // pose
  auto* pose = app.add_subcommand("pose", "landmarks -> yaw/pitch/roll JSON");
  std::string pose_in, pose_pts, pose_out;
  std::vector<double> pose_size;
  bool pose_excl = false;
  pose->add_option("--landmarks", pose_in, "JSONL of landmark records (e.g. refine output)")->check(CLI::ExistingFile);
  pose->add_option("--pts", pose_pts, "Single .pts file instead of --landmarks")->check(CLI::ExistingFile);
  pose->add_option("--image-size", pose_size, "Image width height (camera default)")->expected(2);
  pose->add_flag("--exclude-occluded", pose_excl, "Leave occluded rigid landmarks out");
  pose->add_option("--out", pose_out, "Output JSONL (default stdout)");

  // augment
  auto* aug = app.add_subcommand("augment", "image + pts -> sampled training crops and labels");
  std::string aug_image, aug_pts, aug_occ, aug_out;
  int aug_pos = 90, aug_neg = 60;
  double aug_occ_prob = 0.5, aug_flip = 0.5;
  aug->add_option("--image", aug_image, "Source PNG")->required()->check(CLI::ExistingFile);
  aug->add_option("--pts", aug_pts, "Source landmarks")->required()->check(CLI::ExistingFile);
  aug->add_option("--occluders", aug_occ, "Occluder library root (object/hand/sunglasses)")->check(CLI::ExistingDirectory);
  aug->add_option("--positives", aug_pos, "Positive samples")->capture_default_str();
  aug->add_option("--negatives", aug_neg, "Negative samples")->capture_default_str();
  aug->add_option("--occlusion-prob", aug_occ_prob, "Chance a positive gets an occluder")->capture_default_str();
  aug->add_option("--flip-prob", aug_flip, "Chance of a horizontal flip")->capture_default_str();
  aug->add_option("--out", aug_out, "Output directory")->required();

  // synth
  auto* syn = app.add_subcommand("synth", "synthetic noisy heatmaps: a full dataset, or one stack from --pts");
  std::string syn_out, syn_pts;
  std::vector<double> syn_box;
  std::vector<std::size_t> syn_occ;
  SynthConfig sc;
  double syn_pixel = 0.0, syn_jitter = 0.0, syn_amp_min = 1.0, syn_amp_max = 1.0, syn_drop = 0.0;
  syn->add_option("--out", syn_out, "Output directory (dataset) or .ohm file (with --pts)")->required();
  syn->add_option("--pts", syn_pts, "Render one noisy stack for these landmarks")->check(CLI::ExistingFile);
  syn->add_option("--box", syn_box, "Detection box x y w h (with --pts)")->expected(4);
  syn->add_option("--occluded", syn_occ, "Occluded landmark indices (with --pts)")->delimiter(',');
  syn->add_option("--faces", sc.faces, "Number of synthetic images")->capture_default_str();
  syn->add_option("--dets-per-face", sc.dets_per_face, "Jittered detections per face")->capture_default_str();
  syn->add_option("--negatives-per-image", sc.negatives_per_image, "Background detections per image")
      ->capture_default_str();
  syn->add_option("--occlusion-prob", sc.occlusion_prob, "Chance a face gets an occluder")->capture_default_str();
  syn->add_option("--pixel-noise", syn_pixel, "Additive heatmap noise sigma")->capture_default_str();
  syn->add_option("--jitter", syn_jitter, "Blob center jitter sigma, score pixels")->capture_default_str();
  syn->add_option("--amp-min", syn_amp_min, "Minimum blob amplitude")->capture_default_str();
  syn->add_option("--amp-max", syn_amp_max, "Maximum blob amplitude")->capture_default_str();
  syn->add_option("--dropout", syn_drop, "Chance a map is zeroed")->capture_default_str();

  // eval-det
  auto* edet = app.add_subcommand("eval-det", "refined JSONL + ground truth -> detection PR CSV");
  std::string edet_ref, edet_gt, edet_out;
  double edet_iou = 0.5;
  edet->add_option("--refined", edet_ref, "Refined faces")->required()->check(CLI::ExistingFile);
  edet->add_option("--truth", edet_gt, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  edet->add_option("--iou", edet_iou, "Match overlap")->capture_default_str();
  edet->add_option("--out", edet_out, "Output CSV (default stdout)");

  // eval-occ
  auto* eocc = app.add_subcommand("eval-occ", "refined JSONL + ground truth -> occlusion PR CSV");
  std::string eocc_ref, eocc_gt, eocc_out;
  std::vector<double> eocc_th;
  double eocc_iou = 0.5;
  eocc->add_option("--refined", eocc_ref, "Refined faces")->required()->check(CLI::ExistingFile);
  eocc->add_option("--truth", eocc_gt, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  eocc->add_option("--thresholds", eocc_th, "Comma-separated thresholds (default -1:0.05:1)")->delimiter(',');
  eocc->add_option("--iou", eocc_iou, "Match overlap")->capture_default_str();
  eocc->add_option("--out", eocc_out, "Output CSV (default stdout)");

  // eval-yaw
  auto* eyaw = app.add_subcommand("eval-yaw", "refined JSONL + ground truth -> DR/SR/yaw error CSV");
  std::string eyaw_ref, eyaw_gt, eyaw_out;
  double eyaw_iou = 0.5, eyaw_success = 15.0;
  eyaw->add_option("--refined", eyaw_ref, "Refined faces with pose")->required()->check(CLI::ExistingFile);
  eyaw->add_option("--truth", eyaw_gt, "Ground truth JSONL with yaw")->required()->check(CLI::ExistingFile);
  eyaw->add_option("--iou", eyaw_iou, "Match overlap")->capture_default_str();
  eyaw->add_option("--success-deg", eyaw_success, "Success tolerance, degrees")->capture_default_str();
  eyaw->add_option("--out", eyaw_out, "Output CSV (default stdout)");

  // features
  auto* feat = app.add_subcommand("features", "landmark sequence -> eye/mouth openness CSV");
  std::string feat_in, feat_out;
  std::vector<std::string> feat_pts;
  feat->add_option("--landmarks", feat_in, "JSONL of landmark records, one per frame")->check(CLI::ExistingFile);
  feat->add_option("--pts", feat_pts, "Sequence of .pts files instead")->check(CLI::ExistingFile);
  feat->add_option("--out", feat_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "ohg: error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*enc) {
      const Box box = parse_box(enc_box);
      HeatmapStack stack;
      if (enc_negative) {
        stack = encode_stack(LandmarkSet{}, true, g.encode());
      } else {
        if (enc_pts.empty()) throw InvalidArgument("encode: --pts is required unless --negative");
        stack = encode_stack(to_score_frame(with_occluded(read_pts(enc_pts), enc_occ), box), false, g.encode());
      }
      write_heatmaps(enc_out, stack);
    } else if (*dec) {
      const Box box = parse_box(dec_box);
      const HeatmapStack stack = read_heatmaps(dec_heatmap);
      validate_stack(stack);
      const LandmarkSet lms = decode_stack(stack, box, g.occ_threshold);
      Json j = landmarks_to_json(lms);
      j["box"] = box_to_json(box);
      emit(dec_out, j.dump() + "\n");
      if (!dec_pts.empty()) write_pts(dec_pts, lms.points);
    } else if (*ref) {
      PoseOptions po;
      po.enabled = !ref_no_pose;
      po.focal = g.focal;
      po.model = g.face_model();
      po.exclude_occluded = ref_excl;
      const fs::path base = ref_base.empty() ? fs::path(ref_in).parent_path() : fs::path(ref_base);
      emit(ref_out, jsonl_text(refine_records(read_jsonl(ref_in), base, g.refine(), po, g.jobs)));
    } else if (*pose) {
      if (pose_in.empty() == pose_pts.empty()) throw InvalidArgument("pose: give exactly one of --landmarks or --pts");
      const FaceModel3D model = g.face_model();
      std::vector<Json> records;
      if (!pose_pts.empty()) {
        records.push_back(landmarks_to_json(LandmarkSet(read_pts(pose_pts))));
        records.back()["image"] = fs::path(pose_pts).stem().string();
      } else {
        records = read_jsonl(pose_in);
      }
      std::vector<Json> out;
      for (const Json& r : records) {
        std::optional<std::pair<double, double>> size;
        if (pose_size.size() == 2) {
          size = std::pair{pose_size[0], pose_size[1]};
        } else if (r.contains("image_size")) {
          size = std::pair{r["image_size"].at(0).get<double>(), r["image_size"].at(1).get<double>()};
        }
        if (!size && !g.focal) throw InvalidArgument("pose: need --image-size or --focal for the camera");
        CameraIntrinsics cam = size ? CameraIntrinsics::for_image(size->first, size->second) : CameraIntrinsics{};
        if (g.focal) cam.focal = *g.focal;
        const LandmarkSet lms = landmarks_from_json(r);
        Json o{{"image", r.value("image", std::string{})}};
        try {
          o["pose"] = to_json(estimate_head_pose(lms, model, cam, pose_excl));
        } catch (const PoseError& e) {
          o["pose"] = nullptr;
          o["pose_error"] = e.what();
        }
        out.push_back(std::move(o));
      }
      emit(pose_out, jsonl_text(out));
    } else if (*aug) {
      const Image img = read_png(aug_image);
      const LandmarkSet lms(read_pts(aug_pts));
      const OccluderLibrary lib = aug_occ.empty() ? OccluderLibrary{} : OccluderLibrary::load(aug_occ);
      AugmentOptions opt;
      opt.encode = g.encode();
      opt.occlusion_prob = aug_occ_prob;
      opt.flip_prob = aug_flip;
      Rng pos_rng = make_rng(g.seed, 0), neg_rng = make_rng(g.seed, 1);
      auto samples = generate_positives(img, lms, lib, opt, pos_rng, aug_pos);
      auto negs = generate_negatives(img, {box_from_landmarks(lms)}, opt, neg_rng, aug_neg);
      samples.insert(samples.end(), std::make_move_iterator(negs.begin()), std::make_move_iterator(negs.end()));
      fs::create_directories(aug_out);
      std::vector<Json> manifest;
      for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        char name[32];
        std::snprintf(name, sizeof name, "%s_%04zu", s.positive ? "pos" : "neg", k);
        write_png(fs::path(aug_out) / (std::string(name) + ".png"), s.image);
        write_heatmaps(fs::path(aug_out) / (std::string(name) + ".ohm"), s.labels);
        Json m{{"image", std::string(name) + ".png"},
               {"labels", std::string(name) + ".ohm"},
               {"positive", s.positive},
               {"flipped", s.flipped},
               {"window", box_to_json(s.window)}};
        if (s.positive) {
          write_pts(fs::path(aug_out) / (std::string(name) + ".pts"), s.landmarks.points);
          std::vector<bool> flags(s.landmarks.occ_flag.begin(), s.landmarks.occ_flag.end());
          m["occ_flags"] = flags;
        }
        manifest.push_back(std::move(m));
      }
      write_jsonl(fs::path(aug_out) / "manifest.jsonl", manifest);
    } else if (*syn) {
      sc.noise = noise_from(syn_pixel, syn_jitter, syn_amp_min, syn_amp_max, syn_drop);
      sc.seed = g.seed;
      if (!syn_pts.empty()) {
        if (syn_box.empty()) throw InvalidArgument("synth: --box is required with --pts");
        const Box box = parse_box(syn_box);
        Rng rng = make_rng(g.seed);
        const auto lms = to_score_frame(with_occluded(read_pts(syn_pts), syn_occ), box);
        write_heatmaps(syn_out, synth_predict(lms, sc.noise, rng, g.sigma));
      } else {
        if (sc.faces < 1 || sc.dets_per_face < 1 || sc.negatives_per_image < 0) {
          throw InvalidArgument("synth: need --faces >= 1, --dets-per-face >= 1, --negatives-per-image >= 0");
        }
        write_synthetic(syn_out, generate_synthetic(sc, g.face_model(), g.encode()));
      }
    } else if (*edet) {
      emit(edet_out, eval_detection(read_jsonl(edet_ref), read_truth(edet_gt), edet_iou).to_csv());
    } else if (*eocc) {
      const std::vector<double> th = eocc_th.empty() ? default_occlusion_thresholds() : eocc_th;
      emit(eocc_out, eval_occlusion(read_jsonl(eocc_ref), read_truth(eocc_gt), th, eocc_iou).to_csv());
    } else if (*eyaw) {
      emit(eyaw_out, yaw_metrics_csv(eval_yaw(read_jsonl(eyaw_ref), read_truth(eyaw_gt), eyaw_iou, eyaw_success)));
    } else if (*feat) {
      if (feat_in.empty() == feat_pts.empty()) throw InvalidArgument("features: give exactly one of --landmarks or --pts");
      std::vector<Json> recs;
      if (!feat_pts.empty()) {
        for (const auto& p : feat_pts) {
          Json j = landmarks_to_json(LandmarkSet(read_pts(p)));
          j["image"] = fs::path(p).filename().string();
          recs.push_back(std::move(j));
        }
      } else {
        recs = read_jsonl(feat_in);
      }
      emit(feat_out, features_csv(recs));
    }
  } catch (const FormatError& e) {
    std::cerr << "ohg: error: format: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "ohg: error: invalid-argument: " << e.what() << "\n";
    return 1;
  } catch (const PoseError& e) {
    std::cerr << "ohg: error: pose: " << e.what() << "\n";
    return 1;
  } catch (const MetricError& e) {
    std::cerr << "ohg: error: metric: " << e.what() << "\n";
    return 1;
  } catch (const SamplingError& e) {
    std::cerr << "ohg: error: sampling: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ohg: error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
