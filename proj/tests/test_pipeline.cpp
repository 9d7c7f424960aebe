#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>

#include "ohg/pipeline.hpp"

using namespace ohg;
namespace fs = std::filesystem;

namespace {

struct SynthRun {
  fs::path dir;
  std::vector<SynthImage> images;
  std::vector<Json> refined;
  std::vector<GroundTruthFace> truth;
};

SynthRun run_synthetic(const std::string& name, SynthConfig cfg, int jobs = 1) {
  SynthRun r;
  r.dir = fs::temp_directory_path() / name;
  fs::remove_all(r.dir);
  fs::create_directories(r.dir);
  r.images = generate_synthetic(cfg, FaceModel3D::generic(), {});
  write_synthetic(r.dir, r.images);
  r.refined = refine_records(read_jsonl(r.dir / "detections.jsonl"), r.dir, {}, {}, jobs);
  for (const auto& j : read_jsonl(r.dir / "ground_truth.jsonl")) r.truth.push_back(ground_truth_from_json(j));
  return r;
}

}  // namespace

TEST_CASE("parallel_for covers every index once and rethrows") {
  for (int jobs : {1, 3, 16}) {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t i) {
                    if (i == 7) throw InvalidArgument("boom");
                  }),
                  InvalidArgument);
}

TEST_CASE("synthetic head keeps the model's rigid points") {
  const FaceModel3D m = FaceModel3D::generic();
  const auto head = synthetic_head_68(m);
  REQUIRE(head.size() == kNumLandmarks);
  for (std::size_t k = 0; k < kNumRigid; ++k) CHECK(head[rigid_point_indices()[k]] == m.points[k]);
}

TEST_CASE("synthetic generation is deterministic") {
  SynthConfig cfg;
  cfg.faces = 4;
  cfg.seed = 9;
  cfg.noise.pixel_noise_sigma = 0.02;
  const auto a = generate_synthetic(cfg, FaceModel3D::generic(), {});
  const auto b = generate_synthetic(cfg, FaceModel3D::generic(), {});
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].truth.landmarks.points == b[i].truth.landmarks.points);
    REQUIRE(a[i].detections.size() == std::size_t(cfg.dets_per_face + cfg.negatives_per_image));
    for (std::size_t k = 0; k < a[i].detections.size(); ++k) CHECK(a[i].detections[k].stack == b[i].detections[k].stack);
  }
  cfg.seed = 10;
  const auto c = generate_synthetic(cfg, FaceModel3D::generic(), {});
  CHECK(c[0].truth.landmarks.points != a[0].truth.landmarks.points);
}

TEST_CASE("noise-free synthetic refinement is perfect") {
  SynthConfig cfg;
  cfg.faces = 12;
  cfg.seed = 3;
  const SynthRun r = run_synthetic("ohg_pipeline_clean", cfg);
  CHECK(r.refined.size() >= 12);

  const PRCurve det = eval_detection(r.refined, r.truth);
  CHECK(det.recall.front() == 1.0);

  const std::vector<double> th{0.0, 0.2};
  const PRCurve occ = eval_occlusion(r.refined, r.truth, th);
  CHECK(occ.precision[0] == 1.0);
  CHECK(occ.recall[0] == 1.0);
  CHECK(occ.recall[1] >= occ.recall[0]);

  const YawMetrics yaw = eval_yaw(r.refined, r.truth);
  CHECK(yaw.detection_rate == 1.0);
  CHECK(*yaw.mean_abs_err < 3.0);
  CHECK(yaw_metrics_csv(yaw).rfind("faces,detected,DR,SR,mean_abs_err,std_abs_err\n", 0) == 0);

  // Every refined landmark lies within a couple of pixels of the truth.
  const DatasetMatch m = match_records(r.refined, r.truth);
  CHECK(m.pairs.size() == r.truth.size());
  for (const auto& p : m.pairs) {
    const LandmarkSet got = landmarks_from_json(r.refined[p.refined]);
    const LandmarkSet& want = r.truth[p.truth].landmarks;
    for (std::size_t i = 0; i < kNumLandmarks; ++i) {
      CHECK(std::hypot(got.points[i].x - want.points[i].x, got.points[i].y - want.points[i].y) < 2.0);
    }
  }
  fs::remove_all(r.dir);
}

TEST_CASE("refinement output does not depend on the worker count") {
  SynthConfig cfg;
  cfg.faces = 6;
  cfg.seed = 4;
  cfg.noise.pixel_noise_sigma = 0.03;
  cfg.noise.center_jitter_sigma = 0.3;
  const SynthRun a = run_synthetic("ohg_pipeline_j1", cfg, 1);
  const SynthRun b = run_synthetic("ohg_pipeline_j4", cfg, 4);
  CHECK(a.refined == b.refined);
  fs::remove_all(a.dir);
  fs::remove_all(b.dir);
}

TEST_CASE("records without a heatmap or image size") {
  const fs::path dir = fs::temp_directory_path() / "ohg_pipeline_records";
  fs::create_directories(dir);
  const LandmarkSet truth = canonical_face({{300, 200}, 80});
  const Box box(172, 72, 256, 256);
  const LandmarkSet sf =
      transform_points(truth, [&](Point2 p) { return map_point(p, CoordFrame::original(), CoordFrame::score(box)); });
  write_heatmaps(dir / "a.ohm", encode_stack(sf));
  DetectionRecord with{"img", box, 0.9, std::string("a.ohm"), std::nullopt};
  DetectionRecord without{"img", box, 0.5, std::nullopt, std::nullopt};
  const auto out = refine_records({to_json(with), to_json(without)}, dir, {}, {});
  REQUIRE(out.size() == 1);
  CHECK_FALSE(out[0].contains("pose"));
  for (bool f : out[0].at("occ_flags")) CHECK_FALSE(f);

  DetectionRecord sized = with;
  sized.image_size = std::pair{640.0, 480.0};
  const auto posed = refine_records({to_json(sized)}, dir, {}, {});
  CHECK(posed[0].contains("pose"));

  DetectionRecord missing = with;
  missing.heatmap = "nope.ohm";
  CHECK_THROWS_AS(refine_records({to_json(missing)}, dir, {}, {}), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("features csv") {
  std::vector<Json> recs;
  for (int k = 0; k < 3; ++k) {
    RefinedFace f{Box(0, 0, 10, 10), Box(0, 0, 10, 10), 0, 0, 1, canonical_face({{128, 128}, 80, 0.1 * k}), {0}};
    recs.push_back(refined_to_json("frame" + std::to_string(k), f, std::nullopt));
  }
  const std::string csv = features_csv(recs);
  CHECK(csv.rfind("frame,image,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
