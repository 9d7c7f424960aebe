#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "ohg/io.hpp"

using namespace ohg;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

const fs::path kWork = fs::temp_directory_path() / "ohg_cli_test";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args) {
  const fs::path out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = "cd '" + kWork.string() + "' && '" OHG_CLI "' " + args + " > '" + out.string() + "' 2> '" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
  ~Workspace() { fs::remove_all(kWork); }
};

}  // namespace

TEST_CASE("decode reproduces the encoded pts") {
  Workspace ws;
  const LandmarkSet face = canonical_face({{300, 220}, 90});
  write_pts(kWork / "face.pts", face.points);
  REQUIRE(run("encode --pts face.pts --box 172 92 256 256 --occluded 3,40 --out face.ohm").code == 0);
  CHECK(fs::file_size(kWork / "face.ohm") == heatmap_file_size(68, 64, 64));
  const Result r = run("decode --heatmap face.ohm --box 172 92 256 256 --pts-out back.pts");
  REQUIRE(r.code == 0);
  const LandmarkSet got = landmarks_from_json(Json::parse(r.out));
  const auto pts = read_pts(kWork / "back.pts");
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    CHECK(std::hypot(got.points[i].x - face.points[i].x, got.points[i].y - face.points[i].y) < 1.0);
    CHECK(got.occ_flag[i] == (i == 3 || i == 40));
    CHECK(std::abs(pts[i].x - got.points[i].x) < 1e-5);
  }
}

TEST_CASE("refine on a single clean detection flags nothing") {
  Workspace ws;
  write_pts(kWork / "face.pts", canonical_face({{300, 220}, 90}).points);
  REQUIRE(run("encode --pts face.pts --box 172 92 256 256 --out d.ohm").code == 0);
  {
    std::ofstream(kWork / "dets.jsonl")
        << R"({"image":"one","box":[172,92,256,256],"det_score":0.9,"heatmap":"d.ohm","image_size":[640,480]})" << "\n";
  }
  const Result r = run("refine --detections dets.jsonl");
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  for (bool f : j.at("occ_flags")) CHECK_FALSE(f);
  CHECK(j.contains("pose"));
  CHECK(j.at("members").size() == 1);
}

TEST_CASE("synth, refine and eval-occ on noise-free data") {
  Workspace ws;
  REQUIRE(run("--seed 5 synth --out ds --faces 10").code == 0);
  REQUIRE(run("refine --detections ds/detections.jsonl --out ref.jsonl").code == 0);
  const Result r = run("eval-occ --refined ref.jsonl --truth ds/ground_truth.jsonl --thresholds 0,0.2");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\n0,1,1,") != std::string::npos);
  const Result y = run("eval-yaw --refined ref.jsonl --truth ds/ground_truth.jsonl");
  CHECK(y.code == 0);
  CHECK(y.out.find("\n10,10,1,1,") != std::string::npos);
  const Result d = run("eval-det --refined ref.jsonl --truth ds/ground_truth.jsonl");
  CHECK(d.code == 0);
  CHECK(d.out.rfind("threshold,precision,recall,tp,fp,fn\n", 0) == 0);
  const Result f = run("features --landmarks ref.jsonl");
  CHECK(f.code == 0);
  CHECK(std::count(f.out.begin(), f.out.end(), '\n') >= 11);
}

TEST_CASE("outputs are byte-identical under a fixed seed") {
  Workspace ws;
  REQUIRE(run("--seed 3 synth --out a --faces 4 --pixel-noise 0.05 --jitter 0.3").code == 0);
  REQUIRE(run("--seed 3 synth --out b --faces 4 --pixel-noise 0.05 --jitter 0.3").code == 0);
  CHECK(slurp(kWork / "a/detections.jsonl") == slurp(kWork / "b/detections.jsonl"));
  CHECK(slurp(kWork / "a/heatmaps/face_0002_d3.ohm") == slurp(kWork / "b/heatmaps/face_0002_d3.ohm"));
  REQUIRE(run("--jobs 1 refine --detections a/detections.jsonl --out r1.jsonl").code == 0);
  REQUIRE(run("--jobs 4 refine --detections b/detections.jsonl --out r4.jsonl").code == 0);
  CHECK(slurp(kWork / "r1.jsonl") == slurp(kWork / "r4.jsonl"));
  REQUIRE(run("--seed 4 synth --out c --faces 4 --pixel-noise 0.05").code == 0);
  CHECK(slurp(kWork / "a/heatmaps/face_0002_d3.ohm") != slurp(kWork / "c/heatmaps/face_0002_d3.ohm"));
}

TEST_CASE("config file values yield to explicit flags") {
  Workspace ws;
  {
    std::ofstream(kWork / "c.toml") << "seed = 7\n[synth]\nfaces = 3\n";
  }
  REQUIRE(run("--config c.toml synth --out a").code == 0);
  CHECK(read_jsonl(kWork / "a/ground_truth.jsonl").size() == 3);
  REQUIRE(run("--config c.toml synth --out b --faces 2").code == 0);
  CHECK(read_jsonl(kWork / "b/ground_truth.jsonl").size() == 2);
  REQUIRE(run("--seed 7 synth --out c --faces 3").code == 0);
  CHECK(slurp(kWork / "a/detections.jsonl") == slurp(kWork / "c/detections.jsonl"));
}

TEST_CASE("pose and augment subcommands") {
  Workspace ws;
  write_pts(kWork / "face.pts", canonical_face({{160, 120}, 50}).points);
  const Result p = run("pose --pts face.pts --image-size 320 240");
  REQUIRE(p.code == 0);
  const Json j = Json::parse(p.out);
  CHECK(j.at("pose").contains("yaw"));

  Image img(320, 240, 3, 90);
  write_png(kWork / "face.png", img);
  const Result a = run("--seed 2 augment --image face.png --pts face.pts --positives 3 --negatives 2 --out aug");
  REQUIRE(a.code == 0);
  CHECK(read_jsonl(kWork / "aug/manifest.jsonl").size() == 5);
  CHECK(fs::exists(kWork / "aug/pos_0000.png"));
  CHECK(fs::exists(kWork / "aug/neg_0004.ohm"));
  CHECK(read_heatmaps(kWork / "aug/pos_0001.ohm").size() == 68);
}

TEST_CASE("failures print one machine-parseable error line") {
  Workspace ws;
  const Result unknown = run("refine --bogus");
  CHECK(unknown.code != 0);
  CHECK(unknown.err.rfind("ohg: error: usage: ", 0) == 0);

  const Result missing = run("decode --heatmap nope.ohm --box 0 0 1 1");
  CHECK(missing.code != 0);
  CHECK(missing.err.rfind("ohg: error:", 0) == 0);

  {
    std::ofstream(kWork / "bad.pts") << "version: 1\nn_points: 29\n{\n}\n";
  }
  const Result scheme = run("encode --pts bad.pts --box 0 0 10 10 --out x.ohm");
  CHECK(scheme.code == 1);
  CHECK(scheme.err.rfind("ohg: error: format: bad.pts:2: unsupported landmark scheme", 0) == 0);
  CHECK(std::count(scheme.err.begin(), scheme.err.end(), '\n') == 1);

  {
    std::ofstream(kWork / "bad.jsonl") << "{\"image\": 1\n";
  }
  const Result json = run("refine --detections bad.jsonl");
  CHECK(json.code == 1);
  CHECK(json.err.find("bad.jsonl:1:") != std::string::npos);

  const Result nosub = run("");
  CHECK(nosub.code != 0);
}
