#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "ohg/io.hpp"

using namespace ohg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<std::uint32_t> bits_of(const HeatmapStack& s) {
  std::vector<std::uint32_t> out;
  for (const auto& h : s)
    for (float v : h.values()) out.push_back(std::bit_cast<std::uint32_t>(v));
  return out;
}

std::string six_decimal_pts(std::mt19937_64& rng) {
  std::uniform_int_distribution<long long> v(-5'000'000'000LL, 5'000'000'000LL);
  std::string s = "version: 1\nn_points: 68\n{\n";
  char buf[64];
  for (int i = 0; i < 68; ++i) {
    const long long a = v(rng), b = v(rng);
    std::snprintf(buf, sizeof buf, "%s%lld.%06lld %s%lld.%06lld\n", a < 0 ? "-" : "", std::llabs(a) / 1000000,
                  std::llabs(a) % 1000000, b < 0 ? "-" : "", std::llabs(b) / 1000000, std::llabs(b) % 1000000);
    s += buf;
  }
  return s + "}\n";
}

}  // namespace

TEST_CASE("heatmap file size") {
  CHECK(heatmap_file_size(68, 64, 64) == 1114128);
  CHECK(serialize_heatmaps(HeatmapStack(68)).size() == 1114128);
}

TEST_CASE("heatmap files round trip bit-exactly (fuzzed)") {
  TempDir dir("ohg_io_heatmaps");
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::uint32_t> any;
  std::uniform_int_distribution<int> dim(1, 70);
  for (int t = 0; t < 100; ++t) {
    const int n = t % 10 == 0 ? 68 : dim(rng) % 5 + 1;
    const int w = t % 10 == 0 ? 64 : dim(rng), h = t % 10 == 0 ? 64 : dim(rng);
    HeatmapStack s;
    for (int m = 0; m < n; ++m) {
      std::vector<float> v(std::size_t(w * h));
      // Arbitrary bit patterns, NaN payloads and infinities included.
      for (auto& x : v) x = std::bit_cast<float>(any(rng));
      s.emplace_back(w, h, std::move(v));
    }
    const fs::path p = dir.path / ("s" + std::to_string(t) + ".ohm");
    write_heatmaps(p, s);
    CHECK(fs::file_size(p) == heatmap_file_size(std::size_t(n), std::size_t(h), std::size_t(w)));
    const HeatmapStack back = read_heatmaps(p);
    REQUIRE(back.size() == s.size());
    CHECK(back.front().width() == w);
    CHECK(back.front().height() == h);
    CHECK(bits_of(back) == bits_of(s));
  }
}

TEST_CASE("heatmap byte layout is little-endian") {
  HeatmapStack s{Heatmap(2, 1, std::vector<float>{1.0f, -2.0f})};
  const auto b = serialize_heatmaps(s);
  const std::vector<std::uint8_t> expect{'O', 'H', 'M', '1', 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,
                                         0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  CHECK(b == expect);
}

TEST_CASE("heatmap parse errors") {
  auto good = serialize_heatmaps(HeatmapStack(2, Heatmap(4, 4)));
  auto bad_magic = good;
  bad_magic[3] = '2';
  CHECK_THROWS_WITH_AS(parse_heatmaps(bad_magic, "x.ohm"), doctest::Contains("x.ohm: bad heatmap magic"), FormatError);
  auto truncated = good;
  truncated.pop_back();
  CHECK_THROWS_WITH_AS(parse_heatmaps(truncated), doctest::Contains("truncated"), FormatError);
  auto trailing = good;
  trailing.push_back(0);
  CHECK_THROWS_AS(parse_heatmaps(trailing), FormatError);
  CHECK_THROWS_AS(parse_heatmaps(std::vector<std::uint8_t>(8)), FormatError);
  HeatmapStack mixed{Heatmap(4, 4), Heatmap(3, 4)};
  CHECK_THROWS_AS(serialize_heatmaps(mixed), InvalidArgument);
  CHECK_THROWS_AS(read_heatmaps("/nonexistent/file.ohm"), FormatError);
}

TEST_CASE("pts files round trip value-exactly (fuzzed)") {
  std::mt19937_64 rng(32);
  TempDir dir("ohg_io_pts");
  for (int t = 0; t < 100; ++t) {
    const std::string text = six_decimal_pts(rng);
    const auto pts = parse_pts(text);
    REQUIRE(pts.size() == 68);
    CHECK(format_pts(pts) == text);
    const fs::path p = dir.path / "f.pts";
    write_pts(p, pts);
    const auto back = read_pts(p);
    for (std::size_t i = 0; i < 68; ++i) {
      CHECK(back[i].x == pts[i].x);
      CHECK(back[i].y == pts[i].y);
    }
  }
}

TEST_CASE("pts whitespace is normalized") {
  std::string text = "version: 1\r\n  n_points:  68\n\n{\n";
  for (int i = 0; i < 68; ++i) text += "  " + std::to_string(i) + "\t" + std::to_string(2 * i) + ".5  \n";
  text += "}";
  const auto pts = parse_pts(text);
  CHECK(pts[67].x == 67.0);
  CHECK(pts[67].y == 134.5);
  CHECK(parse_pts(format_pts(pts)) == pts);
}

TEST_CASE("pts parse errors carry the line") {
  std::mt19937_64 rng(1);
  const std::string good = six_decimal_pts(rng);
  std::string s29 = good;
  s29.replace(s29.find("68"), 2, "29");
  CHECK_THROWS_WITH_AS(parse_pts(s29, "a.pts"), doctest::Contains("a.pts:2: unsupported landmark scheme"),
                       FormatError);
  std::string nobrace = good;
  nobrace.replace(nobrace.find('{'), 1, "[");
  CHECK_THROWS_WITH_AS(parse_pts(nobrace, "b.pts"), doctest::Contains("b.pts:3:"), FormatError);
  std::string noclose = good.substr(0, good.rfind('}'));
  CHECK_THROWS_WITH_AS(parse_pts(noclose, "c.pts"), doctest::Contains("unexpected end of file"), FormatError);
  std::string bad_line = good;
  bad_line.replace(bad_line.find('\n', bad_line.find('{')) + 1, 1, "x");
  CHECK_THROWS_WITH_AS(parse_pts(bad_line, "d.pts"), doctest::Contains("d.pts:4: expected 'x y'"), FormatError);
  CHECK_THROWS_AS(parse_pts("n_points: 68\n", "e.pts"), FormatError);
}

TEST_CASE("png round trip") {
  TempDir dir("ohg_io_png");
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> v(0, 255);
  for (int ch : {1, 3, 4}) {
    Image img(17, 9, ch);
    for (auto& b : img.data()) b = std::uint8_t(v(rng));
    const fs::path p = dir.path / ("i" + std::to_string(ch) + ".png");
    write_png(p, img);
    CHECK(read_png(p) == img);
  }
  {
    std::ofstream(dir.path / "bad.png") << "not a png";
  }
  CHECK_THROWS_AS(read_png(dir.path / "bad.png"), FormatError);
}

TEST_CASE("detection records round trip through json") {
  DetectionRecord r{"img_01", Box(1.5, 2, 30, 40), 0.75, std::string("h/a.ohm"), std::pair{640.0, 480.0}};
  const DetectionRecord back = detection_from_json(Json::parse(to_json(r).dump()));
  CHECK(back.image == r.image);
  CHECK(back.box == r.box);
  CHECK(back.det_score == r.det_score);
  CHECK(back.heatmap == r.heatmap);
  CHECK(back.image_size == r.image_size);

  const DetectionRecord minimal = detection_from_json(Json::parse(R"({"image":"a","box":[0,0,1,1],"det_score":1})"));
  CHECK_FALSE(minimal.heatmap.has_value());
  CHECK_THROWS_AS(detection_from_json(Json::parse(R"({"image":"a","box":[0,0,0,1],"det_score":1})")), FormatError);
  CHECK_THROWS_AS(detection_from_json(Json::parse(R"({"image":"a","box":[0,0,1],"det_score":1})")), FormatError);
  CHECK_THROWS_AS(detection_from_json(Json::parse(R"({"box":[0,0,1,1],"det_score":1})")), FormatError);
}

TEST_CASE("landmark and ground-truth json") {
  LandmarkSet lms = canonical_face();
  lms.occ_flag[5] = true;
  lms.occ_score[5] = -0.7;
  lms.detected[9] = false;
  lms.lm_score = std::vector<double>(68, -0.25);
  const LandmarkSet back = landmarks_from_json(Json::parse(landmarks_to_json(lms).dump()));
  CHECK(back.points == lms.points);
  CHECK(back.occ_flag == lms.occ_flag);
  CHECK(back.occ_score == lms.occ_score);
  CHECK(back.detected == lms.detected);
  CHECK(back.lm_score == lms.lm_score);

  GroundTruthFace g{"x", Box(0, 0, 10, 10), lms, 12.5, std::pair{100.0, 50.0}};
  const GroundTruthFace gb = ground_truth_from_json(Json::parse(to_json(g).dump()));
  CHECK(gb.yaw == g.yaw);
  CHECK(gb.landmarks.occ_flag == lms.occ_flag);
  CHECK(gb.box == g.box);

  const PoseAngles p{1.5, -2.5, 3.0};
  const PoseAngles pb = pose_from_json(to_json(p));
  CHECK(pb.yaw == p.yaw);
  CHECK(pb.roll == p.roll);

  Json short_lms = landmarks_to_json(lms);
  short_lms["landmarks"].erase(0);
  CHECK_THROWS_AS(landmarks_from_json(short_lms), FormatError);
}

TEST_CASE("jsonl files") {
  TempDir dir("ohg_io_jsonl");
  const std::vector<Json> recs{Json{{"a", 1}}, Json{{"b", "two"}}};
  write_jsonl(dir.path / "r.jsonl", recs);
  CHECK(read_jsonl(dir.path / "r.jsonl") == recs);
  {
    std::ofstream(dir.path / "bad.jsonl") << "{\"a\": 1}\n\n{oops\n";
  }
  CHECK_THROWS_WITH_AS(read_jsonl(dir.path / "bad.jsonl"), doctest::Contains("bad.jsonl:3:"), FormatError);
}
