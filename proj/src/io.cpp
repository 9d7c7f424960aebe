#include "ohg/io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ohg {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string() + ": cannot open file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw FormatError(path.string() + ": write failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

// --- Heatmaps ----------------------------------------------------------------

std::size_t heatmap_file_size(std::size_t n_maps, std::size_t height, std::size_t width) {
  return 16 + 4 * n_maps * height * width;
}

std::vector<std::uint8_t> serialize_heatmaps(const HeatmapStack& stack) {
  const std::uint32_t h = stack.empty() ? 0 : std::uint32_t(stack.front().height());
  const std::uint32_t w = stack.empty() ? 0 : std::uint32_t(stack.front().width());
  std::vector<std::uint8_t> out;
  out.reserve(heatmap_file_size(stack.size(), h, w));
  out.insert(out.end(), std::begin(kHeatmapMagic), std::end(kHeatmapMagic));
  put_u32(out, std::uint32_t(stack.size()));
  put_u32(out, h);
  put_u32(out, w);
  for (const Heatmap& m : stack) {
    if (std::uint32_t(m.width()) != w || std::uint32_t(m.height()) != h) {
      throw InvalidArgument("serialize_heatmaps: maps of one stack must share dimensions");
    }
    for (float v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

HeatmapStack parse_heatmaps(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  if (bytes.size() < 16) throw FormatError(source + ": truncated heatmap header");
  if (std::memcmp(bytes.data(), kHeatmapMagic, 4) != 0) throw FormatError(source + ": bad heatmap magic (expected OHM1)");
  const std::uint32_t n = get_u32(bytes.data() + 4);
  const std::uint32_t h = get_u32(bytes.data() + 8);
  const std::uint32_t w = get_u32(bytes.data() + 12);
  if (n > 0 && (h == 0 || w == 0)) throw FormatError(source + ": zero heatmap dimension");
  const std::uint64_t expected = 16 + 4ull * n * h * w;
  if (bytes.size() < expected) throw FormatError(source + ": truncated heatmap payload");
  if (bytes.size() > expected) throw FormatError(source + ": trailing bytes after heatmap payload");
  HeatmapStack stack;
  stack.reserve(n);
  const std::uint8_t* p = bytes.data() + 16;
  for (std::uint32_t m = 0; m < n; ++m) {
    std::vector<float> vals(std::size_t(h) * w);
    for (float& v : vals) {
      v = std::bit_cast<float>(get_u32(p));
      p += 4;
    }
    stack.emplace_back(int(w), int(h), std::move(vals));
  }
  return stack;
}

void write_heatmaps(const std::filesystem::path& path, const HeatmapStack& stack) {
  write_bytes(path, serialize_heatmaps(stack));
}

HeatmapStack read_heatmaps(const std::filesystem::path& path) { return parse_heatmaps(read_bytes(path), path.string()); }

// --- PTS -----------------------------------------------------------------------

std::string format_pts(const std::vector<Point2>& points) {
  std::string out = "version: 1\nn_points: " + std::to_string(points.size()) + "\n{\n";
  char buf[96];
  for (const Point2& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f %.6f\n", p.x, p.y);
    out += buf;
  }
  out += "}\n";
  return out;
}

std::vector<Point2> parse_pts(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
  auto next = [&]() -> std::string {
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (!t.empty()) return t;
    }
    ++lineno;
    throw FormatError(where() + "unexpected end of file");
  };
  auto header_value = [&](const std::string& l, const std::string& key) {
    if (l.rfind(key + ":", 0) != 0) throw FormatError(where() + "expected '" + key + ":'");
    return trim(l.substr(key.size() + 1));
  };

  header_value(next(), "version");
  const std::string np = header_value(next(), "n_points");
  std::size_t n = 0;
  try {
    n = std::stoul(np);
  } catch (const std::exception&) {
    throw FormatError(where() + "malformed n_points");
  }
  if (n != kNumLandmarks) throw FormatError(where() + "unsupported landmark scheme: n_points " + np + ", expected 68");
  if (next() != "{") throw FormatError(where() + "expected '{'");
  std::vector<Point2> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string l = next();
    if (l == "}") throw FormatError(where() + "fewer points than n_points");
    std::istringstream ls(l);
    Point2 p;
    std::string extra;
    if (!(ls >> p.x >> p.y) || (ls >> extra) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw FormatError(where() + "expected 'x y'");
    }
    pts.push_back(p);
  }
  if (next() != "}") throw FormatError(where() + "expected '}'");
  return pts;
}

void write_pts(const std::filesystem::path& path, const std::vector<Point2>& points) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot open file for writing");
  out << format_pts(points);
}

std::vector<Point2> read_pts(const std::filesystem::path& path) { return parse_pts(read_text(path), path.string()); }

// --- PNG -----------------------------------------------------------------------

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw FormatError(path.string() + ": " + img.message);
  }
  int channels = 3;
  if (img.format & PNG_FORMAT_FLAG_ALPHA) {
    channels = 4;
    img.format = PNG_FORMAT_RGBA;
  } else if (img.format & PNG_FORMAT_FLAG_COLOR) {
    img.format = PNG_FORMAT_RGB;
  } else {
    channels = 1;
    img.format = PNG_FORMAT_GRAY;
  }
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, data.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError(path.string() + ": " + img.message);
  }
  return Image(int(img.width), int(img.height), channels, std::move(data));
}

void write_png(const std::filesystem::path& path, const Image& im) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = png_uint_32(im.width());
  img.height = png_uint_32(im.height());
  img.format = im.channels() == 1 ? PNG_FORMAT_GRAY : im.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, im.data().data(), 0, nullptr)) {
    throw FormatError(path.string() + ": " + img.message);
  }
}

// --- JSON ------------------------------------------------------------------------

Json box_to_json(const Box& b) { return Json::array({b.x(), b.y(), b.w(), b.h()}); }

Box box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw FormatError("box must be [x, y, w, h]");
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError("box fields must be numbers");
  }
  try {
    return Box(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

namespace {

Json size_to_json(const std::pair<double, double>& s) { return Json::array({s.first, s.second}); }

std::optional<std::pair<double, double>> size_from_json(const Json& j) {
  if (!j.contains("image_size")) return std::nullopt;
  const Json& s = j.at("image_size");
  if (!s.is_array() || s.size() != 2) throw FormatError("image_size must be [width, height]");
  return std::pair{s[0].get<double>(), s[1].get<double>()};
}

}  // namespace

Json to_json(const DetectionRecord& r) {
  Json j{{"image", r.image}, {"box", box_to_json(r.box)}, {"det_score", r.det_score}};
  if (r.heatmap) j["heatmap"] = *r.heatmap;
  if (r.image_size) j["image_size"] = size_to_json(*r.image_size);
  return j;
}

DetectionRecord detection_from_json(const Json& j) {
  DetectionRecord r;
  try {
    r.image = j.at("image").get<std::string>();
    r.box = box_from_json(j.at("box"));
    r.det_score = j.value("det_score", 0.0);
    if (j.contains("heatmap")) r.heatmap = j.at("heatmap").get<std::string>();
    r.image_size = size_from_json(j);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("detection record: ") + e.what());
  }
  return r;
}

Json landmarks_to_json(const LandmarkSet& lms) {
  Json pts = Json::array();
  for (const auto& p : lms.points) pts.push_back(Json::array({p.x, p.y}));
  Json flags = Json::array(), det = Json::array();
  for (std::size_t i = 0; i < lms.size(); ++i) {
    flags.push_back(bool(lms.occ_flag[i]));
    det.push_back(bool(lms.detected[i]));
  }
  Json j{{"landmarks", pts}, {"occ_scores", lms.occ_score}, {"occ_flags", flags}, {"detected", det}};
  if (lms.lm_score) j["lm_scores"] = *lms.lm_score;
  return j;
}

LandmarkSet landmarks_from_json(const Json& j) {
  try {
    const Json& pts = j.at("landmarks");
    if (!pts.is_array() || pts.size() != kNumLandmarks) throw FormatError("landmarks must hold 68 [x, y] pairs");
    std::vector<Point2> p;
    for (const auto& q : pts) {
      if (!q.is_array() || q.size() != 2) throw FormatError("landmark must be [x, y]");
      p.push_back({q[0].get<double>(), q[1].get<double>()});
    }
    LandmarkSet lms(std::move(p));
    if (j.contains("occ_scores")) lms.occ_score = j.at("occ_scores").get<std::vector<double>>();
    if (j.contains("occ_flags")) lms.occ_flag = j.at("occ_flags").get<std::vector<bool>>();
    if (j.contains("detected")) lms.detected = j.at("detected").get<std::vector<bool>>();
    if (j.contains("lm_scores")) lms.lm_score = j.at("lm_scores").get<std::vector<double>>();
    try {
      lms.validate();
    } catch (const InvalidArgument& e) {
      throw FormatError(e.what());
    }
    return lms;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("landmark record: ") + e.what());
  }
}

Json to_json(const PoseAngles& p) { return Json{{"yaw", p.yaw}, {"pitch", p.pitch}, {"roll", p.roll}}; }

PoseAngles pose_from_json(const Json& j) {
  try {
    return {j.at("yaw").get<double>(), j.at("pitch").get<double>(), j.at("roll").get<double>()};
  } catch (const Json::exception& e) {
    throw FormatError(std::string("pose record: ") + e.what());
  }
}

Json refined_to_json(const std::string& image, const RefinedFace& face, const std::optional<PoseAngles>& pose) {
  Json j = landmarks_to_json(face.landmarks);
  j["image"] = image;
  j["box"] = box_to_json(face.box);
  j["anchor_box"] = box_to_json(face.anchor_box);
  j["face_score"] = face.face_score;
  j["det_face_score"] = face.anchor_face_score;
  j["det_score"] = face.det_score;
  j["members"] = face.members;
  if (pose) j["pose"] = to_json(*pose);
  return j;
}

Json to_json(const GroundTruthFace& g) {
  Json j = landmarks_to_json(g.landmarks);
  j.erase("occ_scores");
  j.erase("detected");
  j["image"] = g.image;
  j["box"] = box_to_json(g.box);
  if (g.yaw) j["yaw"] = *g.yaw;
  if (g.image_size) j["image_size"] = size_to_json(*g.image_size);
  return j;
}

GroundTruthFace ground_truth_from_json(const Json& j) {
  GroundTruthFace g;
  try {
    g.image = j.at("image").get<std::string>();
    g.box = box_from_json(j.at("box"));
    if (j.contains("landmarks")) g.landmarks = landmarks_from_json(j);
    if (j.contains("yaw")) g.yaw = j.at("yaw").get<double>();
    g.image_size = size_from_json(j);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("ground-truth record: ") + e.what());
  }
  return g;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  std::vector<Json> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot open file for writing");
  for (const auto& r : records) out << r.dump() << '\n';
}

}  // namespace ohg
