#include "ohg/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "ohg/sampling.hpp"

namespace ohg {

namespace {

std::uint8_t clamp_u8(double v) { return std::uint8_t(std::clamp(std::lround(v), 0L, 255L)); }

void check_dims(int width, int height, int channels) {
  if (width <= 0 || height <= 0) throw InvalidArgument("image dimensions must be positive");
  if (channels != 1 && channels != 3 && channels != 4) throw InvalidArgument("image must have 1, 3 or 4 channels");
}

}  // namespace

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  check_dims(width, height, channels);
  data_.assign(std::size_t(width) * std::size_t(height) * std::size_t(channels), fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height, channels);
  if (data_.size() != std::size_t(width) * std::size_t(height) * std::size_t(channels)) {
    throw InvalidArgument("image data length does not match width * height * channels");
  }
}

double Image::sample(double x, double y, int c) const {
  return sample_bilinear(width_, height_, x, y, [&](int i, int j) { return double(at(i, j, c)); });
}

// ---------------------------------------------------------------------------
// CLAHE

std::vector<double> clahe_clipped_histogram(const std::vector<std::uint32_t>& hist, double clip_limit) {
  std::vector<double> h(hist.begin(), hist.end());
  double n = 0.0;
  for (double v : h) n += v;
  if (!std::isfinite(clip_limit) || n == 0.0) return h;

  const double limit = clip_limit * n / double(h.size());
  double excess = 0.0;
  for (double& v : h) {
    if (v > limit) {
      excess += v - limit;
      v = limit;
    }
  }
  // Each pass either places all remaining excess or fills at least one bin.
  for (std::size_t pass = 0; pass <= h.size() && excess > 1e-9 * n; ++pass) {
    std::size_t room = 0;
    for (double v : h) room += v < limit ? 1 : 0;
    if (room == 0) break;
    const double share = excess / double(room);
    for (double& v : h) {
      if (v < limit) {
        const double inc = std::min(share, limit - v);
        v += inc;
        excess -= inc;
      }
    }
  }
  return h;
}

namespace {

using Lut = std::array<double, 256>;

Lut tile_lut(const std::vector<std::uint8_t>& plane, int width, int x0, int x1, int y0, int y1, double clip_limit) {
  std::vector<std::uint32_t> hist(256, 0);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) ++hist[plane[std::size_t(y) * std::size_t(width) + std::size_t(x)]];
  }
  const std::vector<double> clipped = clahe_clipped_histogram(hist, clip_limit);
  const double n = double(x1 - x0) * double(y1 - y0);
  Lut lut{};
  double cdf = 0.0;
  for (int v = 0; v < 256; ++v) {
    cdf += clipped[std::size_t(v)];
    lut[std::size_t(v)] = std::clamp(std::floor(cdf * 255.0 / n + 1e-9), 0.0, 255.0);
  }
  return lut;
}

// Tile index and interpolation weight for a pixel center along one axis.
struct AxisWeight {
  int lo, hi;
  double a;
};

std::vector<AxisWeight> axis_weights(int size, int tiles) {
  std::vector<double> centers(static_cast<std::size_t>(tiles));
  for (int t = 0; t < tiles; ++t) {
    const int b0 = int(std::int64_t(t) * size / tiles);
    const int b1 = int(std::int64_t(t + 1) * size / tiles);
    centers[std::size_t(t)] = 0.5 * (b0 + b1);
  }
  std::vector<AxisWeight> out(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    const double p = i + 0.5;
    if (p <= centers.front()) {
      out[std::size_t(i)] = {0, 0, 0.0};
    } else if (p >= centers.back()) {
      out[std::size_t(i)] = {tiles - 1, tiles - 1, 0.0};
    } else {
      int t = 0;
      while (centers[std::size_t(t + 1)] <= p) ++t;
      const double a = (p - centers[std::size_t(t)]) / (centers[std::size_t(t + 1)] - centers[std::size_t(t)]);
      out[std::size_t(i)] = {t, t + 1, a};
    }
  }
  return out;
}

std::vector<std::uint8_t> clahe_plane(const std::vector<std::uint8_t>& plane, int width, int height,
                                      const ClaheParams& p) {
  std::vector<Lut> luts(std::size_t(p.tiles_x) * std::size_t(p.tiles_y));
  for (int ty = 0; ty < p.tiles_y; ++ty) {
    const int y0 = int(std::int64_t(ty) * height / p.tiles_y);
    const int y1 = int(std::int64_t(ty + 1) * height / p.tiles_y);
    for (int tx = 0; tx < p.tiles_x; ++tx) {
      const int x0 = int(std::int64_t(tx) * width / p.tiles_x);
      const int x1 = int(std::int64_t(tx + 1) * width / p.tiles_x);
      luts[std::size_t(ty * p.tiles_x + tx)] = tile_lut(plane, width, x0, x1, y0, y1, p.clip_limit);
    }
  }
  const auto wx = axis_weights(width, p.tiles_x);
  const auto wy = axis_weights(height, p.tiles_y);
  auto lut = [&](int tx, int ty) -> const Lut& { return luts[std::size_t(ty * p.tiles_x + tx)]; };

  std::vector<std::uint8_t> out(plane.size());
  for (int y = 0; y < height; ++y) {
    const AxisWeight& ay = wy[std::size_t(y)];
    for (int x = 0; x < width; ++x) {
      const AxisWeight& ax = wx[std::size_t(x)];
      const std::size_t idx = std::size_t(y) * std::size_t(width) + std::size_t(x);
      const std::size_t v = plane[idx];
      const double top = (1.0 - ax.a) * lut(ax.lo, ay.lo)[v] + ax.a * lut(ax.hi, ay.lo)[v];
      const double bot = (1.0 - ax.a) * lut(ax.lo, ay.hi)[v] + ax.a * lut(ax.hi, ay.hi)[v];
      out[idx] = clamp_u8((1.0 - ay.a) * top + ay.a * bot);
    }
  }
  return out;
}

}  // namespace

Image clahe(const Image& img, const ClaheParams& params) {
  if (!(params.clip_limit > 0.0)) throw InvalidArgument("clahe: clip_limit must be positive");
  if (params.tiles_x < 1 || params.tiles_y < 1 || params.tiles_x > img.width() || params.tiles_y > img.height()) {
    throw InvalidArgument("clahe: tile grid must be at least 1x1 and no larger than the image");
  }
  const int w = img.width(), h = img.height();
  const std::size_t n = std::size_t(w) * std::size_t(h);

  if (img.channels() == 1) {
    return Image(w, h, 1, clahe_plane(img.data(), w, h, params));
  }

  // Full-range BT.601. Chroma stays in floating point so the only
  // quantization is the equalized luma itself.
  constexpr double kr = 0.299, kg = 0.587, kb = 0.114;
  std::vector<std::uint8_t> luma(n);
  std::vector<double> cr(n), cb(n);
  const int c = img.channels();
  const auto& src = img.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = src[i * std::size_t(c)], g = src[i * std::size_t(c) + 1], b = src[i * std::size_t(c) + 2];
    const double y = kr * r + kg * g + kb * b;
    luma[i] = clamp_u8(y);
    cr[i] = 0.5 * (r - y) / (1.0 - kr);
    cb[i] = 0.5 * (b - y) / (1.0 - kb);
  }
  const std::vector<std::uint8_t> eq = clahe_plane(luma, w, h, params);

  Image out = img;
  auto& dst = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double y = eq[i];
    const double r = y + 2.0 * (1.0 - kr) * cr[i];
    const double b = y + 2.0 * (1.0 - kb) * cb[i];
    const double g = (y - kr * r - kb * b) / kg;
    dst[i * std::size_t(c)] = clamp_u8(r);
    dst[i * std::size_t(c) + 1] = clamp_u8(g);
    dst[i * std::size_t(c) + 2] = clamp_u8(b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometric resampling

Point2 rotate_point(Point2 p, double angle_deg, Point2 center) {
  const double t = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  const double dx = p.x - center.x, dy = p.y - center.y;
  return {center.x + c * dx + s * dy, center.y - s * dx + c * dy};
}

std::pair<Image, LandmarkSet> rotate(const Image& img, double angle_deg, Point2 center, LandmarkSet points) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Point2 src = rotate_point({x + 0.5, y + 0.5}, -angle_deg, center);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = clamp_u8(img.sample(src.x, src.y, c));
    }
  }
  for (auto& p : points.points) p = rotate_point(p, angle_deg, center);
  return {std::move(out), std::move(points)};
}

Image crop_resize(const Image& img, const Box& box, int out_size) {
  if (out_size <= 0) throw InvalidArgument("crop_resize: output size must be positive");
  if (intersection_area(box, Box(0, 0, img.width(), img.height())) <= 0.0) {
    throw InvalidArgument("crop_resize: box lies entirely outside the image");
  }
  Image out(out_size, out_size, img.channels());
  const double sx = box.w() / out_size, sy = box.h() / out_size;
  for (int y = 0; y < out_size; ++y) {
    const double src_y = box.y() + (y + 0.5) * sy;
    for (int x = 0; x < out_size; ++x) {
      const double src_x = box.x() + (x + 0.5) * sx;
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = clamp_u8(img.sample(src_x, src_y, c));
    }
  }
  return out;
}

LandmarkSet flip_landmarks(const LandmarkSet& points, double width) {
  points.validate();
  const auto& mirror = mirror_table();
  LandmarkSet out = points;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const std::size_t j = mirror[i];
    out.points[j] = {width - points.points[i].x, points.points[i].y};
    out.occ_score[j] = points.occ_score[i];
    out.occ_flag[j] = points.occ_flag[i];
    out.detected[j] = points.detected[i];
    if (points.lm_score) (*out.lm_score)[j] = (*points.lm_score)[i];
  }
  return out;
}

std::pair<Image, LandmarkSet> flip_horizontal(const Image& img, const LandmarkSet& points) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(img.width() - 1 - x, y, c);
    }
  }
  return {std::move(out), flip_landmarks(points, img.width())};
}

}  // namespace ohg
