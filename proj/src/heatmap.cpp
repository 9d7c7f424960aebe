#include "ohg/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "ohg/sampling.hpp"

namespace ohg {

Heatmap::Heatmap(int width, int height, float fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("heatmap dimensions must be positive");
  values_.assign(std::size_t(width) * std::size_t(height), fill);
}

Heatmap::Heatmap(int width, int height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0) throw InvalidArgument("heatmap dimensions must be positive");
  if (values_.size() != std::size_t(width) * std::size_t(height)) {
    throw InvalidArgument("heatmap value count does not match its dimensions");
  }
}

float Heatmap::max_abs() const {
  float m = 0.0f;
  for (float v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Heatmap::sample(Point2 p) const {
  return sample_bilinear(width_, height_, p.x, p.y, [this](int x, int y) { return double(at(x, y)); });
}

void validate_stack(const HeatmapStack& stack) {
  if (stack.size() != kNumLandmarks) throw InvalidArgument("heatmap stack must hold 68 maps");
  for (const Heatmap& h : stack) {
    if (h.width() != kScoreSize || h.height() != kScoreSize) throw InvalidArgument("heatmaps must be 64x64");
  }
}

double EncodeParams::amplitude(LandmarkState s) const {
  switch (s) {
    case LandmarkState::Visible:
      return amplitude_visible;
    case LandmarkState::Occluded:
      return amplitude_occluded;
    case LandmarkState::Negative:
      return amplitude_negative;
  }
  return 0.0;
}

void render_gaussian(Heatmap& map, Point2 center, double amplitude, double sigma) {
  if (amplitude == 0.0) return;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = 0; y < map.height(); ++y) {
    const double dy = y + 0.5 - center.y;
    for (int x = 0; x < map.width(); ++x) {
      const double dx = x + 0.5 - center.x;
      map.at(x, y) = float(double(map.at(x, y)) + amplitude * std::exp(-(dx * dx + dy * dy) * inv));
    }
  }
}

Heatmap encode(Point2 p, LandmarkState state, const EncodeParams& params) {
  if (!(params.sigma > 0.0)) throw InvalidArgument("encode: sigma must be positive");
  Heatmap h;
  if (state == LandmarkState::Negative) return h;
  if (!(p.x >= 0.0 && p.x < kScoreSize && p.y >= 0.0 && p.y < kScoreSize)) {
    throw InvalidArgument("encode: landmark lies outside the 64x64 score grid");
  }
  render_gaussian(h, p, params.amplitude(state), params.sigma);
  return h;
}

HeatmapStack encode_stack(const LandmarkSet& lms, bool negative, const EncodeParams& params) {
  lms.validate();
  HeatmapStack stack;
  stack.reserve(kNumLandmarks);
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const LandmarkState s = negative ? LandmarkState::Negative
                            : lms.occ_flag[i] ? LandmarkState::Occluded
                                              : LandmarkState::Visible;
    stack.push_back(encode(lms.points[i], s, params));
  }
  return stack;
}

Components connected_components(int width, int height, std::span<const std::uint8_t> mask) {
  if (mask.size() != std::size_t(width) * std::size_t(height)) {
    throw InvalidArgument("connected_components: mask size does not match dimensions");
  }
  Components out;
  out.width = width;
  out.height = height;
  out.labels.assign(mask.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || out.labels[start] != 0) continue;
    const int label = ++out.count;
    int size = 0;
    out.labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      ++size;
      const int x = int(idx % std::size_t(width)), y = int(idx / std::size_t(width));
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
          const std::size_t n = std::size_t(ny) * std::size_t(width) + std::size_t(nx);
          if (mask[n] && out.labels[n] == 0) {
            out.labels[n] = label;
            stack.push_back(n);
          }
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

std::optional<DecodedPoint> decode(const Heatmap& h, const DecodeParams& params) {
  const auto vals = h.values();
  std::size_t argmax = 0;
  float peak = 0.0f;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const float m = std::abs(vals[i]);
    if (!std::isfinite(m)) return std::nullopt;
    if (m > peak) {
      peak = m;
      argmax = i;
    }
  }
  if (peak <= 0.0f) return std::nullopt;

  const double thr = params.relative_threshold * double(peak);
  std::vector<std::uint8_t> mask(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) mask[i] = double(std::abs(vals[i])) >= thr ? 1 : 0;
  const Components cc = connected_components(h.width(), h.height(), mask);
  const int target = cc.labels[argmax];

  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (cc.labels[i] != target) continue;
    const double m = std::abs(vals[i]);
    const double w = params.weighting == CentroidWeighting::AboveThreshold ? m - thr : m;
    const int x = int(i % std::size_t(h.width())), y = int(i / std::size_t(h.width()));
    sw += w;
    sx += w * (x + 0.5);
    sy += w * (y + 0.5);
  }
  Point2 loc;
  if (sw > 0.0) {
    loc = {sx / sw, sy / sw};
  } else {
    loc = {double(argmax % std::size_t(h.width())) + 0.5, double(argmax / std::size_t(h.width())) + 0.5};
  }
  return DecodedPoint{loc, h.sample(loc)};
}

LandmarkSet decode_stack(const HeatmapStack& stack, const Box& detection_box, double occ_threshold,
                         const DecodeParams& params) {
  validate_stack(stack);
  LandmarkSet out;
  const CoordFrame score = CoordFrame::score(detection_box);
  const CoordFrame orig = CoordFrame::original();
  for (std::size_t i = 0; i < kNumLandmarks; ++i) {
    const auto d = decode(stack[i], params);
    if (!d) {
      out.detected[i] = false;
      out.occ_score[i] = 0.0;
      out.points[i] = detection_box.center();
      continue;
    }
    out.points[i] = map_point(d->location, score, orig);
    out.occ_score[i] = d->raw_value;
  }
  out.apply_threshold(occ_threshold);
  return out;
}

}  // namespace ohg
