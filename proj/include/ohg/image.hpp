#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ohg/geometry.hpp"
#include "ohg/landmarks.hpp"

namespace ohg {

/// Row-major 8-bit image with 1 (gray), 3 (RGB) or 4 (RGBA) channels.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, std::uint8_t fill = 0);
  Image(int width, int height, int channels, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  std::uint8_t at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  /// Bilinear sample of channel c at continuous (x, y); zero outside.
  double sample(double x, double y, int c) const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (std::size_t(y) * std::size_t(width_) + std::size_t(x)) * std::size_t(channels_) + std::size_t(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

struct ClaheParams {
  double clip_limit = 2.0;  // multiple of the uniform bin height
  int tiles_x = 8;
  int tiles_y = 8;
};

/// Clipped, renormalized 256-bin histogram of one tile. Every bin is at
/// most clip_limit * n / 256 after clipping; excess mass is spread over the
/// bins that still have room.
std::vector<double> clahe_clipped_histogram(const std::vector<std::uint32_t>& hist, double clip_limit);

/// Contrast-limited adaptive histogram equalization. RGB input is converted
/// to full-range BT.601 YCrCb and only luma is equalized; gray input is
/// equalized directly. Throws on clip_limit <= 0 or a tile grid larger than
/// the image.
Image clahe(const Image& img, const ClaheParams& params = {});

/// Rotates about `center` by `angle_deg` (counter-clockwise as displayed,
/// y pointing down). Pixels are bilinearly resampled on the same canvas;
/// landmarks are transformed analytically.
std::pair<Image, LandmarkSet> rotate(const Image& img, double angle_deg, Point2 center, LandmarkSet points);

/// The analytic point transform used by rotate().
Point2 rotate_point(Point2 p, double angle_deg, Point2 center);

/// Resamples `box` into an out_size x out_size image. Regions outside the
/// source read as zero. Throws if the box does not overlap the image.
Image crop_resize(const Image& img, const Box& box, int out_size = kInputSize);

/// Mirrors the image about its vertical axis. Points map x -> width - x and
/// move to their mirrored landmark index together with their occlusion data.
std::pair<Image, LandmarkSet> flip_horizontal(const Image& img, const LandmarkSet& points);

/// Landmark half of flip_horizontal for a canvas of the given width.
LandmarkSet flip_landmarks(const LandmarkSet& points, double width);

}  // namespace ohg
