#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace ohg {

/// Raised when a value violates a domain precondition (degenerate box, bad
/// dimensions, out-of-range parameter).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Continuous image coordinates. Pixel i spans [i, i+1); its center is i+0.5.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Axis-aligned box in continuous pixel coordinates. Width and height are
/// strictly positive; the constructor rejects anything else.
class Box {
 public:
  Box(double x, double y, double w, double h);

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double right() const { return x_ + w_; }
  double bottom() const { return y_ + h_; }
  double area() const { return w_ * h_; }
  Point2 center() const { return {x_ + 0.5 * w_, y_ + 0.5 * h_}; }
  bool contains(Point2 p) const {
    return p.x >= x_ && p.x <= right() && p.y >= y_ && p.y <= bottom();
  }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  double x_, y_, w_, h_;
};

double intersection_area(const Box& a, const Box& b);

/// Intersection over union, in [0, 1].
double iou(const Box& a, const Box& b);

/// Tight bounding box of the points with its top edge raised by
/// `top_extend` times the tight height. Throws InvalidArgument when the
/// points are empty or have zero extent along either axis.
Box box_from_points(std::span<const Point2> points, double top_extend = 0.2);

inline constexpr int kScoreSize = 64;
inline constexpr int kInputSize = 256;
inline constexpr double kScoreToInput = double(kInputSize) / kScoreSize;

enum class FrameKind { Score, Input, Original };

/// A coordinate frame of the post-network pipeline. Score and input frames
/// are attached to a detection box; the box is only needed when mapping
/// into or out of the original image frame.
struct CoordFrame {
  FrameKind kind = FrameKind::Score;
  std::optional<Box> detection_box;

  static CoordFrame score(std::optional<Box> box = std::nullopt) { return {FrameKind::Score, box}; }
  static CoordFrame input(std::optional<Box> box = std::nullopt) { return {FrameKind::Input, box}; }
  static CoordFrame original(std::optional<Box> box = std::nullopt) { return {FrameKind::Original, box}; }
};

/// Maps a point between frames along the chain score <-> input <-> original.
/// Score to input scales coordinates by 4. Input to original scales by
/// box.w/256 and box.h/256 and translates by the box origin.
Point2 map_point(Point2 p, const CoordFrame& from, const CoordFrame& to);

}  // namespace ohg
