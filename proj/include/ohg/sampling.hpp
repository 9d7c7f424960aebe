#pragma once

#include <algorithm>
#include <cmath>

namespace ohg {

/// Bilinear sample of a width x height grid at continuous position (x, y),
/// pixel centers at i + 0.5. Positions outside [0, width) x [0, height)
/// read as zero; inside, neighbors past the border clamp to the edge.
/// `at(col, row)` returns the grid value.
template <typename At>
double sample_bilinear(int width, int height, double x, double y, At&& at) {
  if (!(x >= 0.0 && x < width && y >= 0.0 && y < height)) return 0.0;
  const double gx = x - 0.5;
  const double gy = y - 0.5;
  const double fx0 = std::floor(gx);
  const double fy0 = std::floor(gy);
  const double ax = gx - fx0;
  const double ay = gy - fy0;
  const int x0 = std::clamp(int(fx0), 0, width - 1);
  const int x1 = std::clamp(int(fx0) + 1, 0, width - 1);
  const int y0 = std::clamp(int(fy0), 0, height - 1);
  const int y1 = std::clamp(int(fy0) + 1, 0, height - 1);
  const double top = (1.0 - ax) * at(x0, y0) + ax * at(x1, y0);
  const double bot = (1.0 - ax) * at(x0, y1) + ax * at(x1, y1);
  return (1.0 - ay) * top + ay * bot;
}

}  // namespace ohg
