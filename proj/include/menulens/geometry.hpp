#pragma once

#include <algorithm>

namespace menulens {

struct ImageDims {
  int width = 0;
  int height = 0;

  bool valid() const { return width > 0 && height > 0; }
};

/// Axis-aligned box in pixel coordinates.
struct BBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double center_x() const { return (x_min + x_max) / 2.0; }
  double center_y() const { return (y_min + y_max) / 2.0; }
  bool has_area() const { return x_min < x_max && y_min < y_max; }

  bool contains(const BBox& other) const {
    return x_min <= other.x_min && y_min <= other.y_min && x_max >= other.x_max &&
           y_max >= other.y_max;
  }

  BBox united(const BBox& other) const {
    return {std::min(x_min, other.x_min), std::min(y_min, other.y_min),
            std::max(x_max, other.x_max), std::max(y_max, other.y_max)};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct Point {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

}  // namespace menulens
