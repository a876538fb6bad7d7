#pragma once

#include <array>
#include <span>
#include <vector>

namespace lfdr {

struct Point2d {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2d&) const = default;
};

inline Point2d operator+(Point2d a, Point2d b) { return {a.x + b.x, a.y + b.y}; }
inline Point2d operator-(Point2d a, Point2d b) { return {a.x - b.x, a.y - b.y}; }
inline Point2d operator*(Point2d a, double s) { return {a.x * s, a.y * s}; }

/// Corners ordered top-left, top-right, bottom-right, bottom-left.
using Quad = std::array<Point2d, 4>;

/// Signed shoelace area; positive for clockwise order in image coordinates
/// (y down).
double signed_area(std::span<const Point2d> polygon);
double perimeter(std::span<const Point2d> polygon);

/// Andrew's monotone chain. Collinear points are dropped.
std::vector<Point2d> convex_hull(std::vector<Point2d> points);

struct RotatedRect {
  Point2d center;
  double width = 0.0;   // extent along the short axis
  double height = 0.0;  // extent along the long axis
  /// Unit vector of the long axis, pointing down (y >= 0).
  Point2d long_axis;
};

/// Minimum-area enclosing rectangle of a convex hull (rotating calipers).
RotatedRect min_area_rect(std::span<const Point2d> hull);

/// Corners of the rectangle as TL, TR, BR, BL with the long axis vertical.
Quad rect_corners(const RotatedRect& rect);

/// Projective map taking the unit-pixel rectangle (0,0)-(w,h) onto `quad`.
class Homography {
 public:
  Homography(double w, double h, const Quad& quad);
  Point2d map(double x, double y) const noexcept;

 private:
  std::array<double, 9> m_{};
};

}  // namespace lfdr
