#include "lfdr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace lfdr {

namespace {

double cross(Point2d o, Point2d a, Point2d b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

double signed_area(std::span<const Point2d> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2d& a = polygon[i];
    const Point2d& b = polygon[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

double perimeter(std::span<const Point2d> polygon) {
  double p = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2d d = polygon[(i + 1) % n] - polygon[i];
    p += std::hypot(d.x, d.y);
  }
  return p;
}

std::vector<Point2d> convex_hull(std::vector<Point2d> pts) {
  std::sort(pts.begin(), pts.end(), [](Point2d a, Point2d b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;

  std::vector<Point2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

RotatedRect min_area_rect(std::span<const Point2d> hull) {
  RotatedRect best;
  if (hull.empty()) return best;
  if (hull.size() == 1) {
    best.center = hull[0];
    best.long_axis = {0.0, 1.0};
    return best;
  }

  double best_area = std::numeric_limits<double>::infinity();
  const std::size_t n = hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    Point2d e = hull[(i + 1) % n] - hull[i];
    const double len = std::hypot(e.x, e.y);
    if (len == 0.0) continue;
    const Point2d u{e.x / len, e.y / len};
    const Point2d v{-u.y, u.x};
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (const auto& p : hull) {
      const double pu = p.x * u.x + p.y * u.y;
      const double pv = p.x * v.x + p.y * v.y;
      umin = std::min(umin, pu);
      umax = std::max(umax, pu);
      vmin = std::min(vmin, pv);
      vmax = std::max(vmax, pv);
    }
    const double area = (umax - umin) * (vmax - vmin);
    if (area < best_area) {
      best_area = area;
      const double cu = 0.5 * (umin + umax);
      const double cv = 0.5 * (vmin + vmax);
      best.center = u * cu + v * cv;
      const double du = umax - umin;
      const double dv = vmax - vmin;
      Point2d axis = du >= dv ? u : v;
      if (axis.y < 0 || (axis.y == 0 && axis.x < 0)) axis = axis * -1.0;
      best.long_axis = axis;
      best.height = std::max(du, dv);
      best.width = std::min(du, dv);
    }
  }
  return best;
}

Quad rect_corners(const RotatedRect& r) {
  const Point2d down = r.long_axis;
  const Point2d right{down.y, -down.x};
  const Point2d hw = right * (r.width / 2.0);
  const Point2d hh = down * (r.height / 2.0);
  return {r.center - hw - hh, r.center + hw - hh, r.center + hw + hh, r.center - hw + hh};
}

Homography::Homography(double w, double h, const Quad& quad) {
  const std::array<Point2d, 4> src{{{0, 0}, {w, 0}, {w, h}, {0, h}}};
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y;
    const double u = quad[i].x, v = quad[i].y;
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  const Eigen::Matrix<double, 8, 1> s = a.fullPivLu().solve(b);
  for (int i = 0; i < 8; ++i) m_[i] = s(i);
  m_[8] = 1.0;
}

Point2d Homography::map(double x, double y) const noexcept {
  const double d = m_[6] * x + m_[7] * y + m_[8];
  return {(m_[0] * x + m_[1] * y + m_[2]) / d, (m_[3] * x + m_[4] * y + m_[5]) / d};
}

}  // namespace lfdr
