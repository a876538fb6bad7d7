#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lfdr/error.hpp"
#include "lfdr/strip_extractor.hpp"

namespace lfdr {

namespace {

constexpr int kAnnotationSchemaVersion = 1;

double orient(Point2d a, Point2d b, Point2d c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

bool on_segment(Point2d a, Point2d b, Point2d p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point2d a, Point2d b, Point2d c, Point2d d) {
  const double d1 = orient(c, d, a), d2 = orient(c, d, b), d3 = orient(a, b, c), d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  return (d1 == 0 && on_segment(c, d, a)) || (d2 == 0 && on_segment(c, d, b)) ||
         (d3 == 0 && on_segment(a, b, c)) || (d4 == 0 && on_segment(a, b, d));
}

}  // namespace

BinaryMask rasterize_polygon(const Annotation& ann, int width, int height) {
  const auto& poly = ann.polygon;
  if (poly.size() < 3 || signed_area(poly) == 0.0) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon needs at least 3 vertices and non-zero area");
  }
  BinaryMask mask(width, height);
  const std::size_t n = poly.size();
  std::vector<double> crossings;
  for (int y = 0; y < height; ++y) {
    const double py = y + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point2d& a = poly[i];
      const Point2d& b = poly[j];
      if ((a.y > py) != (b.y > py)) crossings.push_back((b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x);
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    // A center is inside when an odd number of crossings lie strictly to its
    // right; walk the sorted crossings from the right.
    std::size_t right = crossings.size();
    for (int x = width - 1; x >= 0; --x) {
      const double px = x + 0.5;
      while (right > 0 && crossings[right - 1] > px) --right;
      if ((crossings.size() - right) % 2 == 1) mask.set(x, y);
    }
  }
  return mask;
}

bool is_simple_polygon(const std::vector<Point2d>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2d a = poly[i], b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(a, b, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

std::string annotation_to_json(const AnnotationFile& file) {
  nlohmann::json j;
  j["schema_version"] = kAnnotationSchemaVersion;
  j["image"] = file.image;
  j["shapes"] = nlohmann::json::array();
  for (const auto& s : file.shapes) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : s.polygon) pts.push_back({p.x, p.y});
    j["shapes"].push_back({{"label", s.label}, {"points", pts}});
  }
  return j.dump(2);
}

AnnotationFile annotation_from_json(const std::string& text) {
  AnnotationFile out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kAnnotationSchemaVersion) {
      throw Error(ErrorCode::SchemaVersion, "unsupported annotation schema_version");
    }
    out.image = j.at("image").get<std::string>();
    for (const auto& s : j.at("shapes")) {
      Annotation a;
      a.label = s.at("label").get<std::string>();
      for (const auto& p : s.at("points")) a.polygon.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      if (!is_simple_polygon(a.polygon)) {
        throw Error(ErrorCode::InvalidAnnotation, "shape '" + a.label + "' is not a simple polygon");
      }
      out.shapes.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidAnnotation, std::string("malformed annotation JSON: ") + e.what());
  }
  return out;
}

AnnotationFile load_annotation_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return annotation_from_json(ss.str());
}

void save_annotation_file(const AnnotationFile& file, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << annotation_to_json(file) << '\n';
}

}  // namespace lfdr
