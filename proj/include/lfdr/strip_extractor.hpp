#pragma once

#include <string>
#include <vector>

#include "lfdr/geometry.hpp"
#include "lfdr/imaging.hpp"
#include "lfdr/strip_layout.hpp"

namespace lfdr {

struct CassetteDetection {
  Quad quad{};                 // strip window, TL, TR, BR, BL
  double rotation_deg = 0.0;   // counter-clockwise positive
  double confidence = 0.0;     // [0, 1]
};

struct DetectorConfig {
  /// Nominal short:long ratio of the strip window and the accepted relative
  /// deviation from it.
  double window_aspect = static_cast<double>(kStripWidth) / kStripHeight;
  double aspect_tolerance = 0.25;
  double max_rotation_deg = 18.0;
  /// Slack on top of max_rotation_deg for measurement error of the fitted
  /// rectangle.
  double rotation_slack_deg = 2.0;
  /// Body candidates smaller than this fraction of the frame are ignored.
  double min_body_fraction = 0.01;
  int min_window_pixels = 20000;
  /// Detection runs on luma averaged over blocks of this side; lengths below
  /// are in full-resolution pixels.
  int working_scale = 2;
  /// Side of the square closing element; must exceed the tallest band.
  int closing_size = 101;
  int smoothing_size = 5;
  int opening_size = 7;
  /// Candidates within this relative confidence of the best are ambiguous.
  double ambiguity_margin = 0.10;
  int max_body_candidates = 3;
};

/// Locates the strip window of a cassette in a normalized photo.
class CassetteDetector {
 public:
  virtual ~CassetteDetector() = default;
  virtual CassetteDetection detect(const RasterImage& img) const = 0;
};

/// Deterministic detector: Otsu split into bright bodies, then the brightest
/// strip-shaped region inside each body, fitted with a minimum-area rectangle.
class ClassicalDetector final : public CassetteDetector {
 public:
  explicit ClassicalDetector(DetectorConfig config = {}) : config_(config) {}
  CassetteDetection detect(const RasterImage& img) const override;
  const DetectorConfig& config() const noexcept { return config_; }

 private:
  DetectorConfig config_;
};

CassetteDetection detect_cassette(const RasterImage& img, const DetectorConfig& config = {});

/// Warps the detected quad to a 300x875 strip with the control band at the top.
StripImage extract_strip(const RasterImage& img, const CassetteDetection& det,
                         const StripLayout& layout = {});

/// Otsu threshold over a 256-bin histogram; returns the last bin of the
/// lower class.
int otsu_threshold(const std::array<std::uint64_t, 256>& histogram);

struct Annotation {
  std::vector<Point2d> polygon;
  std::string label;
};

struct AnnotationFile {
  std::string image;
  std::vector<Annotation> shapes;
};

/// Pixel (x, y) is set iff its center (x+0.5, y+0.5) is inside the polygon by
/// the even-odd rule.
BinaryMask rasterize_polygon(const Annotation& ann, int width, int height);

bool is_simple_polygon(const std::vector<Point2d>& polygon);

std::string annotation_to_json(const AnnotationFile& file);
AnnotationFile annotation_from_json(const std::string& text);
AnnotationFile load_annotation_file(const std::string& path);
void save_annotation_file(const AnnotationFile& file, const std::string& path);

}  // namespace lfdr
