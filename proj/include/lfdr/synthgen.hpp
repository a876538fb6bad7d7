#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lfdr/imaging.hpp"
#include "lfdr/labels.hpp"
#include "lfdr/strip_extractor.hpp"
#include "lfdr/strip_layout.hpp"

namespace lfdr {

inline constexpr double kMinVisibleIntensity = 0.05;

/// Background of a blank strip and the per-channel darkening of a band at
/// intensity 1.
inline constexpr Rgb kStripBackground{240, 240, 240};
inline constexpr std::array<double, 3> kBandDepth{110.0, 190.0, 140.0};

struct StripSpec {
  ClassLabel label = ClassLabel::Negative;
  double control_intensity = 1.0;
  double igg_intensity = 0.0;
  double igm_intensity = 0.0;
  double noise_sigma = 0.0;
  StripLayout band_rows;
  double min_visible = kMinVisibleIntensity;
};

/// Throws InconsistentSpec when the intensities contradict the label or lie
/// outside [0, 1].
void validate_spec(const StripSpec& spec);

struct StripSample {
  StripImage strip;
  ClassLabel label;
  /// Ground truth per class: IgG band, IgM band, their union, the control
  /// band (keyed Negative), and an always-empty Inconclusive mask.
  std::map<ClassLabel, BandMask> masks;
};

StripSample generate_strip(const StripSpec& spec, std::uint64_t seed);

/// Band rows whose Gaussian profile exceeds half its peak.
RowWindow half_peak_rows(const RowWindow& window);

enum class BackgroundPreset { PlainTable, ClutteredDesk, HandHeld };
std::string_view to_string(BackgroundPreset b);
std::optional<BackgroundPreset> parse_background(std::string_view name);

struct CassetteSpec {
  StripSpec strip;
  double rotation_deg = 0.0;
  BackgroundPreset background = BackgroundPreset::PlainTable;
  double lighting_gain = 1.0;
  int blur_radius = 0;
  std::uint64_t seed = 0;
};

struct CassetteSample {
  RasterImage image;
  CassetteDetection truth;
  StripSample strip;
};

/// Renders a normalized-resolution photo of a cassette holding the strip.
CassetteSample generate_cassette(const CassetteSpec& spec);

/// Well-mixed per-sample seed derived from a base seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct IntensityRange {
  double lo = kMinVisibleIntensity;
  double hi = 1.0;
};

struct DatasetConfig {
  std::string preset = "paper-shape";
  std::uint64_t seed = 0;
  /// Split sizes; the total is the sample count unless class_counts is set.
  std::size_t train = 337;
  std::size_t val = 85;
  std::size_t test = 17;
  /// Fraction of samples per class (codes 0..4); rounded by largest remainder.
  std::array<double, kNumClasses> class_mix{0.553 / 3, 0.553 / 3, 0.553 / 3, 0.439, 0.0085};
  /// Exact per-class counts; overrides class_mix and the split total.
  std::optional<std::array<std::size_t, kNumClasses>> class_counts;
  IntensityRange test_band{kMinVisibleIntensity, 1.0};
  IntensityRange control_band{0.3, 1.0};
  double noise_lo = 1.5;
  double noise_hi = 4.0;
  double max_rotation_deg = 18.0;
};

/// Named presets: "paper-shape", "balanced", "separable", "faint".
DatasetConfig dataset_preset(const std::string& name, std::uint64_t seed);

struct ManifestRow {
  std::string filename;
  ClassLabel label = ClassLabel::Negative;
  std::string split;
  std::uint64_t seed = 0;
  double control_intensity = 0.0;
  double igg_intensity = 0.0;
  double igm_intensity = 0.0;
  double noise_sigma = 0.0;
  double rotation_deg = 0.0;
  BackgroundPreset background = BackgroundPreset::PlainTable;
  double lighting_gain = 1.0;
  int blur_radius = 0;

  StripSpec strip_spec() const;
  CassetteSpec cassette_spec() const;
  bool operator==(const ManifestRow&) const = default;
};

/// Plans the dataset without rendering anything.
std::vector<ManifestRow> plan_dataset(const DatasetConfig& config);

struct GenerateOptions {
  bool write_cassettes = false;
};

/// Renders every row into `out_dir` (strips/, annotations/, optionally
/// cassettes/) and writes manifest.csv.
std::vector<ManifestRow> generate_dataset(const DatasetConfig& config, const std::string& out_dir,
                                          const GenerateOptions& options = {});

/// Reads the strips of one split back from a generated dataset, with masks
/// rasterized from the annotation files.
std::vector<StripSample> load_split(const std::string& dir, const std::vector<ManifestRow>& rows,
                                    const std::string& split);

void write_manifest(const std::vector<ManifestRow>& rows, const std::string& path);
std::vector<ManifestRow> read_manifest(const std::string& path);

}  // namespace lfdr
