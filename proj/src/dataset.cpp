#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "lfdr/error.hpp"
#include "lfdr/synthgen.hpp"

namespace lfdr {

namespace fs = std::filesystem;

namespace {

std::array<std::size_t, kNumClasses> largest_remainder(const std::array<double, kNumClasses>& mix, std::size_t total) {
  const double sum = std::accumulate(mix.begin(), mix.end(), 0.0);
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidSplit, "class mix must have a positive sum");
  std::array<std::size_t, kNumClasses> counts{};
  std::array<double, kNumClasses> rem{};
  std::size_t used = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const double exact = mix[c] / sum * static_cast<double>(total);
    counts[c] = static_cast<std::size_t>(exact);
    rem[c] = exact - static_cast<double>(counts[c]);
    used += counts[c];
  }
  std::array<int, kNumClasses> order{0, 1, 2, 3, 4};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; used < total; ++k, ++used) ++counts[order[k % kNumClasses]];
  return counts;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* kManifestHeader =
    "filename,class,split,seed,control_intensity,igg_intensity,igm_intensity,noise_sigma,rotation_deg,background,"
    "lighting_gain,blur_radius";

AnnotationFile strip_annotation(const ManifestRow& row, const std::string& image) {
  AnnotationFile a;
  a.image = image;
  const StripLayout layout;
  const std::array<std::pair<const char*, std::pair<RowWindow, double>>, 3> bands{
      {{"control", {layout.control, row.control_intensity}},
       {"igg", {layout.igg, row.igg_intensity}},
       {"igm", {layout.igm, row.igm_intensity}}}};
  for (const auto& [name, band] : bands) {
    if (band.second <= 0.0) continue;
    const RowWindow r = half_peak_rows(band.first);
    a.shapes.push_back({{{0.0, static_cast<double>(r.begin)},
                         {static_cast<double>(kStripWidth), static_cast<double>(r.begin)},
                         {static_cast<double>(kStripWidth), static_cast<double>(r.end)},
                         {0.0, static_cast<double>(r.end)}},
                        name});
  }
  return a;
}

}  // namespace

DatasetConfig dataset_preset(const std::string& name, std::uint64_t seed) {
  DatasetConfig c;
  c.preset = name;
  c.seed = seed;
  if (name == "paper-shape") return c;
  if (name == "balanced") {
    c.class_mix = {0.2, 0.2, 0.2, 0.2, 0.2};
    return c;
  }
  if (name == "separable") {
    c.class_counts = std::array<std::size_t, kNumClasses>{50, 0, 0, 50, 0};
    c.train = 70;
    c.val = 20;
    c.test = 10;
    c.test_band = {0.5, 1.0};
    return c;
  }
  if (name == "faint") {
    c.test_band = {kMinVisibleIntensity, 0.2};
    c.class_mix = {0.2, 0.2, 0.2, 0.4, 0.0};
    return c;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown dataset preset '" + name + "'");
}

StripSpec ManifestRow::strip_spec() const {
  StripSpec s;
  s.label = label;
  s.control_intensity = control_intensity;
  s.igg_intensity = igg_intensity;
  s.igm_intensity = igm_intensity;
  s.noise_sigma = noise_sigma;
  return s;
}

CassetteSpec ManifestRow::cassette_spec() const {
  CassetteSpec c;
  c.strip = strip_spec();
  c.rotation_deg = rotation_deg;
  c.background = background;
  c.lighting_gain = lighting_gain;
  c.blur_radius = blur_radius;
  c.seed = seed;
  return c;
}

std::vector<ManifestRow> plan_dataset(const DatasetConfig& config) {
  if (config.train == 0 || config.val == 0 || config.test == 0) {
    throw Error(ErrorCode::InvalidSplit, "every split needs at least one sample");
  }
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t total = config.train + config.val + config.test;
  std::array<std::size_t, 3> splits{config.train, config.val, config.test};
  if (config.class_counts) {
    counts = *config.class_counts;
    const std::size_t requested = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (requested < 3) throw Error(ErrorCode::InvalidSplit, "class counts leave a split empty");
    if (requested != total) {
      // Keep the split proportions, rescaled to the requested total.
      std::array<double, kNumClasses> mix{static_cast<double>(splits[0]), static_cast<double>(splits[1]),
                                          static_cast<double>(splits[2]), 0.0, 0.0};
      const auto scaled = largest_remainder(mix, requested);
      splits = {scaled[0], scaled[1], scaled[2]};
      if (splits[0] == 0 || splits[1] == 0 || splits[2] == 0) {
        throw Error(ErrorCode::InvalidSplit, "class counts leave a split empty");
      }
      total = requested;
    }
  } else {
    counts = largest_remainder(config.class_mix, total);
  }

  std::vector<ClassLabel> labels;
  for (int c = 0; c < kNumClasses; ++c) labels.insert(labels.end(), counts[c], class_from_code(c));
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, ~0ULL));
  std::shuffle(labels.begin(), labels.end(), shuffle_rng);

  static const std::array<const char*, 3> kSplitNames{"train", "val", "test"};
  std::vector<ManifestRow> rows;
  rows.reserve(total);
  std::size_t split = 0, in_split = 0;
  for (std::size_t i = 0; i < total; ++i) {
    while (in_split >= splits[split]) {
      ++split;
      in_split = 0;
    }
    ++in_split;
    ManifestRow r;
    r.label = labels[i];
    r.split = kSplitNames[split];
    r.seed = derive_seed(config.seed, i);
    std::mt19937_64 rng(r.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto draw = [&](const IntensityRange& range) { return range.lo + (range.hi - range.lo) * u(rng); };
    r.control_intensity = draw(config.control_band);
    r.igg_intensity = draw(config.test_band);
    r.igm_intensity = draw(config.test_band);
    switch (r.label) {
      case ClassLabel::PositiveIGG: r.igm_intensity = 0.0; break;
      case ClassLabel::PositiveIGM: r.igg_intensity = 0.0; break;
      case ClassLabel::PositiveIGGandIGM: break;
      case ClassLabel::Negative: r.igg_intensity = r.igm_intensity = 0.0; break;
      case ClassLabel::Inconclusive:
        r.control_intensity = 0.0;
        if (u(rng) < 0.5) r.igg_intensity = 0.0;
        if (u(rng) < 0.5) r.igm_intensity = 0.0;
        break;
    }
    r.noise_sigma = config.noise_lo + (config.noise_hi - config.noise_lo) * u(rng);
    r.rotation_deg = config.max_rotation_deg * (2.0 * u(rng) - 1.0);
    r.background = static_cast<BackgroundPreset>(static_cast<int>(u(rng) * 3.0) % 3);
    char name[64];
    std::snprintf(name, sizeof name, "strips/%s/%05zu.png", r.split.c_str(), i);
    r.filename = name;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ManifestRow> generate_dataset(const DatasetConfig& config, const std::string& out_dir,
                                          const GenerateOptions& options) {
  const auto rows = plan_dataset(config);
  const fs::path root(out_dir);
  std::error_code ec;
  for (const char* sub : {"strips/train", "strips/val", "strips/test", "annotations"}) fs::create_directories(root / sub, ec);
  if (options.write_cassettes) fs::create_directories(root / "cassettes", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir + ": " + ec.message());

  for (const auto& row : rows) {
    const std::string stem = fs::path(row.filename).stem().string();
    const StripSample s = generate_strip(row.strip_spec(), row.seed);
    write_png_file(s.strip.raster(), (root / row.filename).string());
    save_annotation_file(strip_annotation(row, row.filename), (root / "annotations" / (stem + ".json")).string());
    if (options.write_cassettes) {
      const CassetteSample c = generate_cassette(row.cassette_spec());
      write_png_file(c.image, (root / "cassettes" / (stem + ".png")).string());
      AnnotationFile a;
      a.image = "cassettes/" + stem + ".png";
      a.shapes.push_back({std::vector<Point2d>(c.truth.quad.begin(), c.truth.quad.end()), "strip_window"});
      save_annotation_file(a, (root / "cassettes" / (stem + ".json")).string());
    }
  }
  write_manifest(rows, (root / "manifest.csv").string());
  return rows;
}

std::vector<StripSample> load_split(const std::string& dir, const std::vector<ManifestRow>& rows,
                                    const std::string& split) {
  const fs::path root(dir);
  std::vector<StripSample> out;
  for (const auto& row : rows) {
    if (row.split != split) continue;
    StripSample s{StripImage(read_image_file((root / row.filename).string())), row.label, {}};
    for (ClassLabel c : kAllClasses) s.masks.emplace(c, empty_band_mask());
    const std::string stem = fs::path(row.filename).stem().string();
    const AnnotationFile ann = load_annotation_file((root / "annotations" / (stem + ".json")).string());
    for (const auto& shape : ann.shapes) {
      const BandMask m = rasterize_polygon(shape, kStripWidth, kStripHeight);
      if (shape.label == "control") {
        s.masks.at(ClassLabel::Negative) |= m;
      } else if (shape.label == "igg") {
        s.masks.at(ClassLabel::PositiveIGG) |= m;
        s.masks.at(ClassLabel::PositiveIGGandIGM) |= m;
      } else if (shape.label == "igm") {
        s.masks.at(ClassLabel::PositiveIGM) |= m;
        s.masks.at(ClassLabel::PositiveIGGandIGM) |= m;
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_manifest(const std::vector<ManifestRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    out << r.filename << ',' << to_string(r.label) << ',' << r.split << ',' << r.seed << ',' << fmt(r.control_intensity)
        << ',' << fmt(r.igg_intensity) << ',' << fmt(r.igm_intensity) << ',' << fmt(r.noise_sigma) << ','
        << fmt(r.rotation_deg) << ',' << to_string(r.background) << ',' << fmt(r.lighting_gain) << ',' << r.blur_radius
        << '\n';
  }
}

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) throw Error(ErrorCode::Io, "unexpected manifest header in " + path);
  std::vector<ManifestRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    const auto bad = [&](const std::string& why) {
      return Error(ErrorCode::Io, path + ":" + std::to_string(n) + ": " + why);
    };
    if (f.size() != 12) throw bad("expected 12 columns");
    ManifestRow r;
    r.filename = f[0];
    const auto label = parse_class_label(f[1]);
    if (!label) throw bad("unknown class " + f[1]);
    r.label = *label;
    r.split = f[2];
    const auto bg = parse_background(f[9]);
    if (!bg) throw bad("unknown background " + f[9]);
    try {
      r.seed = std::stoull(f[3]);
      r.control_intensity = std::stod(f[4]);
      r.igg_intensity = std::stod(f[5]);
      r.igm_intensity = std::stod(f[6]);
      r.noise_sigma = std::stod(f[7]);
      r.rotation_deg = std::stod(f[8]);
      r.lighting_gain = std::stod(f[10]);
      r.blur_radius = std::stoi(f[11]);
    } catch (const std::exception&) {
      throw bad("malformed number");
    }
    r.background = *bg;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lfdr
