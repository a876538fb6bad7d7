#include "lfdr/strip_extractor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lfdr/error.hpp"

namespace lfdr {

namespace {

/// Plane of bytes with its own dimensions; detection works on luma planes.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Luma averaged over scale x scale blocks, then box smoothed with a size x
/// size kernel (borders clamped).
Plane working_luma(const RasterImage& img, int scale, int size) {
  const int w = img.width() / scale;
  const int h = img.height() / scale;
  const auto px = img.pixels();
  std::vector<std::uint32_t> luma(static_cast<std::size_t>(w) * h, 0);
  // Fixed-point Rec. 601 weights summing to 1024.
  constexpr std::uint32_t kR = 306, kG = 601, kB = 117;
  for (int y = 0; y < h * scale; ++y) {
    const std::uint8_t* row = px.data() + static_cast<std::size_t>(y) * img.width() * 3;
    std::uint32_t* out = luma.data() + static_cast<std::size_t>(y / scale) * w;
    for (int x = 0; x < w * scale; ++x) out[x / scale] += kR * row[3 * x] + kG * row[3 * x + 1] + kB * row[3 * x + 2];
  }
  const std::uint32_t block = 1024u * static_cast<std::uint32_t>(scale * scale);
  for (auto& v : luma) v = (v + block / 2) / block;

  const int r = std::max(0, size / 2);
  std::vector<std::uint32_t> tmp(luma.size());
  for (int y = 0; y < h; ++y) {
    const std::uint32_t* row = luma.data() + static_cast<std::size_t>(y) * w;
    std::uint32_t* out = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      std::uint32_t s = 0;
      for (int k = -r; k <= r; ++k) s += row[std::clamp(x + k, 0, w - 1)];
      out[x] = s;
    }
  }
  Plane plane{w, h, std::vector<std::uint8_t>(luma.size())};
  const std::uint32_t norm = static_cast<std::uint32_t>((2 * r + 1) * (2 * r + 1));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint32_t s = 0;
      for (int k = -r; k <= r; ++k) s += tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
      plane(x, y) = static_cast<std::uint8_t>((s + norm / 2) / norm);
    }
  }
  return plane;
}

/// Detector lengths converted to the working plane.
struct WorkingScale {
  int scale = 1;
  int closing = 1;
  int opening = 1;
  int smoothing = 1;
  std::size_t min_window_pixels = 0;

  explicit WorkingScale(const DetectorConfig& cfg) : scale(std::max(1, cfg.working_scale)) {
    const auto odd = [&](int v) { return std::max(1, v / scale) | 1; };
    closing = odd(cfg.closing_size);
    opening = odd(cfg.opening_size);
    smoothing = odd(cfg.smoothing_size);
    min_window_pixels = static_cast<std::size_t>(cfg.min_window_pixels / (scale * scale));
  }
};

struct Component {
  int label = 0;
  std::size_t area = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounds
};

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

/// Two-pass 4-connected labelling. Labels are 1-based; 0 means background.
std::vector<Component> label_components(const Plane& mask, std::vector<int>& labels) {
  const int w = mask.width;
  const int h = mask.height;
  labels.assign(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> parent{0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const int left = x > 0 ? labels[i - 1] : 0;
      const int up = y > 0 ? labels[i - w] : 0;
      if (!left && !up) {
        const int id = static_cast<int>(parent.size());
        parent.push_back(id);
        labels[i] = id;
      } else if (left && up) {
        const int a = find_root(parent, left);
        const int b = find_root(parent, up);
        labels[i] = std::min(a, b);
        parent[std::max(a, b)] = std::min(a, b);
      } else {
        labels[i] = left ? left : up;
      }
    }
  }

  std::vector<int> remap(parent.size(), 0);
  std::vector<Component> comps;
  for (std::size_t id = 1; id < parent.size(); ++id) {
    const int root = find_root(parent, static_cast<int>(id));
    if (remap[root] == 0) {
      comps.push_back({static_cast<int>(comps.size()) + 1, 0, w, h, -1, -1});
      remap[root] = static_cast<int>(comps.size());
    }
    remap[id] = remap[root];
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int& l = labels[static_cast<std::size_t>(y) * w + x];
      if (!l) continue;
      l = remap[l];
      Component& c = comps[l - 1];
      ++c.area;
      c.x0 = std::min(c.x0, x);
      c.y0 = std::min(c.y0, y);
      c.x1 = std::max(c.x1, x);
      c.y1 = std::max(c.y1, y);
    }
  }
  return comps;
}

/// Binary dilation (any) or erosion (all) with a size x size square, pixels
/// outside the plane counting as unset.
Plane morph(const Plane& in, int size, bool dilate) {
  const int r = size / 2;
  const int w = in.width;
  const int h = in.height;
  const int full = 2 * r + 1;
  Plane horiz{w, h, std::vector<std::uint8_t>(in.data.size())};
  std::vector<int> prefix(std::max(w, h) + 1);
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + in(x, y);
    for (int x = 0; x < w; ++x) {
      const int n = prefix[std::min(w, x + r + 1)] - prefix[std::max(0, x - r)];
      horiz(x, y) = dilate ? (n > 0) : (n == full);
    }
  }
  // Vertical pass as a sliding window of per-column counts, row-major.
  Plane out{w, h, std::vector<std::uint8_t>(in.data.size())};
  std::vector<int> count(w, 0);
  for (int y = 0; y < std::min(h, r); ++y) {
    for (int x = 0; x < w; ++x) count[x] += horiz(x, y);
  }
  for (int y = 0; y < h; ++y) {
    if (y + r < h) {
      for (int x = 0; x < w; ++x) count[x] += horiz(x, y + r);
    }
    if (y - r - 1 >= 0) {
      for (int x = 0; x < w; ++x) count[x] -= horiz(x, y - r - 1);
    }
    for (int x = 0; x < w; ++x) out(x, y) = dilate ? (count[x] > 0) : (count[x] == full);
  }
  return out;
}

struct Candidate {
  RotatedRect rect;
  double rotation_deg = 0.0;
  double confidence = 0.0;
};

/// Strip-shaped bright regions inside one body at a given luma threshold.
void window_candidates_at(const Plane& luma, const std::vector<int>& labels, const Component& body, int threshold,
                          const DetectorConfig& cfg, const WorkingScale& ws, std::vector<Candidate>& out) {
  const int pad = ws.closing;
  const int bx0 = std::max(0, body.x0 - pad);
  const int by0 = std::max(0, body.y0 - pad);
  const int bx1 = std::min(luma.width - 1, body.x1 + pad);
  const int by1 = std::min(luma.height - 1, body.y1 + pad);
  const int w = bx1 - bx0 + 1;
  const int h = by1 - by0 + 1;

  Plane mask{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int gx = bx0 + x;
      const int gy = by0 + y;
      mask(x, y) = labels[static_cast<std::size_t>(gy) * luma.width + gx] == body.label && luma(gx, gy) > threshold;
    }
  }
  // Opening drops speckle; closing bridges the gaps that dark bands cut
  // across the window.
  mask = morph(morph(mask, ws.opening, false), ws.opening, true);
  mask = morph(morph(mask, ws.closing, true), ws.closing, false);

  std::vector<int> wl;
  const auto comps = label_components(mask, wl);
  for (const auto& c : comps) {
    if (c.area < ws.min_window_pixels) continue;
    std::vector<Point2d> extremes;
    for (int y = c.y0; y <= c.y1; ++y) {
      int lo = -1, hi = -1;
      for (int x = c.x0; x <= c.x1; ++x) {
        if (wl[static_cast<std::size_t>(y) * w + x] != c.label) continue;
        if (lo < 0) lo = x;
        hi = x;
      }
      if (lo < 0) continue;
      const double k = ws.scale;
      extremes.push_back({(bx0 + lo + 0.5) * k, (by0 + y + 0.5) * k});
      extremes.push_back({(bx0 + hi + 0.5) * k, (by0 + y + 0.5) * k});
    }
    const auto hull = convex_hull(std::move(extremes));
    if (hull.size() < 3) continue;
    RotatedRect rect = min_area_rect(hull);
    // Hull runs through pixel centers; the region extends half a pixel further.
    rect.width += ws.scale;
    rect.height += ws.scale;
    const double aspect = rect.width / rect.height;
    const double deviation = std::abs(aspect - cfg.window_aspect) / (cfg.aspect_tolerance * cfg.window_aspect);
    if (deviation > 1.0) continue;
    const double rotation = std::atan2(rect.long_axis.x, rect.long_axis.y) * 180.0 / std::numbers::pi;
    if (std::abs(rotation) > cfg.max_rotation_deg + cfg.rotation_slack_deg) continue;
    const double fill =
        std::min(1.0, static_cast<double>(c.area) * ws.scale * ws.scale / (rect.width * rect.height));
    out.push_back({rect, rotation, fill * (0.5 + 0.5 * (1.0 - deviation))});
  }
}

/// Two nested Otsu levels: the first separates the cassette body from
/// whatever else is bright, the second the window from the body. Which one
/// does what depends on the background, so both are tried.
std::vector<Candidate> window_candidates(const Plane& luma, const std::vector<int>& labels, const Component& body,
                                         const DetectorConfig& cfg, const WorkingScale& ws) {
  std::vector<Candidate> out;
  int threshold = -1;
  for (int level = 0; level < 2; ++level) {
    std::array<std::uint64_t, 256> hist{};
    std::uint64_t count = 0;
    for (int y = body.y0; y <= body.y1; ++y) {
      for (int x = body.x0; x <= body.x1; ++x) {
        const std::uint8_t v = luma(x, y);
        if (labels[static_cast<std::size_t>(y) * luma.width + x] == body.label && v > threshold) {
          ++hist[v];
          ++count;
        }
      }
    }
    if (count < ws.min_window_pixels) break;
    threshold = otsu_threshold(hist);
    window_candidates_at(luma, labels, body, threshold, cfg, ws, out);
  }
  return out;
}

bool contains(const RotatedRect& r, Point2d p) {
  const Point2d d = p - r.center;
  const double along = d.x * r.long_axis.x + d.y * r.long_axis.y;
  const double across = -d.x * r.long_axis.y + d.y * r.long_axis.x;
  return std::abs(along) <= r.height / 2 && std::abs(across) <= r.width / 2;
}

/// Keeps the innermost of nested candidates and one of each near-duplicate
/// pair (the more confident).
std::vector<Candidate> suppress_nested(std::vector<Candidate> cands) {
  constexpr double kDuplicateAreaRatio = 0.7;
  std::vector<bool> drop(cands.size(), false);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (std::size_t j = 0; j < cands.size(); ++j) {
      if (i == j || drop[j] || !contains(cands[i].rect, cands[j].rect.center)) continue;
      const double ai = cands[i].rect.width * cands[i].rect.height;
      const double aj = cands[j].rect.width * cands[j].rect.height;
      if (aj < kDuplicateAreaRatio * ai) {
        drop[i] = true;
      } else if (aj <= ai / kDuplicateAreaRatio && contains(cands[j].rect, cands[i].rect.center) &&
                 (cands[j].confidence > cands[i].confidence || (cands[j].confidence == cands[i].confidence && j < i))) {
        drop[i] = true;
      }
      if (drop[i]) break;
    }
  }
  std::vector<Candidate> kept;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!drop[i]) kept.push_back(cands[i]);
  }
  return kept;
}

}  // namespace

int otsu_threshold(const std::array<std::uint64_t, 256>& hist) {
  double total = 0.0, weighted = 0.0;
  for (int i = 0; i < 256; ++i) {
    total += static_cast<double>(hist[i]);
    weighted += static_cast<double>(i) * static_cast<double>(hist[i]);
  }
  if (total == 0.0) return 127;
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int threshold = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(hist[t]);
    sum0 += static_cast<double>(t) * static_cast<double>(hist[t]);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (weighted - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      threshold = t;
    }
  }
  return threshold;
}

CassetteDetection ClassicalDetector::detect(const RasterImage& img) const {
  const WorkingScale ws(config_);
  const Plane luma = working_luma(img, ws.scale, ws.smoothing);

  std::array<std::uint64_t, 256> hist{};
  for (auto v : luma.data) ++hist[v];
  const int t1 = otsu_threshold(hist);

  Plane bright{luma.width, luma.height, std::vector<std::uint8_t>(luma.data.size())};
  for (std::size_t i = 0; i < luma.data.size(); ++i) bright.data[i] = luma.data[i] > t1;

  std::vector<int> labels;
  auto bodies = label_components(bright, labels);
  const double min_area = config_.min_body_fraction * static_cast<double>(luma.data.size());
  std::erase_if(bodies, [&](const Component& c) { return static_cast<double>(c.area) < min_area; });
  std::stable_sort(bodies.begin(), bodies.end(), [](const Component& a, const Component& b) { return a.area > b.area; });
  if (bodies.size() > static_cast<std::size_t>(config_.max_body_candidates)) bodies.resize(config_.max_body_candidates);

  std::vector<Candidate> candidates;
  for (const auto& body : bodies) {
    auto found = window_candidates(luma, labels, body, config_, ws);
    candidates.insert(candidates.end(), found.begin(), found.end());
  }
  candidates = suppress_nested(std::move(candidates));
  if (candidates.empty()) throw Error(ErrorCode::NoCassetteFound, "no strip window candidate passed the shape filters");

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.confidence > b.confidence; });
  if (candidates.size() > 1 &&
      candidates[1].confidence >= (1.0 - config_.ambiguity_margin) * candidates[0].confidence) {
    throw Error(ErrorCode::AmbiguousDetection, "two strip window candidates of similar confidence");
  }
  const Candidate& best = candidates.front();
  return {rect_corners(best.rect), best.rotation_deg, std::clamp(best.confidence, 0.0, 1.0)};
}

CassetteDetection detect_cassette(const RasterImage& img, const DetectorConfig& config) {
  return ClassicalDetector(config).detect(img);
}

StripImage extract_strip(const RasterImage& img, const CassetteDetection& det, const StripLayout& layout) {
  constexpr double kEps = 1e-6;
  for (const auto& p : det.quad) {
    if (!(p.x >= -kEps && p.y >= -kEps && p.x <= img.width() + kEps && p.y <= img.height() + kEps)) {
      throw Error(ErrorCode::QuadOutOfBounds, "detection quad extends past the image");
    }
  }
  const Homography hom(kStripWidth, kStripHeight, det.quad);
  RasterImage out(kStripWidth, kStripHeight);
  double v[3];
  for (int y = 0; y < kStripHeight; ++y) {
    for (int x = 0; x < kStripWidth; ++x) {
      const Point2d src = hom.map(x + 0.5, y + 0.5);
      sample_bilinear(img, src.x - 0.5, src.y - 0.5, v);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v[c], 0.0, 255.0) + 0.5);
    }
  }

  // The control band belongs in the upper half; if only the mirrored control
  // position shows a band, the strip came out upside down.
  std::vector<double> rows(kStripHeight);
  for (int y = 0; y < kStripHeight; ++y) {
    double s = 0.0;
    for (int x = 0; x < kStripWidth; ++x) s += out.luma(x, y);
    rows[y] = s / kStripWidth;
  }
  std::vector<double> sorted = rows;
  std::nth_element(sorted.begin(), sorted.begin() + kStripHeight / 2, sorted.end());
  const double base = std::max(1.0, sorted[kStripHeight / 2]);
  auto peak_deficit = [&](int begin, int end) {
    double d = 0.0;
    for (int y = std::max(0, begin); y < std::min(kStripHeight, end); ++y) d = std::max(d, 1.0 - rows[y] / base);
    return d;
  };
  const double upright = peak_deficit(layout.control.begin, layout.control.end);
  const double mirrored = peak_deficit(kStripHeight - layout.control.end, kStripHeight - layout.control.begin);
  if (mirrored > 0.03 && upright < 0.5 * mirrored) {
    auto px = out.pixels();
    const std::size_t n = px.size() / 3;
    for (std::size_t i = 0; i < n / 2; ++i) {
      for (int c = 0; c < 3; ++c) std::swap(px[3 * i + c], px[3 * (n - 1 - i) + c]);
    }
  }
  return StripImage(std::move(out));
}

}  // namespace lfdr
