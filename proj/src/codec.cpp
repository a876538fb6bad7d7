#include <algorithm>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "lfdr/error.hpp"
#include "lfdr/imaging.hpp"

namespace lfdr {

namespace {

constexpr std::uint8_t kPngMagic[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

bool is_png(std::span<const std::uint8_t> b) {
  return b.size() >= sizeof(kPngMagic) && std::equal(std::begin(kPngMagic), std::end(kPngMagic), b.begin());
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

// libjpeg pads a truncated stream with a fake EOI and returns a partial
// picture, so completeness is checked on the bytes themselves.
bool jpeg_has_eoi(std::span<const std::uint8_t> b) {
  std::size_t end = b.size();
  while (end > 2 && b[end - 1] == 0x00) --end;
  return end >= 4 && b[end - 2] == 0xFF && b[end - 1] == 0xD9;
}

RasterImage from_bgr(const cv::Mat& bgr) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(bgr.cols) * bgr.rows * 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * bgr.cols + x) * 3;
      px[i] = row[x][2];
      px[i + 1] = row[x][1];
      px[i + 2] = row[x][0];
    }
  }
  return RasterImage(bgr.cols, bgr.rows, std::move(px));
}

cv::Mat to_bgr(const RasterImage& img) {
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x) {
      row[x] = cv::Vec3b(img.at(x, y, 2), img.at(x, y, 1), img.at(x, y, 0));
    }
  }
  return bgr;
}

std::vector<std::uint8_t> encode(const RasterImage& img, const std::string& ext,
                                 const std::vector<int>& params) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(ext, to_bgr(img), out, params)) {
    throw Error(ErrorCode::Io, "failed to encode image as " + ext);
  }
  return out;
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  const bool png = is_png(bytes);
  const bool jpeg = !png && is_jpeg(bytes);
  if (!png && !jpeg) throw Error(ErrorCode::UnsupportedFormat, "not a PNG or JPEG stream");
  if (jpeg && !jpeg_has_eoi(bytes)) throw Error(ErrorCode::MalformedImage, "truncated JPEG stream");

  cv::Mat encoded(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat bgr;
  try {
    bgr = cv::imdecode(encoded, cv::IMREAD_COLOR);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::MalformedImage, std::string("undecodable image: ") + e.what());
  }
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw Error(ErrorCode::MalformedImage, png ? "undecodable PNG stream" : "undecodable JPEG stream");
  }
  return from_bgr(bgr);
}

RasterImage read_image_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  return encode(img, ".png", {cv::IMWRITE_PNG_COMPRESSION, 3});
}

std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality) {
  return encode(img, ".jpg", {cv::IMWRITE_JPEG_QUALITY, quality});
}

void write_png_file(const RasterImage& img, const std::string& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace lfdr
