#include "ovdprobe/image_io.hpp"

#include <fstream>
#include <iterator>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace ovdprobe {
namespace {

cv::Mat as_mat(const RgbImage& image) {
  return cv::Mat(image.height(), image.width(), CV_8UC3,
                 const_cast<std::uint8_t*>(image.data().data()));
}

RgbImage from_rgb_mat(const cv::Mat& rgb) {
  RgbImage out(rgb.cols, rgb.rows);
  cv::Mat dst(rgb.rows, rgb.cols, CV_8UC3, out.data().data());
  rgb.copyTo(dst);
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ImageError("cannot write image: " + path.string());
}

std::vector<std::uint8_t> encode(const cv::Mat& mat) {
  std::vector<std::uint8_t> buf;
  // fixed compression level keeps the encoded bytes reproducible
  if (!cv::imencode(".png", mat, buf, {cv::IMWRITE_PNG_COMPRESSION, 6}))
    throw ImageError("PNG encoding failed");
  return buf;
}

}  // namespace

RgbImage decode_image(const std::vector<std::uint8_t>& bytes) {
  if (bytes.empty()) throw ImageError("empty image payload");
  cv::Mat raw = cv::imdecode(bytes, cv::IMREAD_COLOR);
  if (raw.empty()) throw ImageError("undecodable image payload");
  cv::Mat rgb;
  cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
  return from_rgb_mat(rgb);
}

RgbImage read_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_bytes(path));
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  cv::Mat bgr;
  cv::cvtColor(as_mat(image), bgr, cv::COLOR_RGB2BGR);
  return encode(bgr);
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  write_bytes(path, encode_png(image));
}

std::vector<std::uint8_t> encode_mask_png(const BinaryRaster& mask) {
  cv::Mat gray(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) gray.at<std::uint8_t>(y, x) = mask.at(x, y) ? 255 : 0;
  return encode(gray);
}

BinaryRaster read_mask(const std::filesystem::path& path) {
  cv::Mat gray = cv::imdecode(read_bytes(path), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw ImageError("undecodable mask: " + path.string());
  BinaryRaster mask(gray.cols, gray.rows);
  for (int y = 0; y < gray.rows; ++y)
    for (int x = 0; x < gray.cols; ++x) mask.set(x, y, gray.at<std::uint8_t>(y, x) != 0);
  return mask;
}

void write_rgba_png(int width, int height, const std::vector<std::uint8_t>& rgba,
                    const std::filesystem::path& path) {
  if (rgba.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 4)
    throw ImageError("RGBA buffer size mismatch");
  cv::Mat src(height, width, CV_8UC4, const_cast<std::uint8_t*>(rgba.data()));
  cv::Mat bgra;
  cv::cvtColor(src, bgra, cv::COLOR_RGBA2BGRA);
  write_bytes(path, encode(bgra));
}

RgbImage crop(const RgbImage& image, const PixelRect& rect) {
  if (intersect(rect, image.bounds()) != rect || rect.empty())
    throw std::out_of_range("crop rectangle outside image");
  cv::Mat roi = as_mat(image)(cv::Rect(rect.x0, rect.y0, rect.width(), rect.height()));
  return from_rgb_mat(roi);
}

BinaryRaster crop(const BinaryRaster& mask, const PixelRect& rect) {
  if (intersect(rect, {0, 0, mask.width(), mask.height()}) != rect || rect.empty())
    throw std::out_of_range("crop rectangle outside mask");
  BinaryRaster out(rect.width(), rect.height());
  for (int y = 0; y < rect.height(); ++y)
    for (int x = 0; x < rect.width(); ++x) out.set(x, y, mask.at(rect.x0 + x, rect.y0 + y));
  return out;
}

void paste(RgbImage& target, const RgbImage& patch, int x, int y) {
  const PixelRect dst{x, y, x + patch.width(), y + patch.height()};
  if (intersect(dst, target.bounds()) != dst) throw std::out_of_range("paste outside target");
  for (int row = 0; row < patch.height(); ++row)
    for (int col = 0; col < patch.width(); ++col) target.set(x + col, y + row, patch.at(col, row));
}

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (image.width() == width && image.height() == height) return image;
  cv::Mat out;
  cv::resize(as_mat(image), out, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
  return from_rgb_mat(out);
}

BinaryRaster resize_nearest(const BinaryRaster& mask, int width, int height) {
  if (mask.width() == width && mask.height() == height) return mask;
  BinaryRaster out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>(static_cast<std::int64_t>(y) * mask.height() / height);
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>(static_cast<std::int64_t>(x) * mask.width() / width);
      out.set(x, y, mask.at(sx, sy));
    }
  }
  return out;
}

}  // namespace ovdprobe
