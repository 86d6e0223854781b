#include "umbra/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace umbra {

RgbImage read_image_rgb(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("cannot read image: " + path.string());
  RgbImage img;
  img.h = bgr.rows;
  img.w = bgr.cols;
  img.v.resize(static_cast<std::size_t>(img.h) * img.w * 3);
  for (int y = 0; y < img.h; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * img.w + x) * 3;
      img.v[i + 0] = row[x][2] / 255.0;  // BGR -> RGB
      img.v[i + 1] = row[x][1] / 255.0;
      img.v[i + 2] = row[x][0] / 255.0;
    }
  }
  return img;
}

void write_image_rgb(const std::filesystem::path& path, const RgbImage& img) {
  cv::Mat bgr(img.h, img.w, CV_8UC3);
  for (int y = 0; y < img.h; ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * img.w + x) * 3;
      auto q = [](double v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      };
      row[x][0] = q(img.v[i + 2]);
      row[x][1] = q(img.v[i + 1]);
      row[x][2] = q(img.v[i + 0]);
    }
  }
  if (!cv::imwrite(path.string(), bgr))
    throw std::runtime_error("cannot write image: " + path.string());
}

BinaryMask read_mask(const std::filesystem::path& path, int threshold) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw std::runtime_error("cannot read mask: " + path.string());
  BinaryMask m(gray.rows, gray.cols);
  for (int y = 0; y < m.h; ++y) {
    const auto* row = gray.ptr<unsigned char>(y);
    for (int x = 0; x < m.w; ++x) m.at(y, x) = row[x] >= threshold ? 1 : 0;
  }
  return m;
}

void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  cv::Mat gray(mask.h, mask.w, CV_8UC1);
  for (int y = 0; y < mask.h; ++y) {
    auto* row = gray.ptr<unsigned char>(y);
    for (int x = 0; x < mask.w; ++x) row[x] = mask.at(y, x) ? 255 : 0;
  }
  if (!cv::imwrite(path.string(), gray))
    throw std::runtime_error("cannot write mask: " + path.string());
}

}  // namespace umbra
