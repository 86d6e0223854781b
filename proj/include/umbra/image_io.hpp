#pragma once

// Thin image I/O wrapper (PNG/JPEG via OpenCV imgcodecs). Frames are RGB in
// [0,1]; masks are single-channel 8-bit, binarized at threshold 128 on read
// and written as 0/255.

#include <filesystem>
#include <vector>

#include "umbra/maskops.hpp"

namespace umbra {

struct RgbImage {
  int h = 0, w = 0;
  std::vector<double> v;  // [h,w,3] row-major, values in [0,1]
};

RgbImage read_image_rgb(const std::filesystem::path& path);
void write_image_rgb(const std::filesystem::path& path, const RgbImage& img);

BinaryMask read_mask(const std::filesystem::path& path, int threshold = 128);
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace umbra
