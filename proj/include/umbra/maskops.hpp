#pragma once

// Ground-truth shadow mask preprocessing: morphological erosion, Euclidean
// distance transform, penumbra-aware soft masks, edge masks, and per-stage
// downsampled supervision targets.

#include <cstdint>
#include <filesystem>
#include <vector>

namespace umbra {

struct BinaryMask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> v;  // row-major, values in {0,1}

  BinaryMask() = default;
  BinaryMask(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0) {}
  std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
  bool empty_mask() const;
};

using EdgeMask = BinaryMask;  // nonzero exactly on the penumbra band

struct SoftMask {
  int h = 0, w = 0;
  std::vector<double> v;  // values in [0,1]

  SoftMask() = default;
  SoftMask(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.0) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Output pixel is 1 iff the full kernel x kernel neighborhood (zero padded at
// the borders) is all 1. kernel must be odd and >= 1.
BinaryMask erode(const BinaryMask& mask, int kernel);

// At each foreground pixel, the exact Euclidean distance to the nearest
// background pixel; 0 on background. Pixels outside the grid count as
// background, consistent with the zero-padded erosion border.
std::vector<double> distance_transform(const BinaryMask& mask);

// Soft supervision mask: 1 on the eroded interior; on the penumbra band the
// distance-transform value normalized per connected band component to (0,1);
// 0 on background.
SoftMask penumbra_reweight(const BinaryMask& mask, int kernel);

// The penumbra band itself: mask AND NOT erode(mask).
EdgeMask edge_mask(const BinaryMask& mask, int kernel);

// Area-average pooling over factor x factor blocks. H and W must divide.
SoftMask downsample_supervision(const SoftMask& soft, int factor);

// float32 blob + JSON sidecar {"shape":[H,W],"order":"row-major"}.
void write_soft_mask(const SoftMask& m, const std::filesystem::path& blob_path);
SoftMask read_soft_mask(const std::filesystem::path& blob_path);

}  // namespace umbra
