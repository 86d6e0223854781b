#include "umbra/maskops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace umbra {

namespace {
using json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform (Felzenszwalb & Huttenlocher).
void edt_1d(const std::vector<double>& f, int n, std::vector<double>& d, std::vector<int>& v,
            std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double diff = q - v[k];
    d[q] = diff * diff + f[v[k]];
  }
}
}  // namespace

bool BinaryMask::empty_mask() const {
  return std::all_of(v.begin(), v.end(), [](std::uint8_t x) { return x == 0; });
}

BinaryMask erode(const BinaryMask& mask, int kernel) {
  if (kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("erode: kernel must be odd and >= 1, got " +
                                std::to_string(kernel));
  if (kernel == 1) return mask;
  const int r = kernel / 2;
  BinaryMask out(mask.h, mask.w);
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) {
      // zero padding: any out-of-bounds neighbor kills the pixel
      if (y - r < 0 || x - r < 0 || y + r >= mask.h || x + r >= mask.w) continue;
      bool all_one = true;
      for (int dy = -r; dy <= r && all_one; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          if (!mask.at(y + dy, x + dx)) {
            all_one = false;
            break;
          }
      out.at(y, x) = all_one ? 1 : 0;
    }
  return out;
}

std::vector<double> distance_transform(const BinaryMask& mask) {
  const int h = mask.h, w = mask.w;
  // Finite stand-in for "no background in grid": larger than any true squared
  // distance, so a real background parabola always wins, and keeps the
  // envelope arithmetic NaN-free on all-foreground lines.
  const double big = static_cast<double>(h) * h + static_cast<double>(w) * w + 1.0;
  std::vector<double> sq(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = mask.v[i] ? big : 0.0;

  // columns, then rows
  {
    std::vector<double> f(h), d(h);
    std::vector<int> v(h);
    std::vector<double> z(h + 1);
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) f[y] = sq[static_cast<std::size_t>(y) * w + x];
      edt_1d(f, h, d, v, z);
      for (int y = 0; y < h; ++y) sq[static_cast<std::size_t>(y) * w + x] = d[y];
    }
  }
  {
    std::vector<double> f(w), d(w);
    std::vector<int> v(w);
    std::vector<double> z(w + 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) f[x] = sq[static_cast<std::size_t>(y) * w + x];
      edt_1d(f, w, d, v, z);
      for (int x = 0; x < w; ++x) sq[static_cast<std::size_t>(y) * w + x] = d[x];
    }
  }

  std::vector<double> out(sq.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!mask.v[i]) continue;
      // implicit background outside the image
      const double border = std::min(std::min(y + 1, x + 1), std::min(h - y, w - x));
      const double best = std::min(sq[i], border * border);
      out[i] = std::sqrt(best);
    }
  return out;
}

SoftMask penumbra_reweight(const BinaryMask& mask, int kernel) {
  const BinaryMask core = erode(mask, kernel);
  const std::vector<double> dist = distance_transform(mask);
  const int h = mask.h, w = mask.w;

  SoftMask out(h, w);
  // band = mask minus eroded core
  std::vector<std::uint8_t> band(static_cast<std::size_t>(h) * w, 0);
  for (std::size_t i = 0; i < band.size(); ++i) band[i] = mask.v[i] && !core.v[i] ? 1 : 0;

  // label 8-connected band components and find each component's max distance
  std::vector<int> label(band.size(), -1);
  std::vector<double> comp_max;
  std::vector<std::size_t> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (!band[i] || label[i] >= 0) continue;
      const int id = static_cast<int>(comp_max.size());
      comp_max.push_back(0.0);
      label[i] = id;
      stack.assign(1, i);
      while (!stack.empty()) {
        const std::size_t j = stack.back();
        stack.pop_back();
        comp_max[id] = std::max(comp_max[id], dist[j]);
        const int jy = static_cast<int>(j) / w, jx = static_cast<int>(j) % w;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = jy + dy, nx = jx + dx;
            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
            const std::size_t nj = static_cast<std::size_t>(ny) * w + nx;
            if (band[nj] && label[nj] < 0) {
              label[nj] = id;
              stack.push_back(nj);
            }
          }
      }
    }

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (core.v[i]) {
        out.v[i] = 1.0;
      } else if (band[i]) {
        out.v[i] = dist[i] / (comp_max[static_cast<std::size_t>(label[i])] + 1.0);
      }
    }
  return out;
}

EdgeMask edge_mask(const BinaryMask& mask, int kernel) {
  const BinaryMask core = erode(mask, kernel);
  EdgeMask out(mask.h, mask.w);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = mask.v[i] && !core.v[i] ? 1 : 0;
  return out;
}

SoftMask downsample_supervision(const SoftMask& soft, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample_supervision: factor must be >= 1");
  if (soft.h % factor != 0 || soft.w % factor != 0)
    throw std::invalid_argument("downsample_supervision: dims " + std::to_string(soft.h) + "x" +
                                std::to_string(soft.w) + " not divisible by factor " +
                                std::to_string(factor));
  if (factor == 1) return soft;
  const int oh = soft.h / factor, ow = soft.w / factor;
  SoftMask out(oh, ow);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      double acc = 0.0;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) acc += soft.at(oy * factor + dy, ox * factor + dx);
      out.at(oy, ox) = acc * inv;
    }
  return out;
}

void write_soft_mask(const SoftMask& m, const std::filesystem::path& blob_path) {
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw std::runtime_error("write_soft_mask: cannot open " + blob_path.string());
  std::vector<float> f32(m.v.size());
  for (std::size_t i = 0; i < f32.size(); ++i) f32[i] = static_cast<float>(m.v[i]);
  blob.write(reinterpret_cast<const char*>(f32.data()),
             static_cast<std::streamsize>(f32.size() * sizeof(float)));

  json side = {{"shape", {m.h, m.w}}, {"order", "row-major"}};
  std::ofstream meta(blob_path.string() + ".json");
  meta << side.dump() << "\n";
}

SoftMask read_soft_mask(const std::filesystem::path& blob_path) {
  std::ifstream meta(blob_path.string() + ".json");
  if (!meta) throw std::runtime_error("read_soft_mask: missing sidecar for " + blob_path.string());
  json side = json::parse(meta);
  const int h = side["shape"][0], w = side["shape"][1];

  SoftMask m(h, w);
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw std::runtime_error("read_soft_mask: cannot open " + blob_path.string());
  std::vector<float> f32(m.v.size());
  blob.read(reinterpret_cast<char*>(f32.data()),
            static_cast<std::streamsize>(f32.size() * sizeof(float)));
  if (!blob) throw std::runtime_error("read_soft_mask: truncated blob " + blob_path.string());
  for (std::size_t i = 0; i < f32.size(); ++i) m.v[i] = static_cast<double>(f32[i]);
  return m;
}

}  // namespace umbra
