#include "umbra/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "umbra/image_io.hpp"

namespace umbra {

namespace fs = std::filesystem;
using json = nlohmann::json;

const std::vector<VideoEntry>& DatasetIndex::videos(const std::string& split) const {
  auto it = splits.find(split);
  if (it == splits.end())
    throw std::invalid_argument("dataset has no split '" + split + "' under " + root.string());
  return it->second;
}

DatasetIndex scan_dataset(const fs::path& root, const std::vector<std::string>& image_exts) {
  DatasetIndex index;
  index.root = root;
  if (!fs::exists(root)) {
    std::cerr << "warning: dataset root " << root << " does not exist; empty index\n";
    return index;
  }
  auto has_ext = [&](const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return std::find(image_exts.begin(), image_exts.end(), e) != image_exts.end();
  };

  bool any_split = false;
  std::vector<std::string> problems;
  for (const auto& split_dir : fs::directory_iterator(root)) {
    if (!split_dir.is_directory()) continue;
    const fs::path images = split_dir.path() / "images";
    const fs::path labels = split_dir.path() / "labels";
    if (!fs::exists(images)) continue;
    any_split = true;
    std::vector<VideoEntry> videos;
    std::vector<fs::path> video_dirs;
    for (const auto& v : fs::directory_iterator(images))
      if (v.is_directory()) video_dirs.push_back(v.path());
    std::sort(video_dirs.begin(), video_dirs.end());

    for (const auto& vdir : video_dirs) {
      VideoEntry entry;
      entry.video_id = vdir.filename().string();
      std::vector<fs::path> frames;
      for (const auto& f : fs::directory_iterator(vdir))
        if (f.is_regular_file() && has_ext(f.path())) frames.push_back(f.path());
      std::sort(frames.begin(), frames.end());

      const fs::path label_dir = labels / entry.video_id;
      std::set<fs::path> mask_files;
      if (fs::exists(label_dir))
        for (const auto& f : fs::directory_iterator(label_dir))
          if (f.is_regular_file() && f.path().extension() == ".png")
            mask_files.insert(f.path());

      for (const auto& frame : frames) {
        const fs::path mask = label_dir / (frame.stem().string() + ".png");
        if (!mask_files.count(mask)) {
          problems.push_back("frame without mask: " + frame.string() + " (expected " +
                             mask.string() + ")");
          continue;
        }
        entry.frames.push_back(frame);
        entry.masks.push_back(mask);
        mask_files.erase(mask);
      }
      for (const auto& orphan : mask_files)
        problems.push_back("mask without frame: " + orphan.string());
      videos.push_back(std::move(entry));
    }
    index.splits[split_dir.path().filename().string()] = std::move(videos);
  }

  if (!problems.empty()) {
    std::ostringstream os;
    os << "dataset validation failed (" << problems.size() << " problem(s)):";
    for (const auto& p : problems) os << "\n  " << p;
    throw std::runtime_error(os.str());
  }
  if (!any_split)
    std::cerr << "warning: no <split>/images directories under " << root << "; empty index\n";
  return index;
}

std::vector<ClipRef> enumerate_clips(const DatasetIndex& index, const std::string& split, int t,
                                     int stride) {
  if (t < 1 || stride < 1)
    throw std::invalid_argument("enumerate_clips: t and stride must be positive");
  std::vector<ClipRef> refs;
  const auto& videos = index.videos(split);
  for (int vi = 0; vi < static_cast<int>(videos.size()); ++vi) {
    const auto& v = videos[static_cast<std::size_t>(vi)];
    const int len = static_cast<int>(v.frames.size());
    if (len < t) {
      std::cerr << "warning: video " << v.video_id << " has " << len << " frames (< " << t
                << "), skipped\n";
      continue;
    }
    for (int start = 0; start + t <= len; start += stride)
      refs.push_back({split, v.video_id, vi, start, t});
  }
  return refs;
}

VideoClip load_clip(const DatasetIndex& index, const ClipRef& ref) {
  const auto& v = index.videos(ref.split)[static_cast<std::size_t>(ref.video_index)];
  VideoClip clip;
  clip.video_id = v.video_id;
  clip.clip_id = v.video_id + "@" + std::to_string(ref.start);
  clip.t = ref.length;
  for (int i = 0; i < ref.length; ++i) {
    const RgbImage img = read_image_rgb(v.frames[static_cast<std::size_t>(ref.start + i)]);
    BinaryMask mask = read_mask(v.masks[static_cast<std::size_t>(ref.start + i)]);
    if (i == 0) {
      clip.h = img.h;
      clip.w = img.w;
      clip.frames.reserve(static_cast<std::size_t>(ref.length) * img.h * img.w * 3);
    } else if (img.h != clip.h || img.w != clip.w) {
      throw std::runtime_error("clip " + clip.clip_id + ": frame size varies");
    }
    if (mask.h != clip.h || mask.w != clip.w)
      throw std::runtime_error("clip " + clip.clip_id + ": mask size differs from frame");
    clip.frames.insert(clip.frames.end(), img.v.begin(), img.v.end());
    clip.masks.push_back(std::move(mask));
  }
  return clip;
}

void hflip_clip(VideoClip& clip) {
  const int h = clip.h, w = clip.w;
  for (int t = 0; t < clip.t; ++t)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w / 2; ++x) {
        const std::size_t a = ((static_cast<std::size_t>(t) * h + y) * w + x) * 3;
        const std::size_t b = ((static_cast<std::size_t>(t) * h + y) * w + (w - 1 - x)) * 3;
        for (int c = 0; c < 3; ++c) std::swap(clip.frames[a + c], clip.frames[b + c]);
      }
  for (auto& m : clip.masks)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w / 2; ++x) std::swap(m.at(y, x), m.at(y, w - 1 - x));
}

ClipSampler::ClipSampler(std::vector<ClipRef> refs, std::uint64_t seed)
    : refs_(std::move(refs)), rng_(seed) {
  if (refs_.empty()) throw std::invalid_argument("ClipSampler: no clips");
  shuffle();
}

void ClipSampler::shuffle() {
  for (std::size_t i = refs_.size() - 1; i > 0; --i)
    std::swap(refs_[i], refs_[rng_.u64() % (i + 1)]);
}

const ClipRef& ClipSampler::next() {
  if (pos_ >= refs_.size()) {
    pos_ = 0;
    shuffle();
  }
  return refs_[pos_++];
}

// ---------------- synthetic videos ----------------

namespace {

struct Sinusoid {
  double ax, ay, fx, fy, phase;
};

double smoothstep01(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

}  // namespace

DatasetIndex synth_shadow_videos(const fs::path& out_root, int n_videos, int t, int h, int w,
                                 std::uint64_t seed, const std::string& split) {
  if (n_videos < 1 || t < 1 || h < 8 || w < 8)
    throw std::invalid_argument("synth_shadow_videos: bad dimensions");
  Rng master(seed);

  for (int vi = 0; vi < n_videos; ++vi) {
    char vname[32];
    std::snprintf(vname, sizeof(vname), "video_%03d", vi);
    const fs::path img_dir = out_root / split / "images" / vname;
    const fs::path lbl_dir = out_root / split / "labels" / vname;
    const fs::path aux_dir = out_root / split / "aux" / vname;
    fs::create_directories(img_dir);
    fs::create_directories(lbl_dir);
    fs::create_directories(aux_dir);

    Rng rng = master.derive("video" + std::to_string(vi));

    // static textured background (sum of sinusoids, bright)
    std::vector<Sinusoid> waves;
    for (int k = 0; k < 4; ++k)
      waves.push_back({rng.uniform(0.03, 0.09), rng.uniform(0.03, 0.09),
                       rng.uniform(0.8, 3.0) / w, rng.uniform(0.8, 3.0) / h,
                       rng.uniform(0.0, 2.0 * M_PI)});
    const double tint[3] = {rng.uniform(0.88, 1.0), rng.uniform(0.88, 1.0),
                            rng.uniform(0.88, 1.0)};
    std::vector<double> base(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = 0.78;
        for (const auto& s : waves)
          v += s.ax * std::sin(2.0 * M_PI * (s.fx * x + s.fy * y) + s.phase);
        base[static_cast<std::size_t>(y) * w + x] = std::clamp(v, 0.55, 0.97);
      }

    // shadow ellipse: confined to the left part of the frame
    const double rx = rng.uniform(0.20, 0.27) * std::min(h, w);
    const double ry = rng.uniform(0.20, 0.27) * std::min(h, w);
    const double rmax = std::max(rx, ry);  // rotated extent bound
    const double theta = rng.uniform(0.0, M_PI);
    const double depth = rng.uniform(0.50, 0.62);
    const double rim = rng.uniform(0.10, 0.16);  // penumbra half-width (relative)
    const double sc_x0 = 0.30 * w, sc_amp_x = 0.30 * w - (rmax + 2.0);
    const double sc_y0 = 0.50 * h, sc_amp_y = 0.50 * h - (rmax + 2.0);
    const double sph_x = rng.uniform(0.0, 2.0 * M_PI), sph_y = rng.uniform(0.0, 2.0 * M_PI);

    // dark distractor: a disc in the right part, never touching the ellipse
    const double dr = rng.uniform(0.10, 0.16) * std::min(h, w);
    const double dc_x0 = 0.80 * w, dc_amp_x = 0.20 * w - (dr + 2.0);
    const double dc_y0 = 0.50 * h, dc_amp_y = 0.50 * h - (dr + 2.0);
    const double dph = rng.uniform(0.0, 2.0 * M_PI);
    const double dark[3] = {rng.uniform(0.04, 0.12), rng.uniform(0.04, 0.12),
                            rng.uniform(0.04, 0.12)};

    for (int fi = 0; fi < t; ++fi) {
      const double u = t > 1 ? static_cast<double>(fi) / (t - 1) : 0.0;
      const double scx = sc_x0 + sc_amp_x * 0.9 * std::sin(2.0 * M_PI * u + sph_x);
      const double scy = sc_y0 + sc_amp_y * 0.9 * std::sin(2.0 * M_PI * u * 0.7 + sph_y);
      const double dcx = dc_x0 + dc_amp_x * 0.9 * std::sin(2.0 * M_PI * u * 0.8 + dph);
      const double dcy = dc_y0 + dc_amp_y * 0.9 * std::cos(2.0 * M_PI * u + dph);

      RgbImage frame;
      frame.h = h;
      frame.w = w;
      frame.v.resize(static_cast<std::size_t>(h) * w * 3);
      BinaryMask gt(h, w);
      BinaryMask distractor(h, w);

      const double ct = std::cos(theta), st = std::sin(theta);
      long long overlap = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const std::size_t pi = static_cast<std::size_t>(y) * w + x;
          const double bx = (x - scx) * ct + (y - scy) * st;
          const double by = -(x - scx) * st + (y - scy) * ct;
          const double q = (bx / rx) * (bx / rx) + (by / ry) * (by / ry);
          const double r = std::sqrt(q);
          const double shade = smoothstep01(((1.0 + rim) - r) / (2.0 * rim));
          const double atten = 1.0 - depth * shade;
          if (q <= 1.0) gt.v[pi] = 1;

          const double ddx = x - dcx, ddy = y - dcy;
          const bool in_distractor = ddx * ddx + ddy * ddy <= dr * dr;
          if (in_distractor) distractor.v[pi] = 1;
          if (in_distractor && gt.v[pi]) ++overlap;

          for (int c = 0; c < 3; ++c) {
            double v = base[pi] * tint[c] * atten;
            if (in_distractor) {
              // opaque object: texture is replaced, not attenuated
              v = dark[c] * (0.85 + 0.3 * (ddx * ddx + ddy * ddy) / (dr * dr));
            }
            frame.v[pi * 3 + c] = std::clamp(v, 0.0, 1.0);
          }
        }
      if (overlap != 0)
        throw std::runtime_error("synth_shadow_videos: distractor crossed the shadow mask");

      char fname[32];
      std::snprintf(fname, sizeof(fname), "frame_%03d.png", fi);
      write_image_rgb(img_dir / fname, frame);
      write_mask(lbl_dir / fname, gt);
      write_mask(aux_dir / fname, distractor);
    }
  }
  return scan_dataset(out_root);
}

fs::path distractor_mask_path(const DatasetIndex& index, const std::string& split,
                              const ClipRef& ref, int frame_in_clip) {
  const auto& v = index.videos(split)[static_cast<std::size_t>(ref.video_index)];
  const auto& frame = v.frames[static_cast<std::size_t>(ref.start + frame_in_clip)];
  return index.root / split / "aux" / v.video_id / (frame.stem().string() + ".png");
}

// ---------------- bundles ----------------

void write_bundle(const EmbeddingBundle& b, const fs::path& path) {
  json header;
  header["arrays"] = json::array({json{{"name", "p_s"}, {"shape", {b.l_s, b.c_l}}},
                                  json{{"name", "p_d"}, {"shape", {b.l_d, b.c_l}}},
                                  json{{"name", "p_x"}, {"shape", {b.t * b.m, b.c_m}}}});
  header["dtype"] = "f32";
  header["order"] = "row-major";
  header["dims"] = {{"l_s", b.l_s}, {"l_d", b.l_d}, {"t", b.t},
                    {"m", b.m},     {"c_l", b.c_l}, {"c_m", b.c_m}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_bundle: cannot open " + path.string());
  out << header.dump() << "\n";
  auto blob = [&](const std::vector<double>& v) {
    std::vector<float> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
  };
  blob(b.p_s);
  blob(b.p_d);
  blob(b.p_x);
}

EmbeddingBundle read_bundle(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_bundle: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_bundle: missing header line");
  json header = json::parse(line);

  EmbeddingBundle b;
  b.l_s = header["dims"]["l_s"];
  b.l_d = header["dims"]["l_d"];
  b.t = header["dims"]["t"];
  b.m = header["dims"]["m"];
  b.c_l = header["dims"]["c_l"];
  b.c_m = header["dims"]["c_m"];

  auto read_blob = [&](std::vector<double>& v, std::size_t n) {
    std::vector<float> f(n);
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw std::runtime_error("read_bundle: truncated blob in " + path.string());
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(f[i]);
  };
  read_blob(b.p_s, static_cast<std::size_t>(b.l_s) * b.c_l);
  read_blob(b.p_d, static_cast<std::size_t>(b.l_d) * b.c_l);
  read_blob(b.p_x, static_cast<std::size_t>(b.t) * b.m * b.c_m);
  return b;
}

EmbeddingBundle synth_bundle(int l_s, int l_d, int t, int m, int c_l, int c_m,
                             std::uint64_t seed) {
  if (l_s < 1 || l_d < 1 || t < 1 || m < 1 || c_l < 1 || c_m < 1)
    throw std::invalid_argument("synth_bundle: all dims must be >= 1");
  Rng rng(seed);
  EmbeddingBundle b;
  b.l_s = l_s;
  b.l_d = l_d;
  b.t = t;
  b.m = m;
  b.c_l = c_l;
  b.c_m = c_m;
  auto fill = [&rng](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& x : v) x = static_cast<double>(static_cast<float>(rng.normal()));
  };
  fill(b.p_s, static_cast<std::size_t>(l_s) * c_l);
  fill(b.p_d, static_cast<std::size_t>(l_d) * c_l);
  fill(b.p_x, static_cast<std::size_t>(t) * m * c_m);
  return b;
}

}  // namespace umbra
