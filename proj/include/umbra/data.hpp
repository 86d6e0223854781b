#pragma once

// Dataset ingestion (ViSha-style directory layout), synthetic shadow-video
// generation for desk-scale training, clip sampling, and embedding-bundle IO.
//
// On-disk layout:
//   <root>/<split>/images/<video>/<frame>.(png|jpg)
//   <root>/<split>/labels/<video>/<frame>.png
// The synthetic generator also writes <root>/<split>/aux/<video>/<frame>.png
// with the dark-distractor support, used by evaluation diagnostics.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "umbra/maskops.hpp"
#include "umbra/rng.hpp"

namespace umbra {

struct VideoEntry {
  std::string video_id;
  std::vector<std::filesystem::path> frames;  // lexicographic order
  std::vector<std::filesystem::path> masks;   // 1:1 with frames
};

struct DatasetIndex {
  std::filesystem::path root;
  std::map<std::string, std::vector<VideoEntry>> splits;  // "train" / "test"

  const std::vector<VideoEntry>& videos(const std::string& split) const;
  bool has_split(const std::string& split) const { return splits.count(split) > 0; }
};

// Validates a 1:1 frame/mask pairing; orphans raise an error naming every
// offending path. An empty root yields an empty index and a warning.
DatasetIndex scan_dataset(const std::filesystem::path& root,
                          const std::vector<std::string>& image_exts = {".png", ".jpg",
                                                                        ".jpeg"});

struct VideoClip {
  std::string clip_id, video_id;
  int t = 0, h = 0, w = 0;
  std::vector<double> frames;     // [T,H,W,3] in [0,1]
  std::vector<BinaryMask> masks;  // per frame
};

struct ClipRef {
  std::string split, video_id;
  int video_index = 0;
  int start = 0, length = 0;
};

// Contiguous windows of length t at the given stride; videos shorter than t
// are skipped with a warning. Per video this yields
// floor((len - t)/stride) + 1 clips.
std::vector<ClipRef> enumerate_clips(const DatasetIndex& index, const std::string& split, int t,
                                     int stride);

VideoClip load_clip(const DatasetIndex& index, const ClipRef& ref);

// Mirror-flips all frames and masks of a clip (the whole clip, keeping
// temporal coherence).
void hflip_clip(VideoClip& clip);

// Deterministic shuffled cycling over clip windows.
class ClipSampler {
 public:
  ClipSampler(std::vector<ClipRef> refs, std::uint64_t seed);
  const ClipRef& next();
  std::size_t size() const { return refs_.size(); }

 private:
  void shuffle();
  std::vector<ClipRef> refs_;
  Rng rng_;
  std::size_t pos_ = 0;
};

// Synthetic videos: a static textured background, one moving soft-edged
// shadow ellipse (multiplicative attenuation, blurred rim; ground truth is
// the ellipse support) and one moving opaque dark distractor labeled
// background. Trajectories keep the two supports disjoint in every frame.
DatasetIndex synth_shadow_videos(const std::filesystem::path& out_root, int n_videos, int t,
                                 int h, int w, std::uint64_t seed,
                                 const std::string& split = "train");

std::filesystem::path distractor_mask_path(const DatasetIndex& index, const std::string& split,
                                           const ClipRef& ref, int frame_in_clip);

// ---- embedding bundles ----

struct EmbeddingBundle {
  int l_s = 0, l_d = 0, t = 0, m = 0, c_l = 0, c_m = 0;
  std::vector<double> p_s;  // [L_s, C_l]
  std::vector<double> p_d;  // [L_d, C_l]
  std::vector<double> p_x;  // [T*M, C_m]
};

// One JSON header line {"arrays":[{"name":...,"shape":[...]},...],
// "dtype":"f32","order":"row-major"} followed by the concatenated raw
// little-endian float32 blobs in header order.
void write_bundle(const EmbeddingBundle& b, const std::filesystem::path& path);
EmbeddingBundle read_bundle(const std::filesystem::path& path);

// Deterministic stand-in when no real encoder output is supplied. Values are
// f32-representable so a write/read round trip is the identity.
EmbeddingBundle synth_bundle(int l_s, int l_d, int t, int m, int c_l, int c_m,
                             std::uint64_t seed);

}  // namespace umbra
