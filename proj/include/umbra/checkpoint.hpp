#pragma once

// Single-file checkpoint: an 8-byte little-endian manifest length, a JSON
// manifest (model config, temporal mode, parameter names/shapes/offsets,
// extras), then the row-major float32 parameter blobs in manifest order.

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "umbra/encdec.hpp"

namespace umbra {

void save_checkpoint(const std::filesystem::path& path, const ShadowNet& net,
                     const nlohmann::json& extra = nlohmann::json::object());

struct LoadedCheckpoint {
  std::unique_ptr<ShadowNet> net;
  nlohmann::json manifest;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace umbra
