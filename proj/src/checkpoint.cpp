#include "umbra/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "umbra/config.hpp"

namespace umbra {

namespace fs = std::filesystem;
using json = nlohmann::json;

void save_checkpoint(const fs::path& path, const ShadowNet& net, const json& extra) {
  json manifest;
  manifest["format"] = "umbra-ckpt-v1";
  manifest["model"] = model_config_to_json(net.config());
  manifest["temporal_mode"] = temporal_mode_name(net.temporal_mode());
  manifest["extra"] = extra;

  json params = json::array();
  std::uint64_t offset = 0;
  for (const auto& e : net.params().entries()) {
    params.push_back({{"name", e.name},
                      {"shape", e.tensor.shape()},
                      {"trainable", e.trainable},
                      {"offset", offset}});
    offset += static_cast<std::uint64_t>(e.tensor.numel());
  }
  manifest["params"] = params;
  manifest["total_values"] = offset;

  const std::string mtext = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  const std::uint64_t mlen = mtext.size();
  unsigned char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<unsigned char>((mlen >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(lenbuf), 8);
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  for (const auto& e : net.params().entries()) {
    std::vector<float> f32(e.tensor.values().size());
    for (std::size_t i = 0; i < f32.size(); ++i)
      f32[i] = static_cast<float>(e.tensor.values()[i]);
    out.write(reinterpret_cast<const char*>(f32.data()),
              static_cast<std::streamsize>(f32.size() * sizeof(float)));
  }
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  unsigned char lenbuf[8];
  in.read(reinterpret_cast<char*>(lenbuf), 8);
  if (!in) throw std::runtime_error("checkpoint truncated: " + path.string());
  std::uint64_t mlen = 0;
  for (int i = 7; i >= 0; --i) mlen = (mlen << 8) | lenbuf[i];
  std::string mtext(mlen, '\0');
  in.read(mtext.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw std::runtime_error("checkpoint manifest truncated: " + path.string());

  json manifest = json::parse(mtext);
  if (manifest.at("format") != "umbra-ckpt-v1")
    throw std::runtime_error("unknown checkpoint format in " + path.string());

  const ModelConfig cfg = model_config_from_json(manifest.at("model"));
  const TemporalMode mode = temporal_mode_from(manifest.at("temporal_mode"));
  const std::uint64_t seed = manifest.at("extra").value("model_seed", 0ull);

  LoadedCheckpoint loaded;
  loaded.net = std::make_unique<ShadowNet>(cfg, mode, seed);
  loaded.manifest = manifest;

  auto& entries = loaded.net->params().entries();
  const auto& plist = manifest.at("params");
  if (plist.size() != entries.size())
    throw std::runtime_error("checkpoint parameter count mismatch in " + path.string());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string name = plist[i].at("name");
    if (name != entries[i].name)
      throw std::runtime_error("checkpoint parameter order mismatch at " + name);
    std::vector<float> f32(entries[i].tensor.values().size());
    in.read(reinterpret_cast<char*>(f32.data()),
            static_cast<std::streamsize>(f32.size() * sizeof(float)));
    if (!in) throw std::runtime_error("checkpoint blob truncated at " + name);
    auto& vals = entries[i].tensor.values();
    for (std::size_t k = 0; k < f32.size(); ++k) vals[k] = static_cast<double>(f32[k]);
  }
  return loaded;
}

}  // namespace umbra
