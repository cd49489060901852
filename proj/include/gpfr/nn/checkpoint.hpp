#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gpfr/nn/network.hpp"

namespace gpfr::nn {

// Checkpoint layout (all integers little-endian):
//
//   "GPFR" | u16 version | u64 config hash | str kind | str manifest |
//   f32 parameters in manifest order | u64 FNV-1a of every preceding byte
//
// where str is a u32 byte length followed by UTF-8 text. The manifest is
// line oriented:
//
//   meta <key> <tokens...>        owner-specific metadata
//   net <name> <input dims...>    starts a layer stack
//   layer <kind> <hyperparams...> one per layer, see Layer::describe()
//   end
//
// Parameters follow for each net in order, each layer's tensors (weights
// then bias) flattened row-major.
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedNetwork {
  std::string name;
  Sequential<float> net;
};

struct Checkpoint {
  std::string kind;
  std::uint64_t config_hash = 0;
  std::vector<std::string> meta;
  std::vector<NamedNetwork> networks;

  const Sequential<float>& network(const std::string& name) const;
  // Tokens after "<key>" for the first meta line with that key.
  std::vector<std::string> meta_tokens(const std::string& key) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gpfr::nn
