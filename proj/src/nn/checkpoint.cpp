#include "gpfr/nn/checkpoint.hpp"

#include <sstream>

#include "gpfr/binio.hpp"

namespace gpfr::nn {

const Sequential<float>& Checkpoint::network(const std::string& name) const {
  for (const auto& n : networks) {
    if (n.name == name) return n.net;
  }
  throw IoError(IoError::Kind::kMalformedHeader, "checkpoint has no network '" + name + "'");
}

std::vector<std::string> Checkpoint::meta_tokens(const std::string& key) const {
  for (const auto& line : meta) {
    std::istringstream in(line);
    std::string k;
    in >> k;
    if (k != key) continue;
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
  }
  throw IoError(IoError::Kind::kMalformedHeader, "checkpoint manifest lacks '" + key + "'");
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream manifest;
  for (const auto& m : ckpt.meta) manifest << "meta " << m << '\n';
  for (const auto& n : ckpt.networks) {
    manifest << "net " << n.name;
    for (std::size_t d : n.net.input_shape()) manifest << ' ' << d;
    manifest << '\n';
    for (std::size_t i = 0; i < n.net.layer_count(); ++i) manifest << "layer " << n.net.layer(i).describe() << '\n';
    manifest << "end\n";
  }

  binio::Writer w;
  w.magic("GPFR");
  w.u16(kCheckpointVersion);
  w.u64(ckpt.config_hash);
  w.str(ckpt.kind);
  w.str(manifest.str());
  for (const auto& n : ckpt.networks) {
    for (const auto* p : n.net.params()) w.f32s(p->value.values());
  }
  w.u64(binio::fnv1a(w.data()));
  return std::move(w.data());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source) {
  binio::Reader r(bytes, source);
  r.expect_magic("GPFR");
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    throw IoError(IoError::Kind::kMalformedHeader, source + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.config_hash = r.u64();
  ckpt.kind = r.str();
  const std::string manifest = r.str();

  std::istringstream lines(manifest);
  NamedNetwork* current = nullptr;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    try {
      if (tag == "meta") {
        ckpt.meta.push_back(line.substr(5));
      } else if (tag == "net") {
        std::string name;
        in >> name;
        Shape shape;
        for (std::size_t d; in >> d;) shape.push_back(d);
        ckpt.networks.push_back({name, Sequential<float>(shape)});
        current = &ckpt.networks.back();
      } else if (tag == "layer") {
        if (!current) throw ConfigError("layer outside of a net block");
        current->net.add(make_layer<float>(line.substr(6)));
      } else if (tag == "end") {
        current = nullptr;
      } else {
        throw ConfigError("unknown manifest line '" + line + "'");
      }
    } catch (const ConfigError& e) {
      throw IoError(IoError::Kind::kMalformedHeader, source + ": bad manifest: " + e.what());
    }
  }

  for (auto& n : ckpt.networks) {
    for (auto* p : n.net.params()) {
      r.f32s(p->value.values());
      p->grad = Tensor<float>(p->value.shape());
    }
  }
  const std::size_t body = r.position();
  const std::uint64_t expected = r.u64();
  if (binio::fnv1a(bytes.first(body)) != expected) {
    throw IoError(IoError::Kind::kChecksum, source + ": checkpoint checksum mismatch");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  binio::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  return decode_checkpoint(bytes, path.string());
}

}  // namespace gpfr::nn
