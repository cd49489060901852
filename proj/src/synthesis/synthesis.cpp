#include "gpfr/synthesis.hpp"

#include <cmath>

#include "gpfr/binio.hpp"
#include "gpfr/log.hpp"
#include "gpfr/parallel.hpp"

namespace gpfr::synth {
namespace {

constexpr std::uint16_t kVersion = 1;

}  // namespace

ClassDescription ClassDescription::binary(int label, std::span<const double> z) {
  ClassDescription d{label, {}};
  for (double zi : z) d.dist.push_back({1.0 - zi, zi});
  return d;
}

ClassDescription ClassDescription::one_hot(int label, std::span<const std::size_t> values,
                                           std::span<const std::size_t> arity) {
  if (values.size() != arity.size()) throw ConfigError("one-hot description: values and arities differ in length");
  ClassDescription d{label, {}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= arity[i]) throw ConfigError("one-hot description: value exceeds arity");
    std::vector<double> row(arity[i], 0.0);
    row[values[i]] = 1.0;
    d.dist.push_back(std::move(row));
  }
  return d;
}

void ClassDescription::validate(const jafe::AttributeScheme& scheme) const {
  const std::string who = "class " + std::to_string(label);
  if (dist.size() != scheme.size()) {
    throw ConfigError(who + ": description has " + std::to_string(dist.size()) + " attributes, scheme has " +
                      std::to_string(scheme.size()));
  }
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i].size() != scheme.arity[i]) {
      throw ConfigError(who + ": attribute " + std::to_string(i) + " row width differs from its arity");
    }
    double sum = 0.0;
    for (double p : dist[i]) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(who + ": probability outside [0, 1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ConfigError(who + ": attribute " + std::to_string(i) + " row does not sum to 1");
  }
}

void PseudoSet::append(const PseudoSet& other) {
  if (size() == 0 && dim == 0) {
    dim = other.dim;
    m = other.m;
  }
  if (other.size() && (other.dim != dim || other.m != m)) throw UsageError("pseudo sets differ in layout");
  vectors.insert(vectors.end(), other.vectors.begin(), other.vectors.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  choices.insert(choices.end(), other.choices.begin(), other.choices.end());
}

std::size_t draw_value(std::span<const double> dist, double eps) noexcept {
  if (dist.size() == 2) return eps <= dist[1] ? 1 : 0;
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t v = 0; v < dist.size(); ++v) {
    if (dist[v] <= 0.0) continue;
    cum += dist[v];
    last = v;
    if (eps <= cum) return v;
  }
  return last;  // rounding left eps just above the final cumulative sum
}

PseudoSet synthesize_class(const repo::CognitiveRepository& repo, const ClassDescription& description, std::size_t n,
                           std::uint64_t seed) {
  const auto& scheme = repo.scheme();
  description.validate(scheme);
  const std::size_t m = scheme.size();

  // Resolve each value of nonzero probability to a drawable bucket up front.
  std::vector<std::vector<const repo::Bucket*>> source(m);
  for (std::size_t i = 0; i < m; ++i) {
    source[i].assign(scheme.arity[i], nullptr);
    for (std::size_t v = 0; v < scheme.arity[i]; ++v) {
      if (description.dist[i][v] <= 0.0) continue;
      const repo::Bucket* b = &repo.bucket(i, v);
      if (b->empty()) {
        b = &repo.fallback(i, v);
        if (b->empty()) {
          throw SynthesisError("class " + std::to_string(description.label) + ": attribute " + std::to_string(i) +
                                   " value " + std::to_string(v) + " has no repository vectors",
                               static_cast<int>(i), description.label);
        }
        log::warn("class ", description.label, ": attribute ", i, " value ", v,
                  " bucket is empty; using the top-", b->size(), " fallback vectors");
      }
      source[i][v] = b;
    }
  }

  PseudoSet out;
  out.dim = scheme.combined_dim();
  out.m = m;
  out.vectors.resize(n * out.dim);
  out.labels.assign(n, description.label);
  out.choices.resize(n * m);
  Rng rng(derive_seed(seed, {kSynthesisStream, static_cast<std::uint64_t>(description.label)}));
  for (std::size_t k = 0; k < n; ++k) {
    float* dst = out.vectors.data() + k * out.dim;
    for (std::size_t i = 0; i < m; ++i) {
      const double eps = rng.uniform_open();
      const std::size_t v = draw_value(description.dist[i], eps);
      const repo::Bucket& b = *source[i][v];
      const auto picked = b.vector(rng.below(b.size()));
      dst = std::copy(picked.begin(), picked.end(), dst);
      out.choices[k * m + i] = static_cast<std::uint16_t>(v);
    }
  }
  return out;
}

PseudoSet synthesize_all(const repo::CognitiveRepository& repo, std::span<const ClassDescription> descriptions,
                         std::size_t n, std::uint64_t seed, std::size_t threads) {
  std::vector<PseudoSet> parts(descriptions.size());
  parallel_for(descriptions.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) parts[c] = synthesize_class(repo, descriptions[c], n, seed);
  });
  PseudoSet out;
  out.dim = repo.scheme().combined_dim();
  out.m = repo.scheme().size();
  out.vectors.reserve(descriptions.size() * n * out.dim);
  for (const auto& p : parts) out.append(p);
  return out;
}

std::vector<std::uint8_t> encode(const PseudoSet& set, std::uint64_t config_hash) {
  binio::Writer w;
  w.magic("GPPS");
  w.u16(kVersion);
  w.u64(config_hash);
  w.u64(set.size());
  w.u32(static_cast<std::uint32_t>(set.dim));
  w.u32(static_cast<std::uint32_t>(set.m));
  for (int l : set.labels) w.i32(l);
  w.f32s(set.vectors);
  for (std::uint16_t c : set.choices) w.u16(c);
  w.u64(binio::fnv1a(w.data()));
  return std::move(w.data());
}

PseudoSet decode(std::span<const std::uint8_t> bytes, const std::string& source, std::uint64_t* config_hash) {
  binio::Reader r(bytes, source);
  r.expect_magic("GPPS");
  if (r.u16() != kVersion) throw IoError(IoError::Kind::kMalformedHeader, source + ": unsupported pseudo-set version");
  const std::uint64_t hash = r.u64();
  const std::uint64_t n = r.u64();
  PseudoSet set;
  set.dim = r.u32();
  set.m = r.u32();
  const std::uint64_t need = n * (4 + 4 * set.dim + 2 * set.m) + 8;
  if (need > r.remaining()) {
    throw IoError(IoError::Kind::kTruncated, source + ": pseudo set declares " + std::to_string(n) +
                                                 " rows but the file is shorter");
  }
  set.labels.resize(n);
  for (auto& l : set.labels) l = r.i32();
  set.vectors.resize(n * set.dim);
  r.f32s(set.vectors);
  set.choices.resize(n * set.m);
  for (auto& c : set.choices) c = r.u16();
  const std::size_t body = r.position();
  if (binio::fnv1a(bytes.first(body)) != r.u64()) {
    throw IoError(IoError::Kind::kChecksum, source + ": pseudo set checksum mismatch");
  }
  if (config_hash) *config_hash = hash;
  return set;
}

void save(const std::filesystem::path& path, const PseudoSet& set, std::uint64_t config_hash) {
  binio::write_file(path, encode(set, config_hash));
}

PseudoSet load(const std::filesystem::path& path, std::uint64_t* config_hash) {
  return decode(binio::read_file(path), path.string(), config_hash);
}

}  // namespace gpfr::synth
