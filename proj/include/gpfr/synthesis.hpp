#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gpfr/repository.hpp"

namespace gpfr::synth {

// Per-attribute distribution over attribute values for one class. A binary
// attribute with probability z is the row (1 - z, z).
struct ClassDescription {
  int label = 0;
  std::vector<std::vector<double>> dist;

  static ClassDescription binary(int label, std::span<const double> z);
  static ClassDescription one_hot(int label, std::span<const std::size_t> values,
                                  std::span<const std::size_t> arity);
  // Entries in [0, 1], rows summing to 1 within 1e-6, shapes matching the scheme.
  void validate(const jafe::AttributeScheme& scheme) const;
};

struct PseudoSet {
  std::size_t dim = 0;
  std::size_t m = 0;
  std::vector<float> vectors;           // N x dim
  std::vector<int> labels;              // N
  std::vector<std::uint16_t> choices;   // N x m, the bucket value drawn per attribute

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> vector(std::size_t j) const { return {vectors.data() + j * dim, dim}; }
  std::span<const std::uint16_t> choice(std::size_t j) const { return {choices.data() + j * m, m}; }
  void append(const PseudoSet& other);
  bool operator==(const PseudoSet&) const = default;
};

// Bucket value for one attribute given eps in (0, 1). Binary rows take the
// positive value iff eps <= z; wider rows use the inverse CDF.
std::size_t draw_value(std::span<const double> dist, double eps) noexcept;

// n draws for one class from the stream derive_seed(seed, {synthesis, label}).
// Empty buckets fall back to the repository's fallback bucket with a
// warning; SynthesisError when both are empty for a value of nonzero
// probability.
PseudoSet synthesize_class(const repo::CognitiveRepository& repo, const ClassDescription& description, std::size_t n,
                           std::uint64_t seed);

// Concatenation of synthesize_class over the descriptions, in order.
PseudoSet synthesize_all(const repo::CognitiveRepository& repo, std::span<const ClassDescription> descriptions,
                         std::size_t n, std::uint64_t seed, std::size_t threads = 1);

// File layout: "GPPS" | u16 version | u64 config hash | u64 N | u32 dim |
// u32 m | N i32 labels | N * dim f32 vectors | N * m u16 choices | u64 FNV-1a.
std::vector<std::uint8_t> encode(const PseudoSet& set, std::uint64_t config_hash);
PseudoSet decode(std::span<const std::uint8_t> bytes, const std::string& source, std::uint64_t* config_hash = nullptr);
void save(const std::filesystem::path& path, const PseudoSet& set, std::uint64_t config_hash);
PseudoSet load(const std::filesystem::path& path, std::uint64_t* config_hash = nullptr);

}  // namespace gpfr::synth
