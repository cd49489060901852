#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gpfr/jafe.hpp"

namespace gpfr::repo {

// Confidence margin tuple: positive in [0.5, 1), negative in (0, 0.5].
struct Margins {
  double positive = 0.7;
  double negative = 0.2;
  void validate() const;
  bool operator==(const Margins&) const = default;
};

enum class Mode : std::uint8_t { kMargin, kTopScore };
Mode parse_mode(const std::string& name);
std::string_view mode_name(Mode mode);

struct Provenance {
  std::uint32_t sample = 0;
  float score = 0.0f;  // margin mode: positive probability; top-score: probability of the bucket value
  bool operator==(const Provenance&) const = default;
};

// Sub-vectors stored by value, one provenance record each.
struct Bucket {
  std::size_t dim = 0;
  std::vector<float> vectors;
  std::vector<Provenance> provenance;

  std::size_t size() const noexcept { return provenance.size(); }
  bool empty() const noexcept { return provenance.empty(); }
  std::span<const float> vector(std::size_t j) const { return {vectors.data() + j * dim, dim}; }
  void push(std::span<const float> v, Provenance p);
  bool operator==(const Bucket&) const = default;
};

// One bucket per attribute value. For binary attributes value 1 is the
// positive bucket and value 0 the negative bucket. A fallback bucket is
// filled only when its value bucket is empty and holds the top-q label
// consistent vectors ranked by score with the margin ignored.
struct AttributeBuckets {
  std::vector<Bucket> values;
  std::vector<Bucket> fallback;
  bool operator==(const AttributeBuckets&) const = default;
};

struct BuildOptions {
  Mode mode = Mode::kMargin;
  Margins margins;
  double score_floor = 0.0;    // top-score mode only
  std::size_t fallback_q = 10;
  bool operator==(const BuildOptions&) const = default;
};

class CognitiveRepository {
 public:
  CognitiveRepository() = default;
  CognitiveRepository(jafe::AttributeScheme scheme, BuildOptions options);

  const jafe::AttributeScheme& scheme() const noexcept { return scheme_; }
  const BuildOptions& options() const noexcept { return options_; }
  std::size_t attribute_count() const noexcept { return attributes_.size(); }

  const Bucket& bucket(std::size_t attribute, std::size_t value) const;
  const Bucket& fallback(std::size_t attribute, std::size_t value) const;
  Bucket& bucket(std::size_t attribute, std::size_t value);
  Bucket& fallback(std::size_t attribute, std::size_t value);

  bool operator==(const CognitiveRepository&) const = default;

 private:
  jafe::AttributeScheme scheme_;
  BuildOptions options_;
  std::vector<AttributeBuckets> attributes_;
};

// Membership predicates, exposed for audits.
// Positive side: p >= margin.positive with a = 1; negative: p <= margin.negative
// with a = 0. Margins are rounded to float, the precision of the scores.
bool margin_admits(float positive_probability, unsigned label, unsigned side, const Margins& margins) noexcept;
// Argmax prediction equals the true value equals the bucket value, and the
// bucket value's probability reaches the floor (also rounded to float).
bool topscore_admits(std::span<const float> probs, unsigned label, unsigned value, double floor) noexcept;

// Binary attributes only; scores are the heads' positive probabilities.
CognitiveRepository build_repository(const jafe::AttributeOutputs& outputs, const jafe::Annotations& annotations,
                                     const jafe::AttributeScheme& scheme, const Margins& margins,
                                     std::size_t fallback_q = 10);

CognitiveRepository build_topscore_repository(const jafe::AttributeOutputs& outputs,
                                              const jafe::Annotations& annotations,
                                              const jafe::AttributeScheme& scheme, double score_floor = 0.0,
                                              std::size_t fallback_q = 10);

// Dispatches on options.mode.
CognitiveRepository build(const jafe::AttributeOutputs& outputs, const jafe::Annotations& annotations,
                          const jafe::AttributeScheme& scheme, const BuildOptions& options);

// File layout: "GPRP" | u16 version | u64 config hash | str manifest |
// per attribute, per value: bucket then fallback, each as u32 count,
// count * dim f32, count * (u32 sample, f32 score) | u64 FNV-1a.
std::vector<std::uint8_t> encode(const CognitiveRepository& repo, std::uint64_t config_hash);
CognitiveRepository decode(std::span<const std::uint8_t> bytes, const std::string& source,
                           std::uint64_t* config_hash = nullptr);
void save(const std::filesystem::path& path, const CognitiveRepository& repo, std::uint64_t config_hash);
CognitiveRepository load(const std::filesystem::path& path, std::uint64_t* config_hash = nullptr);

// attribute,value,size,fallback_size
std::string size_histogram_csv(const CognitiveRepository& repo);

}  // namespace gpfr::repo
