#include "gpfr/repository.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "gpfr/binio.hpp"
#include "gpfr/text.hpp"

namespace gpfr::repo {
namespace {

constexpr std::uint16_t kVersion = 1;

struct Candidate {
  std::uint32_t sample;
  float score;
  double rank_key;  // larger is more confident for the side
};

void check_inputs(const jafe::AttributeOutputs& outputs, const jafe::Annotations& annotations,
                  const jafe::AttributeScheme& scheme) {
  annotations.validate(scheme);
  const std::size_t n = annotations.size();
  if (outputs.combined.rank() != 2 || outputs.combined.dim(0) != n ||
      outputs.combined.dim(1) != scheme.combined_dim()) {
    throw UsageError("repository: combined representations do not match the annotations and scheme");
  }
  if (outputs.probs.size() != scheme.size()) throw UsageError("repository: one probability block per attribute");
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    if (outputs.probs[i].dim(0) != n || outputs.probs[i].dim(1) != scheme.arity[i]) {
      throw UsageError("repository: probability block " + std::to_string(i) + " has the wrong shape");
    }
  }
}

std::span<const float> sub_vector(const jafe::AttributeOutputs& outputs, const jafe::AttributeScheme& scheme,
                                  std::size_t n, std::size_t i) {
  return outputs.combined.row(n).subspan(scheme.offset(i), scheme.dims[i]);
}

void fill_fallback(Bucket& fb, std::vector<Candidate>& pool, std::size_t q, const jafe::AttributeOutputs& outputs,
                   const jafe::AttributeScheme& scheme, std::size_t i) {
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Candidate& a, const Candidate& b) { return a.rank_key > b.rank_key; });
  for (std::size_t j = 0; j < std::min(q, pool.size()); ++j) {
    fb.push(sub_vector(outputs, scheme, pool[j].sample, i), {pool[j].sample, pool[j].score});
  }
}

void write_bucket(binio::Writer& w, const Bucket& b) {
  w.u32(static_cast<std::uint32_t>(b.size()));
  w.f32s(b.vectors);
  for (const auto& p : b.provenance) {
    w.u32(p.sample);
    w.f32(p.score);
  }
}

void read_bucket(binio::Reader& r, Bucket& b) {
  const std::uint32_t count = r.u32();
  if (static_cast<std::uint64_t>(count) * b.dim * 4 > r.remaining()) {
    throw IoError(IoError::Kind::kTruncated, r.source() + ": bucket of " + std::to_string(count) +
                                                 " vectors exceeds the file");
  }
  b.vectors.resize(count * b.dim);
  r.f32s(b.vectors);
  b.provenance.resize(count);
  for (auto& p : b.provenance) {
    p.sample = r.u32();
    p.score = r.f32();
  }
}

std::vector<std::string> manifest_tokens(const std::vector<std::string>& lines, const std::string& key,
                                         const std::string& source) {
  for (const auto& line : lines) {
    auto toks = text::tokens(line);
    if (!toks.empty() && toks[0] == key) return {toks.begin() + 1, toks.end()};
  }
  throw IoError(IoError::Kind::kMalformedHeader, source + ": repository manifest lacks '" + key + "'");
}

}  // namespace

void Margins::validate() const {
  if (!(positive >= 0.5 && positive < 1.0)) {
    throw ConfigError("positive margin " + text::format_double(positive) + " outside [0.5, 1)");
  }
  if (!(negative > 0.0 && negative <= 0.5)) {
    throw ConfigError("negative margin " + text::format_double(negative) + " outside (0, 0.5]");
  }
}

Mode parse_mode(const std::string& name) {
  if (name == "margin") return Mode::kMargin;
  if (name == "topscore") return Mode::kTopScore;
  throw ConfigError("unknown repository mode '" + name + "' (expected margin or topscore)");
}

std::string_view mode_name(Mode mode) { return mode == Mode::kMargin ? "margin" : "topscore"; }

void Bucket::push(std::span<const float> v, Provenance p) {
  if (v.size() != dim) throw UsageError("bucket vector width mismatch");
  vectors.insert(vectors.end(), v.begin(), v.end());
  provenance.push_back(p);
}

CognitiveRepository::CognitiveRepository(jafe::AttributeScheme scheme, BuildOptions options)
    : scheme_(std::move(scheme)), options_(options) {
  scheme_.validate();
  for (std::size_t i = 0; i < scheme_.size(); ++i) {
    AttributeBuckets ab;
    ab.values.assign(scheme_.arity[i], Bucket{scheme_.dims[i], {}, {}});
    ab.fallback.assign(scheme_.arity[i], Bucket{scheme_.dims[i], {}, {}});
    attributes_.push_back(std::move(ab));
  }
}

const Bucket& CognitiveRepository::bucket(std::size_t attribute, std::size_t value) const {
  return attributes_.at(attribute).values.at(value);
}
const Bucket& CognitiveRepository::fallback(std::size_t attribute, std::size_t value) const {
  return attributes_.at(attribute).fallback.at(value);
}
Bucket& CognitiveRepository::bucket(std::size_t attribute, std::size_t value) {
  return attributes_.at(attribute).values.at(value);
}
Bucket& CognitiveRepository::fallback(std::size_t attribute, std::size_t value) {
  return attributes_.at(attribute).fallback.at(value);
}

bool margin_admits(float p, unsigned label, unsigned side, const Margins& margins) noexcept {
  if (label != side) return false;
  return side == 1 ? p >= static_cast<float>(margins.positive) : p <= static_cast<float>(margins.negative);
}

bool topscore_admits(std::span<const float> probs, unsigned label, unsigned value, double floor) noexcept {
  return label == value && jafe::argmax(probs) == value && probs[value] >= static_cast<float>(floor);
}

CognitiveRepository build_repository(const jafe::AttributeOutputs& outputs, const jafe::Annotations& annotations,
                                     const jafe::AttributeScheme& scheme, const Margins& margins,
                                     std::size_t fallback_q) {
  margins.validate();
  check_inputs(outputs, annotations, scheme);
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    if (scheme.arity[i] != 2) {
      throw ConfigError("margin repository needs binary attributes; attribute " + std::to_string(i) + " has arity " +
                        std::to_string(scheme.arity[i]));
    }
  }
  CognitiveRepository repo(scheme, {Mode::kMargin, margins, 0.0, fallback_q});
  const std::size_t n = annotations.size();
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    std::vector<Candidate> pool[2];
    for (std::size_t s = 0; s < n; ++s) {
      const float p = outputs.probs[i].row(s)[1];
      const unsigned a = annotations.at(s, i);
      const auto sample = static_cast<std::uint32_t>(s);
      for (unsigned side : {0u, 1u}) {
        if (margin_admits(p, a, side, margins)) repo.bucket(i, side).push(sub_vector(outputs, scheme, s, i), {sample, p});
      }
      pool[a].push_back({sample, p, a == 1 ? double(p) : -double(p)});
    }
    for (unsigned side : {0u, 1u}) {
      if (repo.bucket(i, side).empty()) fill_fallback(repo.fallback(i, side), pool[side], fallback_q, outputs, scheme, i);
    }
  }
  return repo;
}

CognitiveRepository build_topscore_repository(const jafe::AttributeOutputs& outputs,
                                              const jafe::Annotations& annotations,
                                              const jafe::AttributeScheme& scheme, double score_floor,
                                              std::size_t fallback_q) {
  check_inputs(outputs, annotations, scheme);
  if (!(score_floor >= 0.0 && score_floor <= 1.0)) throw ConfigError("score floor must lie in [0, 1]");
  CognitiveRepository repo(scheme, {Mode::kTopScore, {}, score_floor, fallback_q});
  const std::size_t n = annotations.size();
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    std::vector<std::vector<Candidate>> pool(scheme.arity[i]);
    for (std::size_t s = 0; s < n; ++s) {
      const auto probs = outputs.probs[i].row(s);
      const unsigned a = annotations.at(s, i);
      const auto sample = static_cast<std::uint32_t>(s);
      if (topscore_admits(probs, a, a, score_floor)) {
        repo.bucket(i, a).push(sub_vector(outputs, scheme, s, i), {sample, probs[a]});
      }
      pool[a].push_back({sample, probs[a], probs[a]});
    }
    for (std::size_t v = 0; v < scheme.arity[i]; ++v) {
      if (repo.bucket(i, v).empty()) fill_fallback(repo.fallback(i, v), pool[v], fallback_q, outputs, scheme, i);
    }
  }
  return repo;
}

CognitiveRepository build(const jafe::AttributeOutputs& outputs, const jafe::Annotations& annotations,
                          const jafe::AttributeScheme& scheme, const BuildOptions& options) {
  if (options.mode == Mode::kMargin) {
    return build_repository(outputs, annotations, scheme, options.margins, options.fallback_q);
  }
  return build_topscore_repository(outputs, annotations, scheme, options.score_floor, options.fallback_q);
}

std::vector<std::uint8_t> encode(const CognitiveRepository& repo, std::uint64_t config_hash) {
  const auto& scheme = repo.scheme();
  const auto& opt = repo.options();
  std::ostringstream manifest;
  manifest << "mode " << mode_name(opt.mode) << '\n'
           << "margins " << text::format_double(opt.margins.positive) << ' '
           << text::format_double(opt.margins.negative) << '\n'
           << "floor " << text::format_double(opt.score_floor) << '\n'
           << "fallback_q " << opt.fallback_q << '\n'
           << "arity " << text::join(scheme.arity) << '\n'
           << "dims " << text::join(scheme.dims) << '\n';
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    manifest << "sizes " << i;
    for (std::size_t v = 0; v < scheme.arity[i]; ++v) manifest << ' ' << repo.bucket(i, v).size();
    manifest << '\n';
  }

  binio::Writer w;
  w.magic("GPRP");
  w.u16(kVersion);
  w.u64(config_hash);
  w.str(manifest.str());
  for (std::size_t i = 0; i < scheme.size(); ++i) {
    for (std::size_t v = 0; v < scheme.arity[i]; ++v) {
      write_bucket(w, repo.bucket(i, v));
      write_bucket(w, repo.fallback(i, v));
    }
  }
  w.u64(binio::fnv1a(w.data()));
  return std::move(w.data());
}

CognitiveRepository decode(std::span<const std::uint8_t> bytes, const std::string& source,
                           std::uint64_t* config_hash) {
  binio::Reader r(bytes, source);
  r.expect_magic("GPRP");
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    throw IoError(IoError::Kind::kMalformedHeader, source + ": unsupported repository version " +
                                                       std::to_string(version));
  }
  const std::uint64_t hash = r.u64();
  const auto lines = text::split(r.str(), '\n');

  BuildOptions opt;
  jafe::AttributeScheme scheme;
  try {
    opt.mode = parse_mode(manifest_tokens(lines, "mode", source).at(0));
    const auto m = manifest_tokens(lines, "margins", source);
    opt.margins = {text::parse_or_throw<double>(m.at(0), "margin"), text::parse_or_throw<double>(m.at(1), "margin")};
    opt.score_floor = text::parse_or_throw<double>(manifest_tokens(lines, "floor", source).at(0), "floor");
    opt.fallback_q = text::parse_or_throw<std::size_t>(manifest_tokens(lines, "fallback_q", source).at(0), "q");
    for (const auto& t : manifest_tokens(lines, "arity", source)) {
      scheme.arity.push_back(text::parse_or_throw<std::size_t>(t, "arity"));
    }
    for (const auto& t : manifest_tokens(lines, "dims", source)) {
      scheme.dims.push_back(text::parse_or_throw<std::size_t>(t, "dims"));
    }
    scheme.alpha.assign(scheme.arity.size(), 1.0);
    CognitiveRepository repo(scheme, opt);
    for (std::size_t i = 0; i < scheme.size(); ++i) {
      for (std::size_t v = 0; v < scheme.arity[i]; ++v) {
        read_bucket(r, repo.bucket(i, v));
        read_bucket(r, repo.fallback(i, v));
      }
    }
    const std::size_t body = r.position();
    const std::uint64_t expected = r.u64();
    if (binio::fnv1a(bytes.first(body)) != expected) {
      throw IoError(IoError::Kind::kChecksum, source + ": repository checksum mismatch");
    }
    if (r.remaining() != 0) throw IoError(IoError::Kind::kMalformedHeader, source + ": trailing bytes");
    if (config_hash) *config_hash = hash;
    return repo;
  } catch (const ConfigError& e) {
    throw IoError(IoError::Kind::kMalformedHeader, source + ": bad repository manifest: " + e.what());
  } catch (const std::out_of_range&) {
    throw IoError(IoError::Kind::kMalformedHeader, source + ": incomplete repository manifest");
  }
}

void save(const std::filesystem::path& path, const CognitiveRepository& repo, std::uint64_t config_hash) {
  binio::write_file(path, encode(repo, config_hash));
}

CognitiveRepository load(const std::filesystem::path& path, std::uint64_t* config_hash) {
  return decode(binio::read_file(path), path.string(), config_hash);
}

std::string size_histogram_csv(const CognitiveRepository& repo) {
  std::ostringstream out;
  out << "attribute,value,size,fallback_size\n";
  for (std::size_t i = 0; i < repo.scheme().size(); ++i) {
    for (std::size_t v = 0; v < repo.scheme().arity[i]; ++v) {
      out << i << ',' << v << ',' << repo.bucket(i, v).size() << ',' << repo.fallback(i, v).size() << '\n';
    }
  }
  return out.str();
}

}  // namespace gpfr::repo
