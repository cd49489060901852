#include "gpfr/cmnist.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "gpfr/binio.hpp"
#include "gpfr/log.hpp"
#include "gpfr/parallel.hpp"
#include "gpfr/text.hpp"

namespace gpfr::cmnist {
namespace {

constexpr std::uint16_t kVersion = 1;
constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;
constexpr std::size_t kRecordBytes = 3 + kImageBytes;
constexpr std::size_t kMaxSplitAttempts = 1000;

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

int distance2(const Rgb& a, const Rgb& b) {
  int s = 0;
  for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

std::string rgb_text(const Rgb& c) {
  return std::to_string(c[0]) + " " + std::to_string(c[1]) + " " + std::to_string(c[2]);
}

void write_split(binio::Writer& w, const Split& s) {
  for (std::size_t j = 0; j < s.size(); ++j) {
    w.u8(s.digit[j]);
    w.u8(s.background[j]);
    w.u8(s.foreground[j]);
    w.bytes(s.image(j));
  }
}

Split read_split(binio::Reader& r, std::size_t n, const std::string& source) {
  Split s;
  s.digit.resize(n);
  s.background.resize(n);
  s.foreground.resize(n);
  s.images.resize(n * kImageBytes);
  for (std::size_t j = 0; j < n; ++j) {
    s.digit[j] = r.u8();
    s.background[j] = r.u8();
    s.foreground[j] = r.u8();
    if (s.digit[j] > 9 || s.background[j] > 9 || s.foreground[j] > 9) {
      throw IoError(IoError::Kind::kMalformedHeader, source + ": record " + std::to_string(j) + " has an attribute above 9");
    }
    const auto img = r.bytes(kImageBytes);
    std::copy(img.begin(), img.end(), s.images.begin() + static_cast<std::ptrdiff_t>(j * kImageBytes));
  }
  return s;
}

}  // namespace

void Palette::validate() const {
  std::vector<Rgb> all(background.begin(), background.end());
  all.insert(all.end(), foreground.begin(), foreground.end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) throw ConfigError("palette colors are not distinct");
}

Palette make_palette(std::uint64_t seed, std::size_t pool) {
  if (pool < 20) throw ConfigError("palette candidate pool needs at least 20 colors");
  Rng rng(derive_seed(seed, {kPaletteStream}));
  std::vector<Rgb> candidates(pool);
  for (auto& c : candidates) {
    for (auto& ch : c) ch = static_cast<std::uint8_t>(rng.below(256));
  }
  std::vector<int> nearest(pool, std::numeric_limits<int>::max());
  std::vector<Rgb> picks;
  std::size_t next = 0;
  while (picks.size() < 20) {
    picks.push_back(candidates[next]);
    std::size_t best = 0;
    int best_d = -1;
    for (std::size_t k = 0; k < pool; ++k) {
      nearest[k] = std::min(nearest[k], distance2(candidates[k], picks.back()));
      if (nearest[k] > best_d) best_d = nearest[k], best = k;
    }
    next = best;
  }
  Palette p;
  for (std::size_t i = 0; i < 10; ++i) {
    p.background[i] = picks[2 * i];
    p.foreground[i] = picks[2 * i + 1];
  }
  p.validate();
  return p;
}

std::array<int, 3> decode_class(int id) {
  if (id < 0 || id >= static_cast<int>(kClasses)) throw UsageError("class id " + std::to_string(id) + " out of range");
  return {id / 100, (id / 10) % 10, id % 10};
}

MnistSplit read_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = binio::read_file(images);
  const auto lab = binio::read_file(labels);
  if (img.size() < 16 || be32(img, 0) != kImageMagic) {
    throw IoError(IoError::Kind::kMalformedHeader, images.string() + ": not an IDX image file (magic 2051)");
  }
  if (lab.size() < 8 || be32(lab, 0) != kLabelMagic) {
    throw IoError(IoError::Kind::kMalformedHeader, labels.string() + ": not an IDX label file (magic 2049)");
  }
  MnistSplit s;
  const std::size_t n = be32(img, 4);
  s.rows = be32(img, 8);
  s.cols = be32(img, 12);
  if (s.rows != kSide || s.cols != kSide) {
    throw IoError(IoError::Kind::kMalformedHeader, images.string() + ": expected 28x28 images");
  }
  if (img.size() < 16 + n * kPixels) {
    throw IoError(IoError::Kind::kTruncated, images.string() + ": header declares " + std::to_string(n) +
                                                 " images but the file is shorter");
  }
  if (be32(lab, 4) != n) {
    throw IoError(IoError::Kind::kMismatch, labels.string() + ": label count differs from image count");
  }
  if (lab.size() < 8 + n) throw IoError(IoError::Kind::kTruncated, labels.string() + ": label file is truncated");
  s.images.assign(img.begin() + 16, img.begin() + static_cast<std::ptrdiff_t>(16 + n * kPixels));
  s.labels.assign(lab.begin() + 8, lab.begin() + static_cast<std::ptrdiff_t>(8 + n));
  for (auto l : s.labels) {
    if (l > 9) throw IoError(IoError::Kind::kMalformedHeader, labels.string() + ": label above 9");
  }
  return s;
}

MnistSource load_mnist(const std::filesystem::path& dir) {
  return {read_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte"),
          read_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte")};
}

std::vector<int> Split::labels() const {
  std::vector<int> out(size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = label(j);
  return out;
}

jafe::Annotations Split::annotations(std::span<const std::size_t> rows) const {
  jafe::Annotations a;
  a.m = 3;
  a.values.reserve(rows.size() * 3);
  for (std::size_t r : rows) {
    a.values.push_back(digit.at(r));
    a.values.push_back(background.at(r));
    a.values.push_back(foreground.at(r));
  }
  return a;
}

Split colorize(const MnistSplit& source, const Palette& palette, std::uint64_t seed, std::uint64_t split_tag,
               std::size_t limit, std::size_t threads) {
  palette.validate();
  const std::size_t n = limit ? std::min(limit, source.size()) : source.size();
  Split s;
  s.digit.assign(source.labels.begin(), source.labels.begin() + static_cast<std::ptrdiff_t>(n));
  s.background.resize(n);
  s.foreground.resize(n);
  Rng rng(derive_seed(seed, {kCmnistStream, split_tag}));
  for (std::size_t j = 0; j < n; ++j) {
    s.background[j] = static_cast<std::uint8_t>(rng.below(10));
    s.foreground[j] = static_cast<std::uint8_t>(rng.below(10));
  }
  s.images.resize(n * kImageBytes);
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const std::uint8_t* gray = source.images.data() + j * kPixels;
      std::uint8_t* out = s.images.data() + j * kImageBytes;
      const Rgb& bg = palette.background[s.background[j]];
      const Rgb& fg = palette.foreground[s.foreground[j]];
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t p = 0; p < kPixels; ++p) out[c * kPixels + p] = blend(gray[p], bg[c], fg[c]);
      }
    }
  });
  return s;
}

Dataset generate(const MnistSource& source, const GenerateOptions& options) {
  Dataset d;
  d.seed = options.seed;
  d.palette = make_palette(options.seed);
  d.train = colorize(source.train, d.palette, options.seed, 0, options.train_limit, options.threads);
  d.test = colorize(source.test, d.palette, options.seed, 1, options.test_limit, options.threads);
  return d;
}

std::vector<std::uint8_t> encode(const Dataset& data) {
  binio::Writer w;
  w.magic("CMN1");
  w.u16(kVersion);
  w.u64(data.seed);
  for (const auto& c : data.palette.background) w.bytes(c);
  for (const auto& c : data.palette.foreground) w.bytes(c);
  w.u64(data.train.size());
  w.u64(data.test.size());
  write_split(w, data.train);
  write_split(w, data.test);
  w.u64(binio::fnv1a(w.data()));
  return std::move(w.data());
}

Dataset decode(std::span<const std::uint8_t> bytes, const std::string& source) {
  binio::Reader r(bytes, source);
  r.expect_magic("CMN1");
  if (r.u16() != kVersion) throw IoError(IoError::Kind::kMalformedHeader, source + ": unsupported C-MNIST version");
  Dataset d;
  d.seed = r.u64();
  for (auto& c : d.palette.background) {
    const auto b = r.bytes(3);
    std::copy(b.begin(), b.end(), c.begin());
  }
  for (auto& c : d.palette.foreground) {
    const auto b = r.bytes(3);
    std::copy(b.begin(), b.end(), c.begin());
  }
  const std::uint64_t n_train = r.u64(), n_test = r.u64();
  if ((n_train + n_test) > r.remaining() / kRecordBytes) {
    throw IoError(IoError::Kind::kTruncated, source + ": header declares " + std::to_string(n_train + n_test) +
                                                 " records but the file is shorter");
  }
  d.train = read_split(r, n_train, source);
  d.test = read_split(r, n_test, source);
  const std::size_t body = r.position();
  if (binio::fnv1a(bytes.first(body)) != r.u64()) {
    throw IoError(IoError::Kind::kChecksum, source + ": C-MNIST checksum mismatch");
  }
  if (r.remaining()) throw IoError(IoError::Kind::kMalformedHeader, source + ": trailing bytes");
  try {
    d.palette.validate();
  } catch (const ConfigError& e) {
    throw IoError(IoError::Kind::kMalformedHeader, source + ": " + e.what());
  }
  return d;
}

void save(const std::filesystem::path& path, const Dataset& data) { binio::write_file(path, encode(data)); }

Dataset load(const std::filesystem::path& path) { return decode(binio::read_file(path), path.string()); }

std::string metadata_text(const Dataset& data, const data::SplitSpec* split) {
  std::string out = "format CMN1\nseed " + std::to_string(data.seed) + "\n";
  for (std::size_t i = 0; i < 10; ++i) out += "background " + std::to_string(i) + " " + rgb_text(data.palette.background[i]) + "\n";
  for (std::size_t i = 0; i < 10; ++i) out += "foreground " + std::to_string(i) + " " + rgb_text(data.palette.foreground[i]) + "\n";
  out += "train_count " + std::to_string(data.train.size()) + "\n";
  out += "test_count " + std::to_string(data.test.size()) + "\n";
  out += "blend (I*fg+(255-I)*bg+127)/255\n";
  if (split) {
    out += "seen " + text::join(split->seen) + "\n";
    out += "unseen " + text::join(split->unseen) + "\n";
    out += "validation " + text::join(split->validation) + "\n";
  }
  return out;
}

jafe::AttributeScheme attribute_scheme(std::span<const double> alpha, std::size_t unit_dim) {
  jafe::AttributeScheme s{{10, 10, 10}, {1.0, 0.1, 0.1}, {unit_dim, unit_dim, unit_dim}};
  if (!alpha.empty()) {
    if (alpha.size() != 3) throw ConfigError("C-MNIST needs three attribute weights");
    s.alpha.assign(alpha.begin(), alpha.end());
  }
  s.validate();
  return s;
}

data::SplitSpec make_split(const SplitOptions& options) {
  if (options.seen < 1 || options.seen > kClasses) {
    throw UsageError("seen class count must be in [1, 1000], got " + std::to_string(options.seen));
  }
  const std::size_t remaining = kClasses - options.seen;
  const std::size_t unseen = options.unseen ? options.unseen : remaining;
  if (unseen > remaining) {
    throw UsageError("cannot take " + std::to_string(unseen) + " unseen classes when " + std::to_string(options.seen) +
                     " of 1000 are seen");
  }
  const bool coverable = options.seen >= 10;
  if (!coverable) log::warn("fewer than 10 seen classes cannot cover every attribute value");

  std::vector<int> ids(kClasses);
  for (std::size_t attempt = 0; attempt < kMaxSplitAttempts; ++attempt) {
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(derive_seed(options.seed, {kSplitStream, attempt}));
    rng.shuffle(std::span<int>(ids));
    std::array<std::array<bool, 10>, 3> seen_value{};
    for (std::size_t k = 0; k < options.seen; ++k) {
      const auto t = decode_class(ids[k]);
      for (int a = 0; a < 3; ++a) seen_value[a][t[a]] = true;
    }
    bool covered = true;
    for (const auto& attr : seen_value) covered = covered && std::all_of(attr.begin(), attr.end(), [](bool b) { return b; });
    if (coverable && !covered) {
      log::debug("split attempt ", attempt, " misses an attribute value; redrawing");
      continue;
    }
    data::SplitSpec s;
    s.seen.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(options.seen));
    s.unseen.assign(ids.begin() + static_cast<std::ptrdiff_t>(options.seen),
                    ids.begin() + static_cast<std::ptrdiff_t>(options.seen + unseen));
    std::sort(s.seen.begin(), s.seen.end());
    std::sort(s.unseen.begin(), s.unseen.end());
    return s;
  }
  throw UsageError("no split covering every attribute value found in " + std::to_string(kMaxSplitAttempts) + " draws");
}

synth::ClassDescription describe(int id) {
  const auto t = decode_class(id);
  const std::size_t values[] = {static_cast<std::size_t>(t[0]), static_cast<std::size_t>(t[1]),
                                static_cast<std::size_t>(t[2])};
  const std::size_t arity[] = {10, 10, 10};
  return synth::ClassDescription::one_hot(id, values, arity);
}

std::vector<synth::ClassDescription> describe_all(std::span<const int> ids) {
  std::vector<synth::ClassDescription> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(describe(id));
  return out;
}

}  // namespace gpfr::cmnist
