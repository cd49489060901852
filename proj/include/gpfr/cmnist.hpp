#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gpfr/dataio.hpp"
#include "gpfr/jafe.hpp"
#include "gpfr/synthesis.hpp"

namespace gpfr::cmnist {

inline constexpr std::size_t kSide = 28;
inline constexpr std::size_t kPixels = kSide * kSide;
inline constexpr std::size_t kImageBytes = 3 * kPixels;   // channel-major RGB
inline constexpr std::size_t kClasses = 1000;

using Rgb = std::array<std::uint8_t, 3>;

struct Palette {
  std::array<Rgb, 10> background{};
  std::array<Rgb, 10> foreground{};

  // ConfigError unless all 20 colors are pairwise distinct.
  void validate() const;
  bool operator==(const Palette&) const = default;
};

// Farthest-point selection of 20 colors from a seeded pool of random RGB
// candidates; even picks become backgrounds, odd picks foregrounds.
Palette make_palette(std::uint64_t seed, std::size_t pool = 4096);

constexpr int class_id(int digit, int background, int foreground) noexcept {
  return 100 * digit + 10 * background + foreground;
}
// (digit, background, foreground) of a class id in [0, 1000).
std::array<int, 3> decode_class(int id);

// Grayscale source digits.
struct MnistSplit {
  std::size_t rows = kSide;
  std::size_t cols = kSide;
  std::vector<std::uint8_t> images;   // N x rows x cols
  std::vector<std::uint8_t> labels;
  std::size_t size() const noexcept { return labels.size(); }
};

// Reads an IDX image file (magic 2051) and label file (magic 2049).
MnistSplit read_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

struct MnistSource {
  MnistSplit train;
  MnistSplit test;
};
// train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-images-idx3-ubyte,
// t10k-labels-idx1-ubyte under dir.
MnistSource load_mnist(const std::filesystem::path& dir);

// One pixel channel: round((I / 255) * fg + (1 - I / 255) * bg).
constexpr std::uint8_t blend(std::uint8_t intensity, std::uint8_t bg, std::uint8_t fg) noexcept {
  const unsigned i = intensity;
  return static_cast<std::uint8_t>((i * fg + (255u - i) * bg + 127u) / 255u);
}

struct Split {
  std::vector<std::uint8_t> images;   // N x 3 x 28 x 28
  std::vector<std::uint8_t> digit;
  std::vector<std::uint8_t> background;
  std::vector<std::uint8_t> foreground;

  std::size_t size() const noexcept { return digit.size(); }
  int label(std::size_t j) const noexcept { return class_id(digit[j], background[j], foreground[j]); }
  std::vector<int> labels() const;
  std::span<const std::uint8_t> image(std::size_t j) const { return {images.data() + j * kImageBytes, kImageBytes}; }
  ByteImageView view() const { return ByteImageView(images, {3, kSide, kSide}); }
  // k-way (digit, b-color, f-color) annotations for the given rows.
  jafe::Annotations annotations(std::span<const std::size_t> rows) const;
  bool operator==(const Split&) const = default;
};

struct Dataset {
  std::uint64_t seed = 0;
  Palette palette;
  Split train;
  Split test;
  bool operator==(const Dataset&) const = default;
};

struct GenerateOptions {
  std::uint64_t seed = 1;
  std::size_t train_limit = 0;   // 0 keeps every source image
  std::size_t test_limit = 0;
  std::size_t threads = 0;
};

// Each source image gets a uniformly drawn (b, f) pair under the seed and is
// blended pixelwise. The palette comes from make_palette(seed).
Dataset generate(const MnistSource& source, const GenerateOptions& options);
Split colorize(const MnistSplit& source, const Palette& palette, std::uint64_t seed, std::uint64_t split_tag,
               std::size_t limit = 0, std::size_t threads = 0);

// "CMN1" | u16 version | u64 seed | 60 palette bytes (backgrounds then
// foregrounds) | u64 train count | u64 test count | per record u8 digit,
// u8 b, u8 f, 2352 image bytes (train then test) | u64 FNV-1a.
std::vector<std::uint8_t> encode(const Dataset& data);
Dataset decode(std::span<const std::uint8_t> bytes, const std::string& source);
void save(const std::filesystem::path& path, const Dataset& data);
Dataset load(const std::filesystem::path& path);
std::string metadata_text(const Dataset& data, const data::SplitSpec* split = nullptr);

// The three 10-way attributes with the given loss weights and unit width.
jafe::AttributeScheme attribute_scheme(std::span<const double> alpha = {}, std::size_t unit_dim = 32);

struct SplitOptions {
  std::size_t seen = 200;
  std::size_t unseen = 0;   // 0 takes every remaining class
  std::uint64_t seed = 1;
};

// Seen classes are the first n_seen of a seeded shuffle of the 1000 ids and
// must cover every digit and color value; otherwise the shuffle is redrawn.
// Unseen classes are a prefix of the remainder, so smaller unseen sets nest
// inside larger ones. Lists are returned sorted.
data::SplitSpec make_split(const SplitOptions& options);

// One-hot categorical description of a class.
synth::ClassDescription describe(int id);
std::vector<synth::ClassDescription> describe_all(std::span<const int> ids);

}  // namespace gpfr::cmnist
