#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gpfr/inputs.hpp"
#include "gpfr/nn/tensor.hpp"

namespace gpfr::data {

// Row-major N x cols matrix.
template <class T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  std::span<const T> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<T> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

// Precomputed features with one class label per row and optional
// image-level attributes in [0, 1].
struct FeatureTable {
  Matrix<float> features;
  std::vector<int> labels;
  Matrix<double> attributes;                 // rows == 0 when absent
  std::vector<std::string> attribute_names;

  std::size_t size() const noexcept { return features.rows; }
  std::size_t dim() const noexcept { return features.cols; }
  bool has_attributes() const noexcept { return attributes.rows > 0; }
  void validate() const;
  DenseView view() const { return DenseView(features.values, {features.cols}); }
  // Rows whose label is in classes, in table order.
  std::vector<std::size_t> rows_of(std::span<const int> classes) const;
};

// Feature file: "GPFT" | u16 version | u64 N | u64 d | u64 FNV-1a of the
// payload | N * d little-endian f32.
void write_features(const std::filesystem::path& path, const Matrix<float>& features);
Matrix<float> read_features(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_features(const Matrix<float>& features);
Matrix<float> decode_features(std::span<const std::uint8_t> bytes, const std::string& source);

// CSV with header "label", one integer per line.
void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

// CSV whose header names the attributes; one row of numbers per sample.
void write_attributes_csv(const std::filesystem::path& path, const Matrix<double>& values,
                          std::span<const std::string> names);
Matrix<double> read_attributes_csv(const std::filesystem::path& path, std::vector<std::string>* names = nullptr);

// Assembles and validates a table; attributes_path may be empty.
FeatureTable load_feature_table(const std::filesystem::path& features_path, const std::filesystem::path& labels_path,
                                const std::filesystem::path& attributes_path = {});

struct SplitSpec {
  std::vector<int> seen;
  std::vector<int> unseen;
  std::vector<int> validation;   // subset of seen

  // ConfigError on overlap between seen and unseen, duplicates, or a
  // validation class that is not seen.
  void validate() const;
  bool operator==(const SplitSpec&) const = default;
};

// CSV "class,role" with role seen, unseen or validation. Validation rows
// count as seen as well.
std::string split_csv(const SplitSpec& split);
SplitSpec parse_split_csv(const std::string& text, const std::string& source);
void write_split_csv(const std::filesystem::path& path, const SplitSpec& split);
SplitSpec read_split_csv(const std::filesystem::path& path);

// Mean of the given attribute rows, clamped to [0, 1]. UsageError when empty.
std::vector<double> class_level_description(const Matrix<double>& attributes, std::span<const std::size_t> rows);
std::map<int, std::vector<double>> class_level_descriptions(const FeatureTable& table, std::span<const int> classes);

// 1 where value >= threshold.
Matrix<double> binarize_attributes(const Matrix<double>& values, double threshold = 0.5);

// Synthetic benchmark-style table. Each class owns a random binary
// signature over m attributes; attribute i owns a random unit direction in
// R^d and a sample is sum_i (2 a_i - 1) * strength * u_i plus Gaussian
// noise. Image-level attributes copy the class signature with each entry
// flipped with probability flip.
struct PlantedSpec {
  std::size_t classes = 32;
  std::size_t per_class = 62;
  std::size_t dim = 256;
  std::size_t attributes = 16;
  double strength = 1.0;
  double noise = 0.5;
  double flip = 0.05;
  std::uint64_t seed = 1;
};
FeatureTable make_planted_table(const PlantedSpec& spec);

}  // namespace gpfr::data
