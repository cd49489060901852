#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <set>
#include <unistd.h>

#include "gpfr/binio.hpp"
#include "gpfr/dataio.hpp"
#include "gpfr/error.hpp"

using namespace gpfr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("gpfr_dataio_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

IoError::Kind decode_kind(std::span<const std::uint8_t> bytes) {
  try {
    data::decode_features(bytes, "mem");
  } catch (const IoError& e) {
    return e.kind();
  }
  FAIL("expected an IoError");
  return IoError::Kind::kOpen;
}

// Header for N x d with a checksum over the given payload.
std::vector<std::uint8_t> feature_bytes(std::uint64_t n, std::uint64_t d, std::span<const float> payload) {
  binio::Writer body;
  body.f32s(payload);
  binio::Writer w;
  w.magic("GPFT");
  w.u16(1);
  w.u64(n);
  w.u64(d);
  w.u64(binio::fnv1a(body.data()));
  w.bytes(body.data());
  return std::move(w.data());
}

}  // namespace

TEST_CASE("feature file round trip preserves bit patterns") {
  data::Matrix<float> m{3, 4, {}};
  m.values = {0.0f, -0.0f, 1.5f, std::numeric_limits<float>::denorm_min(),
              std::numeric_limits<float>::infinity(), -3.25e-30f, 7.0f, 8.0f,
              std::bit_cast<float>(0x7fc12345u), 1e30f, -1.0f, 0.1f};
  const auto bytes = data::encode_features(m);
  const auto back = data::decode_features(bytes, "mem");
  REQUIRE(back.rows == 3);
  REQUIRE(back.cols == 4);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    CHECK(std::bit_cast<std::uint32_t>(back.values[i]) == std::bit_cast<std::uint32_t>(m.values[i]));
  }
  CHECK(data::encode_features(back) == bytes);

  TempDir dir;
  data::write_features(dir.path / "f.gpft", m);
  CHECK(binio::read_file(dir.path / "f.gpft") == bytes);
}

TEST_CASE("feature header against body length") {
  std::vector<float> twelve(12, 0.5f), eleven(11, 0.5f);
  CHECK(data::decode_features(feature_bytes(4, 3, twelve), "mem").values.size() == 12);
  CHECK(decode_kind(feature_bytes(4, 3, eleven)) == IoError::Kind::kTruncated);
  std::vector<float> thirteen(13, 0.5f);
  CHECK(decode_kind(feature_bytes(4, 3, thirteen)) == IoError::Kind::kMalformedHeader);

  auto bytes = feature_bytes(4, 3, twelve);
  bytes.back() ^= 0x40;
  CHECK(decode_kind(bytes) == IoError::Kind::kChecksum);
  bytes[0] = 'Q';
  CHECK(decode_kind(bytes) == IoError::Kind::kMalformedHeader);
  CHECK(decode_kind(std::span<const std::uint8_t>(bytes.data(), 10)) != IoError::Kind::kChecksum);
  CHECK_THROWS_AS(data::read_features("/nonexistent/features.gpft"), IoError);
}

TEST_CASE("large synthetic table loads with matching shape") {
  TempDir dir;
  data::Matrix<float> m{15339, 4096, std::vector<float>(15339ull * 4096)};
  for (std::size_t i = 0; i < m.values.size(); i += 4093) m.values[i] = static_cast<float>(i % 1000);
  data::write_features(dir.path / "big.gpft", m);
  const auto back = data::read_features(dir.path / "big.gpft");
  CHECK(back.rows == 15339);
  CHECK(back.cols == 4096);
  CHECK(back.values == m.values);
}

TEST_CASE("labels, attributes and table assembly") {
  TempDir dir;
  const std::vector<int> labels{3, 3, 7, 9};
  data::write_labels_csv(dir.path / "labels.csv", labels);
  CHECK(data::read_labels_csv(dir.path / "labels.csv") == labels);

  data::Matrix<double> attrs{4, 2, {1, 0, 1, 1, 0, 0.25, 0.5, 1}};
  const std::vector<std::string> names{"furry", "striped"};
  data::write_attributes_csv(dir.path / "attrs.csv", attrs, names);
  std::vector<std::string> read_names;
  CHECK(data::read_attributes_csv(dir.path / "attrs.csv", &read_names) == attrs);
  CHECK(read_names == names);

  data::write_features(dir.path / "f.gpft", {4, 2, std::vector<float>(8, 1.0f)});
  const auto t = data::load_feature_table(dir.path / "f.gpft", dir.path / "labels.csv", dir.path / "attrs.csv");
  CHECK(t.size() == 4);
  CHECK(t.dim() == 2);
  const int three[] = {3};
  CHECK(t.rows_of(three) == std::vector<std::size_t>{0, 1});

  data::write_labels_csv(dir.path / "short.csv", std::vector<int>{1, 2});
  CHECK_THROWS_AS(data::load_feature_table(dir.path / "f.gpft", dir.path / "short.csv"), ConfigError);
  binio::write_text(dir.path / "bad.csv", "label\n1\nx\n");
  CHECK_THROWS_AS(data::read_labels_csv(dir.path / "bad.csv"), IoError);
  binio::write_text(dir.path / "ragged.csv", "a,b\n1,0\n1\n");
  CHECK_THROWS_AS(data::read_attributes_csv(dir.path / "ragged.csv"), IoError);
  data::write_attributes_csv(dir.path / "range.csv", {4, 1, {0, 1, 2, 0}}, std::vector<std::string>{"x"});
  CHECK_THROWS_AS(data::load_feature_table(dir.path / "f.gpft", dir.path / "labels.csv", dir.path / "range.csv"),
                  ConfigError);
}

TEST_CASE("split CSV and overlap detection") {
  data::SplitSpec s{{1, 2, 3, 4}, {10, 11}, {2, 4}};
  const auto text = data::split_csv(s);
  CHECK(text == "class,role\n1,seen\n2,validation\n3,seen\n4,validation\n10,unseen\n11,unseen\n");
  CHECK(data::parse_split_csv(text, "mem") == s);
  CHECK_THROWS_AS(data::parse_split_csv("class,role\n1,seen\n1,unseen\n", "mem"), ConfigError);
  CHECK_THROWS_AS(data::parse_split_csv("class,role\n1,seen\n1,seen\n", "mem"), ConfigError);
  CHECK_THROWS_AS(data::parse_split_csv("class,role\n1,other\n", "mem"), IoError);
  CHECK_THROWS_AS(data::parse_split_csv("klass,role\n", "mem"), IoError);
  CHECK_THROWS_AS((data::SplitSpec{{1}, {2}, {2}}.validate()), ConfigError);
  CHECK_THROWS_AS((data::SplitSpec{{1, 2}, {2}, {}}.validate()), ConfigError);
}

TEST_CASE("class-level descriptions") {
  data::Matrix<double> rows{2, 2, {1, 0, 1, 1}};
  const std::size_t both[] = {0, 1};
  CHECK(data::class_level_description(rows, both) == std::vector<double>{1.0, 0.5});
  const std::size_t one[] = {1};
  CHECK(data::class_level_description(rows, one) == std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(data::class_level_description(rows, {}), UsageError);

  data::Matrix<double> noisy{2, 1, {1.3, 1.1}};
  CHECK(data::class_level_description(noisy, both) == std::vector<double>{1.0});

  // Broadcasting a class-level row to every image and averaging recovers it.
  data::FeatureTable t;
  const std::vector<std::vector<double>> classes{{0.1, 0.9, 0.3}, {0.7, 0.0, 1.0}};
  for (int c = 0; c < 2; ++c) {
    for (int k = 0; k < 7; ++k) {
      t.labels.push_back(c);
      t.attributes.values.insert(t.attributes.values.end(), classes[c].begin(), classes[c].end());
      ++t.attributes.rows;
    }
  }
  t.attributes.cols = 3;
  t.features = {14, 1, std::vector<float>(14)};
  const int ids[] = {0, 1};
  const auto z = data::class_level_descriptions(t, ids);
  CHECK(z.at(0) == classes[0]);
  CHECK(z.at(1) == classes[1]);
  const int missing[] = {5};
  CHECK_THROWS_AS(data::class_level_descriptions(t, missing), UsageError);
}

TEST_CASE("binarization threshold is inclusive") {
  data::Matrix<double> m{3, 3, {0.5, 0.4999, 0.9, 0, 0, 0, 1, 0.5, 0.2}};
  const auto b = data::binarize_attributes(m);
  CHECK(b.values == std::vector<double>{1, 0, 1, 0, 0, 0, 1, 1, 0});
  CHECK(data::binarize_attributes(b) == b);
  CHECK(data::binarize_attributes(m, 0.95).values == std::vector<double>{0, 0, 0, 0, 0, 0, 1, 0, 0});
}

TEST_CASE("planted tables are deterministic with distinct class signatures") {
  data::PlantedSpec spec;
  spec.classes = 12;
  spec.per_class = 10;
  spec.dim = 32;
  spec.attributes = 6;
  spec.flip = 0.0;
  const auto a = data::make_planted_table(spec);
  const auto b = data::make_planted_table(spec);
  CHECK(a.features == b.features);
  CHECK(a.attributes == b.attributes);
  a.validate();
  CHECK(a.size() == 120);
  std::set<std::vector<double>> signatures;
  for (int c = 0; c < 12; ++c) {
    const int id[] = {c};
    signatures.insert(data::class_level_description(a.attributes, a.rows_of(id)));
  }
  CHECK(signatures.size() == 12);
  spec.seed = 2;
  CHECK_FALSE(data::make_planted_table(spec).features == a.features);
  spec.classes = 100;
  CHECK_THROWS_AS(data::make_planted_table(spec), ConfigError);
}
