#include <doctest.h>

#include <map>
#include <set>

#include "gpfr/error.hpp"
#include "gpfr/log.hpp"
#include "gpfr/synthesis.hpp"

using namespace gpfr;

namespace {

// Each stored vector is filled with a code 1000*i + 100*v + j (fallback
// vectors add 50) so any slice of a pseudo vector names its source entry.
repo::CognitiveRepository tagged_repository(const std::vector<std::size_t>& arity, std::size_t dim,
                                            const std::vector<std::vector<std::size_t>>& sizes) {
  const std::size_t m = arity.size();
  repo::CognitiveRepository r({arity, std::vector<double>(m, 1.0), std::vector<std::size_t>(m, dim)}, {});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t v = 0; v < arity[i]; ++v) {
      for (std::size_t j = 0; j < sizes[i][v]; ++j) {
        std::vector<float> vec(dim, static_cast<float>(1000 * i + 100 * v + j));
        r.bucket(i, v).push(vec, {static_cast<std::uint32_t>(j), 0.9f});
      }
    }
  }
  return r;
}

float code_of(const synth::PseudoSet& s, std::size_t row, std::size_t attribute) {
  return s.vector(row)[attribute * s.dim / s.m];
}

// Upper 1% points of the chi-square distribution, from standard tables.
double chi2_critical_01(std::size_t df) {
  static const std::map<std::size_t, double> table{{1, 6.635}, {2, 9.210}, {3, 11.345}, {4, 13.277}, {9, 21.666}};
  return table.at(df);
}

double chi2(const std::vector<std::size_t>& observed, const std::vector<double>& p) {
  std::size_t n = 0;
  for (auto o : observed) n += o;
  double stat = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = p[k] * static_cast<double>(n);
    stat += (static_cast<double>(observed[k]) - e) * (static_cast<double>(observed[k]) - e) / e;
  }
  return stat;
}

}  // namespace

TEST_CASE("binary draw rule is eps <= z") {
  const std::vector<double> row{0.3, 0.7};
  CHECK(synth::draw_value(row, 0.7) == 1);
  CHECK(synth::draw_value(row, 0.69999) == 1);
  CHECK(synth::draw_value(row, 0.70001) == 0);
  const std::vector<double> one{0.0, 1.0}, zero{1.0, 0.0};
  CHECK(synth::draw_value(one, 0.9999999) == 1);
  CHECK(synth::draw_value(zero, 1e-12) == 0);
}

TEST_CASE("inverse CDF draw skips zero-probability values") {
  const std::vector<double> row{0.2, 0.0, 0.5, 0.3};
  CHECK(synth::draw_value(row, 0.1) == 0);
  CHECK(synth::draw_value(row, 0.2) == 0);
  CHECK(synth::draw_value(row, 0.2000001) == 2);
  CHECK(synth::draw_value(row, 0.7) == 2);
  CHECK(synth::draw_value(row, 0.95) == 3);
  const std::vector<double> tail{0.5, 0.5 - 1e-9, 0.0};
  CHECK(synth::draw_value(tail, 0.9999999999) == 1);
}

TEST_CASE("z of 1 draws only positive slices and z of 0 only negative") {
  auto r = tagged_repository({2, 2, 2}, 4, {{5, 6}, {3, 4}, {2, 7}});
  const std::vector<double> ones{1, 1, 1}, zeros{0, 0, 0};
  const auto pos = synth::synthesize_class(r, synth::ClassDescription::binary(4, ones), 500, 1);
  const auto neg = synth::synthesize_class(r, synth::ClassDescription::binary(5, zeros), 500, 1);
  REQUIRE(pos.size() == 500);
  for (std::size_t k = 0; k < 500; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(pos.choice(k)[i] == 1);
      CHECK(neg.choice(k)[i] == 0);
      const int pc = static_cast<int>(code_of(pos, k, i));
      const int nc = static_cast<int>(code_of(neg, k, i));
      CHECK(pc / 100 == static_cast<int>(10 * i + 1));
      CHECK(nc / 100 == static_cast<int>(10 * i));
    }
    CHECK(pos.labels[k] == 4);
    CHECK(neg.labels[k] == 5);
  }
}

TEST_CASE("every slice is a verbatim member of the chosen bucket") {
  auto r = tagged_repository({2, 3}, 3, {{4, 5}, {2, 3, 6}});
  synth::ClassDescription d{7, {{0.4, 0.6}, {0.2, 0.3, 0.5}}};
  const auto s = synth::synthesize_class(r, d, 2000, 11);
  for (std::size_t k = 0; k < s.size(); ++k) {
    for (std::size_t i = 0; i < 2; ++i) {
      const auto v = s.choice(k)[i];
      const auto slice = s.vector(k).subspan(i * 3, 3);
      const auto& b = r.bucket(i, v);
      bool found = false;
      for (std::size_t j = 0; j < b.size() && !found; ++j) {
        found = std::equal(slice.begin(), slice.end(), b.vector(j).begin());
      }
      CHECK(found);
    }
  }
}

TEST_CASE("positive frequency for z = 0.7 over 10000 draws") {
  auto r = tagged_repository({2}, 2, {{3, 3}});
  const std::vector<double> z{0.7};
  const auto s = synth::synthesize_class(r, synth::ClassDescription::binary(0, z), 10000, 2024);
  std::size_t positive = 0;
  for (std::size_t k = 0; k < s.size(); ++k) positive += s.choice(k)[0];
  const double freq = static_cast<double>(positive) / 10000.0;
  CHECK(freq >= 0.68);
  CHECK(freq <= 0.72);
}

TEST_CASE("value and entry frequencies pass chi-square at 1%") {
  auto r = tagged_repository({2, 10, 4}, 2, {{5, 5}, {3, 3, 3, 3, 3, 3, 3, 3, 3, 3}, {4, 4, 4, 4}});
  synth::ClassDescription d{3,
                            {{0.35, 0.65},
                             {0.05, 0.15, 0.1, 0.1, 0.2, 0.05, 0.05, 0.1, 0.1, 0.1},
                             {0.1, 0.2, 0.3, 0.4}}};
  const auto s = synth::synthesize_class(r, d, 20000, 5);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<std::size_t> counts(d.dist[i].size(), 0);
    for (std::size_t k = 0; k < s.size(); ++k) ++counts[s.choice(k)[i]];
    const double stat = chi2(counts, d.dist[i]);
    INFO("attribute " << i << " chi2 " << stat);
    CHECK(stat < chi2_critical_01(counts.size() - 1));
  }
  // Entries within the positive bucket of attribute 0 are drawn uniformly.
  std::vector<std::size_t> entries(5, 0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s.choice(k)[0] == 1) ++entries[static_cast<std::size_t>(code_of(s, k, 0)) - 100];
  }
  CHECK(chi2(entries, std::vector<double>(5, 0.2)) < chi2_critical_01(4));
}

TEST_CASE("synthesis is deterministic per seed and per class") {
  auto r = tagged_repository({2, 2}, 3, {{4, 4}, {4, 4}});
  const std::vector<double> za{0.5, 0.5}, zb{0.2, 0.9};
  const std::vector<synth::ClassDescription> both{synth::ClassDescription::binary(1, za),
                                                  synth::ClassDescription::binary(2, zb)};
  const auto a = synth::synthesize_all(r, both, 300, 9, 1);
  const auto b = synth::synthesize_all(r, both, 300, 9, 4);
  CHECK(a == b);
  const auto c = synth::synthesize_all(r, both, 300, 10, 1);
  CHECK_FALSE(a == c);

  // A class's draws do not depend on which other classes are synthesized.
  const auto alone = synth::synthesize_class(r, both[1], 300, 9);
  const std::vector<synth::ClassDescription> reordered{both[1]};
  const auto solo = synth::synthesize_all(r, reordered, 300, 9);
  CHECK(solo == alone);
  CHECK(std::equal(alone.vectors.begin(), alone.vectors.end(), a.vectors.begin() + 300 * 6));
  CHECK(a.labels.front() == 1);
  CHECK(a.labels.back() == 2);
}

TEST_CASE("empty bucket uses fallback and warns, else raises") {
  auto r = tagged_repository({2, 2}, 2, {{3, 0}, {2, 2}});
  const std::vector<double> z{0.8, 0.5};
  SUBCASE("no fallback") {
    try {
      synth::synthesize_class(r, synth::ClassDescription::binary(12, z), 10, 1);
      FAIL("expected SynthesisError");
    } catch (const SynthesisError& e) {
      CHECK(e.attribute() == 0);
      CHECK(e.class_label() == 12);
    }
  }
  SUBCASE("fallback") {
    std::vector<float> vec(2, 150.0f);
    r.fallback(0, 1).push(vec, {0, 0.6f});
    log::ScopedLevel quiet(log::Level::kError);
    const auto s = synth::synthesize_class(r, synth::ClassDescription::binary(12, z), 200, 1);
    std::size_t fell_back = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s.choice(k)[0] == 1) {
        CHECK(code_of(s, k, 0) == 150.0f);
        ++fell_back;
      }
    }
    CHECK(fell_back > 0);
  }
  SUBCASE("zero probability values never need a bucket") {
    const std::vector<double> neg{0.0, 0.5};
    CHECK_NOTHROW(synth::synthesize_class(r, synth::ClassDescription::binary(12, neg), 10, 1));
  }
}

TEST_CASE("description validation") {
  auto r = tagged_repository({2, 3}, 2, {{1, 1}, {1, 1, 1}});
  CHECK_THROWS_AS(synth::synthesize_class(r, {0, {{0.5, 0.5}}}, 1, 1), ConfigError);
  CHECK_THROWS_AS(synth::synthesize_class(r, {0, {{0.5, 0.5}, {0.5, 0.5}}}, 1, 1), ConfigError);
  CHECK_THROWS_AS(synth::synthesize_class(r, {0, {{1.2, -0.2}, {0.2, 0.3, 0.5}}}, 1, 1), ConfigError);
  CHECK_THROWS_AS(synth::synthesize_class(r, {0, {{0.5, 0.4}, {0.2, 0.3, 0.5}}}, 1, 1), ConfigError);
  const std::vector<std::size_t> values{1, 2}, arity{2, 3};
  const auto d = synth::ClassDescription::one_hot(4, values, arity);
  CHECK(d.dist[1] == std::vector<double>{0, 0, 1});
  const auto s = synth::synthesize_class(r, d, 20, 1);
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(s.choice(k)[1] == 2);
}

TEST_CASE("pseudo set file round trip and corruption") {
  auto r = tagged_repository({2, 2}, 3, {{2, 2}, {2, 2}});
  const std::vector<double> z{0.5, 0.5};
  const auto s = synth::synthesize_class(r, synth::ClassDescription::binary(3, z), 40, 1);
  auto bytes = synth::encode(s, 0xABCDu);
  std::uint64_t hash = 0;
  CHECK(synth::decode(bytes, "mem", &hash) == s);
  CHECK(hash == 0xABCDu);

  auto flipped = bytes;
  flipped[40] ^= 0x01;
  try {
    synth::decode(flipped, "mem");
    FAIL("expected checksum error");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::kChecksum);
  }
  const std::span<const std::uint8_t> cut(bytes.data(), bytes.size() - 20);
  try {
    synth::decode(cut, "mem");
    FAIL("expected truncation");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::kTruncated);
  }
  bytes[0] = 'X';
  CHECK_THROWS_AS(synth::decode(bytes, "mem"), IoError);
}
