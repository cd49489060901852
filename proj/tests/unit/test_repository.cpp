#include <set>

#include "doctest.h"
#include "gpfr/repository.hpp"
#include "repo_oracle.hpp"

using namespace gpfr;
using namespace gpfr::repo;
using gpfr::testing::random_outputs;

namespace {

// One binary attribute of width 2; sample s has vector (s, -s).
testing::RandomOutputs binary_fixture(const std::vector<float>& p_positive, const std::vector<std::uint16_t>& labels) {
  testing::RandomOutputs r;
  const std::size_t n = p_positive.size();
  r.scheme = {{2}, {1.0}, {2}};
  r.outputs.combined = nn::Tensor<float>({n, 2});
  nn::Tensor<float> probs({n, 2});
  for (std::size_t s = 0; s < n; ++s) {
    r.outputs.combined.row(s)[0] = static_cast<float>(s);
    r.outputs.combined.row(s)[1] = -static_cast<float>(s);
    probs.row(s)[0] = 1.0f - p_positive[s];
    probs.row(s)[1] = p_positive[s];
  }
  r.outputs.probs.push_back(std::move(probs));
  r.annotations = {1, labels};
  return r;
}

std::set<std::uint32_t> members(const Bucket& b) {
  std::set<std::uint32_t> out;
  for (const auto& p : b.provenance) out.insert(p.sample);
  return out;
}

}  // namespace

TEST_CASE("margins 0.7 / 0.2 keep confident label-consistent vectors") {
  const auto r = binary_fixture({0.95f, 0.7f, 0.69f, 0.2f, 0.21f, 0.05f, 0.9f}, {1, 1, 1, 0, 0, 0, 0});
  const auto repo = build_repository(r.outputs, r.annotations, r.scheme, {0.7, 0.2});
  CHECK(members(repo.bucket(0, 1)) == std::set<std::uint32_t>{0, 1});
  CHECK(members(repo.bucket(0, 0)) == std::set<std::uint32_t>{3, 5});
  // Sample 6 has p = 0.9 but a = 0: in neither bucket.
  CHECK(repo.bucket(0, 1).vector(1)[0] == 1.0f);
  CHECK(repo.bucket(0, 0).provenance[1].score == doctest::Approx(0.05f));
}

TEST_CASE("margins at one half admit every vector on its correct side") {
  Rng rng(1);
  const auto r = random_outputs(rng, 500, {2, 2, 2}, 3);
  const auto repo = build_repository(r.outputs, r.annotations, r.scheme, {0.5, 0.5});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(repo.bucket(i, 0).size() + repo.bucket(i, 1).size() <= 500);
    CHECK(testing::audit_entries(repo, r, false, {0.5, 0.5}, 0).empty());
  }
}

TEST_CASE("margin validation") {
  CHECK_NOTHROW(Margins{0.5, 0.5}.validate());
  CHECK_THROWS_AS((Margins{1.0, 0.2}.validate()), ConfigError);
  CHECK_THROWS_AS((Margins{0.49, 0.2}.validate()), ConfigError);
  CHECK_THROWS_AS((Margins{0.7, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((Margins{0.7, 0.51}.validate()), ConfigError);
}

TEST_CASE("margin mode rejects k-way attributes") {
  Rng rng(2);
  const auto r = random_outputs(rng, 10, {2, 3}, 2);
  CHECK_THROWS_AS(build_repository(r.outputs, r.annotations, r.scheme, {}), ConfigError);
}

TEST_CASE("top-score buckets hold exactly the correctly predicted samples") {
  testing::RandomOutputs r;
  r.scheme = {{3}, {1.0}, {1}};
  r.outputs.combined = nn::Tensor<float>({4, 1}, {10, 11, 12, 13});
  r.outputs.probs.push_back(nn::Tensor<float>({4, 3}, {0.8f, 0.1f, 0.1f,     // true 0, predicted 0
                                                       0.1f, 0.2f, 0.7f,     // true 1, predicted 2
                                                       0.2f, 0.3f, 0.5f,     // true 2, predicted 2
                                                       0.4f, 0.4f, 0.2f}));  // true 1, tie -> 0
  r.annotations = {1, {0, 1, 2, 1}};
  const auto repo = build_topscore_repository(r.outputs, r.annotations, r.scheme);
  CHECK(members(repo.bucket(0, 0)) == std::set<std::uint32_t>{0});
  CHECK(repo.bucket(0, 1).empty());
  CHECK(members(repo.bucket(0, 2)) == std::set<std::uint32_t>{2});
  // Empty bucket falls back to its label-consistent samples by score.
  REQUIRE(repo.fallback(0, 1).size() == 2);
  CHECK(repo.fallback(0, 1).provenance[0].sample == 3);
  CHECK(repo.fallback(0, 1).provenance[1].sample == 1);
  CHECK(repo.fallback(0, 0).empty());

  const auto floored = build_topscore_repository(r.outputs, r.annotations, r.scheme, 0.6);
  CHECK(floored.bucket(0, 2).empty());
  CHECK(members(floored.bucket(0, 0)) == std::set<std::uint32_t>{0});
}

TEST_CASE("a perfectly confident model fills exactly one bucket per attribute") {
  Rng rng(3);
  auto r = random_outputs(rng, 300, {10, 10, 10}, 4);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t s = 0; s < 300; ++s) {
      auto row = r.outputs.probs[i].row(s);
      std::fill(row.begin(), row.end(), 0.0f);
      row[r.annotations.at(s, i)] = 1.0f;
    }
  }
  const auto repo = build_topscore_repository(r.outputs, r.annotations, r.scheme);
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t total = 0;
    for (std::size_t v = 0; v < 10; ++v) total += repo.bucket(i, v).size();
    CHECK(total == 300);
  }
}

TEST_CASE("randomized membership, monotone shrinkage and label consistency") {
  Rng rng(4);
  const auto r = random_outputs(rng, 2000, {2, 2, 2, 2}, 3);
  Margins loose{0.6, 0.4};
  const auto base = build_repository(r.outputs, r.annotations, r.scheme, loose);
  CHECK(testing::audit_entries(base, r, false, loose, 0).empty());
  CHECK(testing::audit_label_consistency(base, r).empty());
  for (Margins tight : {Margins{0.8, 0.4}, Margins{0.6, 0.1}, Margins{0.95, 0.05}}) {
    const auto shrunk = build_repository(r.outputs, r.annotations, r.scheme, tight);
    CHECK(testing::audit_entries(shrunk, r, false, tight, 0).empty());
    CHECK(testing::audit_subset(shrunk, base).empty());
  }
  const auto k = random_outputs(rng, 2000, {10, 4}, 2);
  const auto ts = build_topscore_repository(k.outputs, k.annotations, k.scheme, 0.2);
  CHECK(testing::audit_entries(ts, k, true, {}, 0.2).empty());
  CHECK(testing::audit_subset(build_topscore_repository(k.outputs, k.annotations, k.scheme, 0.4), ts).empty());
}

TEST_CASE("fallback holds the top-q label-consistent vectors when a bucket is empty") {
  std::vector<float> p;
  std::vector<std::uint16_t> a;
  for (int s = 0; s < 30; ++s) {
    p.push_back(0.3f + 0.01f * static_cast<float>(s));  // all below 0.7
    a.push_back(s % 2 ? 1 : 0);
  }
  const auto r = binary_fixture(p, a);
  const auto repo = build_repository(r.outputs, r.annotations, r.scheme, {0.7, 0.2}, 4);
  CHECK(repo.bucket(0, 1).empty());
  CHECK(repo.bucket(0, 0).empty());
  // Positive side: highest p among odd samples; negative side: lowest p among even samples.
  CHECK(members(repo.fallback(0, 1)) == std::set<std::uint32_t>{29, 27, 25, 23});
  CHECK(members(repo.fallback(0, 0)) == std::set<std::uint32_t>{0, 2, 4, 6});
  CHECK(repo.fallback(0, 1).provenance[0].sample == 29);
}

TEST_CASE("builds are pure and persist byte-identically") {
  Rng rng(5);
  const auto r = random_outputs(rng, 400, {2, 2, 2}, 5);
  const auto a = build_repository(r.outputs, r.annotations, r.scheme, {});
  const auto b = build_repository(r.outputs, r.annotations, r.scheme, {});
  CHECK(a == b);
  const auto bytes = encode(a, 42);
  CHECK(bytes == encode(b, 42));
  std::uint64_t hash = 0;
  const auto back = decode(bytes, "mem", &hash);
  CHECK(hash == 42);
  CHECK(encode(back, 42) == bytes);
  CHECK(back.bucket(1, 1) == a.bucket(1, 1));

  auto corrupt = bytes;
  corrupt[corrupt.size() / 2] ^= 1;
  CHECK_THROWS_AS(decode(corrupt, "mem"), IoError);
  auto cut = bytes;
  cut.resize(cut.size() - 9);
  try {
    decode(cut, "mem");
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::kTruncated);
  }
}

TEST_CASE("size histogram lists every bucket") {
  Rng rng(6);
  const auto r = random_outputs(rng, 50, {2, 3}, 1);
  const auto repo = build_topscore_repository(r.outputs, r.annotations, r.scheme);
  const auto csv = size_histogram_csv(repo);
  CHECK(csv.rfind("attribute,value,size,fallback_size\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 + 3);
}
