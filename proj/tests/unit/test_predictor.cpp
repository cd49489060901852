#include <doctest.h>

#include <cmath>
#include <set>

#include "gpfr/error.hpp"
#include "gpfr/log.hpp"
#include "gpfr/predictor.hpp"

using namespace gpfr;

namespace {

constexpr std::size_t kM = 4;
constexpr std::size_t kDim = 3;

// Binary attribute buckets whose positive vectors sit near +1 and negative
// vectors near -1 in every coordinate of the slice.
repo::CognitiveRepository planted_repository(Rng& rng) {
  repo::CognitiveRepository r(jafe::AttributeScheme::uniform(kM, 2, 1.0, kDim), {});
  for (std::size_t i = 0; i < kM; ++i) {
    for (std::size_t v = 0; v < 2; ++v) {
      for (std::uint32_t j = 0; j < 12; ++j) {
        std::vector<float> vec(kDim);
        for (auto& x : vec) x = static_cast<float>((v ? 1.0 : -1.0) + rng.normal() * 0.3);
        r.bucket(i, v).push(vec, {j, 0.9f});
      }
    }
  }
  return r;
}

synth::ClassDescription code_class(int label) {
  std::vector<double> z(kM);
  for (std::size_t i = 0; i < kM; ++i) z[i] = (label >> i) & 1;
  return synth::ClassDescription::binary(label, z);
}

pred::ValidationData real_samples(Rng& rng, const std::vector<int>& labels, std::size_t per_class, double noise) {
  pred::ValidationData d;
  d.features = nn::Tensor<float>({labels.size() * per_class, kM * kDim});
  std::size_t r = 0;
  for (int l : labels) {
    for (std::size_t k = 0; k < per_class; ++k, ++r) {
      auto row = d.features.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] = static_cast<float>((((l >> (c / kDim)) & 1) ? 1.0 : -1.0) + rng.normal() * noise);
      }
      d.labels.push_back(l);
    }
  }
  return d;
}

pred::PredictorModel random_model(Rng& rng, std::size_t d, std::size_t c) {
  std::vector<int> classes(c);
  for (std::size_t j = 0; j < c; ++j) classes[j] = static_cast<int>(100 + j);
  pred::PredictorModel m(d, classes);
  for (auto& w : m.dense().weight().values()) w = static_cast<float>(rng.normal());
  for (auto& b : m.dense().bias().values()) b = static_cast<float>(rng.normal());
  return m;
}

}  // namespace

TEST_CASE("cutdown drops a dominant validation class") {
  pred::PredictorModel full(2, {7, 8, 9});
  full.dense().bias()[0] = 2.0f;
  full.dense().bias()[1] = 1.0f;
  full.dense().bias()[2] = 5.0f;
  const nn::Tensor<float> x({1, 2}, {0.3f, -0.4f});
  CHECK(full.predict(x)[0] == 9);
  const auto cut = pred::cutdown(full, 2);
  CHECK(cut.classes() == std::vector<int>{7, 8});
  CHECK(cut.predict(x)[0] == 7);
}

TEST_CASE("cutdown keeps rows verbatim and agrees with restricted argmax") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng.below(8), c = 2 + rng.below(10), keep = 1 + rng.below(c);
    const auto full = random_model(rng, d, c);
    const auto cut = pred::cutdown(full, keep);
    REQUIRE(cut.class_count() == keep);
    for (std::size_t j = 0; j < keep * d; ++j) CHECK(cut.dense().weight()[j] == full.dense().weight()[j]);
    for (std::size_t j = 0; j < keep; ++j) CHECK(cut.dense().bias()[j] == full.dense().bias()[j]);

    nn::Tensor<float> x({20, d});
    for (auto& v : x.values()) v = static_cast<float>(rng.normal());
    const auto zf = full.logits(x);
    const auto pc = cut.predict_proba(x);
    const auto labels = cut.predict(x);
    for (std::size_t r = 0; r < 20; ++r) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < keep; ++j) {
        if (zf.row(r)[j] > zf.row(r)[best]) best = j;
      }
      CHECK(labels[r] == full.classes()[best]);
      // Softmax over the kept classes keeps ratios exp(z_a - z_b).
      for (std::size_t a = 0; a + 1 < keep; ++a) {
        const double ratio = static_cast<double>(pc.row(r)[a]) / pc.row(r)[a + 1];
        const double expect = std::exp(static_cast<double>(zf.row(r)[a]) - zf.row(r)[a + 1]);
        CHECK(ratio == doctest::Approx(expect).epsilon(1e-4));
      }
    }
  }
}

TEST_CASE("cutdown with no validation classes is the identity") {
  Rng rng(4);
  const auto full = random_model(rng, 5, 6);
  const auto cut = pred::cutdown(full, 6);
  CHECK(cut.classes() == full.classes());
  CHECK(std::equal(cut.dense().weight().values().begin(), cut.dense().weight().values().end(),
                   full.dense().weight().values().begin()));
  CHECK_THROWS_AS(pred::cutdown(full, 7), UsageError);
}

TEST_CASE("validation class choice") {
  const std::vector<int> seen{1, 2, 3, 4, 5, 6, 7, 8};
  const auto a = pred::choose_validation_classes(seen, 3, 11);
  CHECK(a.size() == 3);
  CHECK(a == pred::choose_validation_classes(seen, 3, 11));
  CHECK(std::set<int>(a.begin(), a.end()).size() == 3);
  for (int c : a) CHECK(std::find(seen.begin(), seen.end(), c) != seen.end());
  CHECK(pred::choose_validation_classes(seen, 0, 11).empty());
  CHECK_THROWS_AS(pred::choose_validation_classes(seen, 9, 11), UsageError);
}

TEST_CASE("iterative training learns planted classes and keeps the best iteration") {
  log::ScopedLevel quiet(log::Level::kWarn);
  Rng rng(5);
  const auto repo = planted_repository(rng);
  std::vector<synth::ClassDescription> unseen, validation;
  for (int l = 0; l < 10; ++l) unseen.push_back(code_class(l));
  for (int l = 10; l < 13; ++l) validation.push_back(code_class(l));

  pred::TrainingPlan plan;
  plan.iterations = 4;
  plan.pseudo_size = 60;
  plan.batch_size = 32;
  plan.validation = 3;
  plan.optimizer.learning_rate = 0.01;
  plan.seed = 21;
  const auto val = real_samples(rng, {10, 11, 12}, 40, 0.3);
  const auto result = pred::train_predictor(repo, unseen, validation, plan, val);

  REQUIRE(result.log.size() == 4);
  double best = -1;
  for (const auto& r : result.log) best = std::max(best, r.val_accuracy);
  CHECK(result.log[result.best_iteration].val_accuracy == best);
  CHECK(pred::accuracy(result.model, val.features, val.labels) == best);
  for (std::size_t t = 0; t < result.best_iteration; ++t) CHECK(result.log[t].val_accuracy < best);
  CHECK(result.log.back().train_loss < result.log.front().train_loss);
  CHECK(result.model.classes().size() == 13);

  const auto cut = pred::cutdown(result.model, 10);
  std::vector<int> ids(10);
  std::iota(ids.begin(), ids.end(), 0);
  const auto test = real_samples(rng, ids, 30, 0.3);
  CHECK(pred::accuracy(cut, test.features, test.labels) > 0.9);

  // Same plan and seed reproduce the same weights.
  const auto again = pred::train_predictor(repo, unseen, validation, plan, val);
  CHECK(nn::encode_checkpoint(again.model.to_checkpoint(0)) == nn::encode_checkpoint(result.model.to_checkpoint(0)));
}

TEST_CASE("degenerate plan trains once without validation") {
  log::ScopedLevel quiet(log::Level::kWarn);
  Rng rng(6);
  const auto repo = planted_repository(rng);
  std::vector<synth::ClassDescription> unseen{code_class(1), code_class(2)};
  pred::TrainingPlan plan;
  plan.iterations = 1;
  plan.pseudo_size = 20;
  const auto result = pred::train_predictor(repo, unseen, {}, plan, {});
  REQUIRE(result.log.size() == 1);
  CHECK(std::isnan(result.log[0].val_accuracy));
  CHECK(result.best_iteration == 0);
  CHECK(pred::validation_log_csv(result.log).starts_with("iteration,val_accuracy,train_loss\n0,nan,"));
}

TEST_CASE("training argument errors") {
  log::ScopedLevel quiet(log::Level::kError);
  Rng rng(7);
  const auto repo = planted_repository(rng);
  std::vector<synth::ClassDescription> unseen{code_class(1)};
  std::vector<synth::ClassDescription> validation{code_class(2)};
  pred::TrainingPlan plan;
  plan.iterations = 1;
  plan.pseudo_size = 5;
  plan.validation = 2;
  CHECK_THROWS_AS(pred::train_predictor(repo, unseen, validation, plan, {}), UsageError);
  plan.validation = 1;
  CHECK_THROWS_AS(pred::train_predictor(repo, unseen, validation, plan, {}), UsageError);
  plan.iterations = 0;
  CHECK_THROWS_AS(pred::train_predictor(repo, unseen, {}, plan, {}), ConfigError);

  // Synthesis failures propagate.
  repo::CognitiveRepository hollow(jafe::AttributeScheme::uniform(kM, 2, 1.0, kDim), {});
  plan.iterations = 1;
  plan.validation = 0;
  CHECK_THROWS_AS(pred::train_predictor(hollow, unseen, {}, plan, {}), SynthesisError);

  // Pseudo labels outside the class list are rejected.
  pred::PredictorModel m(kM * kDim, {1});
  nn::Optimizer<float> opt;
  const auto other = synth::synthesize_class(repo, code_class(3), 4, 1);
  CHECK_THROWS_AS(pred::train_epoch(m, opt, other, 2, 1), UsageError);
}

TEST_CASE("chained inference equals predictor over extracted features") {
  jafe::Architecture arch;
  arch.input_shape = {6};
  arch.unit_hidden = {5};
  jafe::JafeModel jafe(jafe::AttributeScheme::uniform(2, 2, 1.0, 3), arch);
  jafe.init_params(9);
  Rng rng(9);
  auto predictor = random_model(rng, 6, 4);
  nn::Tensor<float> x({37, 6});
  for (auto& v : x.values()) v = static_cast<float>(rng.normal());

  const auto p = pred::infer(jafe, predictor, x);
  const auto direct = predictor.predict_proba(jafe.extract(x));
  CHECK(p.scores.values().size() == direct.values().size());
  CHECK(std::equal(p.scores.values().begin(), p.scores.values().end(), direct.values().begin()));
  CHECK(p.labels == predictor.predict(jafe.extract(x)));
  CHECK(pred::infer(jafe, predictor, x).labels == p.labels);

  const DenseView view(x.values(), {6});
  const auto s1 = pred::score_matrix(jafe, predictor, view, 8, 1);
  const auto s4 = pred::score_matrix(jafe, predictor, view, 8, 4);
  CHECK(s1.values().size() == s4.values().size());
  CHECK(std::equal(s1.values().begin(), s1.values().end(), s4.values().begin()));
  for (std::size_t r = 0; r < 37; ++r) {
    double sum = 0;
    for (float v : s1.row(r)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(predictor.classes()[jafe::argmax(s1.row(r))] == p.labels[r]);
  }
  const auto f = pred::score_features(predictor, jafe.extract(x), 5, 2);
  for (std::size_t j = 0; j < f.size(); ++j) CHECK(f[j] == doctest::Approx(s1[j]).epsilon(1e-6));

  auto narrow = random_model(rng, 5, 4);
  CHECK_THROWS_AS(pred::infer(jafe, narrow, x), ConfigError);
}

TEST_CASE("predictor checkpoint round trip") {
  Rng rng(10);
  const auto m = random_model(rng, 7, 5);
  const auto bytes = nn::encode_checkpoint(m.to_checkpoint(42));
  const auto ckpt = nn::decode_checkpoint(bytes, "mem");
  CHECK(ckpt.config_hash == 42);
  const auto back = pred::PredictorModel::from_checkpoint(ckpt);
  CHECK(back.classes() == m.classes());
  CHECK(nn::encode_checkpoint(back.to_checkpoint(42)) == bytes);
  auto wrong = ckpt;
  wrong.kind = "jafe";
  CHECK_THROWS_AS(pred::PredictorModel::from_checkpoint(wrong), IoError);
}
