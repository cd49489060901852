#include "gpfr/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "gpfr/log.hpp"
#include "gpfr/nn/loss.hpp"
#include "gpfr/parallel.hpp"
#include "gpfr/text.hpp"

namespace gpfr::pred {

PredictorModel::PredictorModel(std::size_t input_dim, std::vector<int> classes)
    : input_dim_(input_dim), classes_(std::move(classes)), net_(nn::Shape{input_dim}) {
  if (classes_.empty()) throw ConfigError("predictor: no classes");
  std::vector<int> sorted = classes_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("predictor: duplicate class label");
  }
  net_.add(std::make_unique<nn::Dense<float>>(input_dim, classes_.size()));
}

void PredictorModel::init_params(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {kInitStream}));
  net_.init_params(rng);
}

std::size_t PredictorModel::index_of(int label) const {
  const auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) throw UsageError("predictor has no class " + std::to_string(label));
  return static_cast<std::size_t>(it - classes_.begin());
}

nn::Tensor<float> PredictorModel::logits(const nn::Tensor<float>& features) const {
  if (features.rank() != 2 || features.dim(1) != input_dim_) {
    throw ConfigError("predictor expects [N, " + std::to_string(input_dim_) + "] features, got " +
                      nn::shape_string(features.shape()));
  }
  return net_.infer(features);
}

nn::Tensor<float> PredictorModel::predict_proba(const nn::Tensor<float>& features) const {
  nn::Tensor<float> z = logits(features);
  nn::Tensor<float> p(z.shape());
  nn::softmax_rows(z.data(), p.data(), z.dim(0), z.dim(1));
  return p;
}

std::vector<int> PredictorModel::predict(const nn::Tensor<float>& features) const {
  const nn::Tensor<float> z = logits(features);
  std::vector<int> out(z.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = classes_[jafe::argmax(z.row(r))];
  return out;
}

nn::Dense<float>& PredictorModel::dense() { return dynamic_cast<nn::Dense<float>&>(net_.layer(0)); }

const nn::Dense<float>& PredictorModel::dense() const {
  return dynamic_cast<const nn::Dense<float>&>(net_.layer(0));
}

nn::Checkpoint PredictorModel::to_checkpoint(std::uint64_t config_hash) const {
  nn::Checkpoint ckpt;
  ckpt.kind = "predictor";
  ckpt.config_hash = config_hash;
  ckpt.meta = {"input " + std::to_string(input_dim_), "classes " + text::join(classes_)};
  ckpt.networks.push_back({"net", net_});
  return ckpt;
}

PredictorModel PredictorModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "predictor") {
    throw IoError(IoError::Kind::kMismatch, "expected a predictor checkpoint, found '" + ckpt.kind + "'");
  }
  const auto input = ckpt.meta_tokens("input");
  if (input.size() != 1) throw IoError(IoError::Kind::kMalformedHeader, "bad input line in predictor manifest");
  std::vector<int> classes;
  try {
    for (const auto& t : ckpt.meta_tokens("classes")) classes.push_back(text::parse_or_throw<int>(t, "class label"));
    PredictorModel model(text::parse_or_throw<std::size_t>(input[0], "input width"), std::move(classes));
    const auto& net = ckpt.network("net");
    if (net.layer_count() != 1 || net.output_size() != model.class_count() ||
        net.input_shape() != model.net_.input_shape()) {
      throw ConfigError("network does not match the class list");
    }
    model.net_ = net;
    return model;
  } catch (const ConfigError& e) {
    throw IoError(IoError::Kind::kMalformedHeader, std::string("inconsistent predictor checkpoint: ") + e.what());
  }
}

void TrainingPlan::validate() const {
  if (iterations == 0 || epochs == 0 || pseudo_size == 0 || batch_size == 0) {
    throw ConfigError("predictor plan: iterations, epochs, pseudo size and batch size must be at least 1");
  }
}

std::vector<int> choose_validation_classes(std::span<const int> seen, std::size_t v, std::uint64_t seed) {
  if (v > seen.size()) {
    throw UsageError("cannot hold out " + std::to_string(v) + " validation classes from " +
                     std::to_string(seen.size()) + " seen classes");
  }
  std::vector<int> pool(seen.begin(), seen.end());
  Rng rng(derive_seed(seed, {kValidationStream}));
  rng.shuffle(std::span<int>(pool));
  pool.resize(v);
  return pool;
}

double train_epoch(PredictorModel& model, nn::Optimizer<float>& optimizer, const synth::PseudoSet& data,
                   std::size_t batch_size, std::uint64_t shuffle_seed) {
  const std::size_t n = data.size();
  if (n == 0) throw UsageError("predictor: empty pseudo set");
  if (data.dim != model.input_dim()) throw ConfigError("predictor: pseudo vectors do not match the input width");
  std::unordered_map<int, int> index;
  for (std::size_t j = 0; j < model.class_count(); ++j) index[model.classes()[j]] = static_cast<int>(j);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(shuffle_seed);
  rng.shuffle(std::span<std::size_t>(order));

  auto& net = model.net();
  auto params = net.params();
  nn::Tensor<float> x, grad;
  std::vector<int> targets;
  double sum = 0.0;
  for (std::size_t b = 0; b < n; b += batch_size) {
    const std::size_t e = std::min(n, b + batch_size);
    x.resize({e - b, data.dim});
    targets.resize(e - b);
    for (std::size_t r = b; r < e; ++r) {
      const auto src = data.vector(order[r]);
      std::copy(src.begin(), src.end(), x.row(r - b).begin());
      const auto it = index.find(data.labels[order[r]]);
      if (it == index.end()) throw UsageError("pseudo label " + std::to_string(data.labels[order[r]]) + " is not a predictor class");
      targets[r - b] = it->second;
    }
    net.zero_grad();
    const auto& logits = net.train_forward(x, nullptr);
    const double loss = nn::softmax_cross_entropy(logits, targets, 1.0, &grad);
    if (!std::isfinite(loss)) throw NumericError("predictor loss became non-finite");
    net.backward(grad, nullptr);
    optimizer.step(params);
    sum += loss * static_cast<double>(e - b);
  }
  net.clear_cache();
  return sum / static_cast<double>(n);
}

double accuracy(const PredictorModel& model, const nn::Tensor<float>& features, std::span<const int> labels) {
  if (labels.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto pred = model.predict(features);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

TrainResult train_predictor(const repo::CognitiveRepository& repo, std::span<const synth::ClassDescription> unseen,
                            std::span<const synth::ClassDescription> validation, const TrainingPlan& plan,
                            const ValidationData& validation_data, std::size_t threads,
                            const std::function<void(const IterationRecord&)>& on_iteration) {
  plan.validate();
  if (unseen.empty()) throw UsageError("predictor: no unseen classes");
  if (validation.size() != plan.validation) {
    throw UsageError("predictor plan expects " + std::to_string(plan.validation) + " validation classes, got " +
                     std::to_string(validation.size()));
  }
  if (plan.validation > 0 && validation_data.labels.empty()) {
    throw UsageError("predictor: validation classes given without validation data");
  }
  if (validation_data.features.size() && validation_data.features.dim(0) != validation_data.labels.size()) {
    throw UsageError("predictor: validation features and labels differ in length");
  }

  std::vector<synth::ClassDescription> all(unseen.begin(), unseen.end());
  all.insert(all.end(), validation.begin(), validation.end());
  std::vector<int> classes;
  for (const auto& d : all) classes.push_back(d.label);
  for (int l : validation_data.labels) {
    if (std::ranges::find(validation, l, &synth::ClassDescription::label) == validation.end()) {
      throw UsageError("validation data holds class " + std::to_string(l) + " outside the validation set");
    }
  }

  TrainResult result;
  PredictorModel model(repo.scheme().combined_dim(), classes);
  model.init_params(plan.seed);
  nn::Optimizer<float> optimizer(plan.optimizer);
  double best = -1.0;
  for (std::size_t t = 0; t < plan.iterations; ++t) {
    const auto pseudo = synth::synthesize_all(repo, all, plan.pseudo_size, derive_seed(plan.seed, {t}), threads);
    IterationRecord rec;
    rec.iteration = t;
    for (std::size_t e = 0; e < plan.epochs; ++e) {
      rec.train_loss = train_epoch(model, optimizer, pseudo, plan.batch_size, derive_seed(plan.seed, {kShuffleStream, t, e}));
    }
    rec.val_accuracy = plan.validation ? accuracy(model, validation_data.features, validation_data.labels)
                                       : std::numeric_limits<double>::quiet_NaN();
    log::info("predictor iteration ", t + 1, "/", plan.iterations, ": loss ", rec.train_loss, ", validation accuracy ",
              rec.val_accuracy);
    result.log.push_back(rec);
    if (on_iteration) on_iteration(rec);
    const bool take = plan.validation ? rec.val_accuracy > best : true;
    if (take) {
      best = plan.validation ? rec.val_accuracy : best;
      result.model = model;
      result.best_iteration = t;
    }
  }
  return result;
}

PredictorModel cutdown(const PredictorModel& model, std::size_t keep) {
  if (keep == 0 || keep > model.class_count()) throw UsageError("cutdown: keep count out of range");
  std::vector<int> classes(model.classes().begin(), model.classes().begin() + static_cast<std::ptrdiff_t>(keep));
  PredictorModel out(model.input_dim(), std::move(classes));
  const auto& src = model.dense();
  auto& dst = out.dense();
  const std::size_t d = model.input_dim();
  std::copy_n(src.weight().data(), keep * d, dst.weight().data());
  std::copy_n(src.bias().data(), keep, dst.bias().data());
  return out;
}

Prediction infer(const jafe::JafeModel& jafe, const PredictorModel& predictor, const nn::Tensor<float>& x) {
  if (jafe.scheme().combined_dim() != predictor.input_dim()) {
    throw ConfigError("predictor input width does not match the JAFE representation");
  }
  Prediction p;
  p.scores = predictor.predict_proba(jafe.extract(x));
  p.labels.resize(p.scores.dim(0));
  for (std::size_t r = 0; r < p.labels.size(); ++r) p.labels[r] = predictor.classes()[jafe::argmax(p.scores.row(r))];
  return p;
}

nn::Tensor<float> score_matrix(const jafe::JafeModel& jafe, const PredictorModel& predictor, const InputSet& inputs,
                               std::size_t batch_size, std::size_t threads) {
  if (jafe.scheme().combined_dim() != predictor.input_dim()) {
    throw ConfigError("predictor input width does not match the JAFE representation");
  }
  if (batch_size == 0) throw ConfigError("score_matrix: batch size must be positive");
  const std::size_t n = inputs.size();
  const std::size_t c = predictor.class_count();
  nn::Tensor<float> out({n, c});
  const std::size_t batches = (n + batch_size - 1) / batch_size;
  parallel_for(batches, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const std::size_t lo = b * batch_size, hi = std::min(n, lo + batch_size);
      const auto p = predictor.predict_proba(jafe.extract(inputs.range(lo, hi)));
      std::copy(p.values().begin(), p.values().end(), out.data() + lo * c);
    }
  });
  return out;
}

nn::Tensor<float> score_features(const PredictorModel& predictor, const nn::Tensor<float>& features,
                                 std::size_t batch_size, std::size_t threads) {
  if (features.rank() != 2 || features.dim(1) != predictor.input_dim()) {
    throw ConfigError("predictor expects [N, " + std::to_string(predictor.input_dim()) + "] features");
  }
  const DenseView view(features.values(), {predictor.input_dim()});
  const std::size_t n = features.dim(0);
  const std::size_t c = predictor.class_count();
  nn::Tensor<float> out({n, c});
  const std::size_t batches = (n + batch_size - 1) / batch_size;
  parallel_for(batches, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) {
      const std::size_t lo = b * batch_size, hi = std::min(n, lo + batch_size);
      const auto p = predictor.predict_proba(view.range(lo, hi));
      std::copy(p.values().begin(), p.values().end(), out.data() + lo * c);
    }
  });
  return out;
}

std::string validation_log_csv(std::span<const IterationRecord> log) {
  std::string out = "iteration,val_accuracy,train_loss\n";
  for (const auto& r : log) {
    out += std::to_string(r.iteration) + "," +
           (std::isnan(r.val_accuracy) ? std::string("nan") : text::format_double(r.val_accuracy)) + "," +
           text::format_double(r.train_loss) + "\n";
  }
  return out;
}

}  // namespace gpfr::pred
