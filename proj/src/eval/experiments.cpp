#include "gpfr/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "gpfr/error.hpp"
#include "gpfr/log.hpp"
#include "gpfr/nn/loss.hpp"
#include "gpfr/parallel.hpp"

namespace gpfr::eval {
namespace {

std::unique_ptr<nn::Layer<float>> activation_layer(jafe::Activation a) {
  if (a == jafe::Activation::kRelu) return std::make_unique<nn::Relu<float>>();
  return std::make_unique<nn::Tanh<float>>();
}

std::vector<int> labels_of(std::span<const synth::ClassDescription> descs) {
  std::vector<int> out;
  out.reserve(descs.size());
  for (const auto& d : descs) out.push_back(d.label);
  return out;
}

}  // namespace

std::vector<std::size_t> rows_in(std::span<const int> labels, std::span<const int> classes) {
  const std::set<int> wanted(classes.begin(), classes.end());
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (wanted.contains(labels[r])) rows.push_back(r);
  }
  return rows;
}

std::vector<std::size_t> per_class_budget(std::span<const int> labels, std::size_t per_class, std::uint64_t seed) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {kSubsetStream}));
  rng.shuffle(std::span<std::size_t>(order));
  std::map<int, std::size_t> taken;
  std::vector<std::size_t> out;
  for (std::size_t r : order) {
    if (taken[labels[r]]++ < per_class) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

pred::ValidationData validation_data(const jafe::JafeModel& model, const InputSet& train,
                                     std::span<const int> train_labels, std::span<const int> validation_classes,
                                     std::size_t threads) {
  pred::ValidationData out;
  if (validation_classes.empty()) return out;
  auto rows = rows_in(train_labels, validation_classes);
  if (rows.empty()) throw UsageError("no training rows belong to the validation classes");
  for (std::size_t r : rows) out.labels.push_back(train_labels[r]);
  const SubsetView subset(train, std::move(rows));
  out.features = jafe::extract_all(model, subset, 256, threads).combined;
  return out;
}

ZslOutcome run_zsl_experiment(const ZslData& data, const ZslPlan& plan,
                              const std::function<void(const std::string&)>& on_stage,
                              const jafe::JafeModel* pretrained) {
  if (!data.train || !data.test) throw UsageError("experiment needs both training and test inputs");
  if (data.train_labels.size() != data.train->size()) throw UsageError("training labels differ from the input count");
  if (data.test_labels.size() != data.test->size()) throw UsageError("test labels differ from the input count");
  if (data.targets.empty()) throw UsageError("experiment needs at least one target class");
  const auto start = std::chrono::steady_clock::now();
  auto stage = [&](const std::string& name) {
    log::info("stage ", name);
    if (on_stage) on_stage(name);
  };

  stage("jafe");
  jafe::JafeModel model = pretrained ? *pretrained : jafe::JafeModel(plan.scheme, plan.architecture);
  jafe::TrainLog jafe_log;
  if (!pretrained) {
    model.init_params(plan.jafe.seed);
    jafe_log = jafe::train_jafe(model, *data.train, data.train_annotations, plan.jafe);
  } else if (!(model.scheme() == plan.scheme)) {
    throw UsageError("pretrained JAFE model has a different attribute scheme");
  }

  stage("repository");
  const auto outputs = jafe::extract_all(model, *data.train, 256, plan.threads);
  auto attr_acc = jafe::attribute_accuracy(outputs, data.train_annotations);
  auto repository = repo::build(outputs, data.train_annotations, plan.scheme, plan.repository);

  stage("predictor");
  const auto val_classes = labels_of(data.validation);
  const auto vdata = validation_data(model, *data.train, data.train_labels, val_classes, plan.threads);
  auto training = pred::train_predictor(repository, data.targets, data.validation, plan.predictor, vdata,
                                        plan.threads);
  auto cut = pred::cutdown(training.model, data.targets.size());

  stage("evaluation");
  auto scores = pred::score_matrix(model, cut, *data.test, 256, plan.threads);
  std::vector<int> predictions(data.test->size());
  const std::size_t c = cut.class_count();
  for (std::size_t r = 0; r < predictions.size(); ++r) {
    predictions[r] = cut.classes()[jafe::argmax({scores.values().data() + r * c, c})];
  }
  auto acc = accuracy(predictions, data.test_labels);
  auto ret = retrieval(scores, cut.classes(), data.test_labels, plan.threads);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  return ZslOutcome{.jafe = std::move(model),
                    .jafe_log = std::move(jafe_log),
                    .train_attribute_accuracy = std::move(attr_acc),
                    .repository = std::move(repository),
                    .training = std::move(training),
                    .predictor = std::move(cut),
                    .scores = std::move(scores),
                    .predictions = std::move(predictions),
                    .accuracy = std::move(acc),
                    .retrieval = std::move(ret),
                    .seconds = seconds};
}

CslmResult run_cslm_baseline(const InputSet& train, std::span<const int> train_labels, const InputSet& test,
                             std::span<const int> test_labels, std::span<const int> classes, const CslmConfig& config,
                             std::size_t threads) {
  if (train_labels.size() != train.size() || test_labels.size() != test.size()) {
    throw UsageError("baseline labels differ from the input counts");
  }
  if (classes.empty()) throw UsageError("baseline needs at least one class");
  if (config.batch_size == 0) throw ConfigError("baseline batch size must be positive");
  std::map<int, int> index;
  for (std::size_t j = 0; j < classes.size(); ++j) index[classes[j]] = static_cast<int>(j);
  auto targets = [&](std::span<const int> labels) {
    std::vector<int> out(labels.size());
    for (std::size_t r = 0; r < labels.size(); ++r) {
      const auto it = index.find(labels[r]);
      if (it == index.end()) throw UsageError("label " + std::to_string(labels[r]) + " is not a baseline class");
      out[r] = it->second;
    }
    return out;
  };
  const auto train_targets = targets(train_labels);
  targets(test_labels);

  auto net = train.sample_shape().size() == 3
                 ? nn::make_conv_encoder<float>(train.sample_shape(), config.encoder_filters, config.encoder_dropout)
                 : nn::Sequential<float>(train.sample_shape());
  const std::size_t features = net.empty() ? train.sample_size() : net.output_size();
  net.add(std::make_unique<nn::Dense<float>>(features, config.hidden))
      .add(activation_layer(config.activation))
      .add(std::make_unique<nn::Dense<float>>(config.hidden, classes.size()));
  Rng init(derive_seed(config.seed, {kInitStream}));
  net.init_params(init);

  CslmResult result;
  nn::Optimizer<float> opt(config.optimizer);
  auto params = net.params();
  Rng dropout_rng(derive_seed(config.seed, {kDropoutStream}));
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  nn::Tensor<float> grad;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, {kShuffleStream, epoch}));
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double sum = 0.0;
    std::vector<int> batch_targets;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t e = std::min(n, b + config.batch_size);
      std::span<const std::size_t> rows(order.data() + b, e - b);
      batch_targets.clear();
      for (std::size_t r : rows) batch_targets.push_back(train_targets[r]);
      net.zero_grad();
      const auto& logits = net.train_forward(train.batch(rows), &dropout_rng);
      const double loss = nn::softmax_cross_entropy(logits, batch_targets, 1.0, &grad);
      if (!std::isfinite(loss)) throw NumericError("baseline loss became non-finite in epoch " + std::to_string(epoch + 1));
      net.backward(grad, nullptr);
      opt.step(params);
      sum += loss * static_cast<double>(e - b);
    }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    result.epoch_loss.push_back(mean);
    log::info("baseline epoch ", epoch + 1, "/", config.epochs, " loss ", mean);
  }
  net.clear_cache();

  const std::size_t m = test.size(), batch = 256;
  result.predictions.resize(m);
  parallel_for((m + batch - 1) / batch, threads, [&](std::size_t first, std::size_t last) {
    for (std::size_t b = first; b < last; ++b) {
      const std::size_t begin = b * batch, end = std::min(m, begin + batch);
      const auto logits = net.infer(test.range(begin, end));
      const std::size_t k = classes.size();
      for (std::size_t r = begin; r < end; ++r) {
        result.predictions[r] = classes[jafe::argmax({logits.values().data() + (r - begin) * k, k})];
      }
    }
  });
  result.accuracy = m ? accuracy(result.predictions, test_labels).overall : 0.0;
  return result;
}

}  // namespace gpfr::eval
