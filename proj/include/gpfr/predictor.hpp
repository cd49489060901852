#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpfr/jafe.hpp"
#include "gpfr/synthesis.hpp"

namespace gpfr::pred {

// Softmax classifier over combined attribute vectors. Output index j is the
// class classes()[j]; the network is a single Dense(d, C) producing logits.
class PredictorModel {
 public:
  PredictorModel() = default;
  PredictorModel(std::size_t input_dim, std::vector<int> classes);

  void init_params(std::uint64_t seed);
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t class_count() const noexcept { return classes_.size(); }
  const std::vector<int>& classes() const noexcept { return classes_; }
  // Output index of a class label; UsageError when absent.
  std::size_t index_of(int label) const;

  nn::Tensor<float> logits(const nn::Tensor<float>& features) const;
  nn::Tensor<float> predict_proba(const nn::Tensor<float>& features) const;
  // Class label per row, lowest output index on ties.
  std::vector<int> predict(const nn::Tensor<float>& features) const;

  nn::Dense<float>& dense();
  const nn::Dense<float>& dense() const;
  nn::Sequential<float>& net() noexcept { return net_; }

  nn::Checkpoint to_checkpoint(std::uint64_t config_hash) const;
  static PredictorModel from_checkpoint(const nn::Checkpoint& ckpt);

 private:
  std::size_t input_dim_ = 0;
  std::vector<int> classes_;
  nn::Sequential<float> net_;
};

struct TrainingPlan {
  std::size_t iterations = 5;
  std::size_t epochs = 1;          // per iteration
  std::size_t pseudo_size = 100;   // per class per iteration
  std::size_t batch_size = 64;
  std::size_t validation = 0;      // v
  nn::OptimizerConfig optimizer;
  std::uint64_t seed = 1;

  void validate() const;
};

// Real extracted representations of the validation classes.
struct ValidationData {
  nn::Tensor<float> features;   // [N, d]
  std::vector<int> labels;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double val_accuracy = 0.0;   // NaN when v = 0
  double train_loss = 0.0;     // mean over the iteration's last epoch
};

struct TrainResult {
  PredictorModel model;        // over unseen then validation classes
  std::vector<IterationRecord> log;
  std::size_t best_iteration = 0;
};

// Draws v validation classes from the seen list with a seeded shuffle.
// UsageError when v exceeds the seen count.
std::vector<int> choose_validation_classes(std::span<const int> seen, std::size_t v, std::uint64_t seed);

// Iterative generation: every iteration synthesizes a fresh pseudo set for
// unseen and validation classes with seed derive_seed(plan.seed, {t}),
// trains for plan.epochs, then scores the validation data. The returned
// model is the iteration with the best validation accuracy (earliest on
// ties), or the last one when v = 0. Only pseudo representations reach the
// optimizer.
TrainResult train_predictor(const repo::CognitiveRepository& repo, std::span<const synth::ClassDescription> unseen,
                            std::span<const synth::ClassDescription> validation, const TrainingPlan& plan,
                            const ValidationData& validation_data, std::size_t threads = 1,
                            const std::function<void(const IterationRecord&)>& on_iteration = {});

// One pass of minibatch training over a pseudo set; returns the mean loss.
double train_epoch(PredictorModel& model, nn::Optimizer<float>& optimizer, const synth::PseudoSet& data,
                   std::size_t batch_size, std::uint64_t shuffle_seed);

// Keeps the output rows of the first `keep` classes verbatim.
PredictorModel cutdown(const PredictorModel& model, std::size_t keep);

double accuracy(const PredictorModel& model, const nn::Tensor<float>& features, std::span<const int> labels);

struct Prediction {
  std::vector<int> labels;
  nn::Tensor<float> scores;   // [N, C] softmax
};

// Chained inference: predictor applied to the JAFE combined representation.
Prediction infer(const jafe::JafeModel& jafe, const PredictorModel& predictor, const nn::Tensor<float>& x);

// Softmax scores for a whole input set, [N, C]. Fixed batches, parallel
// over batches.
nn::Tensor<float> score_matrix(const jafe::JafeModel& jafe, const PredictorModel& predictor, const InputSet& inputs,
                               std::size_t batch_size = 256, std::size_t threads = 0);
nn::Tensor<float> score_features(const PredictorModel& predictor, const nn::Tensor<float>& features,
                                 std::size_t batch_size = 1024, std::size_t threads = 0);

// iteration,val_accuracy,train_loss
std::string validation_log_csv(std::span<const IterationRecord> log);

}  // namespace gpfr::pred
