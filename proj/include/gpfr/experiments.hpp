#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpfr/metrics.hpp"
#include "gpfr/predictor.hpp"
#include "gpfr/repository.hpp"

namespace gpfr::eval {

struct ZslPlan {
  jafe::AttributeScheme scheme;
  jafe::Architecture architecture;
  jafe::TrainConfig jafe;
  repo::BuildOptions repository;
  pred::TrainingPlan predictor;
  std::size_t threads = 0;
};

// Training rows carry attribute annotations and a class label each; the
// labels only decide which rows serve as validation data. Target classes
// are the predictor's output classes (the unseen set, or every class in the
// supervised setting). Validation classes must be seen classes.
struct ZslData {
  const InputSet* train = nullptr;
  jafe::Annotations train_annotations;
  std::vector<int> train_labels;
  const InputSet* test = nullptr;
  std::vector<int> test_labels;
  std::vector<synth::ClassDescription> targets;
  std::vector<synth::ClassDescription> validation;
};

struct ZslOutcome {
  jafe::JafeModel jafe;
  jafe::TrainLog jafe_log;
  std::vector<double> train_attribute_accuracy;
  repo::CognitiveRepository repository;
  pred::TrainResult training;
  pred::PredictorModel predictor;     // cut down to the target classes
  nn::Tensor<float> scores;           // [test, targets]
  std::vector<int> predictions;
  AccuracyReport accuracy;
  RetrievalReport retrieval;
  double seconds = 0.0;
};

// Rows of labels that belong to the given classes, in order.
std::vector<std::size_t> rows_in(std::span<const int> labels, std::span<const int> classes);

// Real representations of the validation classes extracted by a trained JAFE.
pred::ValidationData validation_data(const jafe::JafeModel& model, const InputSet& train,
                                     std::span<const int> train_labels, std::span<const int> validation_classes,
                                     std::size_t threads = 0);

// JAFE training, repository, iterative predictor training, cutdown, then
// scoring of the test set. A pretrained model skips JAFE training.
ZslOutcome run_zsl_experiment(const ZslData& data, const ZslPlan& plan,
                              const std::function<void(const std::string& stage)>& on_stage = {},
                              const jafe::JafeModel* pretrained = nullptr);

// Conventional end-to-end classifier: the convolutional encoder (image
// inputs only), a hidden dense layer and a softmax over the classes, trained
// jointly.
struct CslmConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t hidden = 96;
  jafe::Activation activation = jafe::Activation::kTanh;
  std::size_t encoder_filters = 32;
  double encoder_dropout = 0.25;
  nn::OptimizerConfig optimizer;
  std::uint64_t seed = 1;
};

struct CslmResult {
  double accuracy = 0.0;
  std::vector<double> epoch_loss;
  std::vector<int> predictions;
};

CslmResult run_cslm_baseline(const InputSet& train, std::span<const int> train_labels, const InputSet& test,
                             std::span<const int> test_labels, std::span<const int> classes, const CslmConfig& config,
                             std::size_t threads = 0);

// Up to per_class rows of each class, taken in a seeded random order.
std::vector<std::size_t> per_class_budget(std::span<const int> labels, std::size_t per_class, std::uint64_t seed);

}  // namespace gpfr::eval
