#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gpfr/cmnist.hpp"
#include "gpfr/config.hpp"
#include "gpfr/dataio.hpp"
#include "gpfr/experiments.hpp"
#include "gpfr/predictor.hpp"
#include "gpfr/repository.hpp"

namespace gpfr::cli {

// Artifact names inside the output directory.
inline constexpr const char* kJafeFile = "jafe.ckpt";
inline constexpr const char* kRepositoryFile = "repository.bin";
inline constexpr const char* kPseudoFile = "pseudo.bin";
inline constexpr const char* kPredictorFile = "predictor.ckpt";
inline constexpr const char* kReportFile = "report.json";

// Resolved data and model settings for one configuration. Owns the storage
// behind its input views.
struct Workspace {
  RunConfig config;
  std::filesystem::path out;
  std::size_t threads = 0;
  bool supervised = false;

  std::optional<cmnist::Dataset> images;
  std::optional<data::FeatureTable> table;
  data::SplitSpec split;
  std::vector<int> targets;   // predictor classes before validation classes

  std::unique_ptr<InputSet> train_base;
  std::unique_ptr<InputSet> test_base;
  std::unique_ptr<SubsetView> train;
  std::unique_ptr<SubsetView> test;
  std::vector<int> train_labels;
  std::vector<int> test_labels;
  jafe::Annotations train_annotations;

  jafe::AttributeScheme scheme;
  jafe::Architecture architecture;
  std::vector<synth::ClassDescription> target_descriptions;
  std::vector<synth::ClassDescription> validation_descriptions;

  Workspace() = default;
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  eval::ZslData zsl_data() const;
  eval::ZslPlan zsl_plan() const;
  pred::TrainingPlan training_plan() const;
  jafe::TrainConfig jafe_config() const;
  repo::BuildOptions repository_options() const;
  std::uint64_t hash(Stage stage) const { return config.stage_hash(stage); }
};

// Loads data and fixes the split. per_class overrides the supervised budget
// (0 takes the first entry of supervised.per_class).
std::unique_ptr<Workspace> open_workspace(const RunConfig& config, std::size_t per_class = 0);

std::filesystem::path cmnist_path(const RunConfig& config);

// Stage commands. Each writes one artifact plus a small CSV log into the
// output directory and refuses upstream artifacts whose hash differs from
// the current configuration.
void generate_cmnist(const RunConfig& config);
jafe::JafeModel train_jafe_stage(const Workspace& ws);
repo::CognitiveRepository build_repository_stage(const Workspace& ws);
synth::PseudoSet synthesize_stage(const Workspace& ws);
pred::PredictorModel train_predictor_stage(const Workspace& ws);
// Writes report.json, per_class.csv and pr_curves.csv; returns the report.
std::string evaluate_stage(const Workspace& ws);
// retrieval.csv: class,rank,item,label,score with the top eval.top items.
std::string retrieve_stage(const Workspace& ws);

jafe::JafeModel load_jafe(const Workspace& ws);
repo::CognitiveRepository load_repository(const Workspace& ws);
pred::PredictorModel load_predictor(const Workspace& ws);

struct GridRow {
  std::size_t per_class = 0;
  std::size_t train_images = 0;
  std::vector<std::pair<std::size_t, double>> gpfr;   // pseudo size, accuracy
  std::optional<double> cslm;
};

// Supervised comparison: for every budget a JAFE is trained once and the
// predictor once per pseudo size; the baseline trains on the same images.
std::vector<GridRow> supervised_grid(const RunConfig& config);
std::string grid_report(const RunConfig& config, const std::vector<GridRow>& rows, double seconds);

}  // namespace gpfr::cli
