#include "gpfr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "gpfr/binio.hpp"
#include "gpfr/error.hpp"
#include "gpfr/log.hpp"
#include "gpfr/nn/checkpoint.hpp"
#include "gpfr/text.hpp"

namespace gpfr::cli {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<int> distinct_labels(std::span<const int> labels) {
  std::set<int> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

std::vector<int> labels_at(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

nn::OptimizerConfig optimizer(const RunConfig& c, const std::string& prefix) {
  nn::OptimizerConfig o;
  o.kind = nn::parse_optimizer(c.str(prefix + ".optimizer"));
  o.learning_rate = c.real(prefix + ".lr");
  return o;
}

void check_hash(std::uint64_t found, std::uint64_t expected, const fs::path& path) {
  if (found != expected) {
    throw IoError(IoError::Kind::kMismatch,
                  path.string() + " was produced under a different configuration (hash " + std::to_string(found) +
                      ", expected " + std::to_string(expected) + "); rerun the upstream stages");
  }
}

ordered_json config_json(const RunConfig& c) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : c.values()) j[k] = v;
  return j;
}

// Seeded split of a feature table's classes.
data::SplitSpec draw_split(std::span<const int> classes, std::size_t seen, std::size_t unseen, std::uint64_t seed) {
  if (seen > classes.size()) throw UsageError("split.seen exceeds the number of classes");
  if (seen + unseen > classes.size()) throw UsageError("split.seen + split.unseen exceeds the number of classes");
  std::vector<int> order(classes.begin(), classes.end());
  Rng rng(derive_seed(seed, {kSplitStream}));
  rng.shuffle(std::span<int>(order));
  data::SplitSpec s;
  s.seen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(seen));
  const std::size_t end = unseen ? seen + unseen : order.size();
  s.unseen.assign(order.begin() + static_cast<std::ptrdiff_t>(seen), order.begin() + static_cast<std::ptrdiff_t>(end));
  std::sort(s.seen.begin(), s.seen.end());
  std::sort(s.unseen.begin(), s.unseen.end());
  return s;
}

void open_images(Workspace& ws, std::size_t per_class) {
  const auto& c = ws.config;
  ws.images = cmnist::load(cmnist_path(c));
  const auto& d = *ws.images;
  const auto train_all = d.train.labels();
  const auto test_all = d.test.labels();
  std::vector<std::size_t> train_rows, test_rows;
  if (ws.supervised) {
    ws.split.seen.resize(cmnist::kClasses);
    std::iota(ws.split.seen.begin(), ws.split.seen.end(), 0);
    ws.targets = ws.split.seen;
    train_rows = eval::per_class_budget(train_all, per_class, c.u64("seed"));
    test_rows.resize(test_all.size());
    std::iota(test_rows.begin(), test_rows.end(), std::size_t{0});
  } else {
    if (!c.str("data.split").empty()) {
      ws.split = data::read_split_csv(c.str("data.split"));
    } else {
      ws.split = cmnist::make_split({c.count("split.seen"), c.count("split.unseen"), c.u64("seed")});
    }
    ws.targets = ws.split.unseen;
    train_rows = eval::rows_in(train_all, ws.split.seen);
    test_rows = eval::rows_in(test_all, ws.split.unseen);
  }
  ws.train_labels = labels_at(train_all, train_rows);
  ws.test_labels = labels_at(test_all, test_rows);
  ws.train_annotations = d.train.annotations(train_rows);
  const nn::Shape shape{3, cmnist::kSide, cmnist::kSide};
  ws.train_base = std::make_unique<ByteImageView>(d.train.images, shape);
  ws.test_base = std::make_unique<ByteImageView>(d.test.images, shape);
  ws.train = std::make_unique<SubsetView>(*ws.train_base, std::move(train_rows));
  ws.test = std::make_unique<SubsetView>(*ws.test_base, std::move(test_rows));
  const auto alpha = c.is_auto("jafe.alpha") ? std::vector<double>{} : c.reals("jafe.alpha");
  ws.scheme = cmnist::attribute_scheme(alpha, c.count("jafe.unit_dim"));
  ws.architecture.input_shape = shape;
  ws.target_descriptions = cmnist::describe_all(ws.targets);
}

void open_table(Workspace& ws, std::size_t per_class) {
  const auto& c = ws.config;
  if (c.str("data.features").empty() || c.str("data.labels").empty() || c.str("data.attributes").empty()) {
    throw UsageError("feature runs need --features, --labels and --attributes");
  }
  ws.table = data::load_feature_table(c.str("data.features"), c.str("data.labels"), c.str("data.attributes"));
  const auto& t = *ws.table;
  if (!t.has_attributes()) throw UsageError("feature table has no attribute annotations");
  const auto classes = distinct_labels(t.labels);
  std::vector<std::size_t> train_rows, test_rows;
  if (ws.supervised) {
    ws.split.seen = classes;
    ws.targets = classes;
    train_rows = eval::per_class_budget(t.labels, per_class, c.u64("seed"));
    std::vector<char> used(t.size(), 0);
    for (std::size_t r : train_rows) used[r] = 1;
    for (std::size_t r = 0; r < t.size(); ++r) {
      if (!used[r]) test_rows.push_back(r);
    }
  } else {
    ws.split = c.str("data.split").empty()
                   ? draw_split(classes, c.count("split.seen"), c.count("split.unseen"), c.u64("seed"))
                   : data::read_split_csv(c.str("data.split"));
    ws.targets = ws.split.unseen;
    train_rows = t.rows_of(ws.split.seen);
    test_rows = t.rows_of(ws.split.unseen);
  }
  ws.split.validate();
  if (train_rows.empty()) throw UsageError("no feature rows belong to the training classes");
  ws.train_labels = labels_at(t.labels, train_rows);
  ws.test_labels = labels_at(t.labels, test_rows);

  const auto binary = data::binarize_attributes(t.attributes, c.real("data.threshold"));
  const std::size_t m = binary.cols;
  ws.train_annotations.m = m;
  for (std::size_t r : train_rows) {
    for (double v : binary.row(r)) ws.train_annotations.values.push_back(static_cast<std::uint16_t>(v));
  }
  ws.train_base = std::make_unique<DenseView>(t.features.values, nn::Shape{t.dim()});
  ws.test_base = std::make_unique<DenseView>(t.features.values, nn::Shape{t.dim()});
  ws.train = std::make_unique<SubsetView>(*ws.train_base, std::move(train_rows));
  ws.test = std::make_unique<SubsetView>(*ws.test_base, std::move(test_rows));

  ws.scheme = jafe::AttributeScheme::uniform(m, 2, 1.0, c.count("jafe.unit_dim"));
  if (!c.is_auto("jafe.alpha")) {
    ws.scheme.alpha = c.reals("jafe.alpha");
    if (ws.scheme.alpha.size() == 1) ws.scheme.alpha.assign(m, ws.scheme.alpha[0]);
  }
  ws.architecture.input_shape = {t.dim()};
  const auto z = data::class_level_descriptions(t, ws.targets);
  for (int label : ws.targets) ws.target_descriptions.push_back(synth::ClassDescription::binary(label, z.at(label)));
}

void write_csv(const fs::path& path, const std::string& text) {
  binio::write_text(path, text);
  log::info("wrote ", path.string());
}

}  // namespace

fs::path cmnist_path(const RunConfig& config) {
  if (config.is_auto("data.cmnist")) return fs::path(config.str("out")) / "cmnist.bin";
  return config.str("data.cmnist");
}

std::unique_ptr<Workspace> open_workspace(const RunConfig& config, std::size_t per_class) {
  config.validate();
  auto ws = std::make_unique<Workspace>();
  ws->config = config;
  ws->out = config.str("out");
  ws->threads = config.count("threads");
  ws->supervised = config.str("mode") == "supervised";
  if (per_class == 0) per_class = config.counts("supervised.per_class").empty() ? 10 : config.counts("supervised.per_class")[0];

  const bool images = config.str("data.kind") == "cmnist";
  if (images) {
    open_images(*ws, per_class);
  } else {
    open_table(*ws, per_class);
  }
  ws->scheme.validate();
  ws->train_annotations.validate(ws->scheme);

  auto& arch = ws->architecture;
  const auto& enc = config.str("jafe.encoder");
  arch.conv_encoder = enc == "auto" ? images : enc == "conv";
  arch.encoder_filters = config.count("jafe.filters");
  arch.encoder_dropout = config.real("jafe.dropout");
  const auto& units = config.str("jafe.units");
  if (units == "auto") {
    if (!images) arch.unit_hidden = {256};
  } else if (units != "none") {
    arch.unit_hidden = config.counts("jafe.units");
  }
  const auto& act = config.str("jafe.activation");
  arch.activation = act == "auto" ? (images ? jafe::Activation::kTanh : jafe::Activation::kRelu)
                                  : jafe::parse_activation(act);

  std::size_t v = 0;
  if (!config.is_auto("pred.validation")) v = config.count("pred.validation");
  else if (!ws->supervised) v = std::min<std::size_t>(10, ws->split.seen.size());
  if (ws->supervised && v) throw ConfigError("supervised runs have no validation classes; set pred.validation = 0");
  std::vector<int> validation = ws->split.validation;
  if (validation.empty() && v) validation = pred::choose_validation_classes(ws->split.seen, v, config.u64("seed"));
  ws->split.validation = validation;
  ws->split.validate();
  if (images) {
    ws->validation_descriptions = cmnist::describe_all(validation);
  } else {
    const auto z = data::class_level_descriptions(*ws->table, validation);
    for (int label : validation) {
      ws->validation_descriptions.push_back(synth::ClassDescription::binary(label, z.at(label)));
    }
  }
  for (const auto& d : ws->target_descriptions) d.validate(ws->scheme);
  for (const auto& d : ws->validation_descriptions) d.validate(ws->scheme);
  if (ws->targets.empty()) throw UsageError("no target classes to predict");
  log::info("workspace: ", ws->train->size(), " training rows, ", ws->test->size(), " test rows, ",
            ws->targets.size(), " target classes, ", validation.size(), " validation classes");
  return ws;
}

eval::ZslData Workspace::zsl_data() const {
  return {train.get(), train_annotations, train_labels, test.get(), test_labels, target_descriptions,
          validation_descriptions};
}

jafe::TrainConfig Workspace::jafe_config() const {
  jafe::TrainConfig t;
  t.epochs = config.count("jafe.epochs");
  t.batch_size = config.count("jafe.batch");
  t.optimizer = optimizer(config, "jafe");
  t.seed = config.u64("seed");
  return t;
}

repo::BuildOptions Workspace::repository_options() const {
  repo::BuildOptions o;
  const auto& mode = config.str("repo.mode");
  if (mode == "auto") {
    const bool binary = std::all_of(scheme.arity.begin(), scheme.arity.end(), [](std::size_t k) { return k == 2; });
    o.mode = binary ? repo::Mode::kMargin : repo::Mode::kTopScore;
  } else {
    o.mode = repo::parse_mode(mode);
  }
  o.margins = {config.real("repo.positive"), config.real("repo.negative")};
  o.score_floor = config.real("repo.floor");
  o.fallback_q = config.count("repo.fallback_q");
  return o;
}

pred::TrainingPlan Workspace::training_plan() const {
  pred::TrainingPlan p;
  p.iterations = config.count("pred.iterations");
  p.epochs = config.count("pred.epochs");
  p.pseudo_size = config.count("synth.pseudo_size");
  p.batch_size = config.count("pred.batch");
  p.validation = validation_descriptions.size();
  p.optimizer = optimizer(config, "pred");
  p.seed = config.u64("seed");
  return p;
}

eval::ZslPlan Workspace::zsl_plan() const {
  return {scheme, architecture, jafe_config(), repository_options(), training_plan(), threads};
}

void generate_cmnist(const RunConfig& config) {
  const auto source = cmnist::load_mnist(config.str("data.mnist_dir"));
  const auto data = cmnist::generate(source, {config.u64("cmnist.seed"), 0, 0, config.count("threads")});
  const auto path = cmnist_path(config);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cmnist::save(path, data);
  auto meta = path;
  meta.replace_extension(".txt");
  binio::write_text(meta, cmnist::metadata_text(data));
  log::info("wrote ", path.string(), " (", data.train.size() + data.test.size(), " images)");
}

jafe::JafeModel train_jafe_stage(const Workspace& ws) {
  fs::create_directories(ws.out);
  jafe::JafeModel model(ws.scheme, ws.architecture);
  const auto cfg = ws.jafe_config();
  model.init_params(cfg.seed);
  const auto log = jafe::train_jafe(model, *ws.train, ws.train_annotations, cfg);
  nn::save_checkpoint(ws.out / kJafeFile, model.to_checkpoint(ws.hash(Stage::kJafe)));
  std::string csv = "epoch,loss\n0," + text::format_double(log.initial_loss) + "\n";
  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
    csv += std::to_string(e + 1) + "," + text::format_double(log.epoch_loss[e]) + "\n";
  }
  write_csv(ws.out / "jafe_log.csv", csv);
  return model;
}

jafe::JafeModel load_jafe(const Workspace& ws) {
  const auto path = ws.out / kJafeFile;
  const auto ckpt = nn::load_checkpoint(path);
  check_hash(ckpt.config_hash, ws.hash(Stage::kJafe), path);
  return jafe::JafeModel::from_checkpoint(ckpt);
}

repo::CognitiveRepository build_repository_stage(const Workspace& ws) {
  const auto model = load_jafe(ws);
  const auto outputs = jafe::extract_all(model, *ws.train, 256, ws.threads);
  const auto acc = jafe::attribute_accuracy(outputs, ws.train_annotations);
  log::info("training attribute accuracy ", text::join(acc));
  auto repository = repo::build(outputs, ws.train_annotations, ws.scheme, ws.repository_options());
  repo::save(ws.out / kRepositoryFile, repository, ws.hash(Stage::kRepository));
  write_csv(ws.out / "repository_sizes.csv", repo::size_histogram_csv(repository));
  return repository;
}

repo::CognitiveRepository load_repository(const Workspace& ws) {
  const auto path = ws.out / kRepositoryFile;
  std::uint64_t hash = 0;
  auto repository = repo::load(path, &hash);
  check_hash(hash, ws.hash(Stage::kRepository), path);
  return repository;
}

synth::PseudoSet synthesize_stage(const Workspace& ws) {
  const auto repository = load_repository(ws);
  auto descs = ws.target_descriptions;
  descs.insert(descs.end(), ws.validation_descriptions.begin(), ws.validation_descriptions.end());
  const auto plan = ws.training_plan();
  auto set = synth::synthesize_all(repository, descs, plan.pseudo_size, derive_seed(plan.seed, {0}), ws.threads);
  synth::save(ws.out / kPseudoFile, set, ws.hash(Stage::kSynthesis));
  log::info("wrote ", (ws.out / kPseudoFile).string(), " (", set.size(), " pseudo representations)");
  return set;
}

pred::PredictorModel train_predictor_stage(const Workspace& ws) {
  const auto model = load_jafe(ws);
  const auto repository = load_repository(ws);
  std::vector<int> val_classes;
  for (const auto& d : ws.validation_descriptions) val_classes.push_back(d.label);
  const auto vdata = eval::validation_data(model, *ws.train, ws.train_labels, val_classes, ws.threads);
  const auto result = pred::train_predictor(repository, ws.target_descriptions, ws.validation_descriptions,
                                            ws.training_plan(), vdata, ws.threads);
  auto cut = pred::cutdown(result.model, ws.target_descriptions.size());
  nn::save_checkpoint(ws.out / kPredictorFile, cut.to_checkpoint(ws.hash(Stage::kPredictor)));
  write_csv(ws.out / "validation_log.csv", pred::validation_log_csv(result.log));
  log::info("kept predictor from iteration ", result.best_iteration + 1);
  return cut;
}

pred::PredictorModel load_predictor(const Workspace& ws) {
  const auto path = ws.out / kPredictorFile;
  const auto ckpt = nn::load_checkpoint(path);
  check_hash(ckpt.config_hash, ws.hash(Stage::kPredictor), path);
  auto model = pred::PredictorModel::from_checkpoint(ckpt);
  if (model.classes() != ws.targets) throw IoError(IoError::Kind::kMismatch, path.string() + " predicts other classes");
  return model;
}

std::string evaluate_stage(const Workspace& ws) {
  const auto start = std::chrono::steady_clock::now();
  const auto model = load_jafe(ws);
  const auto predictor = load_predictor(ws);
  if (ws.test->size() == 0) throw UsageError("the test set is empty");
  const auto scores = pred::score_matrix(model, predictor, *ws.test, 256, ws.threads);
  const std::size_t c = predictor.class_count();
  std::vector<int> predictions(ws.test->size());
  for (std::size_t r = 0; r < predictions.size(); ++r) {
    predictions[r] = predictor.classes()[jafe::argmax({scores.values().data() + r * c, c})];
  }
  const auto acc = eval::accuracy(predictions, ws.test_labels);
  const auto ret = eval::retrieval(scores, predictor.classes(), ws.test_labels, ws.threads);

  std::string per_class = "class,count,accuracy,ap,relevant\n";
  ordered_json classes = ordered_json::array();
  for (const auto& r : ret.classes) {
    const auto it = acc.per_class.find(r.label);
    const std::size_t count = it == acc.per_class.end() ? 0 : acc.per_class_count.at(r.label);
    const double a = it == acc.per_class.end() ? 0.0 : it->second;
    per_class += std::to_string(r.label) + "," + std::to_string(count) + "," + text::format_double(a) + "," +
                 text::format_double(r.ap) + "," + std::to_string(r.relevant) + "\n";
    classes.push_back({{"class", r.label}, {"count", count}, {"accuracy", a}, {"ap", r.ap}});
  }
  write_csv(ws.out / "per_class.csv", per_class);
  write_csv(ws.out / "pr_curves.csv", eval::pr_curves_csv(scores, predictor.classes(), ws.test_labels));

  ordered_json report;
  report["config"] = config_json(ws.config);
  report["seed"] = ws.config.u64("seed");
  report["mode"] = ws.config.str("mode");
  report["test_items"] = ws.test->size();
  report["target_classes"] = ws.targets.size();
  report["overall_accuracy"] = acc.overall;
  report["map"] = ret.map;
  report["classes_without_relevant_items"] = ret.excluded;
  report["per_class"] = classes;
  report["pr_curves"] = "pr_curves.csv";
  report["timing"] = {{"evaluation_seconds",
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  const auto text = report.dump(2) + "\n";
  binio::write_text(ws.out / kReportFile, text);
  log::info("accuracy ", acc.overall, ", mAP ", ret.map);
  return text;
}

std::string retrieve_stage(const Workspace& ws) {
  const auto model = load_jafe(ws);
  const auto predictor = load_predictor(ws);
  const auto scores = pred::score_matrix(model, predictor, *ws.test, 256, ws.threads);
  const auto top = eval::top_k(scores, ws.config.count("eval.top"));
  const std::size_t c = predictor.class_count();
  std::string csv = "class,rank,item,label,score\n";
  for (std::size_t j = 0; j < top.size(); ++j) {
    for (std::size_t k = 0; k < top[j].size(); ++k) {
      const std::size_t i = top[j][k];
      csv += std::to_string(predictor.classes()[j]) + "," + std::to_string(k + 1) + "," +
             std::to_string(ws.test->rows()[i]) + "," + std::to_string(ws.test_labels[i]) + "," +
             text::format_double(scores[i * c + j]) + "\n";
    }
  }
  write_csv(ws.out / "retrieval.csv", csv);
  return csv;
}

std::vector<GridRow> supervised_grid(const RunConfig& config) {
  auto cfg = config;
  cfg.set("mode", "supervised");
  std::vector<GridRow> rows;
  const auto sizes = cfg.counts("supervised.pseudo_sizes");
  if (sizes.empty()) throw ConfigError("supervised.pseudo_sizes needs at least one size");
  for (std::size_t budget : cfg.counts("supervised.per_class")) {
    const auto ws = open_workspace(cfg, budget);
    GridRow row{budget, ws->train->size(), {}, std::nullopt};
    auto plan = ws->zsl_plan();
    const auto data = ws->zsl_data();
    std::optional<jafe::JafeModel> jafe;
    for (std::size_t n : sizes) {
      plan.predictor.pseudo_size = n;
      const auto outcome = eval::run_zsl_experiment(data, plan, {}, jafe ? &*jafe : nullptr);
      if (!jafe) jafe = outcome.jafe;
      row.gpfr.emplace_back(n, outcome.accuracy.overall);
      log::info("budget ", budget, " per class, pseudo size ", n, ": accuracy ", outcome.accuracy.overall);
    }
    if (cfg.str("eval.baseline") == "cslm") {
      eval::CslmConfig b;
      b.epochs = cfg.count("cslm.epochs");
      b.batch_size = cfg.count("cslm.batch");
      b.hidden = cfg.count("cslm.hidden");
      b.activation = ws->architecture.activation;
      b.encoder_filters = ws->architecture.encoder_filters;
      b.encoder_dropout = ws->architecture.encoder_dropout;
      b.optimizer = optimizer(cfg, "jafe");
      b.seed = cfg.u64("seed");
      const auto r = eval::run_cslm_baseline(*ws->train, ws->train_labels, *ws->test, ws->test_labels, ws->targets,
                                             b, ws->threads);
      row.cslm = r.accuracy;
      log::info("budget ", budget, " per class, baseline accuracy ", r.accuracy);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string grid_report(const RunConfig& config, const std::vector<GridRow>& rows, double seconds) {
  ordered_json report;
  report["config"] = config_json(config);
  report["seed"] = config.u64("seed");
  report["mode"] = "supervised";
  ordered_json grid = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json g;
    g["per_class"] = r.per_class;
    g["train_images"] = r.train_images;
    ordered_json gp = ordered_json::array();
    for (const auto& [n, a] : r.gpfr) gp.push_back({{"pseudo_size", n}, {"accuracy", a}});
    g["gpfr"] = gp;
    g["cslm_accuracy"] = r.cslm ? ordered_json(*r.cslm) : ordered_json(nullptr);
    grid.push_back(g);
  }
  report["grid"] = grid;
  report["timing"] = {{"seconds", seconds}};
  return report.dump(2) + "\n";
}

}  // namespace gpfr::cli
