// gpfr: staged command line for the zero-shot pipeline.
//
//   gpfr cmnist-gen --mnist-dir DIR --out run
//   gpfr run --seen 200 --unseen 50 --out run
//   gpfr eval --mode supervised --baseline cslm --out grid
//   gpfr planted-gen --out t && gpfr run --features t/features.gpft --labels t/labels.csv \
//        --attributes t/attributes.csv --seen 20 --unseen 12 --out t/run
//
// Every command reads an optional key = value file (--config) and applies
// flag overrides on top. Logs go to stderr; results go to files under --out.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpfr/binio.hpp"
#include "gpfr/error.hpp"
#include "gpfr/log.hpp"
#include "gpfr/pipeline.hpp"

namespace {

using namespace gpfr;
namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3 };

struct Flags {
  std::string config;
  std::vector<std::string> set;
  std::map<std::string, std::string> direct;   // key -> flag value
};

// Registers flags that map one-to-one onto configuration keys.
void add_key_flag(CLI::App* cmd, Flags& flags, const std::string& flag, const std::string& key,
                  const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&flags, key](const std::string& v) { flags.direct[key] = v; }, help);
}

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "key = value configuration file");
  cmd->add_option("--set", flags.set, "override as key=value (repeatable)");
  add_key_flag(cmd, flags, "--out", "out", "output directory");
  add_key_flag(cmd, flags, "--threads", "threads", "worker cap");
  add_key_flag(cmd, flags, "--seed", "seed", "pipeline seed");
  add_key_flag(cmd, flags, "--log", "log", "debug, info, warn or error");
  add_key_flag(cmd, flags, "--cmnist", "data.cmnist", "C-MNIST container");
  add_key_flag(cmd, flags, "--mnist-dir", "data.mnist_dir", "directory of the MNIST IDX files");
  add_key_flag(cmd, flags, "--features", "data.features", "GPFT feature file (selects feature mode)");
  add_key_flag(cmd, flags, "--labels", "data.labels", "labels CSV");
  add_key_flag(cmd, flags, "--attributes", "data.attributes", "image-level attribute CSV");
  add_key_flag(cmd, flags, "--split", "data.split", "class,role split CSV");
  add_key_flag(cmd, flags, "--seen", "split.seen", "seen classes");
  add_key_flag(cmd, flags, "--unseen", "split.unseen", "unseen classes (0 takes the rest)");
  add_key_flag(cmd, flags, "--pseudo-size", "synth.pseudo_size", "pseudo representations per class");
  add_key_flag(cmd, flags, "--mode", "mode", "zsl or supervised");
  add_key_flag(cmd, flags, "--baseline", "eval.baseline", "none or cslm");
  add_key_flag(cmd, flags, "--top", "eval.top", "items per class for retrieve");
}

cli::RunConfig resolve(const Flags& flags) {
  auto cfg = flags.config.empty() ? cli::RunConfig() : cli::RunConfig::load(flags.config);
  if (flags.direct.contains("data.features")) cfg.set("data.kind", "features");
  for (const auto& [k, v] : flags.direct) cfg.set(k, v);
  for (const auto& kv : flags.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  const auto& level = cfg.str("log");
  log::set_level(level == "debug" ? log::Level::kDebug
                 : level == "warn" ? log::Level::kWarn
                 : level == "error" ? log::Level::kError
                                    : log::Level::kInfo);
  return cfg;
}

void write_report(const fs::path& out, const std::string& text) {
  fs::create_directories(out);
  binio::write_text(out / cli::kReportFile, text);
  log::info("wrote ", (out / cli::kReportFile).string());
}

void supervised(const cli::RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const auto rows = cli::supervised_grid(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_report(cfg.str("out"), cli::grid_report(cfg, rows, seconds));
  for (const auto& r : rows) {
    for (const auto& [n, a] : r.gpfr) std::fprintf(stderr, "per_class %zu pseudo %zu: %.4f\n", r.per_class, n, a);
    if (r.cslm) std::fprintf(stderr, "per_class %zu baseline: %.4f\n", r.per_class, *r.cslm);
  }
}

void run_all(const cli::RunConfig& cfg) {
  if (cfg.str("data.kind") == "cmnist" && !fs::exists(cli::cmnist_path(cfg))) cli::generate_cmnist(cfg);
  if (cfg.str("mode") == "supervised") {
    supervised(cfg);
    return;
  }
  const auto ws = cli::open_workspace(cfg);
  cli::train_jafe_stage(*ws);
  cli::build_repository_stage(*ws);
  cli::synthesize_stage(*ws);
  cli::train_predictor_stage(*ws);
  cli::evaluate_stage(*ws);
  cli::retrieve_stage(*ws);
}

int run(int argc, char** argv) {
  CLI::App app{"Generative pseudo feature representation pipeline"};
  app.require_subcommand(1);
  Flags flags;
  struct Command {
    const char* name;
    const char* help;
    std::function<void(const cli::RunConfig&)> action;
  };
  const std::vector<Command> commands = {
      {"cmnist-gen", "colorize MNIST into the 1000-class container", cli::generate_cmnist},
      {"train-jafe", "train the attribute feature extractor",
       [](const cli::RunConfig& c) { cli::train_jafe_stage(*cli::open_workspace(c)); }},
      {"build-repo", "fill the cognitive repository",
       [](const cli::RunConfig& c) { cli::build_repository_stage(*cli::open_workspace(c)); }},
      {"synth", "export one pseudo set for the target classes",
       [](const cli::RunConfig& c) { cli::synthesize_stage(*cli::open_workspace(c)); }},
      {"train-pred", "train the predictor on pseudo representations",
       [](const cli::RunConfig& c) { cli::train_predictor_stage(*cli::open_workspace(c)); }},
      {"eval", "score the test set (supervised mode runs the comparison grid)",
       [](const cli::RunConfig& c) {
         if (c.str("mode") == "supervised") {
           supervised(c);
         } else {
           cli::evaluate_stage(*cli::open_workspace(c));
         }
       }},
      {"retrieve", "list the top-ranked test items per class",
       [](const cli::RunConfig& c) { cli::retrieve_stage(*cli::open_workspace(c)); }},
      {"run", "every stage in order", run_all},
      {"planted-gen", "write a synthetic feature table with planted attributes",
       [](const cli::RunConfig& c) {
         data::PlantedSpec spec;
         spec.seed = c.u64("seed");
         const auto t = data::make_planted_table(spec);
         const fs::path out = c.str("out");
         fs::create_directories(out);
         data::write_features(out / "features.gpft", t.features);
         data::write_labels_csv(out / "labels.csv", t.labels);
         data::write_attributes_csv(out / "attributes.csv", t.attributes, t.attribute_names);
         log::info("wrote ", t.size(), " rows of ", t.dim(), " features to ", out.string());
       }},
      {"keys", "list configuration keys and defaults",
       [](const cli::RunConfig&) {
         for (const auto& k : cli::known_keys()) std::printf("%-24s %-10s %s\n", k.key, k.fallback, k.help);
       }},
  };
  std::map<CLI::App*, const Command*> by_app;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, flags);
    by_app[sub] = &c;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  for (const auto& [sub, c] : by_app) {
    if (sub->parsed()) c->action(resolve(flags));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gpfr::IoError& e) {
    gpfr::log::write(gpfr::log::Level::kError, e.what());
    return kIo;
  } catch (const gpfr::NumericError& e) {
    gpfr::log::write(gpfr::log::Level::kError, e.what());
    return kNumeric;
  } catch (const gpfr::SynthesisError& e) {
    gpfr::log::write(gpfr::log::Level::kError, e.what());
    return kUsage;
  } catch (const gpfr::Error& e) {
    gpfr::log::write(gpfr::log::Level::kError, e.what());
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    gpfr::log::write(gpfr::log::Level::kError, e.what());
    return kIo;
  } catch (const std::exception& e) {
    gpfr::log::write(gpfr::log::Level::kError, std::string("unexpected failure: ") + e.what());
    return kUsage;
  }
}
