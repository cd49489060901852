#include "gpfr/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gpfr/binio.hpp"
#include "gpfr/error.hpp"
#include "gpfr/text.hpp"

namespace gpfr::cli {
namespace {

const KeyInfo* find_key(const std::string& key) {
  const auto& keys = known_keys();
  const auto it = std::find_if(keys.begin(), keys.end(), [&](const KeyInfo& k) { return key == k.key; });
  return it == keys.end() ? nullptr : &*it;
}

void check_value(const KeyInfo& info, const std::string& value) {
  const std::string type = info.type;
  if (value == "auto" && std::string(info.fallback) == "auto") return;
  const std::string what = std::string("value for ") + info.key;
  if (type == "count") {
    text::parse_or_throw<std::size_t>(value, what);
  } else if (type == "u64") {
    text::parse_or_throw<std::uint64_t>(value, what);
  } else if (type == "real") {
    text::parse_or_throw<double>(value, what);
  } else if (type == "counts" || type == "reals") {
    if (value.empty()) return;
    for (const auto& part : text::split(value, ',')) {
      const auto t = std::string(text::trim(part));
      if (type == "counts") {
        text::parse_or_throw<std::size_t>(t, what);
      } else {
        text::parse_or_throw<double>(t, what);
      }
    }
  } else if (type != "text") {
    const auto choices = text::split(type, '|');
    if (std::find(choices.begin(), choices.end(), value) == choices.end()) {
      throw ConfigError("bad " + what + " '" + value + "' (expected " + type + ")");
    }
  }
}

}  // namespace

const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> keys = {
      {"seed", "1", Stage::kData, "u64", "seed for splits, initialization, shuffling and synthesis"},
      {"mode", "zsl", Stage::kData, "zsl|supervised", "zero-shot split or every class as a target"},
      {"data.kind", "cmnist", Stage::kData, "cmnist|features", "image dataset or precomputed feature table"},
      {"data.cmnist", "auto", Stage::kData, "text", "C-MNIST container (auto: <out>/cmnist.bin)"},
      {"data.mnist_dir", "mnist", Stage::kRuntime, "text", "directory of the four MNIST IDX files"},
      {"cmnist.seed", "1", Stage::kData, "u64", "C-MNIST palette and color draws"},
      {"data.features", "", Stage::kData, "text", "GPFT feature file"},
      {"data.labels", "", Stage::kData, "text", "labels CSV"},
      {"data.attributes", "", Stage::kData, "text", "image-level attributes CSV"},
      {"data.split", "", Stage::kData, "text", "class,role CSV; empty draws a seeded split"},
      {"data.threshold", "0.5", Stage::kData, "real", "attribute binarization threshold"},
      {"split.seen", "200", Stage::kData, "count", "seen classes"},
      {"split.unseen", "50", Stage::kData, "count", "unseen classes (0 takes the rest)"},
      {"supervised.per_class", "10", Stage::kData, "counts", "training images per class in supervised mode"},
      {"jafe.encoder", "auto", Stage::kJafe, "auto|conv|none", "shared encoder (auto: conv for images)"},
      {"jafe.units", "auto", Stage::kJafe, "text", "hidden widths of each unit, comma separated, or none"},
      {"jafe.activation", "auto", Stage::kJafe, "auto|tanh|relu", "unit nonlinearity"},
      {"jafe.unit_dim", "32", Stage::kJafe, "count", "width of each attribute sub-vector"},
      {"jafe.alpha", "auto", Stage::kJafe, "text", "per-attribute loss weights, comma separated"},
      {"jafe.filters", "32", Stage::kJafe, "count", "encoder convolution filters"},
      {"jafe.dropout", "0.25", Stage::kJafe, "real", "encoder dropout rate"},
      {"jafe.epochs", "10", Stage::kJafe, "count", "JAFE epochs"},
      {"jafe.batch", "32", Stage::kJafe, "count", "JAFE batch size"},
      {"jafe.optimizer", "adam", Stage::kJafe, "adam|rmsprop", "JAFE optimizer"},
      {"jafe.lr", "0.001", Stage::kJafe, "real", "JAFE learning rate"},
      {"repo.mode", "auto", Stage::kRepository, "auto|margin|topscore", "bucket rule (auto: margin for binary)"},
      {"repo.positive", "0.7", Stage::kRepository, "real", "positive margin"},
      {"repo.negative", "0.2", Stage::kRepository, "real", "negative margin"},
      {"repo.floor", "0", Stage::kRepository, "real", "minimum top score"},
      {"repo.fallback_q", "10", Stage::kRepository, "count", "fallback bucket size"},
      {"synth.pseudo_size", "100", Stage::kSynthesis, "count", "pseudo representations per class per iteration"},
      {"supervised.pseudo_sizes", "50,100", Stage::kSynthesis, "counts", "pseudo sizes of the supervised grid"},
      {"pred.iterations", "5", Stage::kPredictor, "count", "synthesizing iterations"},
      {"pred.epochs", "1", Stage::kPredictor, "count", "epochs per iteration"},
      {"pred.batch", "32", Stage::kPredictor, "count", "predictor batch size"},
      {"pred.validation", "auto", Stage::kPredictor, "count", "validation classes (auto: 10, or 0 supervised)"},
      {"pred.optimizer", "adam", Stage::kPredictor, "adam|rmsprop", "predictor optimizer"},
      {"pred.lr", "0.001", Stage::kPredictor, "real", "predictor learning rate"},
      {"eval.baseline", "none", Stage::kEvaluation, "none|cslm", "supervised baseline"},
      {"cslm.epochs", "30", Stage::kEvaluation, "count", "baseline epochs"},
      {"cslm.batch", "32", Stage::kEvaluation, "count", "baseline batch size"},
      {"cslm.hidden", "96", Stage::kEvaluation, "count", "baseline hidden width"},
      {"eval.top", "8", Stage::kEvaluation, "count", "items listed per class by retrieve"},
      {"out", "run", Stage::kRuntime, "text", "output directory"},
      {"threads", "0", Stage::kRuntime, "count", "worker cap (0: hardware)"},
      {"log", "info", Stage::kRuntime, "debug|info|warn|error", "log level"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : known_keys()) values_[k.key] = k.fallback;
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key(text::trim(t.substr(0, eq)));
    try {
      cfg.set(key, std::string(text::trim(t.substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  return parse(std::string(bytes.begin(), bytes.end()), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeyInfo* info = find_key(key);
  if (!info) throw ConfigError("unknown key '" + key + "'");
  check_value(*info, value);
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.contains(key); }

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

double RunConfig::real(const std::string& key) const { return text::parse_or_throw<double>(get(key), key); }
std::size_t RunConfig::count(const std::string& key) const {
  return text::parse_or_throw<std::size_t>(get(key), key);
}
std::uint64_t RunConfig::u64(const std::string& key) const {
  return text::parse_or_throw<std::uint64_t>(get(key), key);
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  if (get(key).empty()) return out;
  for (const auto& p : text::split(get(key), ',')) out.push_back(text::parse_or_throw<double>(text::trim(p), key));
  return out;
}

std::vector<std::size_t> RunConfig::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  if (get(key).empty()) return out;
  for (const auto& p : text::split(get(key), ',')) {
    out.push_back(text::parse_or_throw<std::size_t>(text::trim(p), key));
  }
  return out;
}

void RunConfig::validate() const {
  for (const auto& k : known_keys()) check_value(k, get(k.key));
  for (const char* key : {"jafe.batch", "pred.batch", "cslm.batch", "jafe.unit_dim", "pred.iterations"}) {
    if (count(key) == 0) throw ConfigError(std::string(key) + " must be positive");
  }
  if (count("split.seen") == 0) throw ConfigError("split.seen must be positive");
  const double d = real("jafe.dropout");
  if (!(d >= 0.0 && d < 1.0)) throw ConfigError("jafe.dropout must lie in [0, 1)");
  if (!(real("jafe.lr") > 0.0) || !(real("pred.lr") > 0.0)) throw ConfigError("learning rates must be positive");
  if (str("mode") == "supervised" && counts("supervised.per_class").empty()) {
    throw ConfigError("supervised.per_class needs at least one budget");
  }
  if (!is_auto("jafe.alpha")) {
    for (double a : reals("jafe.alpha")) {
      if (!(a > 0.0)) throw ConfigError("jafe.alpha entries must be positive");
    }
  }
  if (!is_auto("jafe.units") && str("jafe.units") != "none") counts("jafe.units");
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::stage_hash(Stage stage) const {
  std::string material;
  for (const auto& k : known_keys()) {
    if (k.stage == Stage::kRuntime || k.stage > stage) continue;
    material += std::string(k.key) + "=" + get(k.key) + "\n";
  }
  return binio::fnv1a({reinterpret_cast<const std::uint8_t*>(material.data()), material.size()});
}

}  // namespace gpfr::cli
