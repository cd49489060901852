#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gpfr::cli {

// Pipeline stages in chaining order. Each stage's hash covers its own keys
// and the keys of every stage before it. Runtime keys (output directory,
// worker count, logging) never enter a hash.
enum class Stage : std::uint8_t { kData, kJafe, kRepository, kSynthesis, kPredictor, kEvaluation, kRuntime };

// Flat key = value settings with a fixed key set and defaults. Lines starting
// with '#' are comments. Unknown keys are a ConfigError.
class RunConfig {
 public:
  RunConfig();

  static RunConfig parse(const std::string& text, const std::string& source = "config");
  static RunConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;

  std::string str(const std::string& key) const { return get(key); }
  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;     // comma separated, may be empty
  std::vector<std::size_t> counts(const std::string& key) const;
  bool is_auto(const std::string& key) const { return get(key) == "auto"; }

  // Type and range checks over every key; called before any stage runs.
  void validate() const;

  // Sorted key = value lines.
  std::string echo() const;
  std::uint64_t stage_hash(Stage stage) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// type is one of count, real, u64, counts, reals, text, or a '|' separated
// choice list. "auto" is accepted wherever it is the default.
struct KeyInfo {
  const char* key;
  const char* fallback;
  Stage stage;
  const char* type;
  const char* help;
};
const std::vector<KeyInfo>& known_keys();

}  // namespace gpfr::cli
