#include "gpfr/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gpfr/binio.hpp"
#include "gpfr/error.hpp"
#include "gpfr/rng.hpp"
#include "gpfr/text.hpp"

namespace gpfr::data {
namespace {

constexpr std::uint16_t kFeatureVersion = 1;

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = binio::read_file(path);
  return {bytes.begin(), bytes.end()};
}

// Non-empty lines with trailing carriage returns removed.
std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> out;
  for (auto& line : text::split(text, '\n')) {
    const auto t = text::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

IoError malformed(const std::string& source, std::size_t line, const std::string& what) {
  return IoError(IoError::Kind::kMalformedHeader, source + ":" + std::to_string(line) + ": " + what);
}

template <class T>
T parse_cell(const std::string& cell, const std::string& source, std::size_t line) {
  T v{};
  if (!text::parse_number(text::trim(cell), v)) throw malformed(source, line, "not a number: '" + cell + "'");
  return v;
}

}  // namespace

void FeatureTable::validate() const {
  if (features.cols == 0) throw ConfigError("feature table: zero feature width");
  if (features.values.size() != features.rows * features.cols) throw ConfigError("feature table: value count mismatch");
  if (labels.size() != features.rows) {
    throw ConfigError("feature table: " + std::to_string(features.rows) + " feature rows but " +
                      std::to_string(labels.size()) + " labels");
  }
  if (!has_attributes()) return;
  if (attributes.rows != features.rows) {
    throw ConfigError("feature table: " + std::to_string(attributes.rows) + " attribute rows for " +
                      std::to_string(features.rows) + " samples");
  }
  for (double v : attributes.values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("feature table: attribute value outside [0, 1]");
  }
}

std::vector<std::size_t> FeatureTable::rows_of(std::span<const int> classes) const {
  const std::set<int> wanted(classes.begin(), classes.end());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (wanted.count(labels[r])) out.push_back(r);
  }
  return out;
}

std::vector<std::uint8_t> encode_features(const Matrix<float>& features) {
  binio::Writer payload;
  payload.f32s(features.values);
  binio::Writer w;
  w.magic("GPFT");
  w.u16(kFeatureVersion);
  w.u64(features.rows);
  w.u64(features.cols);
  w.u64(binio::fnv1a(payload.data()));
  w.bytes(payload.data());
  return std::move(w.data());
}

Matrix<float> decode_features(std::span<const std::uint8_t> bytes, const std::string& source) {
  binio::Reader r(bytes, source);
  r.expect_magic("GPFT");
  if (r.u16() != kFeatureVersion) throw IoError(IoError::Kind::kMalformedHeader, source + ": unsupported feature version");
  Matrix<float> m;
  m.rows = r.u64();
  m.cols = r.u64();
  const std::uint64_t checksum = r.u64();
  if (m.cols == 0 || (m.rows && m.cols > (std::uint64_t{1} << 40) / m.rows)) {
    throw IoError(IoError::Kind::kMalformedHeader, source + ": implausible feature dimensions");
  }
  const std::uint64_t need = m.rows * m.cols * 4;
  if (r.remaining() < need) {
    throw IoError(IoError::Kind::kTruncated, source + ": header declares " + std::to_string(m.rows) + " x " +
                                                 std::to_string(m.cols) + " floats but the body is shorter");
  }
  if (r.remaining() > need) throw IoError(IoError::Kind::kMalformedHeader, source + ": trailing bytes after features");
  const auto payload = bytes.subspan(r.position());
  if (binio::fnv1a(payload) != checksum) throw IoError(IoError::Kind::kChecksum, source + ": feature checksum mismatch");
  m.values.resize(m.rows * m.cols);
  r.f32s(m.values);
  return m;
}

void write_features(const std::filesystem::path& path, const Matrix<float>& features) {
  binio::write_file(path, encode_features(features));
}

Matrix<float> read_features(const std::filesystem::path& path) {
  return decode_features(binio::read_file(path), path.string());
}

void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels) {
  std::string out = "label\n";
  for (int l : labels) out += std::to_string(l) + "\n";
  binio::write_text(path, out);
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  const auto lines = csv_lines(read_text(path));
  const std::string source = path.string();
  if (lines.empty() || lines[0] != "label") throw malformed(source, 1, "expected header 'label'");
  std::vector<int> out;
  for (std::size_t i = 1; i < lines.size(); ++i) out.push_back(parse_cell<int>(lines[i], source, i + 1));
  return out;
}

void write_attributes_csv(const std::filesystem::path& path, const Matrix<double>& values,
                          std::span<const std::string> names) {
  if (names.size() != values.cols) throw UsageError("attribute names and columns differ in count");
  std::string out = text::join(names, ",") + "\n";
  for (std::size_t r = 0; r < values.rows; ++r) {
    const auto row = values.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += text::format_double(row[c]);
    }
    out += '\n';
  }
  binio::write_text(path, out);
}

Matrix<double> read_attributes_csv(const std::filesystem::path& path, std::vector<std::string>* names) {
  const auto lines = csv_lines(read_text(path));
  const std::string source = path.string();
  if (lines.empty()) throw malformed(source, 1, "missing header");
  const auto header = text::split(lines[0], ',');
  Matrix<double> m;
  m.cols = header.size();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = text::split(lines[i], ',');
    if (cells.size() != m.cols) {
      throw malformed(source, i + 1, "expected " + std::to_string(m.cols) + " columns, found " +
                                         std::to_string(cells.size()));
    }
    for (const auto& c : cells) m.values.push_back(parse_cell<double>(c, source, i + 1));
    ++m.rows;
  }
  if (names) {
    names->clear();
    for (const auto& h : header) names->emplace_back(text::trim(h));
  }
  return m;
}

FeatureTable load_feature_table(const std::filesystem::path& features_path, const std::filesystem::path& labels_path,
                                const std::filesystem::path& attributes_path) {
  FeatureTable t;
  t.features = read_features(features_path);
  t.labels = read_labels_csv(labels_path);
  if (!attributes_path.empty()) t.attributes = read_attributes_csv(attributes_path, &t.attribute_names);
  t.validate();
  return t;
}

void SplitSpec::validate() const {
  std::set<int> s;
  for (int c : seen) {
    if (!s.insert(c).second) throw ConfigError("split: class " + std::to_string(c) + " listed twice as seen");
  }
  std::set<int> u;
  for (int c : unseen) {
    if (!u.insert(c).second) throw ConfigError("split: class " + std::to_string(c) + " listed twice as unseen");
    if (s.count(c)) throw ConfigError("split: class " + std::to_string(c) + " is both seen and unseen");
  }
  std::set<int> v;
  for (int c : validation) {
    if (!v.insert(c).second) throw ConfigError("split: validation class " + std::to_string(c) + " listed twice");
    if (!s.count(c)) throw ConfigError("split: validation class " + std::to_string(c) + " is not a seen class");
  }
}

std::string split_csv(const SplitSpec& split) {
  split.validate();
  const std::set<int> validation(split.validation.begin(), split.validation.end());
  std::string out = "class,role\n";
  for (int c : split.seen) out += std::to_string(c) + (validation.count(c) ? ",validation\n" : ",seen\n");
  for (int c : split.unseen) out += std::to_string(c) + ",unseen\n";
  return out;
}

SplitSpec parse_split_csv(const std::string& text, const std::string& source) {
  const auto lines = csv_lines(text);
  if (lines.empty() || lines[0] != "class,role") throw malformed(source, 1, "expected header 'class,role'");
  SplitSpec s;
  std::map<int, std::string> roles;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = text::split(lines[i], ',');
    if (cells.size() != 2) throw malformed(source, i + 1, "expected class,role");
    const int c = parse_cell<int>(cells[0], source, i + 1);
    const std::string role(text::trim(cells[1]));
    if (role != "seen" && role != "unseen" && role != "validation") {
      throw malformed(source, i + 1, "unknown role '" + role + "'");
    }
    if (const auto [it, fresh] = roles.emplace(c, role); !fresh) {
      throw ConfigError(source + ": class " + std::to_string(c) + " appears as both " + it->second + " and " + role);
    }
    if (role == "unseen") {
      s.unseen.push_back(c);
    } else {
      s.seen.push_back(c);
      if (role == "validation") s.validation.push_back(c);
    }
  }
  s.validate();
  return s;
}

void write_split_csv(const std::filesystem::path& path, const SplitSpec& split) {
  binio::write_text(path, split_csv(split));
}

SplitSpec read_split_csv(const std::filesystem::path& path) { return parse_split_csv(read_text(path), path.string()); }

std::vector<double> class_level_description(const Matrix<double>& attributes, std::span<const std::size_t> rows) {
  if (rows.empty()) throw UsageError("class-level description needs at least one row");
  // Running mean, exact when every row is the same.
  std::vector<double> z(attributes.cols, 0.0);
  double k = 0.0;
  for (std::size_t r : rows) {
    const auto row = attributes.row(r);
    k += 1.0;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += (row[i] - z[i]) / k;
  }
  for (auto& v : z) v = std::clamp(v, 0.0, 1.0);
  return z;
}

std::map<int, std::vector<double>> class_level_descriptions(const FeatureTable& table, std::span<const int> classes) {
  if (!table.has_attributes()) throw UsageError("feature table carries no attributes");
  std::map<int, std::vector<double>> out;
  for (int c : classes) {
    const int one[] = {c};
    const auto rows = table.rows_of(one);
    if (rows.empty()) throw UsageError("class " + std::to_string(c) + " has no rows to describe");
    out[c] = class_level_description(table.attributes, rows);
  }
  return out;
}

Matrix<double> binarize_attributes(const Matrix<double>& values, double threshold) {
  Matrix<double> out = values;
  for (auto& v : out.values) v = v >= threshold ? 1.0 : 0.0;
  return out;
}

FeatureTable make_planted_table(const PlantedSpec& spec) {
  if (spec.classes == 0 || spec.per_class == 0 || spec.dim == 0 || spec.attributes == 0) {
    throw ConfigError("planted table: every size must be positive");
  }
  Rng rng(derive_seed(spec.seed, {kFeatureGenStream}));
  const std::size_t m = spec.attributes, d = spec.dim;

  std::vector<double> directions(m * d);
  for (std::size_t i = 0; i < m; ++i) {
    double norm = 0.0;
    for (std::size_t k = 0; k < d; ++k) norm += std::pow(directions[i * d + k] = rng.normal(), 2);
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < d; ++k) directions[i * d + k] /= norm;
  }
  if (spec.classes > (m < 63 ? (std::size_t{1} << m) : spec.classes)) {
    throw ConfigError("planted table: more classes than distinct signatures");
  }
  std::set<std::vector<int>> used;
  std::vector<std::vector<int>> signature;
  while (signature.size() < spec.classes) {
    std::vector<int> s(m);
    for (auto& a : s) a = static_cast<int>(rng.below(2));
    if (used.insert(s).second) signature.push_back(std::move(s));
  }

  FeatureTable t;
  const std::size_t n = spec.classes * spec.per_class;
  t.features = {n, d, std::vector<float>(n * d)};
  t.attributes = {n, m, std::vector<double>(n * m)};
  for (std::size_t i = 0; i < m; ++i) t.attribute_names.push_back("a" + std::to_string(i));
  t.labels.resize(n);
  std::vector<double> x(d);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t k = 0; k < spec.per_class; ++k) {
      const std::size_t r = c * spec.per_class + k;
      t.labels[r] = static_cast<int>(c);
      for (auto& v : x) v = rng.normal() * spec.noise;
      for (std::size_t i = 0; i < m; ++i) {
        const double sign = signature[c][i] ? spec.strength : -spec.strength;
        for (std::size_t q = 0; q < d; ++q) x[q] += sign * directions[i * d + q];
        const bool flip = rng.uniform_open() < spec.flip;
        t.attributes.row(r)[i] = (signature[c][i] != 0) != flip ? 1.0 : 0.0;
      }
      for (std::size_t q = 0; q < d; ++q) t.features.row(r)[q] = static_cast<float>(x[q]);
    }
  }
  return t;
}

}  // namespace gpfr::data
