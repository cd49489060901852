#include "gpfr/jafe.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "gpfr/log.hpp"
#include "gpfr/nn/loss.hpp"
#include "gpfr/parallel.hpp"
#include "gpfr/text.hpp"

namespace gpfr::jafe {
namespace {

double parse_double(const std::string& s) {
  double v = 0;
  if (!text::parse_number(s, v)) {
    throw IoError(IoError::Kind::kMalformedHeader, "bad number '" + s + "' in jafe manifest");
  }
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  if (!text::parse_number(s, v)) {
    throw IoError(IoError::Kind::kMalformedHeader, "bad count '" + s + "' in jafe manifest");
  }
  return v;
}

std::unique_ptr<nn::Layer<float>> make_activation(Activation a) {
  if (a == Activation::kTanh) return std::make_unique<nn::Tanh<float>>();
  return std::make_unique<nn::Relu<float>>();
}

std::vector<int> column_labels(const Annotations& labels, std::size_t i) {
  std::vector<int> out(labels.size());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = labels.at(n, i);
  return out;
}

}  // namespace

std::size_t AttributeScheme::combined_dim() const noexcept {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{0});
}

std::size_t AttributeScheme::offset(std::size_t i) const {
  if (i >= dims.size()) throw UsageError("attribute index " + std::to_string(i) + " out of range");
  return std::accumulate(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(i), std::size_t{0});
}

void AttributeScheme::validate() const {
  if (arity.empty()) throw ConfigError("attribute scheme needs at least one attribute");
  if (alpha.size() != arity.size() || dims.size() != arity.size()) {
    throw ConfigError("attribute scheme: arity, alpha and dims must have the same length");
  }
  for (std::size_t i = 0; i < arity.size(); ++i) {
    if (arity[i] < 2) throw ConfigError("attribute " + std::to_string(i) + ": arity must be at least 2");
    if (!(alpha[i] > 0.0) || !std::isfinite(alpha[i])) {
      throw ConfigError("attribute " + std::to_string(i) + ": loss weight must be positive");
    }
    if (dims[i] < 1) throw ConfigError("attribute " + std::to_string(i) + ": sub-vector width must be positive");
  }
}

AttributeScheme AttributeScheme::uniform(std::size_t m, std::size_t arity, double alpha, std::size_t dim) {
  return {std::vector<std::size_t>(m, arity), std::vector<double>(m, alpha), std::vector<std::size_t>(m, dim)};
}

void Annotations::validate(const AttributeScheme& scheme) const {
  if (m != scheme.size()) {
    throw ConfigError("annotations have " + std::to_string(m) + " attributes, scheme has " +
                      std::to_string(scheme.size()));
  }
  if (m && values.size() % m) throw ConfigError("annotation matrix is ragged");
  for (std::size_t n = 0; n < size(); ++n) {
    for (std::size_t i = 0; i < m; ++i) {
      if (at(n, i) >= scheme.arity[i]) {
        throw ConfigError("annotation (" + std::to_string(n) + ", " + std::to_string(i) + ") = " +
                          std::to_string(at(n, i)) + " exceeds arity " + std::to_string(scheme.arity[i]));
      }
    }
  }
}

Annotations Annotations::select(std::span<const std::size_t> rows) const {
  Annotations out{m, {}};
  out.values.reserve(rows.size() * m);
  for (std::size_t r : rows) {
    auto src = row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + name + "' (expected tanh or relu)");
}

std::string_view activation_name(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

JafeModel::JafeModel(AttributeScheme scheme, Architecture arch)
    : scheme_(std::move(scheme)), arch_(std::move(arch)) {
  scheme_.validate();
  if (arch_.input_shape.empty() || nn::shape_count(arch_.input_shape) == 0) {
    throw ConfigError("jafe input shape must be nonempty");
  }
  if (arch_.conv_encoder) {
    encoder_ = nn::make_conv_encoder<float>(arch_.input_shape, arch_.encoder_filters, arch_.encoder_dropout);
  } else {
    encoder_ = nn::Sequential<float>(arch_.input_shape);
    if (arch_.input_shape.size() > 1) encoder_.add(std::make_unique<nn::Flatten<float>>());
  }
  const std::size_t features = encoder_.output_size();
  for (std::size_t i = 0; i < scheme_.size(); ++i) {
    nn::Sequential<float> unit({features});
    std::size_t width = features;
    for (std::size_t h : arch_.unit_hidden) {
      unit.add(std::make_unique<nn::Dense<float>>(width, h)).add(make_activation(arch_.activation));
      width = h;
    }
    unit.add(std::make_unique<nn::Dense<float>>(width, scheme_.dims[i])).add(make_activation(arch_.activation));
    units_.push_back(std::move(unit));

    nn::Sequential<float> head({scheme_.dims[i]});
    head.add(std::make_unique<nn::Dense<float>>(scheme_.dims[i], scheme_.arity[i]));
    heads_.push_back(std::move(head));
  }
}

void JafeModel::init_params(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {kInitStream}));
  encoder_.init_params(rng);
  for (auto& u : units_) u.init_params(rng);
  for (auto& h : heads_) h.init_params(rng);
}

void JafeModel::check_input(const nn::Tensor<float>& x) const {
  if (x.rank() != arch_.input_shape.size() + 1 ||
      !std::equal(arch_.input_shape.begin(), arch_.input_shape.end(), x.shape().begin() + 1)) {
    throw ConfigError("jafe input " + nn::shape_string(x.shape()) + " does not match [B, " +
                      nn::shape_string(arch_.input_shape) + "]");
  }
}

AttributeOutputs JafeModel::forward(const nn::Tensor<float>& x) const {
  check_input(x);
  const nn::Tensor<float> features = encoder_.infer(x);
  AttributeOutputs out;
  std::vector<nn::Tensor<float>> parts;
  for (std::size_t i = 0; i < scheme_.size(); ++i) {
    parts.push_back(units_[i].infer(features));
    nn::Tensor<float> logits = heads_[i].infer(parts.back());
    nn::Tensor<float> probs(logits.shape());
    nn::softmax_rows(logits.data(), probs.data(), logits.dim(0), logits.dim(1));
    out.probs.push_back(std::move(probs));
  }
  out.combined = concat_attributes(parts);
  return out;
}

nn::Tensor<float> JafeModel::extract(const nn::Tensor<float>& x) const {
  check_input(x);
  const nn::Tensor<float> features = encoder_.infer(x);
  std::vector<nn::Tensor<float>> parts;
  for (const auto& u : units_) parts.push_back(u.infer(features));
  return concat_attributes(parts);
}

std::vector<nn::Tensor<float>> JafeModel::predict_attributes(const nn::Tensor<float>& x) const {
  return forward(x).probs;
}

double JafeModel::joint_loss(const nn::Tensor<float>& x, const Annotations& labels) const {
  if (labels.size() != x.dim(0)) throw UsageError("joint loss: batch and annotation counts differ");
  if (labels.size() == 0) throw UsageError("joint loss: empty batch");
  const AttributeOutputs out = forward(x);
  double total = 0.0;
  for (std::size_t i = 0; i < scheme_.size(); ++i) {
    double sum = 0.0;
    for (std::size_t n = 0; n < labels.size(); ++n) {
      sum += nn::categorical_cross_entropy(out.probs[i].row(n), labels.at(n, i));
    }
    total += scheme_.alpha[i] * sum / static_cast<double>(labels.size());
  }
  return total;
}

double JafeModel::accumulate_gradients(const nn::Tensor<float>& x, const Annotations& labels, Rng* rng) {
  check_input(x);
  if (labels.size() != x.dim(0)) throw UsageError("jafe batch and annotation counts differ");
  if (labels.size() == 0) throw UsageError("jafe training batch is empty");
  const nn::Tensor<float>& features = encoder_.train_forward(x, rng);
  const bool train_encoder = !encoder_.params().empty();
  nn::Tensor<float> d_features(train_encoder ? features.shape() : nn::Shape{}, 0.0f);
  nn::Tensor<float> grad, d_unit, d_in;
  double total = 0.0;
  for (std::size_t i = 0; i < scheme_.size(); ++i) {
    const nn::Tensor<float>& h = units_[i].train_forward(features, rng);
    const nn::Tensor<float>& logits = heads_[i].train_forward(h, rng);
    const std::vector<int> target = column_labels(labels, i);
    total += nn::softmax_cross_entropy(logits, target, scheme_.alpha[i], &grad);
    heads_[i].backward(grad, &d_unit);
    if (!train_encoder) {
      units_[i].backward(d_unit, nullptr);
      continue;
    }
    units_[i].backward(d_unit, &d_in);
    for (std::size_t j = 0; j < d_in.size(); ++j) d_features[j] += d_in[j];
  }
  if (train_encoder) encoder_.backward(d_features, nullptr);
  return total;
}

std::vector<nn::Param<float>*> JafeModel::params() {
  std::vector<nn::Param<float>*> out = encoder_.params();
  for (auto& u : units_) {
    auto p = u.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  for (auto& h : heads_) {
    auto p = h.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void JafeModel::zero_grad() {
  encoder_.zero_grad();
  for (auto& u : units_) u.zero_grad();
  for (auto& h : heads_) h.zero_grad();
}

nn::Checkpoint JafeModel::to_checkpoint(std::uint64_t config_hash) const {
  nn::Checkpoint ckpt;
  ckpt.kind = "jafe";
  ckpt.config_hash = config_hash;
  ckpt.meta = {
      "arity " + text::join(scheme_.arity),
      "alpha " + text::join(scheme_.alpha),
      "dims " + text::join(scheme_.dims),
      "input " + text::join(arch_.input_shape),
      arch_.conv_encoder ? "encoder conv " + std::to_string(arch_.encoder_filters) + " " +
                               text::format_double(arch_.encoder_dropout)
                         : std::string("encoder none"),
      "hidden " + text::join(arch_.unit_hidden),
      "activation " + std::string(activation_name(arch_.activation)),
  };
  ckpt.networks.push_back({"encoder", encoder_});
  for (std::size_t i = 0; i < scheme_.size(); ++i) ckpt.networks.push_back({"unit" + std::to_string(i), units_[i]});
  for (std::size_t i = 0; i < scheme_.size(); ++i) ckpt.networks.push_back({"head" + std::to_string(i), heads_[i]});
  return ckpt;
}

JafeModel JafeModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.kind != "jafe") {
    throw IoError(IoError::Kind::kMismatch, "expected a jafe checkpoint, found '" + ckpt.kind + "'");
  }
  AttributeScheme scheme;
  for (const auto& t : ckpt.meta_tokens("arity")) scheme.arity.push_back(parse_size(t));
  for (const auto& t : ckpt.meta_tokens("alpha")) scheme.alpha.push_back(parse_double(t));
  for (const auto& t : ckpt.meta_tokens("dims")) scheme.dims.push_back(parse_size(t));
  Architecture arch;
  for (const auto& t : ckpt.meta_tokens("input")) arch.input_shape.push_back(parse_size(t));
  const auto enc = ckpt.meta_tokens("encoder");
  if (!enc.empty() && enc[0] == "conv") {
    if (enc.size() != 3) throw IoError(IoError::Kind::kMalformedHeader, "bad encoder line in jafe manifest");
    arch.conv_encoder = true;
    arch.encoder_filters = parse_size(enc[1]);
    arch.encoder_dropout = parse_double(enc[2]);
  }
  for (const auto& t : ckpt.meta_tokens("hidden")) arch.unit_hidden.push_back(parse_size(t));
  const auto act = ckpt.meta_tokens("activation");
  if (act.size() != 1) throw IoError(IoError::Kind::kMalformedHeader, "bad activation line in jafe manifest");
  try {
    arch.activation = parse_activation(act[0]);
    JafeModel model(std::move(scheme), std::move(arch));
    model.encoder_ = ckpt.network("encoder");
    for (std::size_t i = 0; i < model.scheme_.size(); ++i) {
      model.units_[i] = ckpt.network("unit" + std::to_string(i));
      model.heads_[i] = ckpt.network("head" + std::to_string(i));
    }
    return model;
  } catch (const ConfigError& e) {
    throw IoError(IoError::Kind::kMalformedHeader, std::string("inconsistent jafe checkpoint: ") + e.what());
  }
}

nn::Tensor<float> slice_attribute(const nn::Tensor<float>& combined, const AttributeScheme& scheme, std::size_t i) {
  if (combined.rank() != 2 || combined.dim(1) != scheme.combined_dim()) {
    throw ConfigError("combined batch " + nn::shape_string(combined.shape()) + " does not match scheme width " +
                      std::to_string(scheme.combined_dim()));
  }
  const std::size_t off = scheme.offset(i), l = scheme.dims[i];
  nn::Tensor<float> out({combined.dim(0), l});
  for (std::size_t n = 0; n < combined.dim(0); ++n) {
    std::copy_n(combined.row(n).data() + off, l, out.row(n).data());
  }
  return out;
}

nn::Tensor<float> concat_attributes(std::span<const nn::Tensor<float>> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts[0].dim(0);
  std::size_t width = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.dim(0) != rows) throw ConfigError("concatenated parts must share a row count");
    width += p.dim(1);
  }
  nn::Tensor<float> out({rows, width});
  for (std::size_t n = 0; n < rows; ++n) {
    float* dst = out.row(n).data();
    for (const auto& p : parts) {
      auto src = p.row(n);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

TrainLog train_jafe(JafeModel& model, const InputSet& inputs, const Annotations& annotations,
                    const TrainConfig& config, const std::function<void(std::size_t, double)>& on_epoch) {
  const std::size_t n = inputs.size();
  if (n == 0) throw UsageError("train_jafe: empty dataset");
  if (annotations.size() != n) throw UsageError("train_jafe: inputs and annotations differ in length");
  if (config.batch_size == 0) throw ConfigError("train_jafe: batch size must be positive");
  annotations.validate(model.scheme());

  TrainLog log;
  {
    const std::size_t probe = std::min<std::size_t>(n, 1024);
    std::vector<std::size_t> idx(probe);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    double sum = 0.0;
    for (std::size_t b = 0; b < probe; b += config.batch_size) {
      const std::size_t e = std::min(probe, b + config.batch_size);
      std::span<const std::size_t> rows(idx.data() + b, e - b);
      sum += model.joint_loss(inputs.batch(rows), annotations.select(rows)) * static_cast<double>(e - b);
    }
    log.initial_loss = sum / static_cast<double>(probe);
  }

  nn::Optimizer<float> opt(config.optimizer);
  auto params = model.params();
  Rng dropout_rng(derive_seed(config.seed, {kDropoutStream}));
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, {kShuffleStream, epoch}));
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double sum = 0.0;
    for (std::size_t b = 0; b < n; b += config.batch_size) {
      const std::size_t e = std::min(n, b + config.batch_size);
      std::span<const std::size_t> rows(order.data() + b, e - b);
      model.zero_grad();
      const double loss = model.accumulate_gradients(inputs.batch(rows), annotations.select(rows), &dropout_rng);
      if (!std::isfinite(loss)) {
        throw NumericError("jafe loss became non-finite in epoch " + std::to_string(epoch + 1));
      }
      opt.step(params);
      sum += loss * static_cast<double>(e - b);
    }
    const double mean = sum / static_cast<double>(n);
    log.epoch_loss.push_back(mean);
    log::info("jafe epoch ", epoch + 1, "/", config.epochs, " loss ", mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  model.encoder().clear_cache();
  for (std::size_t i = 0; i < model.scheme().size(); ++i) {
    model.unit(i).clear_cache();
    model.head(i).clear_cache();
  }
  return log;
}

AttributeOutputs extract_all(const JafeModel& model, const InputSet& inputs, std::size_t batch_size,
                             std::size_t threads) {
  if (batch_size == 0) throw ConfigError("extract_all: batch size must be positive");
  const std::size_t n = inputs.size();
  const auto& scheme = model.scheme();
  AttributeOutputs out;
  out.combined = nn::Tensor<float>({n, scheme.combined_dim()});
  for (std::size_t i = 0; i < scheme.size(); ++i) out.probs.emplace_back(nn::Shape{n, scheme.arity[i]});
  const std::size_t batches = (n + batch_size - 1) / batch_size;
  parallel_for(batches, threads, [&](std::size_t first, std::size_t last) {
    for (std::size_t b = first; b < last; ++b) {
      const std::size_t begin = b * batch_size, end = std::min(n, begin + batch_size);
      const AttributeOutputs part = model.forward(inputs.range(begin, end));
      std::copy(part.combined.values().begin(), part.combined.values().end(),
                out.combined.values().begin() + static_cast<std::ptrdiff_t>(begin * scheme.combined_dim()));
      for (std::size_t i = 0; i < scheme.size(); ++i) {
        std::copy(part.probs[i].values().begin(), part.probs[i].values().end(),
                  out.probs[i].values().begin() + static_cast<std::ptrdiff_t>(begin * scheme.arity[i]));
      }
    }
  });
  return out;
}

std::vector<double> attribute_accuracy(const AttributeOutputs& outputs, const Annotations& annotations) {
  std::vector<double> acc;
  for (std::size_t i = 0; i < outputs.probs.size(); ++i) {
    const auto& p = outputs.probs[i];
    if (p.dim(0) != annotations.size()) throw UsageError("attribute_accuracy: length mismatch");
    std::size_t hit = 0;
    for (std::size_t n = 0; n < p.dim(0); ++n) hit += argmax(p.row(n)) == annotations.at(n, i);
    acc.push_back(p.dim(0) ? static_cast<double>(hit) / static_cast<double>(p.dim(0)) : 0.0);
  }
  return acc;
}

std::size_t argmax(std::span<const float> values) noexcept {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (values[j] > values[best]) best = j;
  }
  return best;
}

}  // namespace gpfr::jafe
