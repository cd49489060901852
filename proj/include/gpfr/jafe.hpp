#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gpfr/inputs.hpp"
#include "gpfr/nn/checkpoint.hpp"
#include "gpfr/nn/network.hpp"
#include "gpfr/nn/optimizer.hpp"

namespace gpfr::jafe {

// Per-attribute arity k, loss weight alpha and sub-vector width l.
struct AttributeScheme {
  std::vector<std::size_t> arity;
  std::vector<double> alpha;
  std::vector<std::size_t> dims;

  std::size_t size() const noexcept { return arity.size(); }
  std::size_t combined_dim() const noexcept;
  // Start of attribute i's slice inside a combined vector.
  std::size_t offset(std::size_t i) const;
  void validate() const;

  // m attributes sharing one arity, weight and width.
  static AttributeScheme uniform(std::size_t m, std::size_t arity, double alpha, std::size_t dim);
  bool operator==(const AttributeScheme&) const = default;
};

// N x m attribute values, row-major; entry (n, i) < arity[i].
struct Annotations {
  std::size_t m = 0;
  std::vector<std::uint16_t> values;

  std::size_t size() const noexcept { return m ? values.size() / m : 0; }
  std::uint16_t at(std::size_t n, std::size_t i) const { return values[n * m + i]; }
  std::span<const std::uint16_t> row(std::size_t n) const { return {values.data() + n * m, m}; }
  void validate(const AttributeScheme& scheme) const;
  Annotations select(std::span<const std::size_t> rows) const;
};

enum class Activation : std::uint8_t { kTanh, kRelu };
Activation parse_activation(const std::string& name);
std::string_view activation_name(Activation a);

struct Architecture {
  nn::Shape input_shape;
  // Convolutional encoder in front of the units; otherwise the
  // units read the input features directly.
  bool conv_encoder = false;
  std::size_t encoder_filters = 32;
  double encoder_dropout = 0.25;
  // Hidden widths of each unit before its l_i-wide output layer.
  std::vector<std::size_t> unit_hidden;
  Activation activation = Activation::kTanh;
};

struct AttributeOutputs {
  nn::Tensor<float> combined;             // [N, sum l_i]
  std::vector<nn::Tensor<float>> probs;   // one [N, k_i] per attribute
};

class JafeModel {
 public:
  JafeModel(AttributeScheme scheme, Architecture arch);

  void init_params(std::uint64_t seed);

  const AttributeScheme& scheme() const noexcept { return scheme_; }
  const Architecture& architecture() const noexcept { return arch_; }

  // Combined representation h = concat(h_1, ..., h_m).
  nn::Tensor<float> extract(const nn::Tensor<float>& x) const;
  AttributeOutputs forward(const nn::Tensor<float>& x) const;
  std::vector<nn::Tensor<float>> predict_attributes(const nn::Tensor<float>& x) const;

  // Weighted joint cross-entropy in evaluation mode.
  double joint_loss(const nn::Tensor<float>& x, const Annotations& labels) const;

  // Training forward and backward over one batch; accumulates gradients and
  // returns the joint loss. Null rng disables dropout.
  double accumulate_gradients(const nn::Tensor<float>& x, const Annotations& labels, Rng* rng);

  nn::Sequential<float>& encoder() noexcept { return encoder_; }
  const nn::Sequential<float>& encoder() const noexcept { return encoder_; }
  nn::Sequential<float>& unit(std::size_t i) { return units_.at(i); }
  const nn::Sequential<float>& unit(std::size_t i) const { return units_.at(i); }
  nn::Sequential<float>& head(std::size_t i) { return heads_.at(i); }
  const nn::Sequential<float>& head(std::size_t i) const { return heads_.at(i); }

  std::vector<nn::Param<float>*> params();
  void zero_grad();

  nn::Checkpoint to_checkpoint(std::uint64_t config_hash) const;
  static JafeModel from_checkpoint(const nn::Checkpoint& ckpt);

 private:
  void check_input(const nn::Tensor<float>& x) const;

  AttributeScheme scheme_;
  Architecture arch_;
  nn::Sequential<float> encoder_;
  std::vector<nn::Sequential<float>> units_;
  std::vector<nn::Sequential<float>> heads_;
};

// Copies attribute i's slice of every row of a combined batch.
nn::Tensor<float> slice_attribute(const nn::Tensor<float>& combined, const AttributeScheme& scheme, std::size_t i);
// Inverse of slicing: concatenates per-attribute blocks row by row.
nn::Tensor<float> concat_attributes(std::span<const nn::Tensor<float>> parts);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  nn::OptimizerConfig optimizer;
  std::uint64_t seed = 1;
};

struct TrainLog {
  double initial_loss = 0.0;          // evaluation-mode loss before any update
  std::vector<double> epoch_loss;     // mean training loss per epoch
};

// Joint training from attribute annotations only; class labels are not an
// input. Throws NumericError on a non-finite loss.
TrainLog train_jafe(JafeModel& model, const InputSet& inputs, const Annotations& annotations,
                    const TrainConfig& config,
                    const std::function<void(std::size_t epoch, double loss)>& on_epoch = {});

// Evaluation-mode outputs over a whole input set. Batches are fixed
// [0, b), [b, 2b), ... regardless of the worker count.
AttributeOutputs extract_all(const JafeModel& model, const InputSet& inputs, std::size_t batch_size = 256,
                             std::size_t threads = 0);

// Fraction of rows whose argmax prediction equals the annotation, per attribute.
std::vector<double> attribute_accuracy(const AttributeOutputs& outputs, const Annotations& annotations);

// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const float> values) noexcept;

}  // namespace gpfr::jafe
