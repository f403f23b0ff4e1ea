#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "fairsel/matrix.hpp"

namespace fairsel {

/// Two-layer perceptron: input -> ReLU hidden layer -> softmax over classes.
/// Shapes are fixed at construction; the gradient uses the same type.
struct ModelParams {
  Matrix layer1_weights;             // hidden x input
  std::vector<double> layer1_bias;   // hidden
  Matrix layer2_weights;             // classes x hidden
  std::vector<double> layer2_bias;   // classes

  std::size_t input_dim() const noexcept { return layer1_weights.cols(); }
  std::size_t hidden_width() const noexcept { return layer1_weights.rows(); }
  std::size_t class_count() const noexcept { return layer2_weights.rows(); }

  /// Zero-filled parameters of the given shape.
  static ModelParams zeros(std::size_t input_dim, std::size_t hidden,
                           std::size_t classes);

  bool same_shape(const ModelParams& other) const noexcept;
  bool all_finite() const noexcept;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

using Gradient = ModelParams;

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 20;
  std::size_t batch_size = 256;
  std::size_t hidden_width = 32;
  std::uint64_t seed = 0;

  /// Throws Error{InvalidArgument} when any field is out of range.
  void validate() const;
};

/// Rows of a feature matrix selected by index. `labels` is indexed by the
/// same row ids as `features`, not by position in `rows`.
struct BatchRef {
  const Matrix& features;
  std::span<const int> labels;
  std::span<const std::size_t> rows;

  std::size_t size() const noexcept { return rows.size(); }
};

struct LossGradient {
  double loss = 0.0;
  Gradient grad;
};

/// Weights ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in)) drawn from mt19937_64(seed)
/// in row-major order, layer 1 first. Biases are zero.
ModelParams init_params(std::size_t input_dim, std::size_t hidden,
                        std::size_t classes, std::uint64_t seed);

/// Class probabilities for a single instance.
std::vector<double> forward(const ModelParams& params, std::span<const double> x);

/// Mean softmax cross-entropy over the batch.
double loss(const ModelParams& params, const BatchRef& batch);

/// Analytic gradient of `loss`.
Gradient gradient(const ModelParams& params, const BatchRef& batch);

LossGradient loss_and_gradient(const ModelParams& params, const BatchRef& batch);

/// params - learning_rate * grad, elementwise.
ModelParams sgd_step(const ModelParams& params, const Gradient& grad,
                     double learning_rate);
void sgd_step_inplace(ModelParams& params, const Gradient& grad,
                      double learning_rate);

/// Argmax class for every row of `features`; ties go to the lower class.
std::vector<int> predict(const ModelParams& params, const Matrix& features);

// Checkpoints: JSON with a format tag, version and explicit dimensions.
// Doubles are written in shortest round-trip form, so save/load is lossless.
nlohmann::json to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);
void save_params(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace fairsel
