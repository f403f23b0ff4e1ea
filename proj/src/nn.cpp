#include "fairsel/nn.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "fairsel/error.hpp"
#include "fairsel/kernels.hpp"
#include "fairsel/rng.hpp"
#include "forward_row.hpp"

namespace fairsel {

namespace {

constexpr const char* kCheckpointFormat = "fairsel-mlp";
constexpr int kCheckpointVersion = 1;

bool finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void check_batch(const ModelParams& params, const BatchRef& batch) {
  if (batch.size() == 0) throw Error(ErrorKind::EmptyInput, "empty batch");
  if (batch.features.cols() != params.input_dim())
    throw Error(ErrorKind::DimensionMismatch,
                "batch has " + std::to_string(batch.features.cols()) +
                    " features, model expects " + std::to_string(params.input_dim()));
  for (std::size_t row : batch.rows) {
    if (row >= batch.features.rows() || row >= batch.labels.size())
      throw Error(ErrorKind::InvalidArgument, "batch row " + std::to_string(row) + " out of range");
    const int y = batch.labels[row];
    if (y < 0 || static_cast<std::size_t>(y) >= params.class_count())
      throw Error(ErrorKind::LabelRange, "label " + std::to_string(y) + " at row " +
                                             std::to_string(row) + " out of range");
  }
}

void fill_uniform(std::span<double> values, double bound, rng::Engine& engine) {
  for (double& v : values) v = engine.uniform(-bound, bound);
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t input_dim, std::size_t hidden,
                               std::size_t classes) {
  return ModelParams{Matrix(hidden, input_dim), std::vector<double>(hidden, 0.0),
                     Matrix(classes, hidden), std::vector<double>(classes, 0.0)};
}

bool ModelParams::same_shape(const ModelParams& other) const noexcept {
  return layer1_weights.rows() == other.layer1_weights.rows() &&
         layer1_weights.cols() == other.layer1_weights.cols() &&
         layer1_bias.size() == other.layer1_bias.size() &&
         layer2_weights.rows() == other.layer2_weights.rows() &&
         layer2_weights.cols() == other.layer2_weights.cols() &&
         layer2_bias.size() == other.layer2_bias.size();
}

bool ModelParams::all_finite() const noexcept {
  return finite(layer1_weights.values()) && finite(layer1_bias) &&
         finite(layer2_weights.values()) && finite(layer2_bias);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorKind::InvalidArgument, "learning_rate must be > 0");
  if (epochs < 1) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 2) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 2");
  if (hidden_width < 1) throw Error(ErrorKind::InvalidArgument, "hidden_width must be >= 1");
}

ModelParams init_params(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                        std::uint64_t seed) {
  if (input_dim < 1 || hidden < 1 || classes < 1)
    throw Error(ErrorKind::InvalidArgument, "model dimensions must be >= 1");
  ModelParams p = ModelParams::zeros(input_dim, hidden, classes);
  rng::Engine engine(seed);
  fill_uniform(p.layer1_weights.values(), std::sqrt(1.0 / static_cast<double>(input_dim)), engine);
  fill_uniform(p.layer2_weights.values(), std::sqrt(1.0 / static_cast<double>(hidden)), engine);
  return p;
}

std::vector<double> forward(const ModelParams& params, std::span<const double> x) {
  if (x.size() != params.input_dim())
    throw Error(ErrorKind::DimensionMismatch,
                "input has " + std::to_string(x.size()) + " features, model expects " +
                    std::to_string(params.input_dim()));
  std::vector<double> hidden(params.hidden_width());
  std::vector<double> logits(params.class_count());
  std::vector<double> probs(params.class_count());
  detail::forward_row(params, x.data(), hidden.data(), logits.data(), probs.data());
  return probs;
}

double loss(const ModelParams& params, const BatchRef& batch) {
  check_batch(params, batch);
  return kernels::loss_and_gradient(params, batch).loss;
}

Gradient gradient(const ModelParams& params, const BatchRef& batch) {
  check_batch(params, batch);
  return kernels::loss_and_gradient(params, batch).grad;
}

LossGradient loss_and_gradient(const ModelParams& params, const BatchRef& batch) {
  check_batch(params, batch);
  return kernels::loss_and_gradient(params, batch);
}

void sgd_step_inplace(ModelParams& params, const Gradient& grad, double learning_rate) {
  if (!params.same_shape(grad))
    throw Error(ErrorKind::DimensionMismatch, "gradient shape does not match parameters");
  if (!(learning_rate >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "learning rate must be non-negative");
  auto step = [learning_rate](std::span<double> w, std::span<const double> g) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * g[i];
  };
  step(params.layer1_weights.values(), grad.layer1_weights.values());
  step(params.layer1_bias, grad.layer1_bias);
  step(params.layer2_weights.values(), grad.layer2_weights.values());
  step(params.layer2_bias, grad.layer2_bias);
}

ModelParams sgd_step(const ModelParams& params, const Gradient& grad, double learning_rate) {
  ModelParams out = params;
  sgd_step_inplace(out, grad, learning_rate);
  return out;
}

std::vector<int> predict(const ModelParams& params, const Matrix& features) {
  if (features.cols() != params.input_dim())
    throw Error(ErrorKind::DimensionMismatch, "feature matrix width does not match model");
  const Matrix probs = kernels::predict_proba(params, features);
  std::vector<int> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j)
      if (probs(i, j) > probs(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

nlohmann::json to_json(const ModelParams& p) {
  auto values = [](std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); };
  return {
      {"format", kCheckpointFormat},
      {"version", kCheckpointVersion},
      {"input_dim", p.input_dim()},
      {"hidden_width", p.hidden_width()},
      {"class_count", p.class_count()},
      {"layer1_weights", values(p.layer1_weights.values())},
      {"layer1_bias", p.layer1_bias},
      {"layer2_weights", values(p.layer2_weights.values())},
      {"layer2_bias", p.layer2_bias},
  };
}

ModelParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw Error(ErrorKind::ParseError, "not a fairsel-mlp checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw Error(ErrorKind::ParseError, "unsupported checkpoint version");
    const auto d = j.at("input_dim").get<std::size_t>();
    const auto h = j.at("hidden_width").get<std::size_t>();
    const auto k = j.at("class_count").get<std::size_t>();
    ModelParams p = ModelParams::zeros(d, h, k);
    auto read = [&j](const char* key, std::span<double> dst) {
      const auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != dst.size())
        throw Error(ErrorKind::DimensionMismatch,
                    std::string("checkpoint field ") + key + " has wrong length");
      std::copy(v.begin(), v.end(), dst.begin());
    };
    read("layer1_weights", p.layer1_weights.values());
    read("layer1_bias", p.layer1_bias);
    read("layer2_weights", p.layer2_weights.values());
    read("layer2_bias", p.layer2_bias);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json(params).dump() << '\n';
}

ModelParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  try {
    return params_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace fairsel
