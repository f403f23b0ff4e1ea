#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fairsel/kernels.hpp"

// Reference implementations: one instance at a time, explicit layer-by-layer
// arithmetic, no shared helpers with the parallel kernels.

namespace fairsel::serial {

namespace {

struct Activations {
  std::vector<double> pre_hidden;
  std::vector<double> hidden;
  std::vector<double> logits;
};

Activations activate(const ModelParams& p, std::span<const double> x) {
  Activations a;
  a.pre_hidden.assign(p.hidden_width(), 0.0);
  a.hidden.assign(p.hidden_width(), 0.0);
  a.logits.assign(p.class_count(), 0.0);
  for (std::size_t u = 0; u < p.hidden_width(); ++u) {
    double z = p.layer1_bias[u];
    for (std::size_t c = 0; c < p.input_dim(); ++c) z += p.layer1_weights(u, c) * x[c];
    a.pre_hidden[u] = z;
    a.hidden[u] = std::max(0.0, z);
  }
  for (std::size_t j = 0; j < p.class_count(); ++j) {
    double z = p.layer2_bias[j];
    for (std::size_t u = 0; u < p.hidden_width(); ++u) z += p.layer2_weights(j, u) * a.hidden[u];
    a.logits[j] = z;
  }
  return a;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

Matrix predict_proba(const ModelParams& params, const Matrix& features,
                     std::span<const std::size_t> rows) {
  Matrix probs(rows.size(), params.class_count());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Activations a = activate(params, features.row(rows[i]));
    const double lse = log_sum_exp(a.logits);
    for (std::size_t j = 0; j < params.class_count(); ++j)
      probs(i, j) = std::max(std::exp(a.logits[j] - lse), std::numeric_limits<double>::min());
  }
  return probs;
}

double loss(const ModelParams& params, const BatchRef& batch) {
  double total = 0.0;
  for (std::size_t row : batch.rows) {
    const Activations a = activate(params, batch.features.row(row));
    total += log_sum_exp(a.logits) - a.logits[static_cast<std::size_t>(batch.labels[row])];
  }
  return total / static_cast<double>(batch.size());
}

Gradient gradient(const ModelParams& params, const BatchRef& batch) {
  const std::size_t h = params.hidden_width();
  const std::size_t k = params.class_count();
  Gradient g = ModelParams::zeros(params.input_dim(), h, k);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (std::size_t row : batch.rows) {
    const auto x = batch.features.row(row);
    const Activations a = activate(params, x);
    const double lse = log_sum_exp(a.logits);
    std::vector<double> d_logits(k);
    for (std::size_t j = 0; j < k; ++j) {
      const double target = (static_cast<int>(j) == batch.labels[row]) ? 1.0 : 0.0;
      d_logits[j] = (std::exp(a.logits[j] - lse) - target) * inv_n;
    }
    for (std::size_t j = 0; j < k; ++j) {
      g.layer2_bias[j] += d_logits[j];
      for (std::size_t u = 0; u < h; ++u) g.layer2_weights(j, u) += d_logits[j] * a.hidden[u];
    }
    for (std::size_t u = 0; u < h; ++u) {
      if (a.pre_hidden[u] <= 0.0) continue;
      double d_hidden = 0.0;
      for (std::size_t j = 0; j < k; ++j) d_hidden += params.layer2_weights(j, u) * d_logits[j];
      g.layer1_bias[u] += d_hidden;
      for (std::size_t c = 0; c < params.input_dim(); ++c) g.layer1_weights(u, c) += d_hidden * x[c];
    }
  }
  return g;
}

}  // namespace fairsel::serial
