#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "fairsel/nn.hpp"

namespace fairsel::detail {

/// One instance through the network. Fills `hidden` (post-ReLU activations),
/// `logits` and `probs`; returns log-sum-exp of the logits.
inline double forward_row(const ModelParams& p, const double* x, double* hidden,
                          double* logits, double* probs) {
  const std::size_t d = p.input_dim();
  const std::size_t h = p.hidden_width();
  const std::size_t k = p.class_count();
  for (std::size_t u = 0; u < h; ++u) {
    const auto w = p.layer1_weights.row(u);
    double z = p.layer1_bias[u];
    for (std::size_t c = 0; c < d; ++c) z += w[c] * x[c];
    hidden[u] = z > 0.0 ? z : 0.0;
  }
  double max_logit = -INFINITY;
  for (std::size_t j = 0; j < k; ++j) {
    const auto w = p.layer2_weights.row(j);
    double z = p.layer2_bias[j];
    for (std::size_t u = 0; u < h; ++u) z += w[u] * hidden[u];
    logits[j] = z;
    max_logit = std::max(max_logit, z);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += std::exp(logits[j] - max_logit);
  const double lse = max_logit + std::log(sum);
  // Floored so that saturated classes keep a strictly positive probability.
  for (std::size_t j = 0; j < k; ++j)
    probs[j] = std::max(std::exp(logits[j] - lse), std::numeric_limits<double>::min());
  return lse;
}

}  // namespace fairsel::detail
