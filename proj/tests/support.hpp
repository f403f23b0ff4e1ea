#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "fairsel/data.hpp"
#include "fairsel/nn.hpp"
#include "fairsel/rng.hpp"

namespace fairsel::testing {

inline std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

/// Dataset from explicit columns; true labels default to the observed ones.
inline Dataset make_dataset(const Matrix& x, std::vector<Group> s, std::vector<int> y,
                            std::optional<std::vector<int>> z = std::nullopt, int k = 2) {
  Dataset d;
  d.features = x;
  d.sensitive = std::move(s);
  d.observed_label = std::move(y);
  d.true_label = std::move(z);
  d.class_count = k;
  for (std::size_t j = 0; j < x.cols(); ++j) d.schema.feature_columns.push_back("x" + std::to_string(j + 1));
  d.schema.sensitive_column = "s";
  d.schema.label_column = "y";
  if (d.true_label) d.schema.true_label_column = "z";
  d.schema.class_count = k;
  return d;
}

inline Matrix random_matrix(rng::Engine& e, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.values()) v = e.uniform(-scale, scale);
  return m;
}

inline ModelParams random_params(rng::Engine& e, std::size_t d, std::size_t h, std::size_t k,
                                 double scale = 1.0) {
  ModelParams p = ModelParams::zeros(d, h, k);
  for (double& v : p.layer1_weights.values()) v = e.uniform(-scale, scale);
  for (double& v : p.layer1_bias) v = e.uniform(-scale, scale);
  for (double& v : p.layer2_weights.values()) v = e.uniform(-scale, scale);
  for (double& v : p.layer2_bias) v = e.uniform(-scale, scale);
  return p;
}

/// Random rows of probabilities summing to one.
inline Matrix random_probs(rng::Engine& e, std::size_t n, int k) {
  Matrix m(n, static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += m(i, static_cast<std::size_t>(j)) = e.uniform() + 1e-3;
    for (int j = 0; j < k; ++j) m(i, static_cast<std::size_t>(j)) /= total;
  }
  return m;
}

}  // namespace fairsel::testing
