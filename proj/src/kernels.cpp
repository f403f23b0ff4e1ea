#include "fairsel/kernels.hpp"

#include <algorithm>
#include <vector>

#include "fairsel/error.hpp"
#include "forward_row.hpp"

namespace fairsel::kernels {

Matrix predict_proba(const ModelParams& params, const Matrix& features,
                     std::span<const std::size_t> rows) {
  const std::size_t n = rows.size();
  const std::size_t k = params.class_count();
  Matrix probs(n, k);
  const auto count = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel if (n >= kParallelMinRows)
  {
    std::vector<double> hidden(params.hidden_width());
    std::vector<double> logits(k);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      detail::forward_row(params, features.row(rows[i]).data(), hidden.data(),
                          logits.data(), probs.row(i).data());
    }
  }
  return probs;
}

Matrix predict_proba(const ModelParams& params, const Matrix& features) {
  std::vector<std::size_t> rows(features.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return predict_proba(params, features, rows);
}

namespace {

// Accumulates the un-normalized loss and gradient of rows [begin, end) into
// `acc`, in row order.
double accumulate_chunk(const ModelParams& p, const BatchRef& batch,
                        std::size_t begin, std::size_t end, Gradient& acc) {
  const std::size_t d = p.input_dim();
  const std::size_t h = p.hidden_width();
  const std::size_t k = p.class_count();
  std::vector<double> hidden(h), logits(k), delta_out(k), delta_hidden(h);
  double total = 0.0;

  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t row = batch.rows[i];
    const double* x = batch.features.row(row).data();
    const auto y = static_cast<std::size_t>(batch.labels[row]);
    const double lse =
        detail::forward_row(p, x, hidden.data(), logits.data(), delta_out.data());
    total += lse - logits[y];
    delta_out[y] -= 1.0;

    for (std::size_t j = 0; j < k; ++j) {
      auto gw = acc.layer2_weights.row(j);
      for (std::size_t u = 0; u < h; ++u) gw[u] += delta_out[j] * hidden[u];
      acc.layer2_bias[j] += delta_out[j];
    }
    std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const auto w = p.layer2_weights.row(j);
      for (std::size_t u = 0; u < h; ++u) delta_hidden[u] += w[u] * delta_out[j];
    }
    for (std::size_t u = 0; u < h; ++u) {
      if (hidden[u] <= 0.0) continue;
      auto gw = acc.layer1_weights.row(u);
      for (std::size_t c = 0; c < d; ++c) gw[c] += delta_hidden[u] * x[c];
      acc.layer1_bias[u] += delta_hidden[u];
    }
  }
  return total;
}

void add_into(Gradient& dst, const Gradient& src) {
  auto add = [](std::span<double> a, std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  add(dst.layer1_weights.values(), src.layer1_weights.values());
  add(dst.layer1_bias, src.layer1_bias);
  add(dst.layer2_weights.values(), src.layer2_weights.values());
  add(dst.layer2_bias, src.layer2_bias);
}

void scale(Gradient& g, double factor) {
  for (double& v : g.layer1_weights.values()) v *= factor;
  for (double& v : g.layer1_bias) v *= factor;
  for (double& v : g.layer2_weights.values()) v *= factor;
  for (double& v : g.layer2_bias) v *= factor;
}

}  // namespace

LossGradient loss_and_gradient(const ModelParams& params, const BatchRef& batch) {
  const std::size_t n = batch.size();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "loss/gradient of an empty batch");
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;
  const Gradient zero = ModelParams::zeros(params.input_dim(), params.hidden_width(),
                                           params.class_count());
  std::vector<Gradient> partial(chunks, zero);
  std::vector<double> partial_loss(chunks, 0.0);
  const auto chunk_count = static_cast<std::ptrdiff_t>(chunks);

#pragma omp parallel for schedule(static) if (n >= kParallelMinRows)
  for (std::ptrdiff_t c = 0; c < chunk_count; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunkRows;
    const std::size_t end = std::min(n, begin + kChunkRows);
    partial_loss[c] = accumulate_chunk(params, batch, begin, end, partial[c]);
  }

  LossGradient out{0.0, zero};
  for (std::size_t c = 0; c < chunks; ++c) {
    out.loss += partial_loss[c];
    add_into(out.grad, partial[c]);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  scale(out.grad, inv_n);
  return out;
}

}  // namespace fairsel::kernels
