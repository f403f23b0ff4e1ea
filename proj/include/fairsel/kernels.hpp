#pragma once

// Batch kernels for the perceptron. The `kernels` namespace holds the OpenMP
// versions used everywhere in the library; `serial` holds straightforward
// single-loop reference implementations kept for tests and benchmarks.
//
// The parallel gradient splits the batch into fixed chunks of kChunkRows,
// accumulates each chunk in row order, then sums chunk partials in chunk
// order. The result therefore does not depend on the thread count.

#include <cstddef>
#include <span>

#include "fairsel/matrix.hpp"
#include "fairsel/nn.hpp"

namespace fairsel::kernels {

inline constexpr std::size_t kChunkRows = 64;
inline constexpr std::size_t kParallelMinRows = 2048;

/// probs(i, j) = p(class j | features.row(rows[i])).
Matrix predict_proba(const ModelParams& params, const Matrix& features,
                     std::span<const std::size_t> rows);

/// All rows of `features`.
Matrix predict_proba(const ModelParams& params, const Matrix& features);

LossGradient loss_and_gradient(const ModelParams& params, const BatchRef& batch);

}  // namespace fairsel::kernels

namespace fairsel::serial {

Matrix predict_proba(const ModelParams& params, const Matrix& features,
                     std::span<const std::size_t> rows);

double loss(const ModelParams& params, const BatchRef& batch);

Gradient gradient(const ModelParams& params, const BatchRef& batch);

}  // namespace fairsel::serial
