#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fairsel/data.hpp"

namespace fairsel {

enum class BiasMode { Symmetric, Asymmetric };

/// Group-dependent label bias. rho_a = P(Y=1 | S=A, Z=0) and
/// rho_b = P(Y=0 | S=B, Z=1). `mode` is descriptive only.
struct BiasSpec {
  double rho_a = 0.0;
  double rho_b = 0.0;
  std::uint64_t seed = 0;
  BiasMode mode = BiasMode::Symmetric;

  void validate() const;
};

/// Sets observed labels from the retained true labels. Eligible instances
/// (A with Z=0, B with Z=1) flip with their group's rate; the draw for row n is
/// rng::counter_uniform(seed, n), so results do not depend on the order in
/// which rows are visited. Requires a binary task with true labels.
Dataset inject_bias(const Dataset& dataset, const BiasSpec& spec);

/// Per-group counts of instances whose observed label differs from the true
/// label, keyed by (true -> observed).
struct FlipSummary {
  int class_count = 2;
  std::vector<std::size_t> counts;  // [group][from][to]

  std::size_t count(Group group, int from, int to) const;
  std::size_t total() const;
};

FlipSummary flip_summary(const Dataset& dataset);

/// Rows with observed label != true label, ascending.
std::vector<std::size_t> flipped_rows(const Dataset& dataset);

}  // namespace fairsel
