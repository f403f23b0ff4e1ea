#pragma once

// Confident-learning estimation with truncated, margin-adjusted thresholds.
//
// Given per-instance class probabilities p(n, j) from one model and observed
// labels y, the per-class threshold for class j is computed over the members
// X_j = {n : y_n = j}:
//
//   mean       t_j  = mean_{n in X_j} p(n, j)
//   truncated  tt_j = mean_{n in X_j} psi(p(n, j)),  psi(x) = log(1 + x + x^2/2)
//   adjusted   mu_j = tt_j - Q / (N_s - nu),  Q = nu * (N + nu * log(2N) / N^2)
//
// An instance's inferred true label is the most probable class among those
// whose probability clears that class's threshold; instances with no such
// class stay unassigned. Instances whose inferred label differs from the
// observed label form the off-diagonal of the count matrix and are the
// candidates for removal.
//
// Everything here is a pure function of its arguments.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsel/matrix.hpp"

namespace fairsel {

/// Row n holds one model's class probabilities for instance n.
struct ConfidenceMatrix {
  Matrix probs;
  std::string source_model;

  std::size_t size() const noexcept { return probs.rows(); }
  int class_count() const noexcept { return static_cast<int>(probs.cols()); }
};

using InferredLabel = std::optional<int>;

/// probs(n, y_n). Throws Error{LabelRange} for labels outside [0, k).
std::vector<double> self_confidence(const ConfidenceMatrix& conf, std::span<const int> labels);

/// log(1 + x + x^2 / 2) for x >= 0; throws Error{InvalidArgument} otherwise.
double psi(double x);

/// Per-class mean self-confidence. Classes with no members get +infinity, so
/// no instance is ever inferred to belong to them.
std::vector<double> mean_thresholds(const ConfidenceMatrix& conf, std::span<const int> labels);

/// Per-class mean of psi(self-confidence); +infinity for empty classes.
std::vector<double> truncated_thresholds(const ConfidenceMatrix& conf,
                                         std::span<const int> labels);

/// Deviation bound of the psi-truncated mean for N observations with
/// variance nu, holding with probability at least 1 - 2 * epsilon:
///   nu * (N + nu * log(1 / epsilon) / N^2) / (N - nu).
double truncated_mean_bound(double nu, std::size_t n, double epsilon);

/// Q / (n_select - nu) with epsilon fixed at 1 / (2N). `n_select` is an
/// instance count. Throws Error{DegenerateThreshold} when n_select <= nu.
double concentration_margin(double nu, std::size_t n, double n_select);

/// truncated[j] - margin. Values may drop to or below zero, in which case the
/// class admits every instance.
std::vector<double> adjusted_thresholds(std::span<const double> truncated, double margin);

/// All three threshold vectors for one model over one evaluation population.
struct ThresholdSet {
  std::vector<double> mean;
  std::vector<double> truncated;
  std::vector<double> adjusted;
  double nu = 0.0;
  double n_select = 0.0;  // instance count, fraction * population
  double epsilon = 0.0;   // 1 / (2N)
  double q_factor = 0.0;
  double margin = 0.0;
};

/// `n_select_fraction` is converted to a count against the population size.
ThresholdSet compute_thresholds(const ConfidenceMatrix& conf, std::span<const int> labels,
                                double nu, double n_select_fraction);

/// For each instance, the argmax of probs(n, j) over classes j with
/// probs(n, j) >= thresholds[j]; ties prefer the observed label, then the
/// lowest class index. Unassigned when no class clears its threshold.
std::vector<InferredLabel> infer_true_labels(const ConfidenceMatrix& conf,
                                             std::span<const double> thresholds,
                                             std::span<const int> labels);

/// C[y][z] over instances with an inferred label.
struct CountMatrix {
  int class_count = 0;
  std::vector<std::size_t> counts;  // row-major k x k
  std::size_t unassigned = 0;

  std::size_t at(int y, int z) const {
    return counts[static_cast<std::size_t>(y * class_count + z)];
  }
  std::size_t total() const;
};

CountMatrix count_matrix(std::span<const int> labels, std::span<const InferredLabel> inferred,
                         int class_count);

/// Calibrated confident joint: row j of C rescaled to sum to
/// per_class_sizes[j]. Rows of C that sum to zero stay zero.
Matrix confident_joint(const CountMatrix& count, std::span<const std::size_t> per_class_sizes);

/// The confident joint normalized to sum to one. Throws Error{EmptyInput} if
/// every entry is zero.
Matrix joint_distribution(const Matrix& confident_joint);

struct JointEstimate {
  CountMatrix count;
  Matrix confident_joint;
  Matrix joint_dist;  // all zeros when no instance was assigned
  std::vector<std::size_t> per_class_sizes;
  std::size_t unassigned = 0;
};

JointEstimate estimate_joint(std::span<const int> labels, std::span<const InferredLabel> inferred,
                             int class_count);

nlohmann::json to_json(const JointEstimate& estimate);

/// Positions (into the label vector) of off-diagonal instances and of the
/// kept remainder. Unassigned instances are kept.
struct SelectionOutcome {
  std::vector<InferredLabel> inferred;
  std::vector<std::size_t> off_diagonal;
  std::vector<std::size_t> kept;
};

SelectionOutcome off_diagonal(std::span<const int> labels, std::span<const InferredLabel> inferred);

}  // namespace fairsel
