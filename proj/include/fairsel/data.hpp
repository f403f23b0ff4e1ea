#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairsel/matrix.hpp"

namespace fairsel {

/// Sensitive group. A is the privileged group.
enum class Group : std::uint8_t { A = 0, B = 1 };

/// Column layout of a CSV file. Group membership is declared, never inferred:
/// a cell equal to `privileged_value` is group A, anything else is group B
/// (or an error if `unprivileged_value` is set and does not match).
struct Schema {
  std::vector<std::string> feature_columns;
  std::string sensitive_column;
  std::string privileged_value = "1";
  std::optional<std::string> unprivileged_value;
  std::string label_column;
  std::optional<std::string> true_label_column;
  char delimiter = ',';
  int class_count = 2;
};

/// Features X, sensitive attribute S, observed label Y and (optionally) the
/// ground-truth label Z, all row-aligned.
struct Dataset {
  Matrix features;
  std::vector<Group> sensitive;
  std::vector<int> observed_label;
  std::optional<std::vector<int>> true_label;
  int class_count = 2;
  Schema schema;

  std::size_t size() const noexcept { return observed_label.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool has_true_label() const noexcept { return true_label.has_value(); }

  /// Throws Error{InvalidArgument | LabelRange} when the parallel vectors
  /// disagree in length or a label is outside [0, class_count).
  void validate() const;

  /// Rows in the given order.
  Dataset subset(std::span<const std::size_t> rows) const;

  std::size_t group_size(Group g) const noexcept;
};

Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

/// Writes features, sensitive column, label and (if present) true label using
/// the dataset's schema names. Doubles use 17 significant digits.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Gaussian-mixture generator for the 2-D synthetic benchmark.
///
/// y ~ Bernoulli(1/2); x | y ~ N(mean_y, covariance_scale * cov_y). The
/// sensitive attribute is drawn from the density ratio of the *reference*
/// Gaussians N(mean_y, cov_y) evaluated at x rotated by `rotation`:
///   P(S = A | x) = sigmoid(log N1(R x) - log N0(R x) + group_log_odds).
/// covariance_scale = 1 and group_log_odds = 0 give the classic construction;
/// the defaults separate the classes (Bayes error about 0.2%) and put about
/// 75.2% of the points in group A.
struct SyntheticSpec {
  std::size_t n = 95750;
  std::uint64_t seed = 42;
  std::array<double, 2> positive_mean{2.0, 2.0};
  std::array<double, 4> positive_cov{5.0, 1.0, 1.0, 5.0};
  std::array<double, 2> negative_mean{-2.0, -2.0};
  std::array<double, 4> negative_cov{10.0, 1.0, 1.0, 3.0};
  double covariance_scale = 0.15;
  double rotation = 0.7853981633974483;  // pi / 4
  double group_log_odds = 1.875;
};

/// true_label is set equal to observed_label.
Dataset generate_synthetic(const SyntheticSpec& spec);
Dataset generate_synthetic(std::size_t n, std::uint64_t seed);

struct GroupPartition {
  Dataset group_a;
  Dataset group_b;
  std::vector<std::size_t> rows_a;  // original row of group_a's i-th row
  std::vector<std::size_t> rows_b;
};

/// Throws Error{EmptyGroup} if either group has no rows.
GroupPartition partition_by_group(const Dataset& dataset);

struct SplitSpec {
  double validation_fraction = 0.1;
  std::uint64_t shuffle_seed = 0;
  int trial_count = 10;

  void validate() const;
};

/// Seeded shuffle of 0..n-1, then the first round(n * fraction) indices go to
/// the second part. Throws Error{InvalidArgument} when fraction > 0 leaves
/// either side empty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed);

/// (train, validation).
std::pair<Dataset, Dataset> split_train_val(const Dataset& dataset, const SplitSpec& spec);

/// Epoch-seeded permutation cut into consecutive batches of `batch_size`. A
/// short final batch missing either group is merged into the previous one.
std::vector<std::vector<std::size_t>> batches(const Dataset& dataset,
                                              std::size_t batch_size,
                                              std::uint64_t seed, int epoch);

/// Per-feature z-score with statistics from the fitting set (population
/// standard deviation). Zero-variance features map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const Dataset& train);
  void apply(Dataset& dataset) const;
};

/// Fits on `train`, transforms it and every dataset in `others`.
Standardizer standardize(Dataset& train, std::initializer_list<Dataset*> others = {});

}  // namespace fairsel
