#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairsel/data.hpp"

namespace fairsel {

/// Misclassification rate. Throws Error{EmptyInput} on empty input.
double test_error(std::span<const int> predictions, std::span<const int> labels);

/// |TPR_A - TPR_B| for a binary task. Throws Error{UndefinedMetric} when a
/// group has no positive-labeled instance.
double deo(std::span<const int> predictions, std::span<const int> labels,
           std::span<const Group> groups);

/// |P(pred=1 | A) - P(pred=1 | B)|. Throws Error{EmptyGroup} when a group is empty.
double dp_distance(std::span<const int> predictions, std::span<const Group> groups);

/// min(r, 1/r) with r = P(pred=1 | A) / P(pred=1 | B). When either rate is
/// zero the value is 0 and `degenerate` is set.
struct PPercent {
  double value = 0.0;
  bool degenerate = false;
};

PPercent p_percent(std::span<const int> predictions, std::span<const Group> groups);

/// Precision and recall of `removed` against the rows whose observed label
/// differs from the true label. Empty removed set -> precision 1; no flipped
/// rows -> recall 1.
struct DetectionScores {
  double precision = 1.0;
  double recall = 1.0;
};

DetectionScores detection_scores(std::span<const std::size_t> removed, const Dataset& dataset);

enum class LabelReference { TrueLabel, ObservedLabel };

struct GroupRates {
  double positive_rate_a = 0.0;
  double positive_rate_b = 0.0;
  std::optional<double> tpr_a;
  std::optional<double> tpr_b;
};

struct EvalReport {
  double test_error = 0.0;
  std::optional<double> deo;  // absent when a group has no positives
  double dp_distance = 0.0;
  double p_percent = 0.0;
  bool p_percent_degenerate = false;
  std::optional<double> detection_precision;
  std::optional<double> detection_recall;
  GroupRates group_rates;
  LabelReference reference = LabelReference::TrueLabel;
};

/// Scores predictions on `dataset` against its true labels when present,
/// otherwise against observed labels (recorded in `reference`).
EvalReport evaluate(std::span<const int> predictions, const Dataset& dataset,
                    std::optional<DetectionScores> detection = std::nullopt);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) estimator, 0 for a single value
  std::size_t count = 0;
};

/// Metric name -> summary over the trials that define it.
struct AggregateReport {
  std::map<std::string, MetricSummary> metrics;
  std::size_t trial_count = 0;
};

MetricSummary summarize(std::span<const double> values);

/// Throws Error{EmptyInput} for an empty list.
AggregateReport aggregate(std::span<const EvalReport> reports);

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AggregateReport& report);

}  // namespace fairsel
