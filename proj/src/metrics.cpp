#include "fairsel/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fairsel/bias.hpp"
#include "fairsel/error.hpp"

namespace fairsel {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorKind::DimensionMismatch, "metric inputs differ in length");
  if (a == 0) throw Error(ErrorKind::EmptyInput, "metric of an empty prediction set");
}

struct Rate {
  std::size_t hits = 0;
  std::size_t total = 0;
  std::optional<double> value() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(hits) / static_cast<double>(total);
  }
};

std::array<Rate, 2> positive_rates(std::span<const int> predictions, std::span<const Group> groups) {
  check_lengths(predictions.size(), groups.size());
  std::array<Rate, 2> rates{};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    Rate& r = rates[static_cast<std::size_t>(groups[i])];
    ++r.total;
    if (predictions[i] == 1) ++r.hits;
  }
  return rates;
}

std::array<Rate, 2> true_positive_rates(std::span<const int> predictions,
                                        std::span<const int> labels,
                                        std::span<const Group> groups) {
  check_lengths(predictions.size(), labels.size());
  check_lengths(predictions.size(), groups.size());
  std::array<Rate, 2> rates{};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (labels[i] != 1) continue;
    Rate& r = rates[static_cast<std::size_t>(groups[i])];
    ++r.total;
    if (predictions[i] == 1) ++r.hits;
  }
  return rates;
}

const char* reference_name(LabelReference r) {
  return r == LabelReference::TrueLabel ? "true_label" : "observed_label";
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

double test_error(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size());
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] != labels[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

double deo(std::span<const int> predictions, std::span<const int> labels,
           std::span<const Group> groups) {
  const auto rates = true_positive_rates(predictions, labels, groups);
  const auto a = rates[0].value();
  const auto b = rates[1].value();
  if (!a || !b)
    throw Error(ErrorKind::UndefinedMetric,
                std::string("DEO undefined: group ") + (!a ? "A" : "B") + " has no positive labels");
  return std::abs(*a - *b);
}

double dp_distance(std::span<const int> predictions, std::span<const Group> groups) {
  const auto rates = positive_rates(predictions, groups);
  const auto a = rates[0].value();
  const auto b = rates[1].value();
  if (!a || !b) throw Error(ErrorKind::EmptyGroup, "demographic parity needs both groups");
  return std::abs(*a - *b);
}

PPercent p_percent(std::span<const int> predictions, std::span<const Group> groups) {
  const auto rates = positive_rates(predictions, groups);
  const auto a = rates[0].value();
  const auto b = rates[1].value();
  if (!a || !b) throw Error(ErrorKind::EmptyGroup, "p% needs both groups");
  if (*a == 0.0 || *b == 0.0) return {0.0, true};
  const double r = *a / *b;
  return {std::min(r, 1.0 / r), false};
}

DetectionScores detection_scores(std::span<const std::size_t> removed, const Dataset& dataset) {
  const auto flipped = flipped_rows(dataset);  // ascending
  std::vector<std::size_t> sorted(removed.begin(), removed.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::size_t hits = 0;
  for (std::size_t r : sorted)
    if (std::binary_search(flipped.begin(), flipped.end(), r)) ++hits;
  DetectionScores s;
  if (!sorted.empty()) s.precision = static_cast<double>(hits) / static_cast<double>(sorted.size());
  if (!flipped.empty()) s.recall = static_cast<double>(hits) / static_cast<double>(flipped.size());
  return s;
}

EvalReport evaluate(std::span<const int> predictions, const Dataset& dataset,
                    std::optional<DetectionScores> detection) {
  EvalReport r;
  r.reference = dataset.has_true_label() ? LabelReference::TrueLabel : LabelReference::ObservedLabel;
  const std::vector<int>& labels =
      dataset.has_true_label() ? *dataset.true_label : dataset.observed_label;
  r.test_error = test_error(predictions, labels);

  const auto pos = positive_rates(predictions, dataset.sensitive);
  r.group_rates.positive_rate_a = pos[0].value().value_or(0.0);
  r.group_rates.positive_rate_b = pos[1].value().value_or(0.0);
  r.dp_distance = dp_distance(predictions, dataset.sensitive);
  const PPercent p = p_percent(predictions, dataset.sensitive);
  r.p_percent = p.value;
  r.p_percent_degenerate = p.degenerate;

  const auto tpr = true_positive_rates(predictions, labels, dataset.sensitive);
  r.group_rates.tpr_a = tpr[0].value();
  r.group_rates.tpr_b = tpr[1].value();
  if (r.group_rates.tpr_a && r.group_rates.tpr_b)
    r.deo = std::abs(*r.group_rates.tpr_a - *r.group_rates.tpr_b);

  if (detection) {
    r.detection_precision = detection->precision;
    r.detection_recall = detection->recall;
  }
  return r;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

AggregateReport aggregate(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::EmptyInput, "cannot aggregate zero reports");
  AggregateReport out;
  out.trial_count = reports.size();
  std::map<std::string, std::vector<double>> columns;
  for (const EvalReport& r : reports) {
    columns["test_error"].push_back(r.test_error);
    if (r.deo) columns["deo"].push_back(*r.deo);
    columns["dp_distance"].push_back(r.dp_distance);
    columns["p_percent"].push_back(r.p_percent);
    if (r.detection_precision) columns["detection_precision"].push_back(*r.detection_precision);
    if (r.detection_recall) columns["detection_recall"].push_back(*r.detection_recall);
  }
  for (const auto& [name, values] : columns) out.metrics[name] = summarize(values);
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  return {
      {"test_error", r.test_error},
      {"deo", optional_number(r.deo)},
      {"dp_distance", r.dp_distance},
      {"p_percent", r.p_percent},
      {"p_percent_degenerate", r.p_percent_degenerate},
      {"detection_precision", optional_number(r.detection_precision)},
      {"detection_recall", optional_number(r.detection_recall)},
      {"group_rates",
       {{"positive_rate_a", r.group_rates.positive_rate_a},
        {"positive_rate_b", r.group_rates.positive_rate_b},
        {"tpr_a", optional_number(r.group_rates.tpr_a)},
        {"tpr_b", optional_number(r.group_rates.tpr_b)}}},
      {"label_reference", reference_name(r.reference)},
  };
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.test_error = j.at("test_error").get<double>();
  r.deo = read_optional(j, "deo");
  r.dp_distance = j.at("dp_distance").get<double>();
  r.p_percent = j.at("p_percent").get<double>();
  r.p_percent_degenerate = j.value("p_percent_degenerate", false);
  r.detection_precision = read_optional(j, "detection_precision");
  r.detection_recall = read_optional(j, "detection_recall");
  if (j.contains("group_rates")) {
    const auto& g = j.at("group_rates");
    r.group_rates.positive_rate_a = g.at("positive_rate_a").get<double>();
    r.group_rates.positive_rate_b = g.at("positive_rate_b").get<double>();
    r.group_rates.tpr_a = read_optional(g, "tpr_a");
    r.group_rates.tpr_b = read_optional(g, "tpr_b");
  }
  const auto ref = j.value("label_reference", std::string("true_label"));
  if (ref != "true_label" && ref != "observed_label")
    throw Error(ErrorKind::ParseError, "unknown label_reference '" + ref + "'");
  r.reference = ref == "true_label" ? LabelReference::TrueLabel : LabelReference::ObservedLabel;
  return r;
}

nlohmann::json to_json(const AggregateReport& r) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, s] : r.metrics)
    metrics[name] = {{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
  return {{"trial_count", r.trial_count}, {"metrics", metrics}};
}

}  // namespace fairsel
