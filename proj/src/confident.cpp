#include "fairsel/confident.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "fairsel/error.hpp"

namespace fairsel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_labels(const ConfidenceMatrix& conf, std::span<const int> labels) {
  if (labels.size() != conf.size())
    throw Error(ErrorKind::DimensionMismatch, "label count differs from confidence rows");
  const int k = conf.class_count();
  for (std::size_t n = 0; n < labels.size(); ++n)
    if (labels[n] < 0 || labels[n] >= k)
      throw Error(ErrorKind::LabelRange,
                  "label " + std::to_string(labels[n]) + " out of range at row " + std::to_string(n));
}

template <typename Transform>
std::vector<double> class_means(const ConfidenceMatrix& conf, std::span<const int> labels,
                                Transform transform) {
  check_labels(conf, labels);
  const auto k = static_cast<std::size_t>(conf.class_count());
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> members(k, 0);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto j = static_cast<std::size_t>(labels[n]);
    sum[j] += transform(conf.probs(n, j));
    ++members[j];
  }
  for (std::size_t j = 0; j < k; ++j)
    sum[j] = members[j] == 0 ? kInf : sum[j] / static_cast<double>(members[j]);
  return sum;
}

}  // namespace

std::vector<double> self_confidence(const ConfidenceMatrix& conf, std::span<const int> labels) {
  check_labels(conf, labels);
  std::vector<double> out(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n)
    out[n] = conf.probs(n, static_cast<std::size_t>(labels[n]));
  return out;
}

double psi(double x) {
  if (!(x >= 0.0)) throw Error(ErrorKind::InvalidArgument, "psi is defined for x >= 0");
  return std::log1p(x + 0.5 * x * x);
}

std::vector<double> mean_thresholds(const ConfidenceMatrix& conf, std::span<const int> labels) {
  return class_means(conf, labels, [](double p) { return p; });
}

std::vector<double> truncated_thresholds(const ConfidenceMatrix& conf,
                                         std::span<const int> labels) {
  return class_means(conf, labels, [](double p) { return psi(p); });
}

double truncated_mean_bound(double nu, std::size_t n, double epsilon) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "bound needs N >= 1");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be > 0");
  const auto big_n = static_cast<double>(n);
  if (!(big_n > nu)) throw Error(ErrorKind::DegenerateThreshold, "bound needs N > nu");
  return nu * (big_n + nu * std::log(1.0 / epsilon) / (big_n * big_n)) / (big_n - nu);
}

double concentration_margin(double nu, std::size_t n, double n_select) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "margin needs N >= 1");
  if (!(nu >= 0.0)) throw Error(ErrorKind::InvalidArgument, "nu must be non-negative");
  if (!(n_select > nu))
    throw Error(ErrorKind::DegenerateThreshold,
                "N_s = " + std::to_string(n_select) + " must exceed nu = " + std::to_string(nu));
  const auto big_n = static_cast<double>(n);
  const double q = nu * (big_n + nu * std::log(2.0 * big_n) / (big_n * big_n));
  return q / (n_select - nu);
}

std::vector<double> adjusted_thresholds(std::span<const double> truncated, double margin) {
  if (!std::isfinite(margin)) throw Error(ErrorKind::InvalidArgument, "margin must be finite");
  std::vector<double> out(truncated.begin(), truncated.end());
  for (double& t : out) t -= margin;
  return out;
}

ThresholdSet compute_thresholds(const ConfidenceMatrix& conf, std::span<const int> labels,
                                double nu, double n_select_fraction) {
  ThresholdSet t;
  const std::size_t n = conf.size();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "cannot compute thresholds on no instances");
  t.mean = mean_thresholds(conf, labels);
  t.truncated = truncated_thresholds(conf, labels);
  t.nu = nu;
  t.n_select = n_select_fraction * static_cast<double>(n);
  const auto big_n = static_cast<double>(n);
  t.epsilon = 1.0 / (2.0 * big_n);
  t.q_factor = nu * (big_n + nu * std::log(2.0 * big_n) / (big_n * big_n));
  t.margin = concentration_margin(nu, n, t.n_select);
  t.adjusted = adjusted_thresholds(t.truncated, t.margin);
  return t;
}

std::vector<InferredLabel> infer_true_labels(const ConfidenceMatrix& conf,
                                             std::span<const double> thresholds,
                                             std::span<const int> labels) {
  check_labels(conf, labels);
  const int k = conf.class_count();
  if (thresholds.size() != static_cast<std::size_t>(k))
    throw Error(ErrorKind::DimensionMismatch, "threshold count differs from class count");

  std::vector<InferredLabel> out(conf.size());
  for (std::size_t n = 0; n < conf.size(); ++n) {
    const auto row = conf.probs.row(n);
    InferredLabel best;
    for (int j = 0; j < k; ++j) {
      const double p = row[static_cast<std::size_t>(j)];
      if (!(p >= thresholds[static_cast<std::size_t>(j)])) continue;
      if (!best) {
        best = j;
        continue;
      }
      const double p_best = row[static_cast<std::size_t>(*best)];
      // Strictly larger wins; on a tie the observed label displaces the
      // current best, otherwise the lower index (already held) stays.
      if (p > p_best || (p == p_best && j == labels[n])) best = j;
    }
    out[n] = best;
  }
  return out;
}

std::size_t CountMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

CountMatrix count_matrix(std::span<const int> labels, std::span<const InferredLabel> inferred,
                         int class_count) {
  if (labels.size() != inferred.size())
    throw Error(ErrorKind::DimensionMismatch, "labels and inferred labels differ in length");
  CountMatrix c;
  c.class_count = class_count;
  c.counts.assign(static_cast<std::size_t>(class_count * class_count), 0);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (!inferred[n]) {
      ++c.unassigned;
      continue;
    }
    const int y = labels[n];
    const int z = *inferred[n];
    if (y < 0 || y >= class_count || z < 0 || z >= class_count)
      throw Error(ErrorKind::LabelRange, "label out of range at row " + std::to_string(n));
    ++c.counts[static_cast<std::size_t>(y * class_count + z)];
  }
  return c;
}

Matrix confident_joint(const CountMatrix& count, std::span<const std::size_t> per_class_sizes) {
  const auto k = static_cast<std::size_t>(count.class_count);
  if (per_class_sizes.size() != k)
    throw Error(ErrorKind::DimensionMismatch, "per-class sizes differ from class count");
  Matrix out(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t row_sum = 0;
    for (std::size_t i = 0; i < k; ++i) row_sum += count.counts[j * k + i];
    if (row_sum == 0) continue;
    const double scale = static_cast<double>(per_class_sizes[j]) / static_cast<double>(row_sum);
    for (std::size_t i = 0; i < k; ++i)
      out(j, i) = static_cast<double>(count.counts[j * k + i]) * scale;
  }
  return out;
}

Matrix joint_distribution(const Matrix& cj) {
  double total = 0.0;
  for (double v : cj.values()) total += v;
  if (!(total > 0.0)) throw Error(ErrorKind::EmptyInput, "confident joint is all zero");
  Matrix q = cj;
  for (double& v : q.values()) v /= total;
  return q;
}

JointEstimate estimate_joint(std::span<const int> labels, std::span<const InferredLabel> inferred,
                             int class_count) {
  JointEstimate e;
  e.count = count_matrix(labels, inferred, class_count);
  e.unassigned = e.count.unassigned;
  e.per_class_sizes.assign(static_cast<std::size_t>(class_count), 0);
  for (int y : labels) ++e.per_class_sizes[static_cast<std::size_t>(y)];
  e.confident_joint = confident_joint(e.count, e.per_class_sizes);
  const auto k = static_cast<std::size_t>(class_count);
  e.joint_dist = e.count.total() > 0 ? joint_distribution(e.confident_joint) : Matrix(k, k);
  return e;
}

nlohmann::json to_json(const JointEstimate& e) {
  const auto k = static_cast<std::size_t>(e.count.class_count);
  auto rows = [k](auto&& at) {
    nlohmann::json m = nlohmann::json::array();
    for (std::size_t j = 0; j < k; ++j) {
      nlohmann::json r = nlohmann::json::array();
      for (std::size_t i = 0; i < k; ++i) r.push_back(at(j, i));
      m.push_back(std::move(r));
    }
    return m;
  };
  return {
      {"class_count", k},
      {"count", rows([&](std::size_t j, std::size_t i) { return e.count.counts[j * k + i]; })},
      {"confident_joint", rows([&](std::size_t j, std::size_t i) { return e.confident_joint(j, i); })},
      {"joint_distribution", rows([&](std::size_t j, std::size_t i) { return e.joint_dist(j, i); })},
      {"per_class_sizes", e.per_class_sizes},
      {"unassigned", e.unassigned},
  };
}

SelectionOutcome off_diagonal(std::span<const int> labels, std::span<const InferredLabel> inferred) {
  if (labels.size() != inferred.size())
    throw Error(ErrorKind::DimensionMismatch, "labels and inferred labels differ in length");
  SelectionOutcome s;
  s.inferred.assign(inferred.begin(), inferred.end());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (inferred[n] && *inferred[n] != labels[n])
      s.off_diagonal.push_back(n);
    else
      s.kept.push_back(n);
  }
  return s;
}

}  // namespace fairsel
