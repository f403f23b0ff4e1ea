#include "fairsel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fairsel/error.hpp"
#include "fairsel/rng.hpp"

namespace fairsel {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Double-quoted cells may contain the delimiter;
// a doubled quote inside a quoted cell is a literal quote.
std::vector<std::string> split_record(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw Error(ErrorKind::MissingColumn, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::string where(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + " column '" + column + "'";
}

double parse_double(const std::string& cell, std::size_t row, const std::string& column) {
  if (cell.empty()) throw Error(ErrorKind::ParseError, "missing value at " + where(row, column));
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value))
    throw Error(ErrorKind::ParseError,
                "non-numeric value '" + cell + "' at " + where(row, column));
  return value;
}

int parse_label(const std::string& cell, std::size_t row, const std::string& column,
                int class_count) {
  if (cell.empty()) throw Error(ErrorKind::ParseError, "missing value at " + where(row, column));
  int value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw Error(ErrorKind::ParseError,
                "label '" + cell + "' is not an integer at " + where(row, column));
  if (value < 0 || value >= class_count)
    throw Error(ErrorKind::LabelRange, "label " + cell + " outside [0, " +
                                           std::to_string(class_count) + ") at " +
                                           where(row, column));
  return value;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double log_gaussian2(const std::array<double, 2>& mean, const std::array<double, 4>& cov,
                     double x0, double x1) {
  const double det = cov[0] * cov[3] - cov[1] * cov[2];
  const double d0 = x0 - mean[0];
  const double d1 = x1 - mean[1];
  // (x - m)^T cov^{-1} (x - m) for a symmetric 2x2 covariance.
  const double quad = (cov[3] * d0 * d0 - 2.0 * cov[1] * d0 * d1 + cov[0] * d1 * d1) / det;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
}

}  // namespace

void Dataset::validate() const {
  const std::size_t n = observed_label.size();
  if (features.rows() != n || sensitive.size() != n)
    throw Error(ErrorKind::InvalidArgument, "dataset columns have different lengths");
  if (true_label && true_label->size() != n)
    throw Error(ErrorKind::InvalidArgument, "true_label length differs from observed_label");
  if (class_count < 1) throw Error(ErrorKind::InvalidArgument, "class_count must be >= 1");
  auto check = [this](const std::vector<int>& labels, const char* what) {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] < 0 || labels[i] >= class_count)
        throw Error(ErrorKind::LabelRange, std::string(what) + " " + std::to_string(labels[i]) +
                                               " out of range at row " + std::to_string(i));
  };
  check(observed_label, "observed label");
  if (true_label) check(*true_label, "true label");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.class_count = class_count;
  out.schema = schema;
  out.features = Matrix(rows.size(), dim());
  out.sensitive.reserve(rows.size());
  out.observed_label.reserve(rows.size());
  if (true_label) out.true_label.emplace().reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    std::copy_n(features.row(r).begin(), dim(), out.features.row(i).begin());
    out.sensitive.push_back(sensitive[r]);
    out.observed_label.push_back(observed_label[r]);
    if (true_label) out.true_label->push_back((*true_label)[r]);
  }
  return out;
}

std::size_t Dataset::group_size(Group g) const noexcept {
  return static_cast<std::size_t>(std::count(sensitive.begin(), sensitive.end(), g));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  if (schema.class_count < 1) throw Error(ErrorKind::Config, "class_count must be >= 1");

  std::string line;
  if (!std::getline(in, line) || trim(line).empty())
    throw Error(ErrorKind::EmptyFile, path.string() + " is empty");
  const auto header = split_record(line, schema.delimiter);

  std::vector<std::size_t> feature_idx;
  for (const auto& name : schema.feature_columns) feature_idx.push_back(find_column(header, name));
  const std::size_t sensitive_idx = find_column(header, schema.sensitive_column);
  const std::size_t label_idx = find_column(header, schema.label_column);
  std::optional<std::size_t> true_idx;
  if (schema.true_label_column) true_idx = find_column(header, *schema.true_label_column);

  std::vector<double> values;
  Dataset ds;
  ds.class_count = schema.class_count;
  ds.schema = schema;
  if (true_idx) ds.true_label.emplace();

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_record(line, schema.delimiter);
    if (cells.size() != header.size())
      throw Error(ErrorKind::ParseError, "row " + std::to_string(row) + " has " +
                                             std::to_string(cells.size()) + " cells, header has " +
                                             std::to_string(header.size()));
    for (std::size_t f = 0; f < feature_idx.size(); ++f)
      values.push_back(parse_double(cells[feature_idx[f]], row, schema.feature_columns[f]));

    const std::string& s = cells[sensitive_idx];
    if (s.empty())
      throw Error(ErrorKind::ParseError, "missing value at " + where(row, schema.sensitive_column));
    if (s == schema.privileged_value) {
      ds.sensitive.push_back(Group::A);
    } else if (!schema.unprivileged_value || s == *schema.unprivileged_value) {
      ds.sensitive.push_back(Group::B);
    } else {
      throw Error(ErrorKind::ParseError, "unexpected group value '" + s + "' at " +
                                             where(row, schema.sensitive_column));
    }
    ds.observed_label.push_back(
        parse_label(cells[label_idx], row, schema.label_column, schema.class_count));
    if (true_idx)
      ds.true_label->push_back(
          parse_label(cells[*true_idx], row, *schema.true_label_column, schema.class_count));
    ++row;
  }
  if (row == 0) throw Error(ErrorKind::EmptyFile, path.string() + " has a header but no rows");

  ds.features = Matrix(row, feature_idx.size());
  std::copy(values.begin(), values.end(), ds.features.values().begin());
  return ds;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  const Schema& s = dataset.schema;
  if (s.feature_columns.size() != dataset.dim())
    throw Error(ErrorKind::InvalidArgument, "schema feature columns do not match dataset width");
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const char sep = s.delimiter;
  const std::string unprivileged = s.unprivileged_value.value_or("0");

  for (const auto& name : s.feature_columns) out << name << sep;
  out << s.sensitive_column << sep << s.label_column;
  const bool with_truth = dataset.true_label && s.true_label_column;
  if (with_truth) out << sep << *s.true_label_column;
  out << '\n';

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.features.row(i)) out << format_double(v) << sep;
    out << (dataset.sensitive[i] == Group::A ? s.privileged_value : unprivileged) << sep
        << dataset.observed_label[i];
    if (with_truth) out << sep << (*dataset.true_label)[i];
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1) throw Error(ErrorKind::InvalidArgument, "synthetic n must be >= 1");
  if (!(spec.covariance_scale > 0.0))
    throw Error(ErrorKind::InvalidArgument, "covariance_scale must be > 0");

  struct Cholesky {
    double l11, l21, l22;
  };
  auto cholesky = [&spec](const std::array<double, 4>& c) {
    const double a = spec.covariance_scale * c[0];
    const double b = spec.covariance_scale * c[1];
    const double d = spec.covariance_scale * c[3];
    const double l11 = std::sqrt(a);
    const double l21 = b / l11;
    const double l22 = std::sqrt(d - l21 * l21);
    if (!std::isfinite(l22)) throw Error(ErrorKind::InvalidArgument, "covariance not positive definite");
    return Cholesky{l11, l21, l22};
  };
  const Cholesky pos = cholesky(spec.positive_cov);
  const Cholesky neg = cholesky(spec.negative_cov);
  const double cos_r = std::cos(spec.rotation);
  const double sin_r = std::sin(spec.rotation);

  Dataset ds;
  ds.class_count = 2;
  ds.schema.feature_columns = {"x1", "x2"};
  ds.schema.sensitive_column = "s";
  ds.schema.privileged_value = "1";
  ds.schema.unprivileged_value = "0";
  ds.schema.label_column = "y";
  ds.schema.true_label_column = "z";
  ds.features = Matrix(spec.n, 2);
  ds.sensitive.resize(spec.n);
  ds.observed_label.resize(spec.n);

  rng::Engine engine(spec.seed);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int y = engine.uniform() < 0.5 ? 1 : 0;
    const auto& mean = y == 1 ? spec.positive_mean : spec.negative_mean;
    const Cholesky& l = y == 1 ? pos : neg;
    const double e0 = engine.normal();
    const double e1 = engine.normal();
    const double x0 = mean[0] + l.l11 * e0;
    const double x1 = mean[1] + l.l21 * e0 + l.l22 * e1;

    const double r0 = x0 * cos_r + x1 * sin_r;
    const double r1 = -x0 * sin_r + x1 * cos_r;
    const double log_odds = log_gaussian2(spec.positive_mean, spec.positive_cov, r0, r1) -
                            log_gaussian2(spec.negative_mean, spec.negative_cov, r0, r1) +
                            spec.group_log_odds;
    const double p_a = 1.0 / (1.0 + std::exp(-log_odds));

    ds.features(i, 0) = x0;
    ds.features(i, 1) = x1;
    ds.sensitive[i] = engine.uniform() < p_a ? Group::A : Group::B;
    ds.observed_label[i] = y;
  }
  ds.true_label = ds.observed_label;
  return ds;
}

Dataset generate_synthetic(std::size_t n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  return generate_synthetic(spec);
}

GroupPartition partition_by_group(const Dataset& dataset) {
  GroupPartition p;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (dataset.sensitive[i] == Group::A ? p.rows_a : p.rows_b).push_back(i);
  if (p.rows_a.empty()) throw Error(ErrorKind::EmptyGroup, "group A is empty");
  if (p.rows_b.empty()) throw Error(ErrorKind::EmptyGroup, "group B is empty");
  p.group_a = dataset.subset(p.rows_a);
  p.group_b = dataset.subset(p.rows_b);
  return p;
}

void SplitSpec::validate() const {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw Error(ErrorKind::InvalidArgument, "validation_fraction must be in [0, 1)");
  if (trial_count < 1) throw Error(ErrorKind::InvalidArgument, "trial_count must be >= 1");
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw Error(ErrorKind::InvalidArgument, "split fraction must be in [0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Engine engine(seed);
  engine.shuffle(std::span<std::size_t>(order));

  const auto held = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  if (fraction > 0.0 && (held == 0 || held >= n))
    throw Error(ErrorKind::InvalidArgument,
                "split of " + std::to_string(n) + " rows at fraction " +
                    std::to_string(fraction) + " leaves one side empty");
  std::vector<std::size_t> held_out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  return {std::move(kept), std::move(held_out)};
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  auto [train, val] = split_indices(dataset.size(), spec.validation_fraction, spec.shuffle_seed);
  return {dataset.subset(train), dataset.subset(val)};
}

std::vector<std::vector<std::size_t>> batches(const Dataset& dataset, std::size_t batch_size,
                                              std::uint64_t seed, int epoch) {
  if (batch_size < 2) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 2");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Engine engine(rng::derive_seed(seed, static_cast<std::uint64_t>(epoch)));
  engine.shuffle(std::span<std::size_t>(order));

  std::vector<std::vector<std::size_t>> out;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (out.size() >= 2 && out.back().size() < batch_size) {
    const auto& last = out.back();
    const bool has_a = std::any_of(last.begin(), last.end(),
                                   [&](std::size_t r) { return dataset.sensitive[r] == Group::A; });
    const bool has_b = std::any_of(last.begin(), last.end(),
                                   [&](std::size_t r) { return dataset.sensitive[r] == Group::B; });
    if (!has_a || !has_b) {
      auto tail = std::move(out.back());
      out.pop_back();
      out.back().insert(out.back().end(), tail.begin(), tail.end());
    }
  }
  return out;
}

Standardizer Standardizer::fit(const Dataset& train) {
  if (train.size() == 0) throw Error(ErrorKind::EmptyInput, "cannot standardize on an empty dataset");
  const std::size_t d = train.dim();
  const auto n = static_cast<double>(train.size());
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (std::size_t i = 0; i < train.size(); ++i)
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += train.features(i, c);
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < train.size(); ++i)
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = train.features(i, c) - s.mean[c];
      s.stddev[c] += dev * dev;
    }
  for (std::size_t c = 0; c < d; ++c) {
    s.stddev[c] = std::sqrt(s.stddev[c] / n);
    // Rounding in the mean leaves a residue on constant columns.
    if (s.stddev[c] <= 1e-12 * (1.0 + std::abs(s.mean[c]))) s.stddev[c] = 0.0;
  }
  return s;
}

void Standardizer::apply(Dataset& dataset) const {
  if (dataset.dim() != mean.size())
    throw Error(ErrorKind::DimensionMismatch, "standardizer width does not match dataset");
  for (std::size_t i = 0; i < dataset.size(); ++i)
    for (std::size_t c = 0; c < mean.size(); ++c) {
      double& v = dataset.features(i, c);
      v = stddev[c] > 0.0 ? (v - mean[c]) / stddev[c] : 0.0;
    }
}

Standardizer standardize(Dataset& train, std::initializer_list<Dataset*> others) {
  const Standardizer s = Standardizer::fit(train);
  for (Dataset* other : others) s.apply(*other);
  s.apply(train);
  return s;
}

}  // namespace fairsel
