#include "fairsel/bias.hpp"

#include <numeric>

#include "fairsel/error.hpp"
#include "fairsel/rng.hpp"

namespace fairsel {

namespace {

void require_truth(const Dataset& dataset) {
  if (!dataset.has_true_label())
    throw Error(ErrorKind::MissingTrueLabels, "dataset has no true labels");
}

}  // namespace

void BiasSpec::validate() const {
  auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!ok(rho_a) || !ok(rho_b))
    throw Error(ErrorKind::InvalidArgument, "flip rates must lie in [0, 1]");
}

Dataset inject_bias(const Dataset& dataset, const BiasSpec& spec) {
  spec.validate();
  require_truth(dataset);
  if (dataset.class_count != 2)
    throw Error(ErrorKind::InvalidArgument, "label bias is defined for binary tasks only");

  Dataset out = dataset;
  const auto& truth = *dataset.true_label;
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    const int z = truth[n];
    int y = z;
    if (dataset.sensitive[n] == Group::A && z == 0) {
      if (rng::counter_uniform(spec.seed, n) < spec.rho_a) y = 1;
    } else if (dataset.sensitive[n] == Group::B && z == 1) {
      if (rng::counter_uniform(spec.seed, n) < spec.rho_b) y = 0;
    }
    out.observed_label[n] = y;
  }
  return out;
}

std::size_t FlipSummary::count(Group group, int from, int to) const {
  const auto k = static_cast<std::size_t>(class_count);
  return counts[static_cast<std::size_t>(group) * k * k + static_cast<std::size_t>(from) * k +
                static_cast<std::size_t>(to)];
}

std::size_t FlipSummary::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

FlipSummary flip_summary(const Dataset& dataset) {
  require_truth(dataset);
  const auto k = static_cast<std::size_t>(dataset.class_count);
  FlipSummary s;
  s.class_count = dataset.class_count;
  s.counts.assign(2 * k * k, 0);
  const auto& truth = *dataset.true_label;
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    const int z = truth[n];
    const int y = dataset.observed_label[n];
    if (y == z) continue;
    ++s.counts[static_cast<std::size_t>(dataset.sensitive[n]) * k * k +
               static_cast<std::size_t>(z) * k + static_cast<std::size_t>(y)];
  }
  return s;
}

std::vector<std::size_t> flipped_rows(const Dataset& dataset) {
  require_truth(dataset);
  std::vector<std::size_t> rows;
  for (std::size_t n = 0; n < dataset.size(); ++n)
    if (dataset.observed_label[n] != (*dataset.true_label)[n]) rows.push_back(n);
  return rows;
}

}  // namespace fairsel
