#include "fairsel/coteach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fairsel/error.hpp"
#include "fairsel/kernels.hpp"
#include "fairsel/rng.hpp"

namespace fairsel {

namespace {

constexpr std::uint64_t kModelASeedTag = 0xA;
constexpr std::uint64_t kModelBSeedTag = 0xB;

std::vector<int> gather_labels(const Dataset& dataset, std::span<const std::size_t> rows) {
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = dataset.observed_label[rows[i]];
  return labels;
}

std::vector<double> thresholds_for(const ConfidenceMatrix& conf, std::span<const int> labels,
                                   const CoteachConfig& config) {
  if (config.disable_inference)
    return std::vector<double>(static_cast<std::size_t>(conf.class_count()),
                               std::numeric_limits<double>::infinity());
  if (config.mode == ThresholdMode::Mean) return mean_thresholds(conf, labels);
  return compute_thresholds(conf, labels, config.nu, config.n_select_fraction).adjusted;
}

ModelVerdict judge(const Dataset& dataset, std::span<const std::size_t> batch,
                   std::span<const int> labels, const ModelParams& model, const char* name,
                   const CoteachConfig& config, const std::vector<double>* fixed) {
  ConfidenceMatrix conf{kernels::predict_proba(model, dataset.features, batch), name};
  ModelVerdict v;
  v.thresholds = fixed != nullptr && !config.disable_inference ? *fixed
                                                               : thresholds_for(conf, labels, config);
  const auto inferred = infer_true_labels(conf, v.thresholds, labels);
  v.joint = estimate_joint(labels, inferred, dataset.class_count);
  const SelectionOutcome outcome = off_diagonal(labels, inferred);
  v.flagged.reserve(outcome.off_diagonal.size());
  for (std::size_t pos : outcome.off_diagonal) v.flagged.push_back(batch[pos]);
  return v;
}

void check_model(const ModelParams& model, const Dataset& dataset) {
  if (model.input_dim() != dataset.dim() ||
      model.class_count() != static_cast<std::size_t>(dataset.class_count))
    throw Error(ErrorKind::DimensionMismatch, "model shape does not match dataset");
}

std::string batch_context(int epoch, std::size_t batch) {
  return "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch);
}

}  // namespace

void CoteachConfig::validate() const {
  train.validate();
  if (!(nu > 0.0) || !std::isfinite(nu)) throw Error(ErrorKind::Config, "nu must be > 0");
  if (!(n_select_fraction > 0.0 && n_select_fraction <= 1.0))
    throw Error(ErrorKind::Config, "n_select fraction must lie in (0, 1]");
}

std::vector<double> model_thresholds(const Dataset& dataset, std::span<const std::size_t> rows,
                                     const ModelParams& model, const CoteachConfig& config) {
  check_model(model, dataset);
  const auto labels = gather_labels(dataset, rows);
  ConfidenceMatrix conf{kernels::predict_proba(model, dataset.features, rows), "model"};
  return thresholds_for(conf, labels, config);
}

Selection select_fair_subset(const Dataset& dataset, std::span<const std::size_t> batch,
                             const ModelParams& model_a, const ModelParams& model_b,
                             const CoteachConfig& config, const FixedThresholds* fixed) {
  if (batch.empty()) throw Error(ErrorKind::EmptyInput, "empty batch");
  check_model(model_a, dataset);
  check_model(model_b, dataset);
  const auto labels = gather_labels(dataset, batch);

  Selection s;
  s.verdict_a = judge(dataset, batch, labels, model_a, "theta_A", config,
                      fixed ? &fixed->model_a : nullptr);
  s.verdict_b = judge(dataset, batch, labels, model_b, "theta_B", config,
                      fixed ? &fixed->model_b : nullptr);

  std::vector<std::size_t> a = s.verdict_a.flagged;
  std::vector<std::size_t> b = s.verdict_b.flagged;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(s.removed));

  s.selected.reserve(batch.size() - s.removed.size());
  for (std::size_t row : batch)
    if (!std::binary_search(s.removed.begin(), s.removed.end(), row)) s.selected.push_back(row);
  if (s.selected.size() + s.removed.size() != batch.size())
    throw std::logic_error("selected and removed sets do not partition the batch");
  return s;
}

nlohmann::json to_json(const BatchRecord& r) {
  auto thresholds = [](const std::vector<double>& t) {
    nlohmann::json out = nlohmann::json::array();
    for (double v : t) {
      if (std::isfinite(v))
        out.push_back(v);
      else
        out.push_back(nullptr);  // +infinity: class had no members
    }
    return out;
  };
  nlohmann::json j = {
      {"schema_version", kTraceSchemaVersion},
      {"epoch", r.epoch},
      {"batch", r.batch},
      {"batch_size", r.batch_size},
      {"group_a_size", r.group_a_size},
      {"group_b_size", r.group_b_size},
      {"flagged_a", r.flagged_a},
      {"flagged_b", r.flagged_b},
      {"removed", r.removed},
      {"selected", r.selected},
      {"thresholds_a", thresholds(r.thresholds_a)},
      {"thresholds_b", thresholds(r.thresholds_b)},
      {"loss_a", r.loss_a},
      {"loss_b", r.loss_b},
      {"loss_main", r.loss_main ? nlohmann::json(*r.loss_main) : nlohmann::json(nullptr)},
  };
  if (!r.rows.empty()) {
    j["rows"] = r.rows;
    j["removed_rows"] = r.removed_rows;
  }
  return j;
}

TrainingResult run_training(const Dataset& dataset, const CoteachConfig& config) {
  config.validate();
  dataset.validate();
  if (dataset.group_size(Group::A) == 0 || dataset.group_size(Group::B) == 0)
    throw Error(ErrorKind::EmptyGroup, "co-training needs both groups in the training set");

  const TrainConfig& tc = config.train;
  const std::size_t d = dataset.dim();
  const auto k = static_cast<std::size_t>(dataset.class_count);
  TrainingResult result{
      init_params(d, tc.hidden_width, k, tc.seed),
      init_params(d, tc.hidden_width, k, rng::derive_seed(tc.seed, kModelASeedTag)),
      init_params(d, tc.hidden_width, k, rng::derive_seed(tc.seed, kModelBSeedTag)),
      {},
      {},
      {}};
  std::vector<std::size_t> all_rows(dataset.size());
  for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const bool last_epoch = epoch + 1 == tc.epochs;
    std::optional<FixedThresholds> fixed;
    if (config.scope == ThresholdScope::Epoch && !config.disable_inference)
      fixed = FixedThresholds{model_thresholds(dataset, all_rows, result.model_a, config),
                              model_thresholds(dataset, all_rows, result.model_b, config)};

    const auto epoch_batches = batches(dataset, tc.batch_size, tc.seed, epoch);
    for (std::size_t b = 0; b < epoch_batches.size(); ++b) {
      const auto& batch = epoch_batches[b];
      std::vector<std::size_t> rows_a, rows_b;
      for (std::size_t row : batch) (dataset.sensitive[row] == Group::A ? rows_a : rows_b).push_back(row);
      if (rows_a.empty() || rows_b.empty())
        throw Error(ErrorKind::EmptyGroup, batch_context(epoch, b) + " lacks one group");

      BatchRecord rec;
      rec.epoch = epoch;
      rec.batch = b;
      rec.batch_size = batch.size();
      rec.group_a_size = rows_a.size();
      rec.group_b_size = rows_b.size();

      const auto step_a = kernels::loss_and_gradient(
          result.model_a, BatchRef{dataset.features, dataset.observed_label, rows_a});
      sgd_step_inplace(result.model_a, step_a.grad, tc.learning_rate);
      const auto step_b = kernels::loss_and_gradient(
          result.model_b, BatchRef{dataset.features, dataset.observed_label, rows_b});
      sgd_step_inplace(result.model_b, step_b.grad, tc.learning_rate);
      rec.loss_a = step_a.loss;
      rec.loss_b = step_b.loss;

      Selection sel;
      try {
        sel = select_fair_subset(dataset, batch, result.model_a, result.model_b, config,
                                 fixed ? &*fixed : nullptr);
      } catch (const Error& e) {
        throw Error(e.kind(), batch_context(epoch, b) + ": " + e.what());
      }

      if (!sel.selected.empty()) {
        const auto step = kernels::loss_and_gradient(
            result.model, BatchRef{dataset.features, dataset.observed_label, sel.selected});
        sgd_step_inplace(result.model, step.grad, tc.learning_rate);
        rec.loss_main = step.loss;
      }
      if (!result.model.all_finite() || !result.model_a.all_finite() || !result.model_b.all_finite())
        throw Error(ErrorKind::InvalidArgument,
                    batch_context(epoch, b) + ": parameters became non-finite");

      rec.flagged_a = sel.verdict_a.flagged.size();
      rec.flagged_b = sel.verdict_b.flagged.size();
      rec.removed = sel.removed.size();
      rec.selected = sel.selected.size();
      rec.thresholds_a = std::move(sel.verdict_a.thresholds);
      rec.thresholds_b = std::move(sel.verdict_b.thresholds);
      if (config.keep_trace_rows) {
        rec.rows = batch;
        rec.removed_rows = sel.removed;
      }
      if (last_epoch) {
        result.final_selected.insert(result.final_selected.end(), sel.selected.begin(),
                                     sel.selected.end());
        result.final_removed.insert(result.final_removed.end(), sel.removed.begin(),
                                    sel.removed.end());
      }
      result.trace.push_back(std::move(rec));
    }
  }
  std::sort(result.final_selected.begin(), result.final_selected.end());
  std::sort(result.final_removed.begin(), result.final_removed.end());

  if (config.retrain_on_selected) {
    const Dataset kept = dataset.subset(result.final_selected);
    if (kept.group_size(Group::A) == 0 || kept.group_size(Group::B) == 0)
      throw Error(ErrorKind::EmptyGroup, "selected set lacks one group; cannot retrain");
    result.model = train_baseline_erm(kept, tc);
  }
  return result;
}

ModelParams train_baseline_erm(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  dataset.validate();
  if (dataset.size() == 0) throw Error(ErrorKind::EmptyInput, "cannot train on an empty dataset");
  ModelParams model = init_params(dataset.dim(), config.hidden_width,
                                  static_cast<std::size_t>(dataset.class_count), config.seed);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& batch : batches(dataset, config.batch_size, config.seed, epoch)) {
      const auto step =
          kernels::loss_and_gradient(model, BatchRef{dataset.features, dataset.observed_label, batch});
      sgd_step_inplace(model, step.grad, config.learning_rate);
    }
  }
  if (!model.all_finite()) throw Error(ErrorKind::InvalidArgument, "parameters became non-finite");
  return model;
}

}  // namespace fairsel
