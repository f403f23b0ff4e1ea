#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fairsel/confident.hpp"
#include "fairsel/data.hpp"
#include "fairsel/nn.hpp"

namespace fairsel {

/// Mean: per-class mean thresholds, no margin ("M").
/// Truncated: psi-truncated thresholds lowered by the concentration margin ("T").
enum class ThresholdMode { Mean, Truncated };

/// Batch: thresholds from each batch's own confidences.
/// Epoch: thresholds from the whole training set, refreshed at epoch start.
enum class ThresholdScope { Batch, Epoch };

struct CoteachConfig {
  double nu = 0.01;
  double n_select_fraction = 0.6;
  ThresholdMode mode = ThresholdMode::Truncated;
  ThresholdScope scope = ThresholdScope::Batch;
  TrainConfig train;
  /// Every threshold becomes +infinity: nothing is inferred, nothing removed.
  bool disable_inference = false;
  /// After the online loop, retrain a fresh model on the final epoch's
  /// selected rows for train.epochs epochs.
  bool retrain_on_selected = false;
  /// Keep row ids in the trace (memory heavy on large data).
  bool keep_trace_rows = false;

  void validate() const;
};

/// One model's verdict on a batch.
struct ModelVerdict {
  std::vector<double> thresholds;
  JointEstimate joint;
  std::vector<std::size_t> flagged;  // dataset row ids, off-diagonal
};

struct Selection {
  std::vector<std::size_t> selected;  // dataset row ids, batch order
  std::vector<std::size_t> removed;   // union of both flagged sets, ascending
  ModelVerdict verdict_a;
  ModelVerdict verdict_b;
};

/// Per-model thresholds to use instead of recomputing from the batch.
struct FixedThresholds {
  std::vector<double> model_a;
  std::vector<double> model_b;
};

/// Evaluates the whole batch with both group models, derives each model's
/// thresholds, infers true labels and removes the union of the two
/// off-diagonal sets. Throws Error{DegenerateThreshold} when
/// n_select_fraction * |batch| <= nu in truncated mode.
Selection select_fair_subset(const Dataset& dataset, std::span<const std::size_t> batch,
                             const ModelParams& model_a, const ModelParams& model_b,
                             const CoteachConfig& config,
                             const FixedThresholds* fixed = nullptr);

/// Thresholds one model would use over `rows` under `config`.
std::vector<double> model_thresholds(const Dataset& dataset, std::span<const std::size_t> rows,
                                     const ModelParams& model, const CoteachConfig& config);

struct BatchRecord {
  int epoch = 0;
  std::size_t batch = 0;
  std::size_t batch_size = 0;
  std::size_t group_a_size = 0;
  std::size_t group_b_size = 0;
  std::size_t flagged_a = 0;
  std::size_t flagged_b = 0;
  std::size_t removed = 0;
  std::size_t selected = 0;
  std::vector<double> thresholds_a;
  std::vector<double> thresholds_b;
  double loss_a = 0.0;
  double loss_b = 0.0;
  std::optional<double> loss_main;  // absent when nothing was selected
  // Filled only with keep_trace_rows.
  std::vector<std::size_t> rows;
  std::vector<std::size_t> removed_rows;
};

inline constexpr int kTraceSchemaVersion = 1;

nlohmann::json to_json(const BatchRecord& record);

struct TrainingResult {
  ModelParams model;
  ModelParams model_a;
  ModelParams model_b;
  std::vector<BatchRecord> trace;
  /// Union over the final epoch's batches, ascending row ids.
  std::vector<std::size_t> final_selected;
  std::vector<std::size_t> final_removed;
};

/// Seed layout: the main model and the batch order use train.seed exactly
/// like train_baseline_erm; the group models use seeds derived from it.
TrainingResult run_training(const Dataset& dataset, const CoteachConfig& config);

/// Plain SGD on every observed label, same batching as run_training.
ModelParams train_baseline_erm(const Dataset& dataset, const TrainConfig& config);

}  // namespace fairsel
