#pragma once

// Configuration-driven experiment runner behind the `fairsel` CLI.
//
// Trial protocol (per trial t of trial_count):
//   1. shuffle and hold out test_fraction of the data (labels stay clean);
//   2. inject label bias into the remaining rows;
//   3. carve validation_fraction of the biased rows off as a validation set;
//   4. standardize features with training statistics;
//   5. train every requested method on the same split and seeds;
//   6. score on the test set against the true labels.
//
// Seeds: every random component draws from rng::derive_seed(seed, t, stream)
// with a fixed stream id per component (see SeedStream), so a config file
// fully determines every number written.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fairsel/bias.hpp"
#include "fairsel/coteach.hpp"
#include "fairsel/data.hpp"
#include "fairsel/metrics.hpp"

namespace fairsel {

enum class Method { Truncated, Mean, Erm };

std::string method_name(Method m);  // "T", "M", "ERM"
Method parse_method(const std::string& name);

enum class SeedStream : std::uint64_t {
  TestSplit = 1,
  Bias = 2,
  ValidationSplit = 3,
  Training = 4,
};

std::uint64_t trial_seed(std::uint64_t master, int trial, SeedStream stream);

struct CsvSource {
  std::filesystem::path path;
  Schema schema;
};

enum class TraceLevel { None, First, All };

struct SweepGrid {
  std::vector<double> nu;
  std::vector<double> n_select;
};

struct RunConfig {
  std::uint64_t seed = 2024;
  std::variant<SyntheticSpec, CsvSource> source = SyntheticSpec{};
  double rho_a = 0.2;
  double rho_b = 0.2;
  double test_fraction = 0.2;
  double validation_fraction = 0.1;
  int trial_count = 10;
  std::vector<Method> methods{Method::Truncated};
  CoteachConfig coteach;  // train.seed is replaced per trial
  std::optional<SweepGrid> sweep;
  std::filesystem::path output_dir;
  TraceLevel trace = TraceLevel::First;
  bool save_models = false;

  void validate() const;
};

/// Unknown keys are rejected so typos do not silently fall back to defaults.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// One method's outcome on one trial.
struct MethodResult {
  int trial = 0;
  Method method = Method::Truncated;
  double rho_a = 0.0;
  double rho_b = 0.0;
  std::optional<double> nu;        // absent for ERM
  std::optional<double> n_select;  // absent for ERM
  EvalReport test;
  std::optional<EvalReport> validation;
  std::size_t selected = 0;  // final-epoch selected rows (all rows for ERM)
  std::size_t removed = 0;
};

/// Aggregate of all trials sharing (method, rho_a, rho_b, nu, n_select).
struct GroupSummary {
  Method method = Method::Truncated;
  double rho_a = 0.0;
  double rho_b = 0.0;
  std::optional<double> nu;
  std::optional<double> n_select;
  AggregateReport test;
  std::optional<AggregateReport> validation;
};

struct RunResult {
  std::vector<MethodResult> results;  // trial-major, methods in config order
  std::vector<GroupSummary> groups;
};

/// Writes the synthetic dataset (with its z column) to `out`.
void cmd_synth(const RunConfig& config, const std::filesystem::path& out);

/// Runs every trial. When output_dir is set, writes trial_<i>.json,
/// aggregate.json, aggregate.txt, trace.jsonl and config.json there.
RunResult cmd_run(const RunConfig& config);

struct SweepCell {
  double nu = 0.0;
  double n_select = 0.0;
  std::optional<RunResult> result;
  std::optional<std::string> error;  // set when the cell failed
};

struct SweepResult {
  std::vector<SweepCell> cells;  // nu-major
  std::optional<std::size_t> selected_cell;
};

/// Runs cmd_run for every (nu, n_select) pair, each into its own
/// subdirectory, and writes sweep.json / sweep.txt. The selected cell has the
/// lowest mean validation error of the first co-training method, ties broken
/// by lower validation DEO.
SweepResult cmd_sweep(const RunConfig& config);

/// Re-aggregates every trial_*.json under `dir` (recursively) and writes
/// report.json / report.txt into it.
std::vector<GroupSummary> cmd_report(const std::filesystem::path& dir);

std::vector<GroupSummary> group_results(const std::vector<MethodResult>& results);
nlohmann::json groups_to_json(const std::vector<GroupSummary>& groups);
std::string format_table(const std::vector<GroupSummary>& groups);

}  // namespace fairsel
