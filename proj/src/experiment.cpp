#include "fairsel/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "fairsel/error.hpp"
#include "fairsel/rng.hpp"

namespace fairsel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOutputSchemaVersion = 1;

// ---- config parsing --------------------------------------------------------

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <std::size_t N>
void read_array(const json& j, const char* key, std::array<double, N>& out) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != N) throw Error(ErrorKind::Config, std::string(key) + " must have " + std::to_string(N) + " entries");
  std::copy(v.begin(), v.end(), out.begin());
}

SyntheticSpec parse_synthetic(const json& j) {
  check_keys(j, {"n", "seed", "positive_mean", "positive_cov", "negative_mean", "negative_cov",
                 "covariance_scale", "rotation", "group_log_odds"},
             "dataset.synthetic");
  SyntheticSpec s;
  read(j, "n", s.n);
  read(j, "seed", s.seed);
  read_array(j, "positive_mean", s.positive_mean);
  read_array(j, "positive_cov", s.positive_cov);
  read_array(j, "negative_mean", s.negative_mean);
  read_array(j, "negative_cov", s.negative_cov);
  read(j, "covariance_scale", s.covariance_scale);
  read(j, "rotation", s.rotation);
  read(j, "group_log_odds", s.group_log_odds);
  return s;
}

CsvSource parse_csv(const json& j) {
  check_keys(j, {"path", "features", "sensitive", "privileged_value", "unprivileged_value", "label",
                 "true_label", "delimiter", "class_count"},
             "dataset.csv");
  CsvSource c;
  c.path = j.at("path").get<std::string>();
  c.schema.feature_columns = j.at("features").get<std::vector<std::string>>();
  c.schema.sensitive_column = j.at("sensitive").get<std::string>();
  c.schema.privileged_value = j.at("privileged_value").get<std::string>();
  if (j.contains("unprivileged_value")) c.schema.unprivileged_value = j.at("unprivileged_value").get<std::string>();
  c.schema.label_column = j.at("label").get<std::string>();
  if (j.contains("true_label")) c.schema.true_label_column = j.at("true_label").get<std::string>();
  if (j.contains("delimiter")) {
    const auto d = j.at("delimiter").get<std::string>();
    if (d.size() != 1) throw Error(ErrorKind::Config, "delimiter must be one character");
    c.schema.delimiter = d[0];
  }
  read(j, "class_count", c.schema.class_count);
  return c;
}

ThresholdScope parse_scope(const std::string& s) {
  if (s == "batch") return ThresholdScope::Batch;
  if (s == "epoch") return ThresholdScope::Epoch;
  throw Error(ErrorKind::Config, "threshold_scope must be 'batch' or 'epoch'");
}

TraceLevel parse_trace(const std::string& s) {
  if (s == "none") return TraceLevel::None;
  if (s == "first") return TraceLevel::First;
  if (s == "all") return TraceLevel::All;
  throw Error(ErrorKind::Config, "trace must be 'none', 'first' or 'all'");
}

const char* trace_name(TraceLevel t) {
  switch (t) {
    case TraceLevel::None: return "none";
    case TraceLevel::First: return "first";
    case TraceLevel::All: return "all";
  }
  return "first";
}

// ---- trial machinery -------------------------------------------------------

std::uint64_t label_checksum(const std::vector<int>& labels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (int v : labels) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

Dataset load_source(const RunConfig& config) {
  Dataset ds = std::visit(
      [](const auto& src) -> Dataset {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, SyntheticSpec>)
          return generate_synthetic(src);
        else
          return load_csv(src.path, src.schema);
      },
      config.source);
  // Without a ground-truth column the file's labels are taken as the truth.
  if (!ds.true_label) {
    ds.true_label = ds.observed_label;
    if (!ds.schema.true_label_column) ds.schema.true_label_column = "z";
  }
  ds.validate();
  return ds;
}

struct TrialOutput {
  json record;
  std::vector<MethodResult> results;
  std::vector<json> trace;
  std::vector<std::pair<std::string, ModelParams>> models;
};

Dataset without_truth(Dataset ds) {
  ds.true_label.reset();
  return ds;
}

std::optional<EvalReport> validation_report(const ModelParams& model, const Dataset& val) {
  if (val.size() == 0) return std::nullopt;
  const Dataset observed_only = without_truth(val);
  const auto pred = predict(model, observed_only.features);
  return evaluate(pred, observed_only);
}

TrialOutput run_trial(const RunConfig& config, const Dataset& full, int trial) {
  TrialOutput out;
  const std::uint64_t split_seed = trial_seed(config.seed, trial, SeedStream::TestSplit);
  const std::uint64_t bias_seed = trial_seed(config.seed, trial, SeedStream::Bias);
  const std::uint64_t val_seed = trial_seed(config.seed, trial, SeedStream::ValidationSplit);
  const std::uint64_t train_seed = trial_seed(config.seed, trial, SeedStream::Training);

  auto [rest_rows, test_rows] = split_indices(full.size(), config.test_fraction, split_seed);
  Dataset test = full.subset(test_rows);
  const std::uint64_t test_checksum = label_checksum(*test.true_label);

  BiasSpec bias{config.rho_a, config.rho_b, bias_seed,
                config.rho_a == config.rho_b ? BiasMode::Symmetric : BiasMode::Asymmetric};
  const Dataset biased = inject_bias(full.subset(rest_rows), bias);
  auto [train, val] = split_train_val(biased, SplitSpec{config.validation_fraction, val_seed, 1});
  standardize(train, {&val, &test});
  const FlipSummary flips = flip_summary(train);

  for (Method method : config.methods) {
    MethodResult r;
    r.trial = trial;
    r.method = method;
    r.rho_a = config.rho_a;
    r.rho_b = config.rho_b;
    CoteachConfig cc = config.coteach;
    cc.train.seed = train_seed;
    cc.mode = method == Method::Mean ? ThresholdMode::Mean : ThresholdMode::Truncated;

    ModelParams model;
    std::optional<DetectionScores> detection;
    try {
      if (method == Method::Erm) {
        model = train_baseline_erm(train, cc.train);
        r.selected = train.size();
      } else {
        r.nu = cc.nu;
        r.n_select = cc.n_select_fraction;
        TrainingResult tr = run_training(train, cc);
        model = std::move(tr.model);
        r.selected = tr.final_selected.size();
        r.removed = tr.final_removed.size();
        detection = detection_scores(tr.final_removed, train);
        const bool keep = config.trace == TraceLevel::All || (config.trace == TraceLevel::First && trial == 0);
        if (keep) {
          for (const BatchRecord& rec : tr.trace) {
            json line = to_json(rec);
            line["trial"] = trial;
            line["method"] = method_name(method);
            out.trace.push_back(std::move(line));
          }
        }
      }
      const auto pred = predict(model, test.features);
      r.test = evaluate(pred, test, detection);
      r.validation = validation_report(model, val);
    } catch (const Error& e) {
      throw Error(e.kind(), "trial " + std::to_string(trial) + ", method " + method_name(method) +
                                ": " + e.what());
    }
    if (config.save_models) out.models.emplace_back(method_name(method), model);
    out.results.push_back(std::move(r));
  }

  if (label_checksum(*test.true_label) != test_checksum)
    throw std::logic_error("test labels changed during trial " + std::to_string(trial));

  json results = json::array();
  for (const MethodResult& r : out.results) {
    results.push_back({
        {"method", method_name(r.method)},
        {"rho_A", r.rho_a},
        {"rho_B", r.rho_b},
        {"nu", r.nu ? json(*r.nu) : json(nullptr)},
        {"n_select", r.n_select ? json(*r.n_select) : json(nullptr)},
        {"test", to_json(r.test)},
        {"validation", r.validation ? to_json(*r.validation) : json(nullptr)},
        {"selection", {{"selected", r.selected}, {"removed", r.removed}}},
    });
  }
  out.record = {
      {"schema_version", kOutputSchemaVersion},
      {"trial", trial},
      {"seeds",
       {{"test_split", split_seed}, {"bias", bias_seed}, {"validation_split", val_seed}, {"training", train_seed}}},
      {"sizes", {{"train", train.size()}, {"validation", val.size()}, {"test", test.size()}}},
      {"train_flips",
       {{"A_0_to_1", flips.count(Group::A, 0, 1)},
        {"A_1_to_0", flips.count(Group::A, 1, 0)},
        {"B_0_to_1", flips.count(Group::B, 0, 1)},
        {"B_1_to_0", flips.count(Group::B, 1, 0)}}},
      {"test_label_checksum", hex(test_checksum)},
      {"results", results},
  };
  return out;
}

MethodResult result_from_json(const json& entry, int trial) {
  MethodResult r;
  r.trial = trial;
  r.method = parse_method(entry.at("method").get<std::string>());
  r.rho_a = entry.at("rho_A").get<double>();
  r.rho_b = entry.at("rho_B").get<double>();
  if (!entry.at("nu").is_null()) r.nu = entry.at("nu").get<double>();
  if (!entry.at("n_select").is_null()) r.n_select = entry.at("n_select").get<double>();
  r.test = eval_report_from_json(entry.at("test"));
  if (!entry.at("validation").is_null()) r.validation = eval_report_from_json(entry.at("validation"));
  r.selected = entry.at("selection").at("selected").get<std::size_t>();
  r.removed = entry.at("selection").at("removed").get<std::size_t>();
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string mean_std(const AggregateReport& r, const std::string& metric, double scale, int digits) {
  const auto it = r.metrics.find(metric);
  if (it == r.metrics.end() || it->second.count == 0) return "n/a";
  return fixed(it->second.mean * scale, digits) + "±" + fixed(it->second.stddev * scale, digits);
}

std::string pad(std::string s, std::size_t width) {
  // Count code points so the two-byte '±' does not skew alignment.
  std::size_t visible = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++visible;
  if (visible < width) s.append(width - visible, ' ');
  return s;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Truncated: return "T";
    case Method::Mean: return "M";
    case Method::Erm: return "ERM";
  }
  return "T";
}

Method parse_method(const std::string& name) {
  if (name == "T") return Method::Truncated;
  if (name == "M") return Method::Mean;
  if (name == "ERM") return Method::Erm;
  throw Error(ErrorKind::Config, "unknown method '" + name + "' (expected T, M or ERM)");
}

std::uint64_t trial_seed(std::uint64_t master, int trial, SeedStream stream) {
  return rng::derive_seed(master, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(stream));
}

void RunConfig::validate() const {
  coteach.validate();
  BiasSpec{rho_a, rho_b, 0, BiasMode::Symmetric}.validate();
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorKind::Config, "test_fraction must lie in (0, 1)");
  SplitSpec{validation_fraction, 0, trial_count}.validate();
  if (methods.empty()) throw Error(ErrorKind::Config, "at least one method is required");
  if (sweep && (sweep->nu.empty() || sweep->n_select.empty()))
    throw Error(ErrorKind::Config, "sweep grids must be nonempty");
}

RunConfig parse_config(const json& j) {
  try {
    check_keys(j, {"seed", "dataset", "bias", "split", "methods", "coteach", "sweep", "output"}, "config");
    RunConfig c;
    read(j, "seed", c.seed);
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      check_keys(d, {"synthetic", "csv"}, "dataset");
      if (d.contains("synthetic") == d.contains("csv"))
        throw Error(ErrorKind::Config, "dataset needs exactly one of 'synthetic' or 'csv'");
      if (d.contains("synthetic"))
        c.source = parse_synthetic(d.at("synthetic"));
      else
        c.source = parse_csv(d.at("csv"));
    }
    if (j.contains("bias")) {
      const json& b = j.at("bias");
      check_keys(b, {"rho_A", "rho_B"}, "bias");
      read(b, "rho_A", c.rho_a);
      read(b, "rho_B", c.rho_b);
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      check_keys(s, {"test_fraction", "validation_fraction", "trial_count"}, "split");
      read(s, "test_fraction", c.test_fraction);
      read(s, "validation_fraction", c.validation_fraction);
      read(s, "trial_count", c.trial_count);
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("coteach")) {
      const json& t = j.at("coteach");
      check_keys(t, {"nu", "n_select", "threshold_scope", "retrain_on_selected", "train"}, "coteach");
      read(t, "nu", c.coteach.nu);
      read(t, "n_select", c.coteach.n_select_fraction);
      if (t.contains("threshold_scope")) c.coteach.scope = parse_scope(t.at("threshold_scope").get<std::string>());
      read(t, "retrain_on_selected", c.coteach.retrain_on_selected);
      if (t.contains("train")) {
        const json& tr = t.at("train");
        check_keys(tr, {"learning_rate", "epochs", "batch_size", "hidden_width"}, "coteach.train");
        read(tr, "learning_rate", c.coteach.train.learning_rate);
        read(tr, "epochs", c.coteach.train.epochs);
        read(tr, "batch_size", c.coteach.train.batch_size);
        read(tr, "hidden_width", c.coteach.train.hidden_width);
      }
    }
    if (j.contains("sweep")) {
      const json& s = j.at("sweep");
      check_keys(s, {"nu", "n_select"}, "sweep");
      c.sweep = SweepGrid{s.at("nu").get<std::vector<double>>(), s.at("n_select").get<std::vector<double>>()};
    }
    if (j.contains("output")) {
      const json& o = j.at("output");
      check_keys(o, {"directory", "trace", "save_models"}, "output");
      if (o.contains("directory")) c.output_dir = o.at("directory").get<std::string>();
      if (o.contains("trace")) c.trace = parse_trace(o.at("trace").get<std::string>());
      read(o, "save_models", c.save_models);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed config: ") + e.what());
  }
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json dataset;
  if (const auto* s = std::get_if<SyntheticSpec>(&c.source)) {
    dataset["synthetic"] = {
        {"n", s->n},
        {"seed", s->seed},
        {"positive_mean", s->positive_mean},
        {"positive_cov", s->positive_cov},
        {"negative_mean", s->negative_mean},
        {"negative_cov", s->negative_cov},
        {"covariance_scale", s->covariance_scale},
        {"rotation", s->rotation},
        {"group_log_odds", s->group_log_odds},
    };
  } else {
    const auto& csv = std::get<CsvSource>(c.source);
    json j = {
        {"path", csv.path.string()},
        {"features", csv.schema.feature_columns},
        {"sensitive", csv.schema.sensitive_column},
        {"privileged_value", csv.schema.privileged_value},
        {"label", csv.schema.label_column},
        {"delimiter", std::string(1, csv.schema.delimiter)},
        {"class_count", csv.schema.class_count},
    };
    if (csv.schema.unprivileged_value) j["unprivileged_value"] = *csv.schema.unprivileged_value;
    if (csv.schema.true_label_column) j["true_label"] = *csv.schema.true_label_column;
    dataset["csv"] = j;
  }
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  json out = {
      {"seed", c.seed},
      {"dataset", dataset},
      {"bias", {{"rho_A", c.rho_a}, {"rho_B", c.rho_b}}},
      {"split",
       {{"test_fraction", c.test_fraction},
        {"validation_fraction", c.validation_fraction},
        {"trial_count", c.trial_count}}},
      {"methods", methods},
      {"coteach",
       {{"nu", c.coteach.nu},
        {"n_select", c.coteach.n_select_fraction},
        {"threshold_scope", c.coteach.scope == ThresholdScope::Batch ? "batch" : "epoch"},
        {"retrain_on_selected", c.coteach.retrain_on_selected},
        {"train",
         {{"learning_rate", c.coteach.train.learning_rate},
          {"epochs", c.coteach.train.epochs},
          {"batch_size", c.coteach.train.batch_size},
          {"hidden_width", c.coteach.train.hidden_width}}}}},
      {"output",
       {{"directory", c.output_dir.string()}, {"trace", trace_name(c.trace)}, {"save_models", c.save_models}}},
  };
  if (c.sweep) out["sweep"] = {{"nu", c.sweep->nu}, {"n_select", c.sweep->n_select}};
  return out;
}

void cmd_synth(const RunConfig& config, const fs::path& out) {
  const auto* spec = std::get_if<SyntheticSpec>(&config.source);
  if (spec == nullptr) throw Error(ErrorKind::Config, "synth needs a synthetic dataset source");
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_csv(generate_synthetic(*spec), out);
}

std::vector<GroupSummary> group_results(const std::vector<MethodResult>& results) {
  using Key = std::tuple<int, double, double, double, double>;
  std::map<Key, std::vector<const MethodResult*>> buckets;
  for (const MethodResult& r : results) {
    const Key key{static_cast<int>(r.method), r.rho_a, r.rho_b, r.nu.value_or(-1.0), r.n_select.value_or(-1.0)};
    buckets[key].push_back(&r);
  }
  std::vector<GroupSummary> groups;
  for (auto& [key, members] : buckets) {
    std::stable_sort(members.begin(), members.end(),
                     [](const MethodResult* a, const MethodResult* b) { return a->trial < b->trial; });
    GroupSummary g;
    g.method = members.front()->method;
    g.rho_a = members.front()->rho_a;
    g.rho_b = members.front()->rho_b;
    g.nu = members.front()->nu;
    g.n_select = members.front()->n_select;
    std::vector<EvalReport> test, val;
    for (const MethodResult* m : members) {
      test.push_back(m->test);
      if (m->validation) val.push_back(*m->validation);
    }
    g.test = aggregate(test);
    if (!val.empty()) g.validation = aggregate(val);
    groups.push_back(std::move(g));
  }
  return groups;
}

json groups_to_json(const std::vector<GroupSummary>& groups) {
  json arr = json::array();
  for (const GroupSummary& g : groups) {
    arr.push_back({
        {"method", method_name(g.method)},
        {"rho_A", g.rho_a},
        {"rho_B", g.rho_b},
        {"nu", g.nu ? json(*g.nu) : json(nullptr)},
        {"n_select", g.n_select ? json(*g.n_select) : json(nullptr)},
        {"test", to_json(g.test)},
        {"validation", g.validation ? to_json(*g.validation) : json(nullptr)},
    });
  }
  return {{"schema_version", kOutputSchemaVersion}, {"groups", arr}};
}

std::string format_table(const std::vector<GroupSummary>& groups) {
  const std::vector<std::pair<std::string, std::size_t>> columns = {
      {"Method", 8}, {"rho_A", 7}, {"rho_B", 7}, {"nu", 9}, {"N_s", 6}, {"Trials", 8},
      {"Err.(%)", 14}, {"Vio.(DEO)", 13}, {"DP", 13}, {"p%", 13}, {"Recall", 13}};
  std::ostringstream out;
  for (const auto& [name, width] : columns) out << pad(name, width);
  out << '\n';
  for (const GroupSummary& g : groups) {
    std::vector<std::string> cells = {
        method_name(g.method),
        fixed(g.rho_a, 2),
        fixed(g.rho_b, 2),
        g.nu ? fixed(*g.nu, 4) : "-",
        g.n_select ? fixed(*g.n_select, 2) : "-",
        std::to_string(g.test.trial_count),
        mean_std(g.test, "test_error", 100.0, 2),
        mean_std(g.test, "deo", 1.0, 3),
        mean_std(g.test, "dp_distance", 1.0, 3),
        mean_std(g.test, "p_percent", 1.0, 3),
        mean_std(g.test, "detection_recall", 1.0, 3),
    };
    for (std::size_t i = 0; i < cells.size(); ++i) out << pad(cells[i], columns[i].second);
    out << '\n';
  }
  return out.str();
}

RunResult cmd_run(const RunConfig& config) {
  config.validate();
  const Dataset full = load_source(config);
  const std::size_t approx_train = static_cast<std::size_t>(
      static_cast<double>(full.size()) * (1.0 - config.test_fraction) * (1.0 - config.validation_fraction));
  const double population = static_cast<double>(std::min(config.coteach.train.batch_size, approx_train));
  for (Method m : config.methods)
    if (m == Method::Truncated && !(config.coteach.n_select_fraction * population > config.coteach.nu))
      throw Error(ErrorKind::DegenerateThreshold,
                  "N_s * batch = " + std::to_string(config.coteach.n_select_fraction * population) +
                      " does not exceed nu = " + std::to_string(config.coteach.nu));

  const int trials = config.trial_count;
  std::vector<TrialOutput> outputs(static_cast<std::size_t>(trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(trials));

#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < trials; ++t) {
    try {
      outputs[static_cast<std::size_t>(t)] = run_trial(config, full, t);
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunResult result;
  for (const TrialOutput& o : outputs)
    result.results.insert(result.results.end(), o.results.begin(), o.results.end());
  result.groups = group_results(result.results);

  if (!config.output_dir.empty()) {
    const fs::path& dir = config.output_dir;
    fs::create_directories(dir);
    write_text(dir / "config.json", to_json(config).dump(2) + "\n");
    std::string trace;
    for (int t = 0; t < trials; ++t) {
      const TrialOutput& o = outputs[static_cast<std::size_t>(t)];
      write_text(dir / ("trial_" + std::to_string(t) + ".json"), o.record.dump(2) + "\n");
      for (const json& line : o.trace) trace += line.dump() + "\n";
      if (!o.models.empty()) fs::create_directories(dir / "models");
      for (const auto& [name, model] : o.models)
        save_params(model, dir / "models" / (name + "_" + std::to_string(t) + ".json"));
    }
    write_text(dir / "trace.jsonl", trace);
    write_text(dir / "aggregate.json", groups_to_json(result.groups).dump(2) + "\n");
    write_text(dir / "aggregate.txt", format_table(result.groups));
  }
  return result;
}

SweepResult cmd_sweep(const RunConfig& config) {
  config.validate();
  if (!config.sweep) throw Error(ErrorKind::Config, "sweep requested without sweep grids");
  SweepResult sweep;
  for (double nu : config.sweep->nu) {
    for (double ns : config.sweep->n_select) {
      SweepCell cell{nu, ns, std::nullopt, std::nullopt};
      RunConfig cell_config = config;
      cell_config.sweep.reset();
      cell_config.coteach.nu = nu;
      cell_config.coteach.n_select_fraction = ns;
      if (!config.output_dir.empty())
        cell_config.output_dir = config.output_dir / ("cell_" + std::to_string(sweep.cells.size()));
      try {
        cell.result = cmd_run(cell_config);
      } catch (const Error& e) {
        cell.error = std::string(to_string(e.kind())) + ": " + e.what();
      }
      sweep.cells.push_back(std::move(cell));
    }
  }

  const auto first_cotrain = std::find_if(config.methods.begin(), config.methods.end(),
                                          [](Method m) { return m != Method::Erm; });
  std::optional<std::pair<double, double>> best;
  for (std::size_t i = 0; i < sweep.cells.size() && first_cotrain != config.methods.end(); ++i) {
    const auto& cell = sweep.cells[i];
    if (!cell.result) continue;
    for (const GroupSummary& g : cell.result->groups) {
      if (g.method != *first_cotrain || !g.validation) continue;
      const auto err = g.validation->metrics.find("test_error");
      const auto dv = g.validation->metrics.find("deo");
      const double e = err->second.mean;
      const double d = dv != g.validation->metrics.end() ? dv->second.mean : INFINITY;
      if (!best || e < best->first || (e == best->first && d < best->second)) {
        best = {e, d};
        sweep.selected_cell = i;
      }
    }
  }

  if (!config.output_dir.empty()) {
    json cells = json::array();
    std::ostringstream text;
    text << pad("Cell", 6) << pad("nu", 9) << pad("N_s", 6) << pad("Status", 8) << pad("Method", 8)
         << pad("Err.(%)", 14) << pad("Vio.(DEO)", 13) << pad("DP", 13) << pad("p%", 13) << pad("ValErr.(%)", 14)
         << '\n';
    for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
      const SweepCell& c = sweep.cells[i];
      const bool selected = sweep.selected_cell == i;
      json jc = {{"cell", i}, {"nu", c.nu}, {"n_select", c.n_select}, {"selected", selected},
                 {"directory", "cell_" + std::to_string(i)}};
      if (c.result) {
        jc["status"] = "ok";
        jc["groups"] = groups_to_json(c.result->groups).at("groups");
        for (const GroupSummary& g : c.result->groups) {
          text << pad(std::to_string(i) + (selected ? "*" : ""), 6) << pad(fixed(c.nu, 4), 9)
               << pad(fixed(c.n_select, 2), 6) << pad("ok", 8) << pad(method_name(g.method), 8)
               << pad(mean_std(g.test, "test_error", 100.0, 2), 14) << pad(mean_std(g.test, "deo", 1.0, 3), 13)
               << pad(mean_std(g.test, "dp_distance", 1.0, 3), 13) << pad(mean_std(g.test, "p_percent", 1.0, 3), 13)
               << pad(g.validation ? mean_std(*g.validation, "test_error", 100.0, 2) : "n/a", 14) << '\n';
        }
      } else {
        jc["status"] = "failed";
        jc["error"] = *c.error;
        text << pad(std::to_string(i), 6) << pad(fixed(c.nu, 4), 9) << pad(fixed(c.n_select, 2), 6)
             << pad("failed", 8) << *c.error << '\n';
      }
      cells.push_back(std::move(jc));
    }
    fs::create_directories(config.output_dir);
    write_text(config.output_dir / "config.json", to_json(config).dump(2) + "\n");
    write_text(config.output_dir / "sweep.json",
               json{{"schema_version", kOutputSchemaVersion},
                    {"cells", cells},
                    {"selected_cell", sweep.selected_cell ? json(*sweep.selected_cell) : json(nullptr)}}
                       .dump(2) + "\n");
    write_text(config.output_dir / "sweep.txt", text.str());
  }
  return sweep;
}

std::vector<GroupSummary> cmd_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    static const std::regex pattern(R"(trial_\d+\.json)");
    if (entry.is_regular_file() && std::regex_match(entry.path().filename().string(), pattern))
      files.push_back(entry.path());
  }
  if (files.empty()) throw Error(ErrorKind::EmptyInput, "no trial_*.json files under " + dir.string());
  std::sort(files.begin(), files.end());

  std::vector<MethodResult> results;
  for (const fs::path& file : files) {
    try {
      std::ifstream in(file);
      if (!in) throw Error(ErrorKind::Io, "cannot read " + file.string());
      const json j = json::parse(in);
      const int trial = j.at("trial").get<int>();
      for (const json& entry : j.at("results")) results.push_back(result_from_json(entry, trial));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, "corrupt trial file " + file.string() + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), "corrupt trial file " + file.string() + ": " + e.what());
    }
  }
  auto groups = group_results(results);
  write_text(dir / "report.json", groups_to_json(groups).dump(2) + "\n");
  write_text(dir / "report.txt", format_table(groups));
  return groups;
}

}  // namespace fairsel
