// fairsel: synthetic data, fair co-teaching runs, sweeps and reports.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairsel/error.hpp"
#include "fairsel/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> rho_a;
  std::optional<double> rho_b;
  std::string methods;
  std::optional<double> nu;
  std::optional<double> n_select;
  std::optional<int> epochs;
  std::string trace;
};

void add_overrides(CLI::App* cmd, Overrides& o, bool with_out) {
  cmd->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  if (with_out) cmd->add_option("-o,--out", o.out, "output directory (overrides output.directory)");
  cmd->add_option("--trials", o.trials, "number of trials");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--rho-a", o.rho_a, "flip rate for group A negatives");
  cmd->add_option("--rho-b", o.rho_b, "flip rate for group B positives");
  cmd->add_option("--methods", o.methods, "comma-separated subset of T,M,ERM");
  cmd->add_option("--nu", o.nu, "variance bound nu");
  cmd->add_option("--n-select", o.n_select, "selection fraction N_s");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--trace", o.trace, "none | first | all")->check(CLI::IsMember({"none", "first", "all"}));
}

fairsel::RunConfig build_config(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config.empty()) {
    const auto base = fairsel::load_config(o.config);
    j = fairsel::to_json(base);
  }
  if (o.trials) j["split"]["trial_count"] = *o.trials;
  if (o.seed) j["seed"] = *o.seed;
  if (o.rho_a) j["bias"]["rho_A"] = *o.rho_a;
  if (o.rho_b) j["bias"]["rho_B"] = *o.rho_b;
  if (!o.methods.empty()) {
    std::vector<std::string> names;
    std::stringstream ss(o.methods);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) names.push_back(item);
    j["methods"] = names;
  }
  if (o.nu) j["coteach"]["nu"] = *o.nu;
  if (o.n_select) j["coteach"]["n_select"] = *o.n_select;
  if (o.epochs) j["coteach"]["train"]["epochs"] = *o.epochs;
  if (!o.trace.empty()) j["output"]["trace"] = o.trace;
  if (!o.out.empty()) j["output"]["directory"] = o.out;
  return fairsel::parse_config(j);
}

int fail(const std::string& kind, const std::string& message) {
  const nlohmann::json record = {{"error", kind}, {"message", message}};
  std::cerr << record.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair co-teaching with truncated confident-learning thresholds"};
  app.require_subcommand(1);

  Overrides synth_o, run_o, sweep_o;
  std::string synth_path;
  auto* synth = app.add_subcommand("synth", "write the synthetic dataset as CSV");
  add_overrides(synth, synth_o, false);
  synth->add_option("output", synth_path, "CSV path")->required();

  auto* run = app.add_subcommand("run", "train and evaluate every configured method");
  add_overrides(run, run_o, true);

  auto* sweep = app.add_subcommand("sweep", "grid over nu and N_s");
  add_overrides(sweep, sweep_o, true);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "re-aggregate trial files under a directory");
  report->add_option("directory", report_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what());
  }

  try {
    if (*synth) {
      fairsel::cmd_synth(build_config(synth_o), synth_path);
    } else if (*run) {
      auto config = build_config(run_o);
      if (config.output_dir.empty()) config.output_dir = "fairsel_out";
      const auto result = fairsel::cmd_run(config);
      std::cout << fairsel::format_table(result.groups);
      std::cout << "wrote " << config.output_dir.string() << '\n';
    } else if (*sweep) {
      auto config = build_config(sweep_o);
      if (config.output_dir.empty()) config.output_dir = "fairsel_sweep";
      const auto result = fairsel::cmd_sweep(config);
      std::size_t failed = 0;
      for (const auto& c : result.cells) failed += c.error ? 1 : 0;
      std::cout << result.cells.size() << " cells, " << failed << " failed";
      if (result.selected_cell) std::cout << ", selected cell " << *result.selected_cell;
      std::cout << "\nwrote " << config.output_dir.string() << '\n';
      if (failed == result.cells.size()) return fail("sweep_failed", "every sweep cell failed");
    } else if (*report) {
      std::cout << fairsel::format_table(fairsel::cmd_report(report_dir));
    }
  } catch (const fairsel::Error& e) {
    return fail(std::string(fairsel::to_string(e.kind())), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
