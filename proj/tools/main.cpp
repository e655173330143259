// causalrec: simulate, train, eval, export-graph and sweep from the shell.
//
// Every RunConfig field is also a flag named after its JSON path, e.g.
// `--simulation.d 10` or `--model.disable_rs true`. Precedence, lowest
// first: defaults, --config file, dotted flags, --set, command shortcuts.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "causalrec/error.hpp"
#include "json.hpp"

namespace {

using namespace causalrec;

struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> fields;  // "section.key" -> raw value
  int threads = 0;
  std::vector<std::pair<std::string, std::string*>> shortcuts;  // "paths.x" -> value
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "JSON run configuration");
  cmd->add_option("--set", flags.sets, "override one field: section.key=value")->take_all();
  cmd->add_option("--threads", flags.threads, "worker threads (training.threads)");
  const auto defaults = nlohmann::ordered_json::parse(config_to_json(RunConfig{}));
  for (const auto& [section, keys] : defaults.items()) {
    for (const auto& [key, value] : keys.items()) {
      const auto name = section + "." + key;
      cmd->add_option("--" + name, flags.fields[name])->group("Config fields");
    }
  }
}

void add_path(CLI::App* cmd, CommonFlags& flags, const std::string& flag, const std::string& field,
              std::string& storage, const std::string& help) {
  cmd->add_option(flag, storage, help);
  flags.shortcuts.emplace_back(field, &storage);
}

RunConfig resolve(const CLI::App* cmd, const CommonFlags& flags) {
  std::vector<std::string> overrides;
  for (const auto& [name, value] : flags.fields) {
    if (cmd->count("--" + name) > 0) overrides.push_back(name + "=" + value);
  }
  overrides.insert(overrides.end(), flags.sets.begin(), flags.sets.end());
  if (flags.threads > 0) overrides.push_back("training.threads=" + std::to_string(flags.threads));
  for (const auto& [field, value] : flags.shortcuts) {
    if (!value->empty()) overrides.push_back(field + "=" + *value);
  }
  return cli::resolve_config(flags.config, overrides);
}

int fail(const char* kind, const std::string& message, int code) {
  nlohmann::ordered_json e = {{"error", kind}, {"message", message}};
  std::cerr << e.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal structure learning from recommender feedback trajectories", "causalrec"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string data, truth, checkpoint, log, report;
  bool timings = false;
  cli::ExportOptions export_opts;
  cli::SweepOptions sweep_opts;

  auto* simulate = app.add_subcommand("simulate", "simulate trajectories and write the ground truth");
  add_common(simulate, flags);
  add_path(simulate, flags, "--out", "paths.data", data, "trajectory file (JSON lines)");
  add_path(simulate, flags, "--truth", "paths.truth", truth, "ground-truth edge list (TSV)");

  auto* train = app.add_subcommand("train", "learn the causal graph and mechanisms");
  add_common(train, flags);
  add_path(train, flags, "--data", "paths.data", data, "trajectory file");
  add_path(train, flags, "--checkpoint", "paths.checkpoint", checkpoint, "output checkpoint");
  add_path(train, flags, "--log", "paths.log", log, "training log (JSON lines)");
  train->add_flag("--timings", timings, "record wall-clock times in the log");

  auto* eval = app.add_subcommand("eval", "ranking metrics and SHD for a checkpoint");
  add_common(eval, flags);
  add_path(eval, flags, "--data", "paths.data", data, "trajectory file");
  add_path(eval, flags, "--checkpoint", "paths.checkpoint", checkpoint, "trained checkpoint");
  add_path(eval, flags, "--truth", "paths.truth", truth, "ground-truth edge list; enables SHD");
  add_path(eval, flags, "--report", "paths.report", report, "write the report here as well");

  auto* exporter = app.add_subcommand("export-graph", "write the learned graph as DOT and TSV");
  add_common(exporter, flags);
  add_path(exporter, flags, "--checkpoint", "paths.checkpoint", checkpoint, "trained checkpoint");
  exporter->add_option("--tau", export_opts.tau, "edge threshold on sigmoid(gamma)");
  exporter->add_option("--dot", export_opts.dot, "DOT output (stdout when neither file is given)");
  exporter->add_option("--tsv", export_opts.tsv, "weighted edge TSV output");

  auto* sweep = app.add_subcommand("sweep", "hidden-width grid over several seeds");
  add_common(sweep, flags);
  sweep->add_option("--seeds", sweep_opts.seeds, "independent runs per grid cell");
  sweep->add_option("--equation-hidden", sweep_opts.equation_hidden, "structural equation widths")
      ->delimiter(',');
  sweep->add_option("--rs-hidden", sweep_opts.rs_hidden, "recurrent widths")->delimiter(',');
  add_path(sweep, flags, "--data", "paths.data", data, "use this dataset instead of simulating");
  add_path(sweep, flags, "--truth", "paths.truth", truth, "ground truth for --data");
  add_path(sweep, flags, "--report", "paths.report", report, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const auto config = resolve(cmd, flags);
    if (cmd == simulate) cli::cmd_simulate(config, std::cout, std::cerr);
    if (cmd == train) cli::cmd_train(config, timings, std::cout);
    if (cmd == eval) cli::cmd_eval(config, std::cout);
    if (cmd == exporter) cli::cmd_export_graph(config, export_opts, std::cout);
    if (cmd == sweep) cli::cmd_sweep(config, sweep_opts, std::cout, std::cerr);
  } catch (const InputError& e) {
    return fail("input", e.what(), 2);
  } catch (const TrainingDiverged& e) {
    return fail("diverged", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
