#pragma once

// Subcommand implementations behind the causalrec executable. Each command
// reads its inputs from the RunConfig paths, writes its outputs there and
// prints a one-object JSON summary on `out`.

#include <iosfwd>
#include <string>
#include <vector>

#include "causalrec/config.hpp"

namespace causalrec::cli {

/// Parses "section.key=value" into the config document; the value is read as
/// JSON when possible and as a bare string otherwise.
void apply_override(std::string& config_json, const std::string& assignment);

/// Builds the effective config: file (or defaults), then overrides in order.
RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides);

void cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_train(const RunConfig& config, bool timings, std::ostream& out);
void cmd_eval(const RunConfig& config, std::ostream& out);

struct ExportOptions {
  std::string dot;
  std::string tsv;
  double tau = 0.5;
};
void cmd_export_graph(const RunConfig& config, const ExportOptions& opts, std::ostream& out);

struct SweepOptions {
  int seeds = 5;
  std::vector<int> equation_hidden = {2, 4, 8, 16, 32};
  std::vector<int> rs_hidden = {4, 8, 16, 32, 64};
};
void cmd_sweep(const RunConfig& config, const SweepOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace causalrec::cli
