#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "causalrec/dataset_io.hpp"
#include "causalrec/error.hpp"
#include "causalrec/eval.hpp"
#include "causalrec/experiment.hpp"
#include "causalrec/math.hpp"
#include "causalrec/parameters.hpp"
#include "causalrec/sampling.hpp"
#include "json.hpp"

namespace causalrec::cli {

using Json = nlohmann::ordered_json;

namespace {

std::ofstream open_for_writing(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string& require_path(const std::string& value, const char* name) {
  if (value.empty()) throw InputError(std::string("missing path: ") + name);
  return value;
}

TrajectoryDataset load_data(const RunConfig& config) {
  const auto& data = require_path(config.paths.data, "paths.data (--data)");
  if (!std::filesystem::exists(data)) throw InputError("dataset '" + data + "' does not exist");
  return load_dataset(data, sidecar_path_for(data));
}

CausalModel load_model(const RunConfig& config, std::string* metadata = nullptr) {
  const auto& path = require_path(config.paths.checkpoint, "paths.checkpoint (--checkpoint)");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  std::string meta;
  auto params = read_checkpoint(in, meta);
  auto model = CausalModel::from_parameters(std::move(params), meta);
  if (metadata != nullptr) *metadata = std::move(meta);
  return model;
}

Json metrics_json(const RankingResult& r) {
  return {{"hit@1", r.hit1}, {"hit@5", r.hit5}, {"ndcg@5", r.ndcg5}, {"mrr", r.mrr},
          {"n_evaluated", r.n_evaluated}};
}

std::string mean_std(std::span<const double> values) {
  const auto s = summarize(values);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f(%.4f)", s.mean, s.std);
  return buf;
}

std::string dot_quote(const std::string& label) {
  std::string out = "\"";
  for (char c : label) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void apply_override(std::string& config_json, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw InputError("override '" + assignment + "' must look like section.key=value");
  }
  const auto section = assignment.substr(0, dot);
  const auto key = assignment.substr(dot + 1, eq - dot - 1);
  const auto text = assignment.substr(eq + 1);
  auto doc = config_json.empty() ? Json::object() : Json::parse(config_json);
  Json value;
  if (section == "paths") {
    value = text;
  } else {
    value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
  }
  doc[section][key] = value;
  config_json = doc.dump();
}

RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides) {
  std::string text = config_path.empty() ? "{}" : read_text(config_path);
  if (!overrides.empty()) {
    if (Json::parse(text, nullptr, false).is_discarded()) {
      throw InputError("config '" + config_path + "' is not valid JSON");
    }
    for (const auto& o : overrides) apply_override(text, o);
  }
  return config_from_json(text);
}

void cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto& data_path = require_path(config.paths.data, "paths.data (--out)");
  std::string truth_path = config.paths.truth;
  if (truth_path.empty()) {
    truth_path = std::filesystem::path(data_path).replace_extension(".truth.tsv").string();
  }
  if (config.simulation.n_users == 0) {
    err << "warning: simulation.n_users is 0, writing an empty dataset\n";
  }
  const auto truth = make_ground_truth(config.simulation);
  const auto rec = make_recommender(config.simulation);
  SimulationStats stats;
  const auto data = generate(config.simulation, truth, rec, &stats);
  save_dataset(data_path, sidecar_path_for(data_path), data);
  save_edge_list(truth_path, truth.graph);

  Json summary = {{"users", data.trajectories.size()},
                  {"transitions", stats.steps},
                  {"interventions", stats.interventions},
                  {"edges", truth.graph.edge_count()},
                  {"data", data_path},
                  {"truth", truth_path}};
  out << summary.dump() << '\n';
}

void cmd_train(const RunConfig& config, bool timings, std::ostream& out) {
  const auto& checkpoint = require_path(config.paths.checkpoint, "paths.checkpoint (--checkpoint)");
  const auto data = load_data(config);
  const auto split = split_leave_last_out(data, config.model.window);
  if (split.train.empty()) throw InputError("dataset has no training transitions");

  CausalModel model(model_shape(config, data.space.size()));
  model.initialize(config.training.init_seed);
  auto opts = train_options(config);
  opts.deterministic_log = !timings;

  std::ofstream log_file;
  if (!config.paths.log.empty()) log_file = open_for_writing(config.paths.log);
  // Open the checkpoint before training so an unwritable path fails fast.
  auto ckpt = open_for_writing(checkpoint);
  const auto result = train(std::move(model), split.train, opts, log_file.is_open() ? &log_file : nullptr);
  write_checkpoint(ckpt, result.model.params(),
                   checkpoint_metadata(result.model, data.space, config, result.final_h));
  if (!ckpt) throw InputError("failed writing checkpoint '" + checkpoint + "'");

  const auto graph = threshold_graph(result.model.logits(), config.evaluation.threshold);
  Json summary = {{"transitions", split.train.size()},
                  {"outer_iterations", result.outers.size()},
                  {"epochs", result.epochs.size()},
                  {"final_h", result.final_h},
                  {"converged", result.converged},
                  {"edges", graph.edge_count()},
                  {"checkpoint", checkpoint}};
  out << summary.dump() << '\n';
}

void cmd_eval(const RunConfig& config, std::ostream& out) {
  const auto model = load_model(config);
  const auto data = load_data(config);
  if (data.space.size() != model.size()) throw InputError("checkpoint and dataset disagree on d");
  const auto split = split_leave_last_out(data, config.model.window);
  if (split.test.empty()) throw InputError("no user has the three events an evaluation query needs");

  const auto graph = threshold_graph(model.logits(), config.evaluation.threshold);
  const int negatives = config.evaluation.negatives;
  const auto val = evaluate_ranking(model, graph, data, split.validation, split.validation_users,
                                    negatives, derive_key(config.evaluation.seed, 1));
  const auto test = evaluate_ranking(model, graph, data, split.test, split.test_users, negatives,
                                     derive_key(config.evaluation.seed, 2));
  Json report;
  report["edges"] = graph.edge_count();
  report["validation"] = metrics_json(val.metrics);
  report["test"] = metrics_json(test.metrics);
  if (!config.paths.truth.empty()) {
    report["shd"] = shd(graph, load_edge_list(config.paths.truth, model.size()));
  }
  if (!config.paths.report.empty()) {
    auto f = open_for_writing(config.paths.report);
    f << report.dump(2) << '\n';
  }
  out << report.dump() << '\n';
}

void cmd_export_graph(const RunConfig& config, const ExportOptions& opts, std::ostream& out) {
  if (!(opts.tau > 0.0 && opts.tau < 1.0)) throw InputError("tau must lie in (0, 1)");
  std::string meta;
  const auto model = load_model(config, &meta);
  const int d = model.size();
  const auto labels = checkpoint_labels(meta, d);
  const auto logits = model.logits();
  const auto graph = threshold_graph(logits, opts.tau);

  std::ostringstream dot;
  std::ostringstream tsv;
  dot << std::setprecision(6);
  tsv << std::setprecision(6);
  dot << "digraph causal {\n";
  for (const auto& label : labels) dot << "  " << dot_quote(label) << ";\n";
  tsv << "parent\tchild\tweight\n";
  for (const auto& [parent, child] : graph.edges()) {
    const double w = sigmoid(logits(child, parent));
    dot << "  " << dot_quote(labels[static_cast<std::size_t>(parent)]) << " -> "
        << dot_quote(labels[static_cast<std::size_t>(child)]) << " [weight=" << w << "];\n";
    tsv << labels[static_cast<std::size_t>(parent)] << '\t'
        << labels[static_cast<std::size_t>(child)] << '\t' << w << '\n';
  }
  dot << "}\n";

  if (!opts.dot.empty()) open_for_writing(opts.dot) << dot.str();
  if (!opts.tsv.empty()) open_for_writing(opts.tsv) << tsv.str();
  if (opts.dot.empty() && opts.tsv.empty()) {
    out << dot.str();
    return;
  }
  Json summary = {{"edges", graph.edge_count()}, {"tau", opts.tau}};
  if (!opts.dot.empty()) summary["dot"] = opts.dot;
  if (!opts.tsv.empty()) summary["tsv"] = opts.tsv;
  out << summary.dump() << '\n';
}

void cmd_sweep(const RunConfig& config, const SweepOptions& opts, std::ostream& out,
               std::ostream& err) {
  if (opts.seeds < 1) throw InputError("--seeds must be positive");
  if (opts.equation_hidden.empty() || opts.rs_hidden.empty()) throw InputError("empty width grid");

  std::optional<TrajectoryDataset> data;
  std::optional<CausalGraph> truth;
  if (!config.paths.data.empty()) {
    data = load_data(config);
    if (!config.paths.truth.empty()) truth = load_edge_list(config.paths.truth, data->space.size());
  }
  // The linear variant has no hidden layer, so its grid is one-dimensional.
  std::vector<int> eq_grid = opts.equation_hidden;
  if (config.model.variant == EquationVariant::kLinear) eq_grid = {config.model.equation_hidden};

  struct Cell {
    int eq_hidden;
    int rs_hidden;
    std::vector<RankingResult> validation;
    std::vector<RankingResult> test;
    std::vector<int> shd;
  };
  std::vector<Cell> cells;
  for (int eh : eq_grid) {
    for (int rh : opts.rs_hidden) {
      Cell cell{eh, rh, {}, {}, {}};
      for (int s = 0; s < opts.seeds; ++s) {
        RunConfig c = config;
        c.model.equation_hidden = eh;
        c.model.rs_hidden = rh;
        const auto offset = static_cast<std::uint64_t>(s);
        c.simulation.seed += offset;
        c.training.init_seed += offset;
        c.training.seed += offset;
        c.evaluation.seed += offset;
        const auto r = data ? run_on_dataset(c, *data, truth ? &*truth : nullptr) : run_experiment(c);
        cell.validation.push_back(r.validation);
        cell.test.push_back(r.test);
        if (!data || truth) cell.shd.push_back(r.shd);
        err << "sweep: equation_hidden=" << eh << " rs_hidden=" << rh << " seed=" << s
            << " shd=" << r.shd << " val_ndcg@5=" << r.validation.ndcg5 << '\n';
      }
      cells.push_back(std::move(cell));
    }
  }

  auto column = [](const std::vector<RankingResult>& runs, double RankingResult::*m) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.*m);
    return v;
  };
  std::size_t best = 0;
  double best_score = -1.0;
  out << "eq_hidden\trs_hidden\tshd\tval_ndcg@5\thit@1\thit@5\tndcg@5\tmrr\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const auto val = column(c.validation, &RankingResult::ndcg5);
    const auto v = summarize(val).mean;
    if (v > best_score) {
      best_score = v;
      best = i;
    }
    std::vector<double> shd_values(c.shd.begin(), c.shd.end());
    out << c.eq_hidden << '\t' << c.rs_hidden << '\t' << (c.shd.empty() ? "-" : mean_std(shd_values)) << '\t'
        << mean_std(val) << '\t' << mean_std(column(c.test, &RankingResult::hit1)) << '\t'
        << mean_std(column(c.test, &RankingResult::hit5)) << '\t'
        << mean_std(column(c.test, &RankingResult::ndcg5)) << '\t'
        << mean_std(column(c.test, &RankingResult::mrr)) << '\n';
  }
  out << "selected\teq_hidden=" << cells[best].eq_hidden << "\trs_hidden=" << cells[best].rs_hidden
      << '\n';

  if (!config.paths.report.empty()) {
    Json doc;
    doc["seeds"] = opts.seeds;
    Json grid = Json::array();
    for (const auto& c : cells) {
      const auto* shd_ptr = c.shd.empty() ? nullptr : &c.shd;
      Json entry = {{"equation_hidden", c.eq_hidden}, {"rs_hidden", c.rs_hidden}};
      entry["validation"] = Json::parse(ranking_report_json(c.validation));
      entry["test"] = Json::parse(ranking_report_json(c.test, shd_ptr));
      grid.push_back(std::move(entry));
    }
    doc["grid"] = std::move(grid);
    doc["selected"] = {{"equation_hidden", cells[best].eq_hidden}, {"rs_hidden", cells[best].rs_hidden}};
    open_for_writing(config.paths.report) << doc.dump(2) << '\n';
  }
}

}  // namespace causalrec::cli
