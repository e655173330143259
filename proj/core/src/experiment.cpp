#include "causalrec/experiment.hpp"

#include <chrono>

#include "causalrec/error.hpp"
#include "causalrec/sampling.hpp"
#include "json.hpp"

namespace causalrec {

ExperimentResult run_on_dataset(const RunConfig& config, const TrajectoryDataset& dataset,
                                const CausalGraph* truth, std::ostream* log) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const int d = dataset.space.size();
  const auto split = split_leave_last_out(dataset, config.model.window);
  if (split.train.empty()) throw InputError("dataset has no training transitions");

  CausalModel model(model_shape(config, d));
  model.initialize(config.training.init_seed);

  ExperimentResult out;
  out.training = train(std::move(model), split.train, train_options(config), log);
  const auto& trained = out.training.model;
  out.learned = threshold_graph(trained.logits(), config.evaluation.threshold);
  if (truth != nullptr) out.shd = shd(out.learned, *truth);
  if (!split.validation.empty()) {
    out.validation = evaluate_ranking(trained, out.learned, dataset, split.validation,
                                      split.validation_users, config.evaluation.negatives,
                                      derive_key(config.evaluation.seed, 1))
                         .metrics;
    out.test = evaluate_ranking(trained, out.learned, dataset, split.test, split.test_users,
                                config.evaluation.negatives, derive_key(config.evaluation.seed, 2))
                   .metrics;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ExperimentResult run_experiment(const RunConfig& config, std::ostream* log) {
  const auto truth = make_ground_truth(config.simulation);
  const auto rec = make_recommender(config.simulation);
  SimulationStats stats;
  const auto data = generate(config.simulation, truth, rec, &stats);
  auto out = run_on_dataset(config, data, &truth.graph, log);
  out.truth = truth;
  out.stats = stats;
  return out;
}

std::string checkpoint_metadata(const CausalModel& model, const VariableSpace& space,
                                const RunConfig& config, double final_h) {
  auto meta = nlohmann::ordered_json::parse(model.metadata_json());
  meta["labels"] = space.labels();
  meta["expert"] = to_string(expert_mode(config.model));
  meta["final_h"] = final_h;
  return meta.dump();
}

std::vector<std::string> checkpoint_labels(const std::string& metadata_json, int d) {
  const auto meta = nlohmann::json::parse(metadata_json);
  if (meta.contains("labels")) {
    auto labels = meta.at("labels").get<std::vector<std::string>>();
    if (labels.size() != static_cast<std::size_t>(d)) throw InputError("checkpoint labels do not match d");
    return labels;
  }
  return VariableSpace::identity(d).labels();
}

}  // namespace causalrec
