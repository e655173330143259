#pragma once

// End-to-end synthetic run: simulate, split, train, threshold, score.

#include <iosfwd>
#include <optional>

#include "causalrec/config.hpp"
#include "causalrec/eval.hpp"
#include "causalrec/optim.hpp"

namespace causalrec {

struct ExperimentResult {
  GroundTruth truth;
  SimulationStats stats;
  TrainResult training;
  CausalGraph learned;
  int shd = 0;
  RankingResult validation;
  RankingResult test;
  double seconds = 0.0;
};

/// Trains on an existing dataset split and scores the result.
ExperimentResult run_on_dataset(const RunConfig& config, const TrajectoryDataset& dataset,
                                const CausalGraph* truth, std::ostream* log = nullptr);

/// Simulates from config.simulation, then runs run_on_dataset.
ExperimentResult run_experiment(const RunConfig& config, std::ostream* log = nullptr);

/// Metadata stored alongside trained parameters: the model shape plus
/// variable labels, expert mode and final constraint value.
std::string checkpoint_metadata(const CausalModel& model, const VariableSpace& space,
                                const RunConfig& config, double final_h);
/// Labels stored by checkpoint_metadata, or v0.. when absent.
std::vector<std::string> checkpoint_labels(const std::string& metadata_json, int d);

}  // namespace causalrec
