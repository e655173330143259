#pragma once

// Experiment configuration as one JSON document with five sections:
//
//   {"simulation": {...}, "model": {...}, "training": {...},
//    "evaluation": {...}, "paths": {...}}
//
// Every key is optional; missing keys keep their defaults and unknown keys
// are rejected.

#include <cstdint>
#include <filesystem>
#include <string>

#include "causalrec/mechanisms.hpp"
#include "causalrec/optim.hpp"
#include "causalrec/score.hpp"
#include "causalrec/simulator.hpp"

namespace causalrec {

struct ModelConfig {
  EquationVariant variant = EquationVariant::kNonlinear;
  int equation_hidden = 8;
  int embedding_dim = 64;
  int rs_hidden = 16;
  int window = 5;
  bool disable_rs = false;  // structural equations only
  bool disable_cm = false;  // recommender mechanism only
  bool coupled_r = false;   // expert indicator read off the sampled parent row
  ExpertIndexing indexing = ExpertIndexing::kTarget;
  int negatives = 10;  // choice candidates per transition, -1 for all
  double temperature = 1.0;
};

struct TrainingConfig {
  double learning_rate = 1e-3;
  double gamma_learning_rate = 0.0;  // 0: same as learning_rate
  double l2 = 1e-6;
  double sparsity = 1e-3;
  double mu0 = 1e-2;
  double eta = 2.0;
  double delta = 0.9;
  double h_tolerance = 1e-8;
  int max_outer = 25;
  int max_epochs = 20;
  double rel_tolerance = 1e-4;
  int batch_size = 256;
  int penalty_refresh = 0;
  std::uint64_t init_seed = 1;
  std::uint64_t seed = 2;
  int threads = 1;
};

struct EvaluationConfig {
  int negatives = 100;
  double threshold = 0.5;
  std::uint64_t seed = 3;
};

struct PathConfig {
  std::string data;
  std::string truth;
  std::string checkpoint;
  std::string log;
  std::string report;
};

struct RunConfig {
  SimConfig simulation;
  ModelConfig model;
  TrainingConfig training;
  EvaluationConfig evaluation;
  PathConfig paths;

  /// Throws InputError on inconsistent or out-of-range values.
  void validate() const;
};

RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

ModelShape model_shape(const RunConfig& config, int d);
ExpertMode expert_mode(const ModelConfig& model);
ScoreOptions score_options(const RunConfig& config);
TrainOptions train_options(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace causalrec
