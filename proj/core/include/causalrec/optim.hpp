#pragma once

// RMSprop inner solver and the augmented-Lagrangian outer loop.
//
// Minimised objective for a fixed (lambda, mu):
//   -score + lambda h(G) + mu/2 h(G)^2 + s * sum_{j != k} sigmoid(G_jk)
//          + w/2 * ||theta_mech||^2

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalrec/dagness.hpp"
#include "causalrec/mechanisms.hpp"
#include "causalrec/score.hpp"

namespace causalrec {

struct RmspropOptions {
  double learning_rate = 1e-3;
  double rho = 0.9;
  double epsilon = 1e-8;
  /// Per-tensor learning rates keyed by tensor name.
  std::map<std::string, double> learning_rate_overrides;
};

class RmspropState {
 public:
  RmspropState() = default;
  RmspropState(const ParameterStore& params, RmspropOptions options);

  /// avg <- rho avg + (1 - rho) g^2;  theta <- theta - lr g / sqrt(avg + eps).
  /// Throws InputError when the store's layout differs from construction.
  void step(ParameterStore& params);

  const RmspropOptions& options() const { return options_; }
  const std::vector<std::vector<double>>& averages() const { return avg_; }

 private:
  RmspropOptions options_;
  std::vector<std::string> names_;
  std::vector<double> rates_;
  std::vector<std::vector<double>> avg_;
};

void rmsprop_step(RmspropState& state, ParameterStore& params);

struct LagrangianState {
  double lambda = 0.0;
  double mu = 1e-2;
  double h_prev = std::numeric_limits<double>::infinity();
  int t = 0;
};

/// lambda += mu h; mu *= eta when h > delta h_prev; h_prev = h; t += 1.
/// Throws InputError for negative or non-finite h.
LagrangianState multiplier_update(const LagrangianState& state, double h_now, double eta = 2.0,
                                  double delta = 0.9);

struct ObjectiveOptions {
  ScoreOptions score;
  double l2 = 1e-6;
  double sparsity = 1e-3;
};

struct ObjectiveValue {
  double total = 0.0;  // minimised quantity
  double score = 0.0;  // mean sampled log-likelihood
  double h = 0.0;
  double penalty = 0.0;
  double regularizer = 0.0;
};

/// Evaluates the minimised objective on `batch` and accumulates its
/// gradient into Tensor::grad (the caller zeroes gradients). When `cached`
/// is given, its value and gradient stand in for a fresh dag_penalty.
ObjectiveValue inner_objective(CausalModel& model, std::span<const TransitionExample> batch,
                               std::uint64_t noise_seed, const LagrangianState& state,
                               const ObjectiveOptions& options, GradientTape& tape,
                               const PenaltyResult* cached = nullptr);

/// Adds lambda h + mu/2 h^2, sparsity and l2 terms (value and gradient) and
/// returns their sum; the score part is handled by the caller.
double add_regularizers(CausalModel& model, const PenaltyResult& penalty,
                        const LagrangianState& state, const ObjectiveOptions& options,
                        double& penalty_part);

struct TrainOptions {
  ObjectiveOptions objective;
  RmspropOptions rmsprop;
  double mu0 = 1e-2;
  double eta = 2.0;
  double delta = 0.9;
  double h_tolerance = kDefaultDagTolerance;
  int max_outer = 25;
  int max_epochs = 20;
  double rel_tolerance = 1e-4;
  int batch_size = 256;
  /// Refresh the cached acyclicity gradient every n steps; 0 = once per epoch.
  int penalty_refresh = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Store 0 for wall_ms so logs are byte-comparable across runs.
  bool deterministic_log = false;
};

struct TrainLogRecord {
  int outer = 0;
  int epoch = 0;
  double score = 0.0;
  double h = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  double wall_ms = 0.0;
};

std::string to_json_line(const TrainLogRecord& r);

struct TrainResult {
  CausalModel model;
  std::vector<TrainLogRecord> epochs;  // one per inner epoch
  std::vector<TrainLogRecord> outers;  // one per outer iteration, h after the subproblem
  LagrangianState lagrangian;
  double final_h = 0.0;
  bool converged = false;  // h dropped below the tolerance
};

/// Trains from `initial` (already initialised) on `examples`. Each epoch
/// record is also written to `log` as a JSON line when given. Throws
/// TrainingDiverged on a non-finite objective.
TrainResult train(CausalModel initial, std::span<const TransitionExample> examples,
                  const TrainOptions& options, std::ostream* log = nullptr);

}  // namespace causalrec
