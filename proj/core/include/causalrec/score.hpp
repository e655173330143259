#pragma once

// Per-transition mixture log-likelihood
//
//   log p(i_{t+1} | i_{1:t}) = (1 - R) log f_j(x (.) A_j) + R log g(i_{1:t})[j]
//
// and its Monte-Carlo estimate over a batch: one straight-through sample of
// the parent row A_j and one of the expert indicator R per transition.
//
// With `negatives != 0` the causal term becomes a choice among candidates:
// the target competes with sampled non-target variables k through the odds
// f/(1 - f) of their equations,
//
//   log f_j/(1-f_j) - log sum_{c in {j} u K} f_c/(1-f_c),
//
// each candidate with its own sampled parent row. negatives == 0 gives the
// plain log f_j(x (.) A_j); negatives < 0 uses every other variable.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "causalrec/graph.hpp"
#include "causalrec/mechanisms.hpp"
#include "causalrec/tape.hpp"

namespace causalrec {

/// How the expert indicator R is obtained.
enum class ExpertMode {
  kSampled,     // R ~ Bernoulli(r(G)), independent of the adjacency draw
  kCoupled,     // R = prod over history parents of (1 - A_jk), from the drawn row
  kCausalOnly,  // R = 0: structural equations only
  kRsOnly,      // R = 1: recommender mechanism only
};

/// Which logit row the expert product reads.
enum class ExpertIndexing {
  kTarget,     // G[i_{t+1}][k]
  kLastEvent,  // G[i_t][k]
};

std::string to_string(ExpertMode m);
ExpertMode expert_mode_from_string(const std::string& s);
std::string to_string(ExpertIndexing m);
ExpertIndexing expert_indexing_from_string(const std::string& s);

struct TransitionExample {
  int target = 0;
  std::vector<int> history_set;  // distinct prefix variables, ascending
  std::vector<int> window;       // most recent events, chronological
  int last_event = 0;
};

std::vector<TransitionExample> make_examples(const Trajectory& trajectory, int d, int window);
std::vector<TransitionExample> make_examples(const TrajectoryDataset& dataset, int window);

struct ScoreOptions {
  ExpertMode expert = ExpertMode::kSampled;
  ExpertIndexing indexing = ExpertIndexing::kTarget;
  int negatives = 10;
  double temperature = 1.0;
  double floor = 1e-12;
  /// Relaxed samples: straight-through nodes forward their surrogate, so the
  /// fixed-noise objective is smooth in every parameter.
  bool relaxed = false;
};

/// (1 - r) log f_j(x (.) mask) + r log g(history)[j], probabilities floored.
double transition_log_prob(const CausalModel& model, const TransitionExample& example,
                           std::span<const std::uint8_t> mask_row, int r,
                           double floor = 1e-12);

struct ScoreEstimate {
  double value = 0.0;  // mean log-likelihood
  std::size_t sample_count = 0;
};

/// Overrides the sampled expert indicator (tests of the reduced objectives).
enum class ForcedExpert { kNone, kZero, kOne };

/// Sampled log-likelihood of one transition with noise stream `key`; when
/// gradient_weight != 0 its gradient times that weight is accumulated into
/// Tensor::grad.
double transition_score(CausalModel& model, const TransitionExample& example, std::uint64_t key,
                        const ScoreOptions& options, GradientTape& tape,
                        double gradient_weight = 0.0, ForcedExpert forced = ForcedExpert::kNone);

/// Mean sampled log-likelihood over `batch`. Transition i draws its noise
/// from NoiseStream(derive_key(noise_seed, i)). When gradient_weight != 0,
/// gradient_weight * d(mean)/d(theta) is accumulated into Tensor::grad.
ScoreEstimate batch_score(CausalModel& model, std::span<const TransitionExample> batch,
                          std::uint64_t noise_seed, const ScoreOptions& options,
                          GradientTape& tape, double gradient_weight = 0.0,
                          ForcedExpert forced = ForcedExpert::kNone);

/// Same estimate over a subset given by indices into `examples`.
ScoreEstimate batch_score(CausalModel& model, std::span<const TransitionExample> examples,
                          std::span<const std::size_t> indices, std::uint64_t noise_seed,
                          const ScoreOptions& options, GradientTape& tape,
                          double gradient_weight = 0.0);

}  // namespace causalrec
