#pragma once

// Graph recovery (structural Hamming distance) and real-plus-N ranking
// evaluation under a leave-last-out split.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causalrec/graph.hpp"
#include "causalrec/mechanisms.hpp"
#include "causalrec/score.hpp"

namespace causalrec {

/// Per user with K events: training transitions come from the first K - 2
/// events, the validation query predicts event K - 2 from the events before
/// it, and the test query predicts event K - 1 from the events before it.
/// Users with fewer than three events contribute only training data.
struct SplitDataset {
  std::vector<TransitionExample> train;
  std::vector<TransitionExample> validation;
  std::vector<TransitionExample> test;
  std::vector<std::size_t> validation_users;  // trajectory index per query
  std::vector<std::size_t> test_users;
};

SplitDataset split_leave_last_out(const TrajectoryDataset& dataset, int window);

/// Unordered pairs {u, v} whose edge configuration differs. Throws
/// InputError when the graphs have different sizes.
int shd(const CausalGraph& a, const CausalGraph& b);

/// 1-based rank of candidates[target_pos]:
/// 1 + #{c : s_c > s_t} + #{c : s_c == s_t and index_c < index_t}.
int rank_of(std::span<const double> scores, std::span<const int> candidates,
            std::size_t target_pos);

/// Up to n variables never seen in `interacted` (and not `target`), drawn
/// uniformly without replacement; all eligible ones when fewer exist.
std::vector<int> sample_negatives(int d, std::span<const int> interacted, int target, int n,
                                  std::uint64_t seed);

/// f_c(x (.) A_c) for each candidate c, with A the given graph.
std::vector<double> causal_scores(const CausalModel& model, const CausalGraph& graph,
                                  std::span<const int> history_set,
                                  std::span<const int> candidates);

struct RankingResult {
  double hit1 = 0.0;
  double hit5 = 0.0;
  double ndcg5 = 0.0;
  double mrr = 0.0;
  std::size_t n_evaluated = 0;
};

double hit_at(std::span<const int> ranks, int k);
double ndcg_at(std::span<const int> ranks, int k);
double mean_reciprocal_rank(std::span<const int> ranks);
/// Throws InputError on an empty list or a rank below 1.
RankingResult ranking_metrics(std::span<const int> ranks);

struct RankingRun {
  std::vector<int> ranks;
  std::vector<int> negatives_used;  // per query, below n when too few were eligible
  RankingResult metrics;
};

/// Ranks each query's target against sampled non-interacted negatives using
/// the structural equations of `model` over `graph`.
RankingRun evaluate_ranking(const CausalModel& model, const CausalGraph& graph,
                            const TrajectoryDataset& dataset,
                            std::span<const TransitionExample> queries,
                            std::span<const std::size_t> users, int negatives,
                            std::uint64_t seed);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over runs, 0 for one run
  std::size_t n = 0;
};

MetricSummary summarize(std::span<const double> values);

/// {"hit@1": {mean, std, n}, "hit@5": ..., "ndcg@5": ..., "mrr": ...} over
/// runs, plus "shd": {"per_seed": [...], mean, std, n} when given.
std::string ranking_report_json(std::span<const RankingResult> runs,
                                const std::vector<int>* shd_per_run = nullptr);

}  // namespace causalrec
