#include "causalrec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causalrec/error.hpp"
#include "causalrec/sampling.hpp"
#include "json.hpp"

namespace causalrec {

SplitDataset split_leave_last_out(const TrajectoryDataset& dataset, int window) {
  SplitDataset out;
  const int d = dataset.space.size();
  for (std::size_t u = 0; u < dataset.trajectories.size(); ++u) {
    const auto& traj = dataset.trajectories[u];
    const std::size_t k = traj.events.size();
    if (k < 3) {
      auto part = make_examples(traj, d, window);
      std::move(part.begin(), part.end(), std::back_inserter(out.train));
      continue;
    }
    // Transitions of the full trajectory, in order: the last one is the test
    // query, the one before it validation, the rest training.
    auto all = make_examples(traj, d, window);
    out.test.push_back(std::move(all.back()));
    out.test_users.push_back(u);
    all.pop_back();
    out.validation.push_back(std::move(all.back()));
    out.validation_users.push_back(u);
    all.pop_back();
    std::move(all.begin(), all.end(), std::back_inserter(out.train));
  }
  return out;
}

int shd(const CausalGraph& a, const CausalGraph& b) {
  if (a.size() != b.size()) throw InputError("SHD needs graphs over the same variables");
  int diff = 0;
  for (int u = 0; u < a.size(); ++u) {
    for (int v = u + 1; v < a.size(); ++v) {
      if (a.has_edge(u, v) != b.has_edge(u, v) || a.has_edge(v, u) != b.has_edge(v, u)) ++diff;
    }
  }
  return diff;
}

int rank_of(std::span<const double> scores, std::span<const int> candidates,
            std::size_t target_pos) {
  if (scores.size() != candidates.size() || target_pos >= scores.size()) {
    throw InputError("scores, candidates and target position disagree");
  }
  const double st = scores[target_pos];
  const int it = candidates[target_pos];
  int rank = 1;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (c == target_pos) continue;
    if (scores[c] > st || (scores[c] == st && candidates[c] < it)) ++rank;
  }
  return rank;
}

std::vector<int> sample_negatives(int d, std::span<const int> interacted, int target, int n,
                                  std::uint64_t seed) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(d), 0);
  for (int k : interacted) {
    if (k < 0 || k >= d) throw InputError("interacted variable out of range");
    seen[static_cast<std::size_t>(k)] = 1;
  }
  if (target >= 0 && target < d) seen[static_cast<std::size_t>(target)] = 1;
  std::vector<int> pool;
  for (int k = 0; k < d; ++k) {
    if (seen[static_cast<std::size_t>(k)] == 0) pool.push_back(k);
  }
  const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(std::max(n, 0)));
  NoiseStream rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

std::vector<double> causal_scores(const CausalModel& model, const CausalGraph& graph,
                                  std::span<const int> history_set,
                                  std::span<const int> candidates) {
  if (graph.size() != model.size()) throw InputError("graph and model sizes differ");
  std::vector<double> out;
  out.reserve(candidates.size());
  std::vector<int> active;
  for (int c : candidates) {
    active.clear();
    for (int k : history_set) {
      if (k != c && graph.at(c, k)) active.push_back(k);
    }
    out.push_back(model.equation(c).probability_from_active(active));
  }
  return out;
}

double hit_at(std::span<const int> ranks, int k) {
  if (ranks.empty()) throw InputError("no ranks to summarise");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](int r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double ndcg_at(std::span<const int> ranks, int k) {
  if (ranks.empty()) throw InputError("no ranks to summarise");
  double sum = 0.0;
  for (int r : ranks) {
    if (r <= k) sum += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  }
  return sum / static_cast<double>(ranks.size());
}

double mean_reciprocal_rank(std::span<const int> ranks) {
  if (ranks.empty()) throw InputError("no ranks to summarise");
  double sum = 0.0;
  for (int r : ranks) sum += 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

RankingResult ranking_metrics(std::span<const int> ranks) {
  if (ranks.empty()) throw InputError("ranking metrics need at least one query");
  for (int r : ranks) {
    if (r < 1) throw InputError("ranks are 1-based");
  }
  RankingResult out;
  out.hit1 = hit_at(ranks, 1);
  out.hit5 = hit_at(ranks, 5);
  out.ndcg5 = ndcg_at(ranks, 5);
  out.mrr = mean_reciprocal_rank(ranks);
  out.n_evaluated = ranks.size();
  return out;
}

RankingRun evaluate_ranking(const CausalModel& model, const CausalGraph& graph,
                            const TrajectoryDataset& dataset,
                            std::span<const TransitionExample> queries,
                            std::span<const std::size_t> users, int negatives,
                            std::uint64_t seed) {
  if (queries.size() != users.size()) throw InputError("one user index per query is required");
  RankingRun run;
  const int d = model.size();
  std::vector<int> candidates;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto& ex = queries[q];
    const auto& events = dataset.trajectories.at(users[q]).events;
    const auto neg = sample_negatives(d, events, ex.target, negatives, derive_key(seed, q));
    candidates.assign(1, ex.target);
    candidates.insert(candidates.end(), neg.begin(), neg.end());
    const auto scores = causal_scores(model, graph, ex.history_set, candidates);
    run.ranks.push_back(rank_of(scores, candidates, 0));
    run.negatives_used.push_back(static_cast<int>(neg.size()));
  }
  if (!run.ranks.empty()) run.metrics = ranking_metrics(run.ranks);
  return run;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

namespace {

nlohmann::ordered_json summary_json(std::span<const double> values) {
  const auto s = summarize(values);
  return {{"mean", s.mean}, {"std", s.std}, {"n", s.n}};
}

}  // namespace

std::string ranking_report_json(std::span<const RankingResult> runs,
                                const std::vector<int>* shd_per_run) {
  nlohmann::ordered_json doc;
  std::vector<double> v;
  auto field = [&](const char* name, double RankingResult::*member) {
    v.clear();
    for (const auto& r : runs) v.push_back(r.*member);
    doc[name] = summary_json(v);
  };
  field("hit@1", &RankingResult::hit1);
  field("hit@5", &RankingResult::hit5);
  field("ndcg@5", &RankingResult::ndcg5);
  field("mrr", &RankingResult::mrr);
  std::vector<std::size_t> counts;
  for (const auto& r : runs) counts.push_back(r.n_evaluated);
  doc["n_evaluated"] = counts;
  if (shd_per_run != nullptr) {
    v.assign(shd_per_run->begin(), shd_per_run->end());
    auto s = summary_json(v);
    s["per_seed"] = *shd_per_run;
    doc["shd"] = s;
  }
  return doc.dump(2);
}

}  // namespace causalrec
