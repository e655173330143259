#pragma once

// Synthetic feedback generator: a random ground-truth DAG with random
// structural equations, a frozen randomly initialised attention recommender,
// and user trajectories that at each step either follow the recommender's
// slate (probability p_int) or the most likely item under the causal model.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "causalrec/graph.hpp"
#include "causalrec/mechanisms.hpp"

namespace causalrec {

struct SimConfig {
  int d = 50;
  double p_keep = 0.01;
  int n_users = 10000;
  int traj_len = 15;
  double p_int = 0.3;
  int slate_size = 10;
  std::uint64_t seed = 0;
  int equation_hidden = 4;
  double weight_scale = 2.0;
  int recommender_dim = 16;

  void validate() const;
};

struct GroundTruth {
  CausalGraph graph;
  std::vector<StructuralEquation> equations;
  std::uint64_t seed = 0;
  double weight_scale = 0.0;

  GroundTruth() = default;
  /// Throws InputError unless the graph is a DAG with one equation per node.
  GroundTruth(CausalGraph graph, std::vector<StructuralEquation> equations, std::uint64_t seed = 0,
              double weight_scale = 0.0);
};

/// Uniform random order pi; each pair with pi(u) < pi(v) becomes u -> v with
/// probability p_keep.
CausalGraph random_dag(int d, double p_keep, std::mt19937_64& rng);

/// Random two-layer equations over the parents in `graph`: first-layer
/// weights weight_scale * N(0, 1) on parent columns only, zero first-layer
/// bias, output weights |N(0, 1)|, output bias U(-3, -1).
std::vector<StructuralEquation> random_equations(const CausalGraph& graph, int hidden,
                                                 double weight_scale, std::mt19937_64& rng);

GroundTruth make_ground_truth(const SimConfig& config);

/// Frozen attention scorer over the full history. With e_i the item
/// embeddings, q = Wq e_last, a_i = softmax_i(q . e_i / sqrt(k)) over
/// history positions, c = sum_i a_i e_i, the score of item j is
/// (Wc c + Wl e_last) . e_j.
class SimRecommender {
 public:
  SimRecommender() = default;
  SimRecommender(int d, int dim, std::uint64_t seed);

  int size() const { return d_; }
  std::vector<double> scores(std::span<const int> history) const;
  /// Top `k` items by score, ties to the lower index.
  std::vector<int> slate(std::span<const int> history, int k) const;

 private:
  int d_ = 0;
  int dim_ = 0;
  std::vector<double> embedding_;  // d x dim
  std::vector<double> wq_;         // dim x dim
  std::vector<double> wc_;
  std::vector<double> wl_;
};

SimRecommender make_recommender(const SimConfig& config);

/// argmax_j f_j(x (.) A_j); ties to the lowest index.
int next_causal_item(const GroundTruth& truth, const HistoryVector& history);

struct SimulationStats {
  std::size_t steps = 0;          // events after the first, over all users
  std::size_t interventions = 0;  // of those, chosen from the slate
};

TrajectoryDataset generate(const SimConfig& config, const GroundTruth& truth,
                           const SimRecommender& recommender, SimulationStats* stats = nullptr);

}  // namespace causalrec
