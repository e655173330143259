#include "causalrec/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causalrec/error.hpp"
#include "causalrec/sampling.hpp"

namespace causalrec {

void SimConfig::validate() const {
  if (d < 1) throw InputError("simulation needs at least one variable");
  if (!(p_keep >= 0.0 && p_keep <= 1.0)) throw InputError("p_keep must lie in [0, 1]");
  if (!(p_int >= 0.0 && p_int <= 1.0)) throw InputError("p_int must lie in [0, 1]");
  if (n_users < 0) throw InputError("n_users must be nonnegative");
  if (traj_len < 1) throw InputError("traj_len must be positive");
  if (slate_size < 1 || slate_size > d) throw InputError("slate_size must lie in [1, d]");
  if (equation_hidden < 1) throw InputError("equation_hidden must be positive");
  if (recommender_dim < 1) throw InputError("recommender_dim must be positive");
  if (!std::isfinite(weight_scale)) throw InputError("weight_scale must be finite");
}

GroundTruth::GroundTruth(CausalGraph g, std::vector<StructuralEquation> eqs, std::uint64_t s,
                         double scale)
    : graph(std::move(g)), equations(std::move(eqs)), seed(s), weight_scale(scale) {
  if (!is_dag(graph)) throw InputError("ground-truth graph must be acyclic");
  if (equations.size() != static_cast<std::size_t>(graph.size())) {
    throw InputError("ground truth needs one equation per variable");
  }
  for (const auto& f : equations) {
    if (f.input_width() != graph.size()) throw InputError("equation input width must equal d");
  }
}

CausalGraph random_dag(int d, double p_keep, std::mt19937_64& rng) {
  if (d < 1) throw InputError("random_dag needs d >= 1");
  if (!(p_keep >= 0.0 && p_keep <= 1.0)) throw InputError("p_keep must lie in [0, 1]");
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  CausalGraph g(d);
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      if (unif(rng) < p_keep) g.set_edge(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
    }
  }
  return g;
}

std::vector<StructuralEquation> random_equations(const CausalGraph& graph, int hidden,
                                                 double weight_scale, std::mt19937_64& rng) {
  const int d = graph.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> bias(-3.0, -1.0);
  std::vector<StructuralEquation> out;
  out.reserve(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    const auto parents = graph.parents(j);
    std::vector<double> w1(static_cast<std::size_t>(hidden) * static_cast<std::size_t>(d), 0.0);
    for (int h = 0; h < hidden; ++h) {
      for (int k : parents) {
        w1[static_cast<std::size_t>(h * d + k)] = weight_scale * normal(rng);
      }
    }
    std::vector<double> w2(static_cast<std::size_t>(hidden));
    for (auto& w : w2) w = std::abs(normal(rng));
    out.push_back(StructuralEquation::nonlinear(d, hidden, std::move(w1),
                                                std::vector<double>(static_cast<std::size_t>(hidden), 0.0),
                                                std::move(w2), bias(rng)));
  }
  return out;
}

GroundTruth make_ground_truth(const SimConfig& config) {
  config.validate();
  std::mt19937_64 graph_rng(derive_key(config.seed, 1));
  auto graph = random_dag(config.d, config.p_keep, graph_rng);
  std::mt19937_64 eq_rng(derive_key(config.seed, 2));
  auto eqs = random_equations(graph, config.equation_hidden, config.weight_scale, eq_rng);
  return GroundTruth(std::move(graph), std::move(eqs), config.seed, config.weight_scale);
}

SimRecommender::SimRecommender(int d, int dim, std::uint64_t seed) : d_(d), dim_(dim) {
  if (d < 1 || dim < 1) throw InputError("recommender needs positive sizes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  embedding_.resize(static_cast<std::size_t>(d) * static_cast<std::size_t>(dim));
  for (auto& v : embedding_) v = normal(rng);
  for (auto* m : {&wq_, &wc_, &wl_}) {
    m->resize(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
    for (auto& v : *m) v = s * normal(rng);
  }
}

std::vector<double> SimRecommender::scores(std::span<const int> history) const {
  if (history.empty()) throw InputError("recommender needs a non-empty history");
  const auto k = static_cast<std::size_t>(dim_);
  auto emb = [&](int item) {
    if (item < 0 || item >= d_) throw InputError("history item out of range");
    return embedding_.data() + static_cast<std::size_t>(item) * k;
  };
  auto matvec = [k](const std::vector<double>& m, const double* x, std::vector<double>& y) {
    y.assign(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) y[r] += m[r * k + c] * x[c];
    }
  };
  const double* last = emb(history.back());
  std::vector<double> q;
  matvec(wq_, last, q);
  std::vector<double> att(history.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double* e = emb(history[i]);
    att[i] = scale * std::inner_product(q.begin(), q.end(), e, 0.0);
  }
  const double mx = *std::max_element(att.begin(), att.end());
  double z = 0.0;
  for (auto& a : att) z += (a = std::exp(a - mx));
  std::vector<double> c(k, 0.0);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double* e = emb(history[i]);
    for (std::size_t r = 0; r < k; ++r) c[r] += att[i] / z * e[r];
  }
  std::vector<double> u1;
  std::vector<double> u2;
  matvec(wc_, c.data(), u1);
  matvec(wl_, last, u2);
  for (std::size_t r = 0; r < k; ++r) u1[r] += u2[r];
  std::vector<double> out(static_cast<std::size_t>(d_));
  for (int j = 0; j < d_; ++j) out[static_cast<std::size_t>(j)] = std::inner_product(u1.begin(), u1.end(), emb(j), 0.0);
  return out;
}

std::vector<int> SimRecommender::slate(std::span<const int> history, int k) const {
  if (k < 1 || k > d_) throw InputError("slate size must lie in [1, d]");
  const auto s = scores(history);
  std::vector<int> idx(static_cast<std::size_t>(d_));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    const double sa = s[static_cast<std::size_t>(a)];
    const double sb = s[static_cast<std::size_t>(b)];
    return sa > sb || (sa == sb && a < b);
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

SimRecommender make_recommender(const SimConfig& config) {
  config.validate();
  return SimRecommender(config.d, config.recommender_dim, derive_key(config.seed, 3));
}

int next_causal_item(const GroundTruth& truth, const HistoryVector& history) {
  const int d = truth.graph.size();
  if (history.size() != d) throw InputError("history length must equal d");
  int best = 0;
  double best_p = -1.0;
  std::vector<int> active;
  for (int j = 0; j < d; ++j) {
    active.clear();
    for (int k : truth.graph.parents(j)) {
      if (history[k]) active.push_back(k);
    }
    const double p = truth.equations[static_cast<std::size_t>(j)].probability_from_active(active);
    if (p > best_p) {
      best_p = p;
      best = j;
    }
  }
  return best;
}

TrajectoryDataset generate(const SimConfig& config, const GroundTruth& truth,
                           const SimRecommender& recommender, SimulationStats* stats) {
  config.validate();
  if (truth.graph.size() != config.d || recommender.size() != config.d) {
    throw InputError("ground truth and recommender must match the configured d");
  }
  TrajectoryDataset data;
  data.space = VariableSpace::identity(config.d);
  data.trajectories.reserve(static_cast<std::size_t>(config.n_users));
  SimulationStats local;
  for (int u = 0; u < config.n_users; ++u) {
    NoiseStream rng(derive_key(config.seed, 4, static_cast<std::uint64_t>(u)));
    Trajectory traj;
    traj.user_id = "u" + std::to_string(u);
    HistoryVector x(config.d);
    int item = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.d)));
    traj.events.push_back(item);
    x.set(item);
    for (int t = 1; t < config.traj_len; ++t) {
      ++local.steps;
      if (rng() < config.p_int) {
        ++local.interventions;
        const auto slate = recommender.slate(traj.events, config.slate_size);
        item = slate[rng.below(slate.size())];
      } else {
        item = next_causal_item(truth, x);
      }
      traj.events.push_back(item);
      x.set(item);
    }
    data.trajectories.push_back(std::move(traj));
  }
  if (stats != nullptr) *stats = local;
  return data;
}

}  // namespace causalrec
