#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "causalrec/error.hpp"
#include "causalrec/experiment.hpp"
#include "causalrec/optim.hpp"
#include "causalrec/simulator.hpp"
#include "oracles.hpp"

using namespace causalrec;

namespace {

ModelShape small_shape(int d) {
  ModelShape s;
  s.d = d;
  s.equation_hidden = 2;
  s.embedding_dim = 3;
  s.rs_hidden = 2;
  s.window = 5;
  return s;
}

void randomize(CausalModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (auto& t : m.params().tensors()) {
    for (auto& v : t.value) v = 0.7 * n01(rng);
  }
}

std::vector<TransitionExample> examples_for(const std::vector<std::vector<int>>& trajectories, int d) {
  std::vector<TransitionExample> out;
  for (const auto& events : trajectories) {
    auto part = make_examples(Trajectory{"u", events}, d, 5);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

// Two variables, 0 -> 1: item 1 is the argmax once 0 was seen, item 0 otherwise.
GroundTruth two_node_truth() {
  CausalGraph g(2);
  g.set_edge(0, 1);
  std::vector<StructuralEquation> eqs = {StructuralEquation::linear({0.0, 0.0}, 0.0),
                                         StructuralEquation::linear({3.0, 0.0}, -1.0)};
  return GroundTruth(g, eqs);
}

}  // namespace

TEST(Rmsprop, FirstStepExample) {
  ParameterStore p;
  auto& t = p.add("w", {1});
  RmspropOptions o;
  RmspropState s(p, o);
  t.grad[0] = 1.0;
  s.step(p);
  EXPECT_NEAR(t.value[0], -0.001 / std::sqrt(0.1 + 1e-8), 1e-15);
  EXPECT_NEAR(t.value[0], -0.0031623, 1e-7);
}

TEST(Rmsprop, ZeroGradientLeavesParametersAlone) {
  ParameterStore p;
  auto& t = p.add("w", {3});
  t.value = {1.0, -2.0, 0.5};
  RmspropState s(p, RmspropOptions{});
  s.step(p);
  EXPECT_EQ(t.value, (std::vector<double>{1.0, -2.0, 0.5}));
}

TEST(Rmsprop, ConstantGradientStepApproachesLearningRate) {
  ParameterStore p;
  auto& t = p.add("w", {1});
  RmspropState s(p, RmspropOptions{});
  double before = 0.0, step = 0.0;
  for (int i = 0; i < 300; ++i) {
    t.grad[0] = 4.0;
    before = t.value[0];
    s.step(p);
    step = before - t.value[0];
    EXPECT_GE(s.averages()[0][0], 0.0);
  }
  EXPECT_NEAR(step, 1e-3, 1e-9);
}

TEST(Rmsprop, PerTensorRatesAndLayoutChecks) {
  ParameterStore p;
  p.add("a", {1});
  p.add("b", {1});
  auto& a = p.at("a");
  auto& b = p.at("b");
  RmspropOptions o;
  o.learning_rate_overrides["b"] = 0.01;
  RmspropState s(p, o);
  a.grad[0] = b.grad[0] = 1.0;
  s.step(p);
  EXPECT_NEAR(b.value[0] / a.value[0], 10.0, 1e-12);

  o.learning_rate_overrides["missing"] = 0.1;
  EXPECT_THROW(RmspropState(p, o), InputError);
  ParameterStore other;
  other.add("a", {2});
  other.add("b", {1});
  EXPECT_THROW(s.step(other), InputError);
}

TEST(MultiplierUpdate, Examples) {
  LagrangianState s;
  s.lambda = 0.0;
  s.mu = 1.0;
  s.h_prev = 0.5;
  const auto a = multiplier_update(s, 0.5, 2.0, 0.9);
  EXPECT_EQ(a.lambda, 0.5);
  EXPECT_EQ(a.mu, 2.0);
  EXPECT_EQ(a.h_prev, 0.5);
  EXPECT_EQ(a.t, 1);

  const auto b = multiplier_update(s, 0.4, 2.0, 0.9);
  EXPECT_EQ(b.mu, 1.0);
  EXPECT_EQ(b.lambda, 0.4);

  const auto c = multiplier_update(s, 0.0, 2.0, 0.9);
  EXPECT_EQ(c.lambda, 0.0);
  EXPECT_EQ(c.mu, 1.0);

  EXPECT_THROW(multiplier_update(s, -1e-3), InputError);
  EXPECT_THROW(multiplier_update(s, std::nan("")), InputError);
}

TEST(MultiplierUpdate, MonotoneOverRandomSequences) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  LagrangianState s;
  for (int i = 0; i < 1000; ++i) {
    const auto next = multiplier_update(s, u(rng));
    EXPECT_GE(next.mu, s.mu);
    EXPECT_GE(next.lambda, s.lambda);
    s = next;
  }
}

TEST(InnerObjective, ReducesToNegativeScoreWithoutPenalties) {
  CausalModel m(small_shape(3));
  randomize(m, 1);
  const auto batch = examples_for({{0, 2, 1}, {1, 1, 0, 2}}, 3);
  LagrangianState st;
  st.mu = 0.0;
  ObjectiveOptions o;
  o.l2 = 0.0;
  o.sparsity = 0.0;
  GradientTape tape;
  m.params().zero_grad();
  const auto v = inner_objective(m, batch, 5, st, o, tape);
  EXPECT_EQ(v.total, -batch_score(m, batch, 5, o.score, tape).value);
  EXPECT_EQ(v.penalty, 0.0);
  EXPECT_EQ(v.regularizer, 0.0);
}

TEST(InnerObjective, MaskedLogitsContributeNoPenalty) {
  CausalModel m(small_shape(3));
  m.set_logits(Eigen::MatrixXd::Constant(3, 3, -1e9));
  const auto batch = examples_for({{0, 2, 1}}, 3);
  LagrangianState st;
  st.lambda = 3.0;
  st.mu = 5.0;
  ObjectiveOptions o;
  o.l2 = 0.0;
  o.sparsity = 0.0;
  GradientTape tape;
  m.params().zero_grad();
  const auto v = inner_objective(m, batch, 5, st, o, tape);
  EXPECT_EQ(v.penalty, 0.0);
  EXPECT_EQ(v.h, 0.0);
}

TEST(InnerObjective, PenaltyGradientIsChainRuleOfH) {
  const int d = 4;
  CausalModel m(small_shape(d));
  randomize(m, 2);
  LagrangianState st;
  st.lambda = 0.7;
  st.mu = 1.9;
  ObjectiveOptions o;
  o.l2 = 0.0;
  o.sparsity = 0.0;
  const auto p = dag_penalty(m.logits());
  m.params().zero_grad();
  double part = 0.0;
  add_regularizers(m, p, st, o, part);
  auto& gamma = m.params().at("gamma");
  auto value = [&] {
    const double h = dag_penalty(m.logits()).value;
    return st.lambda * h + 0.5 * st.mu * h * h;
  };
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      if (j == k) continue;
      const auto idx = static_cast<std::size_t>(j * d + k);
      EXPECT_NEAR(gamma.grad[idx], (st.lambda + st.mu * p.value) * p.gradient_wrt_logits(j, k), 1e-15);
      const double fd = oracle::central_difference(value, gamma.value[idx], 1e-4);
      EXPECT_LT(oracle::relative_error(gamma.grad[idx], fd), 1e-6);
    }
  }
}

TEST(InnerObjective, FullGradientMatchesFiniteDifferences) {
  const int d = 4;
  CausalModel m(small_shape(d));
  randomize(m, 3);
  const auto batch = examples_for({{0, 2, 1, 3}, {3, 3, 0}, {1, 0, 2, 2, 3}}, d);
  LagrangianState st;
  st.lambda = 0.4;
  st.mu = 2.5;
  ObjectiveOptions o;
  o.score.relaxed = true;
  o.score.negatives = -1;
  o.l2 = 0.3;
  o.sparsity = 0.2;
  GradientTape tape;
  m.params().zero_grad();
  inner_objective(m, batch, 13, st, o, tape);
  std::vector<std::vector<double>> grads;
  for (const auto& t : m.params().tensors()) grads.push_back(t.grad);
  auto value = [&] { return inner_objective(m, batch, 13, st, o, tape).total; };
  auto& tensors = m.params().tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    for (std::size_t k = 0; k < tensors[i].size(); ++k) {
      if (tensors[i].name == "gamma" && k % (d + 1) == 0) continue;
      const double fd = oracle::central_difference(value, tensors[i].value[k], 1e-4);
      EXPECT_LT(oracle::relative_error(grads[i][k], fd, 1e-6), 1e-5) << tensors[i].name << "[" << k << "]";
    }
  }
}

TEST(InnerObjective, RegularizerGradients) {
  CausalModel m(small_shape(3));
  randomize(m, 4);
  LagrangianState st;
  st.mu = 0.0;
  ObjectiveOptions o;
  o.l2 = 0.5;
  o.sparsity = 0.25;
  m.params().zero_grad();
  double part = 0.0;
  const double reg = add_regularizers(m, dag_penalty(m.logits()), st, o, part);
  double expected = 0.0;
  for (const auto& t : m.params().tensors()) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t.name == "gamma") {
        if (k % 4 == 0) {
          EXPECT_EQ(t.grad[k], 0.0);
          continue;
        }
        const double s = oracle::sigmoid(t.value[k]);
        expected += 0.25 * s;
        EXPECT_NEAR(t.grad[k], 0.25 * s * (1.0 - s), 1e-15);
      } else {
        expected += 0.25 * t.value[k] * t.value[k];
        EXPECT_NEAR(t.grad[k], 0.5 * t.value[k], 1e-15);
      }
    }
  }
  EXPECT_NEAR(reg, expected, 1e-12);
}

TEST(Train, DeterministicLogAndMonotoneMultipliers) {
  SimConfig sc;
  sc.d = 5;
  sc.p_keep = 0.3;
  sc.n_users = 60;
  sc.slate_size = 3;
  sc.seed = 7;
  const auto truth = make_ground_truth(sc);
  const auto data = generate(sc, truth, make_recommender(sc));
  const auto examples = make_examples(data, 5);

  ModelShape shape = small_shape(5);
  CausalModel init(shape);
  init.initialize(1);
  TrainOptions o;
  o.max_outer = 4;
  o.max_epochs = 2;
  o.batch_size = 32;
  o.seed = 9;
  o.deterministic_log = true;
  std::ostringstream a, b;
  const auto r1 = train(init, examples, o, &a);
  const auto r2 = train(init, examples, o, &b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());
  EXPECT_EQ(r1.final_h, r2.final_h);
  for (std::size_t i = 1; i < r1.outers.size(); ++i) {
    EXPECT_GE(r1.outers[i].mu, r1.outers[i - 1].mu);
    EXPECT_GE(r1.outers[i].lambda, r1.outers[i - 1].lambda);
  }
  EXPECT_LE(r1.outers.size(), 4u);
}

TEST(Train, ShardedRunMatchesSingleThread) {
  SimConfig sc;
  sc.d = 4;
  sc.p_keep = 0.5;
  sc.n_users = 40;
  sc.slate_size = 2;
  sc.seed = 3;
  const auto truth = make_ground_truth(sc);
  const auto examples = make_examples(generate(sc, truth, make_recommender(sc)), 5);
  CausalModel init(small_shape(4));
  init.initialize(2);
  TrainOptions o;
  o.max_outer = 2;
  o.max_epochs = 2;
  o.batch_size = 16;
  o.deterministic_log = true;
  const auto one = train(init, examples, o);
  o.threads = 3;
  const auto three = train(init, examples, o);
  const auto la = one.model.logits();
  const auto lb = three.model.logits();
  EXPECT_LT((la - lb).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Train, RejectsEmptyData) {
  CausalModel init(small_shape(3));
  EXPECT_THROW(train(init, std::span<const TransitionExample>{}, TrainOptions{}), InputError);
}

// With the RS expert active the GRU can absorb deterministic rollouts, so the
// edge is checked on the causal expert alone.
TEST(Train, CausalOnlyRecoversTwoNodeEdge) {
  const auto truth = two_node_truth();
  SimConfig sc;
  sc.d = 2;
  sc.p_keep = 1.0;
  sc.n_users = 400;
  sc.p_int = 0.0;
  sc.slate_size = 1;
  sc.recommender_dim = 4;
  sc.seed = 1;
  const auto data = generate(sc, truth, make_recommender(sc));
  RunConfig c;
  c.model.equation_hidden = 4;
  c.model.embedding_dim = 8;
  c.model.rs_hidden = 8;
  c.model.negatives = -1;
  c.model.disable_rs = true;
  c.training.seed = 1;
  const auto r = run_on_dataset(c, data, &truth.graph);
  const auto g = r.training.model.logits();
  EXPECT_GT(oracle::sigmoid(g(1, 0)), 0.9);
  EXPECT_LT(oracle::sigmoid(g(0, 1)), 0.1);
}
