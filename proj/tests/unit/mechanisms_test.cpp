#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "causalrec/error.hpp"
#include "causalrec/mechanisms.hpp"
#include "oracles.hpp"

using namespace causalrec;

namespace {

ModelShape shape(int d, EquationVariant v = EquationVariant::kNonlinear, int h = 3, int e = 4, int hg = 3) {
  ModelShape s;
  s.d = d;
  s.variant = v;
  s.equation_hidden = h;
  s.embedding_dim = e;
  s.rs_hidden = hg;
  s.window = 5;
  return s;
}

void randomize(CausalModel& m, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (auto& t : m.params().tensors()) {
    for (auto& v : t.value) v = scale * n01(rng);
  }
}

// Scalar-loop oracle of the recurrent mechanism: embed, roll the cell, project, softmax.
std::vector<double> rs_oracle(const CausalModel& m, const std::vector<int>& window) {
  const auto& p = m.params();
  const int d = m.size(), e = m.shape().embedding_dim, h = m.shape().rs_hidden;
  const auto& emb = p.at("g.embedding").value;
  const auto& wi = p.at("g.w_ih").value;
  const auto& wh = p.at("g.w_hh").value;
  const auto& bi = p.at("g.b_ih").value;
  const auto& bh = p.at("g.b_hh").value;
  std::vector<double> state(static_cast<std::size_t>(h), 0.0);
  for (int item : window) {
    std::vector<double> gi(3 * h), gh(3 * h);
    for (int r = 0; r < 3 * h; ++r) {
      gi[r] = bi[r];
      gh[r] = bh[r];
      for (int c = 0; c < e; ++c) gi[r] += wi[r * e + c] * emb[item * e + c];
      for (int c = 0; c < h; ++c) gh[r] += wh[r * h + c] * state[c];
    }
    std::vector<double> next(h);
    for (int u = 0; u < h; ++u) {
      const double rg = oracle::sigmoid(gi[u] + gh[u]);
      const double zg = oracle::sigmoid(gi[h + u] + gh[h + u]);
      const double ng = std::tanh(gi[2 * h + u] + rg * gh[2 * h + u]);
      next[u] = (1.0 - zg) * ng + zg * state[u];
    }
    state = next;
  }
  const auto& wo = p.at("g.w_out").value;
  const auto& bo = p.at("g.b_out").value;
  std::vector<double> logits(d);
  for (int j = 0; j < d; ++j) {
    logits[j] = bo[j];
    for (int u = 0; u < h; ++u) logits[j] += wo[j * h + u] * state[u];
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& l : logits) z += (l = std::exp(l - mx));
  for (auto& l : logits) l /= z;
  return logits;
}

}  // namespace

TEST(CausalProb, LinearExamples) {
  const auto zero = StructuralEquation::linear({0, 0, 0}, 0.0);
  const auto x = HistoryVector::from_events(std::vector<int>{0, 2}, 3);
  const std::vector<std::uint8_t> all = {1, 1, 1};
  EXPECT_EQ(causal_prob(zero, x, all), 0.5);
  const auto one = StructuralEquation::linear({0, 1, 0}, 0.0);
  const auto x1 = HistoryVector::from_events(std::vector<int>{1}, 3);
  EXPECT_NEAR(causal_prob(one, x1, all), 0.73106, 1e-5);
}

TEST(CausalProb, MaskingInvariance) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  const int d = 7, h = 4;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w1(h * d), b1(h), w2(h);
    for (auto* v : {&w1, &b1, &w2}) {
      for (auto& x : *v) x = n01(rng);
    }
    const auto f = StructuralEquation::nonlinear(d, h, w1, b1, w2, n01(rng));
    std::vector<std::uint8_t> mask(d);
    HistoryVector x(d);
    for (int k = 0; k < d; ++k) {
      mask[k] = rng() & 1;
      if (rng() & 1) x.set(k);
    }
    const double base = causal_prob(f, x, mask);
    for (int k = 0; k < d; ++k) {
      if (mask[k] != 0) continue;
      HistoryVector flipped = x;
      if (x[k]) flipped.clear(k); else flipped.set(k);
      ASSERT_EQ(causal_prob(f, flipped, mask), base);
    }
    EXPECT_GT(base, 0.0);
    EXPECT_LT(base, 1.0);
  }
}

TEST(CausalProb, NonlinearByHand) {
  // Two hidden units over d = 2, parent 1 active.
  const auto f = StructuralEquation::nonlinear(2, 2, {0.5, 2.0, -1.0, -3.0}, {0.1, 0.2}, {1.5, -0.5}, -0.25);
  const double h0 = 0.1 + 2.0;             // positive: passes through
  const double h1 = 0.01 * (0.2 - 3.0);    // negative: leaky slope
  const double z = -0.25 + 1.5 * h0 - 0.5 * h1;
  const std::vector<int> active = {1};
  EXPECT_NEAR(f.logit_from_active(active), z, 1e-15);
  EXPECT_NEAR(f.probability_from_active(active), oracle::sigmoid(z), 1e-15);
  EXPECT_THROW(StructuralEquation::nonlinear(2, 2, {1.0}, {0, 0}, {0, 0}, 0.0), InputError);
}

TEST(ExpertProb, Examples) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_EQ(expert_prob(g, 0, {}), 1.0);
  const std::vector<int> one = {1};
  EXPECT_EQ(expert_prob(g, 0, one), 0.5);
  const std::vector<int> two = {1, 2};
  EXPECT_EQ(expert_prob(g, 0, two), 0.25);
  // The target itself never counts as its own parent.
  const std::vector<int> with_self = {0, 1, 2};
  EXPECT_EQ(expert_prob(g, 0, with_self), 0.25);
}

TEST(ExpertProb, MonotoneAndLimits) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  Eigen::MatrixXd g(4, 4);
  for (int i = 0; i < 16; ++i) g(i / 4, i % 4) = n01(rng);
  const std::vector<int> h = {0, 2, 3};
  for (int k : {0, 2, 3}) {
    Eigen::MatrixXd up = g;
    up(1, k) += 0.5;
    EXPECT_LE(expert_prob(up, 1, h), expert_prob(g, 1, h));
    Eigen::MatrixXd big = g;
    big(1, k) = 30.0;
    EXPECT_LT(expert_prob(big, 1, h), 1e-12);
  }
  Eigen::MatrixXd low = Eigen::MatrixXd::Constant(4, 4, -30.0);
  EXPECT_NEAR(expert_prob(low, 1, h), 1.0, 1e-12);
}

TEST(RsMechanism, ZeroParametersAreUniform) {
  CausalModel m(shape(5));
  const auto p = m.rs_prob(std::vector<int>{1, 2});
  for (double v : p) EXPECT_NEAR(v, 0.2, 1e-15);
  EXPECT_THROW(m.rs_prob(std::vector<int>{}), InputError);
}

TEST(RsMechanism, MatchesScalarOracleAndSumsToOne) {
  CausalModel m(shape(6));
  randomize(m, 3);
  for (const std::vector<int>& w : {std::vector<int>{4}, std::vector<int>{0, 5, 5, 2}, std::vector<int>{1, 2, 3, 4, 0}}) {
    const auto p = m.rs_prob(w);
    const auto ref = rs_oracle(m, w);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (int j = 0; j < 6; ++j) EXPECT_NEAR(p[j], ref[j], 1e-12);
  }
}

TEST(RsMechanism, UsesOnlyTheMostRecentWindow) {
  CausalModel m(shape(6));
  randomize(m, 4);
  const std::vector<int> long_history = {0, 1, 2, 3, 4, 5, 1};
  const std::vector<int> tail = {2, 3, 4, 5, 1};
  EXPECT_EQ(m.rs_prob(long_history), m.rs_prob(tail));
}

TEST(RsMechanism, ScalarHandTrace) {
  // d = 2, one-dimensional embedding and hidden state.
  CausalModel m(shape(2, EquationVariant::kNonlinear, 1, 1, 1));
  auto& p = m.params();
  p.at("g.embedding").value = {0.5, -1.0};
  p.at("g.w_ih").value = {0.3, -0.2, 0.8};
  p.at("g.w_hh").value = {0.1, 0.4, -0.6};
  p.at("g.b_ih").value = {0.05, -0.1, 0.2};
  p.at("g.b_hh").value = {0.0, 0.3, -0.15};
  p.at("g.w_out").value = {1.0, -2.0};
  p.at("g.b_out").value = {0.0, 0.5};
  // Same cell as the tape hand trace: inputs 0.5 then -1.
  const double r1 = 1.0 / (1.0 + std::exp(-0.2));
  const double z1 = 1.0 / (1.0 + std::exp(-0.1));
  const double h1 = (1.0 - z1) * std::tanh(0.6 - 0.15 * r1);
  const double r2 = 1.0 / (1.0 + std::exp(-(-0.25 + 0.1 * h1)));
  const double z2 = 1.0 / (1.0 + std::exp(-(0.4 + 0.4 * h1)));
  const double n2 = std::tanh(-0.6 + r2 * (-0.6 * h1 - 0.15));
  const double h2 = (1.0 - z2) * n2 + z2 * h1;
  const double l0 = h2, l1 = -2.0 * h2 + 0.5;
  const double p0 = 1.0 / (1.0 + std::exp(l1 - l0));
  const auto out = m.rs_prob(std::vector<int>{0, 1});
  EXPECT_NEAR(out[0], p0, 1e-12);
  EXPECT_NEAR(out[1], 1.0 - p0, 1e-12);
}

TEST(RsMechanism, PermutationEquivariant) {
  const int d = 5;
  CausalModel m(shape(d));
  randomize(m, 5);
  const std::vector<int> perm = {3, 0, 4, 1, 2};  // variable k becomes perm[k]
  CausalModel q = m;
  const int e = m.shape().embedding_dim, h = m.shape().rs_hidden;
  for (int k = 0; k < d; ++k) {
    for (int c = 0; c < e; ++c) {
      q.params().at("g.embedding").value[perm[k] * e + c] = m.params().at("g.embedding").value[k * e + c];
    }
    for (int u = 0; u < h; ++u) {
      q.params().at("g.w_out").value[perm[k] * h + u] = m.params().at("g.w_out").value[k * h + u];
    }
    q.params().at("g.b_out").value[perm[k]] = m.params().at("g.b_out").value[k];
  }
  const std::vector<int> w = {1, 4, 0};
  std::vector<int> pw;
  for (int k : w) pw.push_back(perm[k]);
  const auto a = m.rs_prob(w);
  const auto b = q.rs_prob(pw);
  for (int k = 0; k < d; ++k) EXPECT_NEAR(a[k], b[perm[k]], 1e-13);
}

TEST(CausalModel, RecordedEquationMatchesStandaloneCopy) {
  for (auto variant : {EquationVariant::kNonlinear, EquationVariant::kLinear}) {
    CausalModel m(shape(5, variant));
    randomize(m, 6);
    const std::vector<int> cols = {0, 3, 4};
    GradientTape t;
    for (int j = 0; j < 5; ++j) {
      t.clear();
      const std::vector<double> ones(cols.size(), 1.0);
      const auto p = t.scalar(m.record_equation(t, j, cols, t.constant(ones)));
      EXPECT_NEAR(p, m.equation(j).probability_from_active(cols), 1e-14);
    }
  }
}

TEST(CausalModel, RecordedRsMatchesWithAndWithoutProjectionCache) {
  CausalModel m(shape(6));
  randomize(m, 7, 0.5);
  const std::vector<int> w = {2, 5, 1};
  GradientTape t;
  const int target = 5;
  auto run = [&](bool cached) {
    m.params().zero_grad();
    if (cached) m.begin_batch();
    t.clear();
    const auto out = t.gather(m.record_rs(t, w), std::span<const int>(&target, 1));
    const double value = t.scalar(out);
    t.backward(t.log(out));
    if (cached) m.end_batch();
    std::vector<std::vector<double>> grads;
    for (const auto& tensor : m.params().tensors()) grads.push_back(tensor.grad);
    return std::make_pair(value, grads);
  };
  const auto plain = run(false);
  const auto cached = run(true);
  EXPECT_NEAR(plain.first, m.rs_prob(w)[target], 1e-14);
  EXPECT_NEAR(cached.first, plain.first, 1e-14);
  for (std::size_t i = 0; i < plain.second.size(); ++i) {
    for (std::size_t k = 0; k < plain.second[i].size(); ++k) {
      EXPECT_NEAR(cached.second[i][k], plain.second[i][k], 1e-13) << m.params().tensors()[i].name;
    }
  }
}

TEST(CausalModel, InitializationRanges) {
  CausalModel m(shape(6));
  m.initialize(9);
  const auto& p = m.params();
  for (double v : p.at("gamma").value) EXPECT_EQ(v, 0.0);
  for (double v : p.at("f.b1").value) EXPECT_EQ(v, 0.0);
  const double bound = 1.0 / std::sqrt(6.0);  // fan-in of the first layer is d
  double largest = 0.0;
  for (double v : p.at("f.w1").value) largest = std::max(largest, std::abs(v));
  EXPECT_LE(largest, bound);
  EXPECT_GT(largest, 0.5 * bound);
  CausalModel again(shape(6));
  again.initialize(9);
  EXPECT_EQ(again.params().at("g.w_hh").value, p.at("g.w_hh").value);
}

TEST(CausalModel, MetadataRoundTrip) {
  CausalModel m(shape(4, EquationVariant::kLinear));
  randomize(m, 10);
  const auto back = CausalModel::from_parameters(m.params(), m.metadata_json());
  EXPECT_EQ(back.shape(), m.shape());
  EXPECT_EQ(back.logits(), m.logits());
  EXPECT_EQ(back.rs_prob(std::vector<int>{1, 3}), m.rs_prob(std::vector<int>{1, 3}));
  EXPECT_THROW(CausalModel::from_parameters(ParameterStore{}, m.metadata_json()), InputError);
}

TEST(CausalModel, LogitsRoundTrip) {
  CausalModel m(shape(3));
  Eigen::MatrixXd g(3, 3);
  g << 0, 1, 2, 3, 0, 4, 5, 6, 0;
  m.set_logits(g);
  EXPECT_EQ(m.logits(), g);
  EXPECT_EQ(m.params().at("gamma").value[1], 1.0);  // row-major, row = child
}
