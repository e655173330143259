#include <random>

#include <gtest/gtest.h>

#include "causalrec/error.hpp"
#include "causalrec/graph.hpp"
#include "oracles.hpp"

using namespace causalrec;

namespace {

std::vector<int> support_of(const Transition& t) { return t.history.support(); }

}  // namespace

TEST(Transitions, SingleStep) {
  const auto ts = transitions({"u", {2, 5}}, 6);
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(support_of(ts[0]), (std::vector<int>{2}));
  EXPECT_EQ(ts[0].target, 5);
}

TEST(Transitions, RepeatsCollapseToPresence) {
  const auto ts = transitions({"u", {1, 1, 3}}, 4);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(support_of(ts[0]), (std::vector<int>{1}));
  EXPECT_EQ(ts[0].target, 1);
  EXPECT_EQ(support_of(ts[1]), (std::vector<int>{1}));
  EXPECT_EQ(ts[1].target, 3);
}

TEST(Transitions, PrefixesByHand) {
  const auto ts = transitions({"u", {0, 2, 1, 2}}, 3);
  ASSERT_EQ(ts.size(), 3u);
  EXPECT_EQ(support_of(ts[0]), (std::vector<int>{0}));
  EXPECT_EQ(support_of(ts[1]), (std::vector<int>{0, 2}));
  EXPECT_EQ(support_of(ts[2]), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(ts[0].target, 2);
  EXPECT_EQ(ts[1].target, 1);
  EXPECT_EQ(ts[2].target, 2);
}

TEST(Transitions, LengthAndMonotoneHistory) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 8);
    const int k = static_cast<int>(rng() % 12);
    Trajectory t{"u", {}};
    for (int i = 0; i < k; ++i) t.events.push_back(static_cast<int>(rng() % static_cast<unsigned>(d)));
    const auto ts = transitions(t, d);
    EXPECT_EQ(ts.size(), k >= 2 ? static_cast<std::size_t>(k - 1) : 0u);
    for (std::size_t i = 1; i < ts.size(); ++i) {
      EXPECT_TRUE(ts[i].history.dominates(ts[i - 1].history));
    }
  }
}

TEST(IsDag, Examples) {
  EXPECT_TRUE(is_dag(CausalGraph(3)));
  CausalGraph two(2);
  two.set_edge(1, 0);
  two.set_edge(0, 1);
  EXPECT_FALSE(is_dag(two));
  // A[0][1] = A[1][2] = A[2][0] = 1: 1 -> 0, 2 -> 1, 0 -> 2.
  CausalGraph three(3);
  three.set_edge(1, 0);
  three.set_edge(2, 1);
  three.set_edge(0, 2);
  EXPECT_FALSE(is_dag(three));
  three.set_edge(0, 2, false);
  EXPECT_TRUE(is_dag(three));
}

TEST(IsDag, AgreesWithCycleSearchExhaustively) {
  for (int d = 1; d <= 4; ++d) {
    const int slots = d * (d - 1);
    for (int mask = 0; mask < (1 << slots); ++mask) {
      CausalGraph g(d);
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
      int bit = 0;
      for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
          if (j == k) continue;
          if ((mask >> bit++) & 1) {
            g.set_edge(k, j);
            a(j, k) = 1.0;
          }
        }
      }
      ASSERT_EQ(is_dag(g), !oracle::has_cycle(a)) << "d=" << d << " mask=" << mask;
    }
  }
}

TEST(CausalGraph, OrientationAndQueries) {
  CausalGraph g(3);
  g.set_edge(2, 0);
  g.set_edge(1, 0);
  EXPECT_TRUE(g.at(0, 2));
  EXPECT_TRUE(g.has_edge(2, 0));
  EXPECT_FALSE(g.has_edge(0, 2));
  EXPECT_EQ(g.edge_count(), 2);
  EXPECT_EQ(g.parents(0), (std::vector<int>{1, 2}));
  const auto edges = g.edges();
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(edges[0], std::make_pair(1, 0));
  EXPECT_EQ(g.to_matrix()(0, 2), 1.0);
  EXPECT_THROW(g.set_edge(1, 1), InputError);
  EXPECT_THROW(g.set_edge(3, 0), InputError);
}

TEST(ThresholdGraph, Examples) {
  Eigen::MatrixXd logits = Eigen::MatrixXd::Constant(3, 3, -10.0);
  EXPECT_EQ(threshold_graph(logits).edge_count(), 0);
  logits(0, 1) = 10.0;
  const auto one = threshold_graph(logits);
  EXPECT_EQ(one.edge_count(), 1);
  EXPECT_TRUE(one.has_edge(1, 0));
  logits(0, 1) = 0.0;
  EXPECT_EQ(threshold_graph(logits).edge_count(), 0);
}

TEST(ThresholdGraph, IgnoresDiagonalAndNegativeLogits) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> neg(-20.0, -1e-9);
  Eigen::MatrixXd logits(5, 5);
  for (int i = 0; i < 25; ++i) logits(i / 5, i % 5) = neg(rng);
  logits.diagonal().setConstant(50.0);
  EXPECT_EQ(threshold_graph(logits, 0.5).edge_count(), 0);
  EXPECT_THROW(threshold_graph(logits, 1.0), InputError);
}

TEST(VariableSpace, MapsItemsAndRejectsBadInput) {
  VariableSpace space({"shoes", "hats"}, {{"sneaker", 0}, {"boot", 0}, {"cap", 1}});
  EXPECT_EQ(space.variable_of("boot"), 0);
  EXPECT_EQ(space.variable_of("cap"), 1);
  EXPECT_THROW(space.variable_of("sock"), InputError);
  EXPECT_THROW(VariableSpace({"a", "a"}, {}), InputError);
  EXPECT_THROW(VariableSpace({"a"}, {{"x", 1}}), InputError);
  const auto id = VariableSpace::identity(3);
  EXPECT_EQ(id.labels(), (std::vector<std::string>{"v0", "v1", "v2"}));
  EXPECT_EQ(id.variable_of("2"), 2);
}

TEST(TrajectoryDataset, ValidatesEventsAndCountsTransitions) {
  TrajectoryDataset ds{VariableSpace::identity(3), {{"a", {0, 1, 2}}, {"b", {2}}, {"c", {}}}};
  EXPECT_NO_THROW(ds.validate());
  EXPECT_EQ(ds.transition_count(), 2u);
  ds.trajectories.push_back({"d", {0, 3}});
  EXPECT_THROW(ds.validate(), InputError);
}
