#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "causalrec/dagness.hpp"
#include "causalrec/error.hpp"
#include "oracles.hpp"

using namespace causalrec;
using Eigen::MatrixXd;

TEST(MatrixExponential, ClosedForms) {
  EXPECT_TRUE(matrix_exponential(MatrixXd::Zero(2, 2)).isApprox(MatrixXd::Identity(2, 2)));

  MatrixXd nil(2, 2);
  nil << 0, 1, 0, 0;
  MatrixXd expected(2, 2);
  expected << 1, 1, 0, 1;
  EXPECT_LT((matrix_exponential(nil) - expected).cwiseAbs().maxCoeff(), 1e-15);

  MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  const MatrixXd e = matrix_exponential(swap);
  EXPECT_NEAR(e(0, 0), std::cosh(1.0), 1e-14);
  EXPECT_NEAR(e(0, 1), std::sinh(1.0), 1e-14);
  EXPECT_NEAR(e.trace(), 3.08616, 1e-5);
  EXPECT_LT((e - oracle::expm_series(swap)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MatrixExponential, MatchesSeriesAcrossNorms) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  // Norms from tiny (low-degree Pade) to several units (scaling and squaring).
  for (double scale : {1e-4, 0.05, 0.3, 1.0, 2.5, 5.0}) {
    for (int d : {1, 3, 6, 10}) {
      MatrixXd w(d, d);
      for (int i = 0; i < d * d; ++i) w(i / d, i % d) = scale * n01(rng) / std::sqrt(d);
      const MatrixXd ref = oracle::expm_series(w);
      const double err = (matrix_exponential(w) - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
      EXPECT_LT(err, 1e-12) << "scale=" << scale << " d=" << d;
    }
  }
}

TEST(MatrixExponential, LargeNormUsesSquaring) {
  // exp(diag) is exact, so large entries check the squaring path directly.
  MatrixXd w = MatrixXd::Zero(3, 3);
  w.diagonal() << 12.0, -9.0, 30.0;
  const MatrixXd e = matrix_exponential(w);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(e(i, i) / std::exp(w(i, i)), 1.0, 1e-12);
}

TEST(MatrixExponential, RejectsBadInput) {
  EXPECT_THROW(matrix_exponential(MatrixXd::Zero(2, 3)), InputError);
  MatrixXd nan = MatrixXd::Zero(2, 2);
  nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(matrix_exponential(nan), InputError);
}

TEST(DagPenalty, Examples) {
  EXPECT_NEAR(dag_penalty(MatrixXd::Constant(4, 4, -1e9)).value, 0.0, 1e-15);
  const auto two = dag_penalty(MatrixXd::Zero(2, 2));
  EXPECT_NEAR(two.value, 2.0 * std::cosh(0.5) - 2.0, 1e-14);
  EXPECT_NEAR(two.value, 0.255252, 1e-6);
}

TEST(DagPenalty, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  MatrixXd g(4, 4);
  for (int i = 0; i < 16; ++i) g(i / 4, i % 4) = 1.5 * n01(rng);
  const auto p = dag_penalty(g);
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      if (j == k) {
        EXPECT_EQ(p.gradient_wrt_logits(j, k), 0.0);
        continue;
      }
      const double fd = oracle::central_difference([&] { return dag_penalty(g).value; }, g(j, k), 1e-4);
      EXPECT_LT(oracle::relative_error(p.gradient_wrt_logits(j, k), fd), 1e-6) << j << "," << k;
    }
  }
}

TEST(DagPenalty, DiagonalIsIgnored) {
  MatrixXd g = MatrixXd::Constant(3, 3, -2.0);
  const double base = dag_penalty(g).value;
  g.diagonal().setConstant(40.0);
  EXPECT_EQ(dag_penalty(g).value, base);
}

TEST(DagPenalty, PositiveWheneverLogitsAreFinite) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-15.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd g(5, 5);
    for (int i = 0; i < 25; ++i) g(i / 5, i % 5) = u(rng);
    EXPECT_GT(dag_penalty(g).value, 0.0);
  }
}

TEST(DagPenalty, InvariantUnderTranspose) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  MatrixXd g(5, 5);
  for (int i = 0; i < 25; ++i) g(i / 5, i % 5) = n01(rng);
  const MatrixXd gt = g.transpose();
  EXPECT_NEAR(dag_penalty(g).value, dag_penalty(gt).value, 1e-13);
}

TEST(TraceExpExcess, ZeroExactlyForBinaryDagsSmall) {
  // The exhaustive d <= 4 sweep lives in the acceptance suite; spot-check here.
  MatrixXd chain = MatrixXd::Zero(3, 3);
  chain(1, 0) = chain(2, 1) = 1.0;
  EXPECT_NEAR(trace_exp_excess(chain), 0.0, 1e-12);
  chain(0, 2) = 1.0;
  EXPECT_GT(trace_exp_excess(chain), 0.1);
}
