#pragma once

// Continuous acyclicity penalty h(G) = Tr(exp(sigmoid(G))) - d over the edge
// logits G, with the diagonal masked out (no self-causation).

#include <Eigen/Core>

namespace causalrec {

/// exp(W) by scaling and squaring around a diagonal Pade approximant
/// (degree 3..13 chosen from the 1-norm). Throws InputError on non-finite
/// entries or non-square input.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& w);

/// Tr(exp(A)) - d for an arbitrary square matrix.
double trace_exp_excess(const Eigen::MatrixXd& a);

struct PenaltyResult {
  double value = 0.0;
  Eigen::MatrixXd gradient_wrt_logits;  // zero diagonal
};

PenaltyResult dag_penalty(const Eigen::MatrixXd& logits);

/// Constraint treated as satisfied once h drops below this.
inline constexpr double kDefaultDagTolerance = 1e-8;

}  // namespace causalrec
