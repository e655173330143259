#pragma once

// The learned components of the mixture model:
//   * structural equations f_j, one per variable, each reading the history
//     vector through row j of the adjacency (its parents);
//   * the recommender mechanism g, a gated recurrent sequence model over the
//     most recent events producing a distribution over the d variables;
//   * the expert probability r = prod_{k in H} (1 - sigmoid(G[j][k])), the
//     chance that no history variable is a parent of j, i.e. that the
//     recommender rather than the causal mechanism produced the event.
//
// Parameter layout inside CausalModel::params():
//   gamma          d x d          edge logits G (diagonal unused)
//   f.w1, f.b1     d x H x d, d x H      nonlinear variant, first layer
//   f.w2, f.b2     d x H, d              nonlinear variant, output layer
//   f.w, f.b       d x d, d              linear variant
//   g.embedding    d x E
//   g.w_ih, g.b_ih 3Hg x E, 3Hg          gate blocks [reset, update, candidate]
//   g.w_hh, g.b_hh 3Hg x Hg, 3Hg
//   g.w_out, g.b_out d x Hg, d

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "causalrec/graph.hpp"
#include "causalrec/parameters.hpp"
#include "causalrec/tape.hpp"

namespace causalrec {

enum class EquationVariant { kNonlinear, kLinear };

std::string to_string(EquationVariant v);
EquationVariant equation_variant_from_string(const std::string& s);

inline constexpr double kLeakySlope = 0.01;

/// A standalone structural equation p(X_j = 1 | parents) with its own
/// weights. Inputs are binary, so evaluation only needs the list of active
/// inputs (variables that are both present in the history and unmasked).
class StructuralEquation {
 public:
  static StructuralEquation linear(std::vector<double> weights, double bias);
  /// first_layer is hidden x d row-major.
  static StructuralEquation nonlinear(int input_width, int hidden,
                                      std::vector<double> first_layer,
                                      std::vector<double> first_bias,
                                      std::vector<double> output_weights, double output_bias);

  EquationVariant variant() const { return variant_; }
  int input_width() const { return input_width_; }
  int hidden_width() const { return hidden_; }

  double logit_from_active(std::span<const int> active) const;
  double probability_from_active(std::span<const int> active) const;

 private:
  EquationVariant variant_ = EquationVariant::kLinear;
  int input_width_ = 0;
  int hidden_ = 0;
  std::vector<double> w1_;  // hidden x d, or 1 x d for the linear variant
  std::vector<double> b1_;
  std::vector<double> w2_;
  double b2_ = 0.0;
};

/// Evaluates f on x masked by `mask` (row j of an adjacency, length d).
double causal_prob(const StructuralEquation& f, const HistoryVector& x,
                   std::span<const std::uint8_t> mask);

/// Row j of a graph as a 0/1 mask over parents.
std::vector<std::uint8_t> parent_mask(const CausalGraph& graph, int child);

/// prod over k in history (k != target) of (1 - sigmoid(logits(target, k))).
double expert_prob(const Eigen::MatrixXd& logits, int target, std::span<const int> history_set);

struct ModelShape {
  int d = 0;
  EquationVariant variant = EquationVariant::kNonlinear;
  int equation_hidden = 8;
  int embedding_dim = 64;
  int rs_hidden = 16;
  int window = 5;

  void validate() const;
  bool operator==(const ModelShape&) const = default;
};

class CausalModel {
 public:
  CausalModel() = default;
  /// All parameters zero.
  explicit CausalModel(ModelShape shape);

  /// Weight tensors ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0, edge
  /// logits 0 (edge probability 1/2).
  void initialize(std::uint64_t seed);

  const ModelShape& shape() const { return shape_; }
  int size() const { return shape_.d; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  Eigen::MatrixXd logits() const;
  void set_logits(const Eigen::MatrixXd& logits);

  /// Copy of f_j as a standalone equation.
  StructuralEquation equation(int j) const;

  /// g over the last `window` events of the history; throws InputError when
  /// the history is empty.
  std::vector<double> rs_prob(std::span<const int> history) const;

  // Tape recording. Returned ids are nodes on `tape`.
  GradientTape::Id record_logit_row(GradientTape& tape, int j);
  /// Pre-sigmoid output of f_j with inputs `values` placed at `columns`
  /// (all other inputs zero).
  GradientTape::Id record_equation_logit(GradientTape& tape, int j, std::span<const int> columns,
                                         GradientTape::Id values);
  /// sigmoid of record_equation_logit: the probability node.
  GradientTape::Id record_equation(GradientTape& tape, int j, std::span<const int> columns,
                                   GradientTape::Id values);
  /// Softmax output of g over `window` (chronological, non-empty).
  GradientTape::Id record_rs(GradientTape& tape, std::span<const int> window);

  /// Parameters are frozen between begin_batch() and end_batch(): the
  /// recurrent input projection of every item is computed once, recordings
  /// read it, and end_batch() folds its accumulated gradient back into the
  /// embedding table and input weights.
  void begin_batch();
  void end_batch();

  /// Names of the structural-equation and recommender tensors (everything
  /// except the edge logits).
  std::vector<std::string> mechanism_tensor_names() const;

  std::string metadata_json() const;
  static CausalModel from_parameters(ParameterStore params, const std::string& metadata_json);

 private:
  Tensor& slot(std::size_t i) { return params_.tensors()[i]; }
  const Tensor& slot(std::size_t i) const { return params_.tensors()[i]; }

  ModelShape shape_;
  ParameterStore params_;
  // Positions in params_.tensors(), fixed by the constructor.
  std::size_t gamma_ = 0, f_w1_ = 0, f_b1_ = 0, f_w2_ = 0, f_b2_ = 0;
  std::size_t emb_ = 0, w_ih_ = 0, w_hh_ = 0, b_ih_ = 0, b_hh_ = 0, w_out_ = 0, b_out_ = 0;
  Tensor projection_;  // d x 3Hg, row i = W_ih e_i
  bool batch_open_ = false;
};

/// Rolls the recurrent cell over `window` for a standalone parameter set,
/// without recording gradients.
std::vector<double> rs_prob(const CausalModel& model, std::span<const int> history);

}  // namespace causalrec
