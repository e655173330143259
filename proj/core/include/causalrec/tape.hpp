#pragma once

// Minimal reverse-mode differentiation over a closed set of vector ops.
//
// Nodes are appended in evaluation order, so the recording order is already
// a topological order and backward() is a single reverse sweep. Parameter
// leaves alias tensor storage: no copies on the way in, and their adjoints
// are accumulated straight into Tensor::grad on the way out.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "causalrec/parameters.hpp"

namespace causalrec {

class GradientTape {
 public:
  using Id = std::int32_t;

  enum class Op : std::uint8_t {
    kConstant,
    kParameter,
    kAffine,
    kSparseAffine,
    kLeakyRelu,
    kSigmoid,
    kSoftmax,
    kGruCell,
    kMul,
    kAdd,
    kScale,
    kLog,
    kExp,
    kLogit,
    kSum,
    kMean,
    kProd,
    kGather,
    kStraightThrough,
  };

  /// Drops all nodes; buffers keep their capacity for the next recording.
  void clear();

  Id constant(std::span<const double> values);
  Id constant(double value);
  Id zeros(std::size_t n);
  Id parameter(Tensor& tensor);
  Id parameter(Tensor& tensor, std::size_t offset, std::size_t length);
  /// Read-only view of a tensor slice: behaves like a constant, no copy.
  Id parameter(const Tensor& tensor, std::size_t offset, std::size_t length);

  /// y = W x + b with W stored row-major as rows x cols. `b` may be -1.
  Id affine(Id w, Id x, Id b, int rows, int cols);
  /// y = sum_i W[:, columns[i]] * v[i] + b: an affine map applied to a
  /// vector that is zero outside `columns`.
  Id sparse_affine(Id w, int rows, int cols, std::span<const int> columns, Id v, Id b);
  Id leaky_relu(Id x, double slope = 0.01);
  Id sigmoid(Id x);
  Id softmax(Id x);
  /// Gated recurrent cell with gate blocks ordered [reset, update, candidate]:
  ///   r = s(Wr x + br + Ur h + cr), z = s(Wz x + bz + Uz h + cz)
  ///   n = tanh(Wn x + bn + r * (Un h + cn)),  h' = (1 - z) * n + z * h
  /// Passing w_ih = -1 means x is already the projection W x (length 3H).
  Id gru_cell(Id x, Id h, Id w_ih, Id w_hh, Id b_ih, Id b_hh);
  /// Elementwise; either side may be a scalar that broadcasts.
  Id mul(Id a, Id b);
  Id add(Id a, Id b);
  /// y = a * x + b elementwise.
  Id scale(Id x, double a, double b = 0.0);
  /// log(max(x, floor)); no gradient where the floor is active.
  Id log(Id x, double floor = 1e-12);
  Id exp(Id x);
  /// log(p) - log(1 - p) with p clamped into [eps, 1 - eps].
  Id logit(Id p, double eps = 1e-12);
  Id sum(Id x);
  Id mean(Id x);
  Id prod(Id x);
  Id gather(Id x, std::span<const int> indices);
  /// Hard indicator forward, sigmoid((x + noise) / temperature) surrogate
  /// backward. With hard = false the forward is the surrogate itself, which
  /// makes the node smooth (used for finite-difference checks).
  Id straight_through(Id logits, std::span<const double> noise, double temperature = 1.0,
                      bool hard = true);

  std::span<const double> value(Id id) const;
  double scalar(Id id) const;
  std::size_t size(Id id) const { return nodes_[static_cast<std::size_t>(id)].size; }
  Op op(Id id) const { return nodes_[static_cast<std::size_t>(id)].op; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Seeds d output = seed and sweeps once in reverse; parameter gradients
  /// are accumulated (not overwritten).
  void backward(Id output, double seed = 1.0);
  /// Adjoint of a non-parameter node after backward().
  std::span<const double> adjoint(Id id) const;

 private:
  struct Node {
    Op op = Op::kConstant;
    std::array<Id, 6> in{-1, -1, -1, -1, -1, -1};
    std::uint32_t size = 0;
    std::size_t offset = 0;      // into values_ / adjoints_
    std::size_t aux_offset = 0;  // into aux_
    std::size_t idx_offset = 0;  // into indices_
    std::uint32_t idx_count = 0;
    int rows = 0;
    int cols = 0;
    double a = 0.0;
    double b = 0.0;
    const double* ext_value = nullptr;  // parameter leaves
    double* ext_grad = nullptr;
  };

  Id push(Node node, std::size_t size, std::size_t aux_size = 0);
  const double* val(const Node& n) const;
  double* val_mut(Node& n);
  double* adj(Node& n);
  const Node& node(Id id) const;
  void check_size(Id id, std::size_t expected, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::vector<double> aux_;
  std::vector<int> indices_;
};

}  // namespace causalrec
