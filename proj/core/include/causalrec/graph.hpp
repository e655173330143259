#pragma once

// Core data model: variable space, trajectories, history vectors and causal
// graphs.
//
// Adjacency orientation is fixed project-wide: row j of the adjacency matrix
// lists the parents of variable j, i.e. A(j, k) == 1 means k -> j. Masking a
// history vector with row j therefore keeps exactly the parents of j.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace causalrec {

/// Maps item identifiers onto the d binary causal variables.
class VariableSpace {
 public:
  VariableSpace() = default;
  VariableSpace(std::vector<std::string> labels,
                std::map<std::string, int> item_to_variable);

  /// d variables labelled "v0".."v{d-1}", item "k" mapping to variable k.
  static VariableSpace identity(int d);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::map<std::string, int>& items() const { return item_to_variable_; }

  /// Throws InputError for unknown items.
  int variable_of(const std::string& item) const;

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int> item_to_variable_;
};

struct Trajectory {
  std::string user_id;
  std::vector<int> events;  // chronological variable indices
};

/// Presence vector over the d variables: x[k] = 1 iff k occurred in the prefix.
class HistoryVector {
 public:
  explicit HistoryVector(int d) : bits_(static_cast<std::size_t>(d), 0) {}
  static HistoryVector from_events(std::span<const int> events, int d);

  int size() const { return static_cast<int>(bits_.size()); }
  bool operator[](int k) const { return bits_[static_cast<std::size_t>(k)] != 0; }
  void set(int k) { bits_.at(static_cast<std::size_t>(k)) = 1; }
  void clear(int k) { bits_.at(static_cast<std::size_t>(k)) = 0; }

  /// Indices k with x[k] = 1, ascending.
  std::vector<int> support() const;
  /// True when every bit of `other` is also set here.
  bool dominates(const HistoryVector& other) const;

  bool operator==(const HistoryVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Binary d x d adjacency; A(child, parent) = 1 encodes parent -> child.
class CausalGraph {
 public:
  CausalGraph() = default;
  explicit CausalGraph(int d);

  int size() const { return d_; }

  bool at(int row, int col) const { return adj_[index(row, col)] != 0; }
  bool has_edge(int parent, int child) const { return at(child, parent); }
  /// Self-loops are rejected with InputError.
  void set_edge(int parent, int child, bool present = true);

  int edge_count() const;
  /// (parent, child) pairs in row-major order of the child.
  std::vector<std::pair<int, int>> edges() const;
  std::vector<int> parents(int child) const;
  Eigen::MatrixXd to_matrix() const;

  bool operator==(const CausalGraph&) const = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(d_) +
           static_cast<std::size_t>(col);
  }

  int d_ = 0;
  std::vector<std::uint8_t> adj_;
};

struct TrajectoryDataset {
  VariableSpace space;
  std::vector<Trajectory> trajectories;

  /// Throws InputError if any event lies outside [0, d).
  void validate() const;
  std::size_t transition_count() const;
};

/// One (history, next variable) pair extracted from a trajectory.
struct Transition {
  HistoryVector history;
  int target;
};

/// K-1 transitions for a trajectory of length K; empty when K < 2.
std::vector<Transition> transitions(const Trajectory& trajectory, int d);

bool is_dag(const CausalGraph& graph);

/// Reads the final discrete graph off the edge logits: edge k -> j iff
/// sigmoid(logits(j, k)) > tau, never on the diagonal.
CausalGraph threshold_graph(const Eigen::MatrixXd& logits, double tau = 0.5);

}  // namespace causalrec
