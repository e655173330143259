#include "causalrec/graph.hpp"

#include <set>

#include "causalrec/error.hpp"
#include "causalrec/math.hpp"

namespace causalrec {

VariableSpace::VariableSpace(std::vector<std::string> labels,
                             std::map<std::string, int> item_to_variable)
    : labels_(std::move(labels)), item_to_variable_(std::move(item_to_variable)) {
  if (labels_.empty()) {
    throw InputError("variable space needs at least one variable");
  }
  std::set<std::string> seen;
  for (const auto& label : labels_) {
    if (!seen.insert(label).second) {
      throw InputError("duplicate variable label '" + label + "'");
    }
  }
  for (const auto& [item, var] : item_to_variable_) {
    if (var < 0 || var >= size()) {
      throw InputError("item '" + item + "' maps to variable " +
                       std::to_string(var) + " outside [0, " +
                       std::to_string(size()) + ")");
    }
  }
}

VariableSpace VariableSpace::identity(int d) {
  if (d < 1) {
    throw InputError("variable count must be positive");
  }
  std::vector<std::string> labels;
  std::map<std::string, int> items;
  for (int k = 0; k < d; ++k) {
    labels.push_back("v" + std::to_string(k));
    items.emplace(std::to_string(k), k);
  }
  return VariableSpace(std::move(labels), std::move(items));
}

int VariableSpace::variable_of(const std::string& item) const {
  auto it = item_to_variable_.find(item);
  if (it == item_to_variable_.end()) {
    throw InputError("unknown item '" + item + "'");
  }
  return it->second;
}

HistoryVector HistoryVector::from_events(std::span<const int> events, int d) {
  HistoryVector x(d);
  for (int e : events) {
    x.set(e);
  }
  return x;
}

std::vector<int> HistoryVector::support() const {
  std::vector<int> out;
  for (std::size_t k = 0; k < bits_.size(); ++k) {
    if (bits_[k]) out.push_back(static_cast<int>(k));
  }
  return out;
}

bool HistoryVector::dominates(const HistoryVector& other) const {
  if (other.size() != size()) return false;
  for (std::size_t k = 0; k < bits_.size(); ++k) {
    if (other.bits_[k] && !bits_[k]) return false;
  }
  return true;
}

CausalGraph::CausalGraph(int d)
    : d_(d), adj_(static_cast<std::size_t>(d) * static_cast<std::size_t>(d), 0) {
  if (d < 0) throw InputError("graph size must be nonnegative");
}

void CausalGraph::set_edge(int parent, int child, bool present) {
  if (parent < 0 || parent >= d_ || child < 0 || child >= d_) {
    throw InputError("edge endpoint out of range");
  }
  if (parent == child) {
    throw InputError("self-loops are not allowed");
  }
  adj_[index(child, parent)] = present ? 1 : 0;
}

int CausalGraph::edge_count() const {
  int n = 0;
  for (auto v : adj_) n += v;
  return n;
}

std::vector<std::pair<int, int>> CausalGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int child = 0; child < d_; ++child) {
    for (int parent = 0; parent < d_; ++parent) {
      if (at(child, parent)) out.emplace_back(parent, child);
    }
  }
  return out;
}

std::vector<int> CausalGraph::parents(int child) const {
  std::vector<int> out;
  for (int parent = 0; parent < d_; ++parent) {
    if (at(child, parent)) out.push_back(parent);
  }
  return out;
}

Eigen::MatrixXd CausalGraph::to_matrix() const {
  Eigen::MatrixXd m(d_, d_);
  for (int r = 0; r < d_; ++r) {
    for (int c = 0; c < d_; ++c) m(r, c) = at(r, c) ? 1.0 : 0.0;
  }
  return m;
}

void TrajectoryDataset::validate() const {
  const int d = space.size();
  for (const auto& t : trajectories) {
    for (int e : t.events) {
      if (e < 0 || e >= d) {
        throw InputError("user '" + t.user_id + "' has event " +
                         std::to_string(e) + " outside [0, " +
                         std::to_string(d) + ")");
      }
    }
  }
}

std::size_t TrajectoryDataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) {
    if (t.events.size() >= 2) n += t.events.size() - 1;
  }
  return n;
}

std::vector<Transition> transitions(const Trajectory& trajectory, int d) {
  std::vector<Transition> out;
  const auto& ev = trajectory.events;
  if (ev.size() < 2) return out;
  out.reserve(ev.size() - 1);
  HistoryVector x(d);
  for (std::size_t t = 1; t < ev.size(); ++t) {
    x.set(ev[t - 1]);
    out.push_back(Transition{x, ev[t]});
  }
  return out;
}

bool is_dag(const CausalGraph& graph) {
  // Kahn's algorithm over parent -> child edges.
  const int d = graph.size();
  std::vector<int> indegree(static_cast<std::size_t>(d), 0);
  for (int child = 0; child < d; ++child) {
    for (int parent = 0; parent < d; ++parent) {
      if (graph.at(child, parent)) ++indegree[static_cast<std::size_t>(child)];
    }
  }
  std::vector<int> ready;
  for (int v = 0; v < d; ++v) {
    if (indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
  }
  int visited = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++visited;
    for (int child = 0; child < d; ++child) {
      if (graph.at(child, v) && --indegree[static_cast<std::size_t>(child)] == 0) {
        ready.push_back(child);
      }
    }
  }
  return visited == d;
}

CausalGraph threshold_graph(const Eigen::MatrixXd& logits, double tau) {
  if (logits.rows() != logits.cols()) {
    throw InputError("logit matrix must be square");
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw InputError("threshold must lie in (0, 1)");
  }
  const int d = static_cast<int>(logits.rows());
  CausalGraph g(d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      if (j != k && sigmoid(logits(j, k)) > tau) g.set_edge(k, j);
    }
  }
  return g;
}

}  // namespace causalrec
