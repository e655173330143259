#include "causalrec/score.hpp"

#include <algorithm>
#include <cmath>

#include "causalrec/error.hpp"
#include "causalrec/math.hpp"
#include "causalrec/sampling.hpp"

namespace causalrec {

std::string to_string(ExpertMode m) {
  switch (m) {
    case ExpertMode::kSampled: return "sampled";
    case ExpertMode::kCoupled: return "coupled";
    case ExpertMode::kCausalOnly: return "causal-only";
    case ExpertMode::kRsOnly: return "rs-only";
  }
  return "sampled";
}

ExpertMode expert_mode_from_string(const std::string& s) {
  if (s == "sampled") return ExpertMode::kSampled;
  if (s == "coupled") return ExpertMode::kCoupled;
  if (s == "causal-only") return ExpertMode::kCausalOnly;
  if (s == "rs-only") return ExpertMode::kRsOnly;
  throw InputError("unknown expert mode '" + s + "' (expected sampled|coupled|causal-only|rs-only)");
}

std::string to_string(ExpertIndexing m) {
  return m == ExpertIndexing::kTarget ? "target" : "last-event";
}

ExpertIndexing expert_indexing_from_string(const std::string& s) {
  if (s == "target") return ExpertIndexing::kTarget;
  if (s == "last-event") return ExpertIndexing::kLastEvent;
  throw InputError("unknown expert indexing '" + s + "' (expected target|last-event)");
}

std::vector<TransitionExample> make_examples(const Trajectory& trajectory, int d, int window) {
  if (window < 1) throw InputError("window must be positive");
  std::vector<TransitionExample> out;
  const auto& ev = trajectory.events;
  if (ev.size() < 2) return out;
  out.reserve(ev.size() - 1);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(d), 0);
  std::vector<int> set;
  for (std::size_t t = 0; t + 1 < ev.size(); ++t) {
    const int e = ev[t];
    if (e < 0 || e >= d) throw InputError("event outside the variable space");
    if (seen[static_cast<std::size_t>(e)] == 0) {
      seen[static_cast<std::size_t>(e)] = 1;
      set.insert(std::lower_bound(set.begin(), set.end(), e), e);
    }
    TransitionExample ex;
    ex.target = ev[t + 1];
    if (ex.target < 0 || ex.target >= d) throw InputError("event outside the variable space");
    ex.history_set = set;
    const std::size_t from = t + 1 > static_cast<std::size_t>(window) ? t + 1 - static_cast<std::size_t>(window) : 0;
    ex.window.assign(ev.begin() + static_cast<std::ptrdiff_t>(from),
                     ev.begin() + static_cast<std::ptrdiff_t>(t + 1));
    ex.last_event = e;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TransitionExample> make_examples(const TrajectoryDataset& dataset, int window) {
  std::vector<TransitionExample> out;
  const int d = dataset.space.size();
  for (const auto& traj : dataset.trajectories) {
    auto part = make_examples(traj, d, window);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

double transition_log_prob(const CausalModel& model, const TransitionExample& example,
                           std::span<const std::uint8_t> mask_row, int r, double floor) {
  const int d = model.size();
  if (mask_row.size() != static_cast<std::size_t>(d)) throw InputError("mask row must have length d");
  if (r != 0 && r != 1) throw InputError("expert indicator must be 0 or 1");
  if (r == 1) {
    const auto g = model.rs_prob(example.window);
    return std::log(std::max(g[static_cast<std::size_t>(example.target)], floor));
  }
  const auto x = HistoryVector::from_events(example.history_set, d);
  std::vector<std::uint8_t> mask(mask_row.begin(), mask_row.end());
  mask[static_cast<std::size_t>(example.target)] = 0;
  const double f = causal_prob(model.equation(example.target), x, mask);
  return std::log(std::max(f, floor));
}

namespace {

using Id = GradientTape::Id;

// History columns usable as parents of `j`.
void parent_columns(const TransitionExample& ex, int j, std::vector<int>& cols) {
  cols.clear();
  for (int k : ex.history_set) {
    if (k != j) cols.push_back(k);
  }
}

struct RowSample {
  Id gamma = -1;  // gathered logits over `cols`
  Id a = -1;      // hard draws with surrogate gradient
};

RowSample sample_row(CausalModel& model, GradientTape& tape, int j, std::span<const int> cols,
                     NoiseStream& noise, const ScoreOptions& opt, std::vector<double>& buf) {
  RowSample s;
  if (cols.empty()) return s;
  s.gamma = tape.gather(model.record_logit_row(tape, j), cols);
  buf.resize(cols.size());
  for (auto& l : buf) l = logistic_noise(noise);
  s.a = tape.straight_through(s.gamma, buf, opt.temperature, !opt.relaxed);
  return s;
}

double sample_transition(CausalModel& model, const TransitionExample& ex, std::uint64_t key,
                         const ScoreOptions& opt, GradientTape& tape, double weight,
                         ForcedExpert forced) {
  tape.clear();
  NoiseStream noise(key);
  std::vector<int> cols;
  std::vector<double> buf;
  const int j = ex.target;
  const int d = model.size();

  ExpertMode mode = opt.expert;
  if (forced == ForcedExpert::kZero) mode = ExpertMode::kCausalOnly;
  if (forced == ForcedExpert::kOne) mode = ExpertMode::kRsOnly;

  Id causal = -1;
  RowSample target_row;
  if (mode != ExpertMode::kRsOnly) {
    parent_columns(ex, j, cols);
    target_row = sample_row(model, tape, j, cols, noise, opt, buf);
    const Id values = target_row.a >= 0 ? target_row.a : tape.zeros(0);
    const Id zt = model.record_equation_logit(tape, j, cols, values);
    if (opt.negatives == 0 || d == 1) {
      causal = tape.log(tape.sigmoid(zt), opt.floor);
    } else {
      // -log sum_c exp(z_c - z_t), the target term contributing exp(0) = 1.
      const Id minus_zt = tape.scale(zt, -1.0);
      Id total = tape.constant(1.0);
      const int count = opt.negatives < 0 ? d - 1 : opt.negatives;
      std::vector<int> kcols;
      for (int n = 0; n < count; ++n) {
        int k = n;
        if (opt.negatives > 0) k = static_cast<int>(noise.below(static_cast<std::uint64_t>(d - 1)));
        if (k >= j) ++k;
        parent_columns(ex, k, kcols);
        const auto row = sample_row(model, tape, k, kcols, noise, opt, buf);
        const Id kv = row.a >= 0 ? row.a : tape.zeros(0);
        const Id zk = model.record_equation_logit(tape, k, kcols, kv);
        total = tape.add(total, tape.exp(tape.add(zk, minus_zt)));
      }
      causal = tape.scale(tape.log(total, opt.floor), -1.0);
    }
  }

  Id rs = -1;
  if (mode != ExpertMode::kCausalOnly) {
    const int t = ex.target;
    rs = tape.log(tape.gather(model.record_rs(tape, ex.window), std::span<const int>(&t, 1)),
                  opt.floor);
  }

  Id out = -1;
  switch (mode) {
    case ExpertMode::kCausalOnly: out = causal; break;
    case ExpertMode::kRsOnly: out = rs; break;
    case ExpertMode::kSampled:
    case ExpertMode::kCoupled: {
      Id r_bit = -1;
      if (mode == ExpertMode::kCoupled) {
        r_bit = target_row.a >= 0 ? tape.prod(tape.scale(target_row.a, -1.0, 1.0)) : tape.constant(1.0);
      } else {
        const int row = opt.indexing == ExpertIndexing::kTarget ? j : ex.last_event;
        std::vector<int> rcols;
        parent_columns(ex, row, rcols);
        Id r_prob = -1;
        if (rcols.empty()) {
          r_prob = tape.constant(1.0);
        } else {
          const Id g = tape.gather(model.record_logit_row(tape, row), rcols);
          r_prob = tape.prod(tape.scale(tape.sigmoid(g), -1.0, 1.0));
        }
        const double l = logistic_noise(noise);
        r_bit = tape.straight_through(tape.logit(r_prob, opt.floor), std::span<const double>(&l, 1),
                                      opt.temperature, !opt.relaxed);
      }
      out = tape.add(tape.mul(tape.scale(r_bit, -1.0, 1.0), causal), tape.mul(r_bit, rs));
      break;
    }
  }
  const double value = tape.scalar(out);
  if (weight != 0.0) tape.backward(out, weight);
  return value;
}

}  // namespace

double transition_score(CausalModel& model, const TransitionExample& example, std::uint64_t key,
                        const ScoreOptions& options, GradientTape& tape, double gradient_weight,
                        ForcedExpert forced) {
  return sample_transition(model, example, key, options, tape, gradient_weight, forced);
}

ScoreEstimate batch_score(CausalModel& model, std::span<const TransitionExample> batch,
                          std::uint64_t noise_seed, const ScoreOptions& options,
                          GradientTape& tape, double gradient_weight, ForcedExpert forced) {
  if (batch.empty()) throw InputError("batch must not be empty");
  const double n = static_cast<double>(batch.size());
  double total = 0.0;
  model.begin_batch();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += transition_score(model, batch[i], derive_key(noise_seed, i), options, tape,
                              gradient_weight / n, forced);
  }
  model.end_batch();
  return {total / n, batch.size()};
}

ScoreEstimate batch_score(CausalModel& model, std::span<const TransitionExample> examples,
                          std::span<const std::size_t> indices, std::uint64_t noise_seed,
                          const ScoreOptions& options, GradientTape& tape,
                          double gradient_weight) {
  if (indices.empty()) throw InputError("batch must not be empty");
  const double n = static_cast<double>(indices.size());
  double total = 0.0;
  model.begin_batch();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    total += transition_score(model, examples[indices[i]], derive_key(noise_seed, i), options,
                              tape, gradient_weight / n, ForcedExpert::kNone);
  }
  model.end_batch();
  return {total / n, indices.size()};
}

}  // namespace causalrec
