#include "causalrec/optim.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "causalrec/error.hpp"
#include "causalrec/math.hpp"
#include "causalrec/sampling.hpp"
#include "json.hpp"

namespace causalrec {

RmspropState::RmspropState(const ParameterStore& params, RmspropOptions options)
    : options_(std::move(options)) {
  if (!(options_.learning_rate > 0.0) || !(options_.rho >= 0.0 && options_.rho < 1.0) ||
      !(options_.epsilon > 0.0)) {
    throw InputError("invalid RMSprop options");
  }
  for (const auto& t : params.tensors()) {
    names_.push_back(t.name);
    auto it = options_.learning_rate_overrides.find(t.name);
    rates_.push_back(it != options_.learning_rate_overrides.end() ? it->second
                                                                  : options_.learning_rate);
    avg_.emplace_back(t.size(), 0.0);
  }
  for (const auto& [name, rate] : options_.learning_rate_overrides) {
    if (!params.contains(name)) throw InputError("learning-rate override for unknown tensor '" + name + "'");
    if (!(rate >= 0.0)) throw InputError("learning-rate override must be nonnegative");
  }
}

void RmspropState::step(ParameterStore& params) {
  auto& tensors = params.tensors();
  if (tensors.size() != avg_.size()) throw InputError("RMSprop state does not match parameters");
  const double rho = options_.rho;
  const double eps = options_.epsilon;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& t = tensors[i];
    auto& avg = avg_[i];
    if (t.name != names_[i] || t.size() != avg.size() || t.grad.size() != avg.size()) {
      throw InputError("RMSprop state does not match tensor '" + t.name + "'");
    }
    const double lr = rates_[i];
    for (std::size_t k = 0; k < avg.size(); ++k) {
      const double g = t.grad[k];
      avg[k] = rho * avg[k] + (1.0 - rho) * g * g;
      t.value[k] -= lr * g / std::sqrt(avg[k] + eps);
    }
  }
}

void rmsprop_step(RmspropState& state, ParameterStore& params) { state.step(params); }

LagrangianState multiplier_update(const LagrangianState& state, double h_now, double eta,
                                  double delta) {
  if (!(h_now >= 0.0) || !std::isfinite(h_now)) {
    throw InputError("constraint value must be finite and nonnegative");
  }
  LagrangianState next = state;
  next.lambda = state.lambda + state.mu * h_now;
  if (h_now > delta * state.h_prev) next.mu = eta * state.mu;
  next.h_prev = h_now;
  next.t = state.t + 1;
  return next;
}

double add_regularizers(CausalModel& model, const PenaltyResult& penalty,
                        const LagrangianState& state, const ObjectiveOptions& options,
                        double& penalty_part) {
  const int d = model.size();
  auto& gamma = model.params().at("gamma");
  const double h = penalty.value;
  penalty_part = state.lambda * h + 0.5 * state.mu * h * h;
  const double coeff = state.lambda + state.mu * h;
  double reg = 0.0;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      if (j == k) continue;
      const auto idx = static_cast<std::size_t>(j * d + k);
      if (coeff != 0.0) gamma.grad[idx] += coeff * penalty.gradient_wrt_logits(j, k);
      if (options.sparsity != 0.0) {
        const double s = sigmoid(gamma.value[idx]);
        reg += options.sparsity * s;
        gamma.grad[idx] += options.sparsity * s * (1.0 - s);
      }
    }
  }
  if (options.l2 != 0.0) {
    for (auto& t : model.params().tensors()) {
      if (t.name == "gamma") continue;
      for (std::size_t k = 0; k < t.size(); ++k) {
        reg += 0.5 * options.l2 * t.value[k] * t.value[k];
        t.grad[k] += options.l2 * t.value[k];
      }
    }
  }
  return penalty_part + reg;
}

ObjectiveValue inner_objective(CausalModel& model, std::span<const TransitionExample> batch,
                               std::uint64_t noise_seed, const LagrangianState& state,
                               const ObjectiveOptions& options, GradientTape& tape,
                               const PenaltyResult* cached) {
  ObjectiveValue out;
  out.score = batch_score(model, batch, noise_seed, options.score, tape, -1.0).value;
  const PenaltyResult fresh = cached == nullptr ? dag_penalty(model.logits()) : PenaltyResult{};
  const PenaltyResult& penalty = cached == nullptr ? fresh : *cached;
  out.h = penalty.value;
  const double extra = add_regularizers(model, penalty, state, options, out.penalty);
  out.regularizer = extra - out.penalty;
  out.total = -out.score + extra;
  return out;
}

std::string to_json_line(const TrainLogRecord& r) {
  nlohmann::ordered_json j = {{"outer", r.outer}, {"epoch", r.epoch}, {"score", r.score},
                              {"h", r.h},         {"lambda", r.lambda}, {"mu", r.mu},
                              {"wall_ms", r.wall_ms}};
  return j.dump();
}

namespace {

// Model replicas used to shard a batch over threads. Gradients are reduced
// in worker order, so results do not depend on thread scheduling.
class ShardedScorer {
 public:
  ShardedScorer(const CausalModel& model, int threads)
      : threads_(std::max(1, threads)), tapes_(static_cast<std::size_t>(threads_)) {
    for (int w = 1; w < threads_; ++w) replicas_.push_back(model);
  }

  double run(CausalModel& model, std::span<const TransitionExample> examples,
             std::span<const std::size_t> batch, std::uint64_t key, const ScoreOptions& options,
             double weight) {
    const std::size_t n = batch.size();
    const auto workers = static_cast<std::size_t>(threads_);
    std::vector<double> partial(workers, 0.0);
    auto chunk = [&](std::size_t w, CausalModel& m) {
      const std::size_t lo = n * w / workers;
      const std::size_t hi = n * (w + 1) / workers;
      double acc = 0.0;
      m.begin_batch();
      for (std::size_t i = lo; i < hi; ++i) {
        acc += transition_score(m, examples[batch[i]], derive_key(key, i), options, tapes_[w],
                                weight);
      }
      m.end_batch();
      partial[w] = acc;
    };
    if (workers == 1) {
      chunk(0, model);
      return partial[0];
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) {
      auto& replica = replicas_[w - 1];
      auto& dst = replica.params().tensors();
      const auto& src = model.params().tensors();
      for (std::size_t t = 0; t < src.size(); ++t) dst[t].value = src[t].value;
      replica.params().zero_grad();
      pool.emplace_back([&, w] { chunk(w, replicas_[w - 1]); });
    }
    chunk(0, model);
    for (auto& th : pool) th.join();
    auto& dst = model.params().tensors();
    for (std::size_t w = 1; w < workers; ++w) {
      const auto& src = replicas_[w - 1].params().tensors();
      for (std::size_t t = 0; t < src.size(); ++t) {
        for (std::size_t k = 0; k < src[t].grad.size(); ++k) dst[t].grad[k] += src[t].grad[k];
      }
    }
    return std::accumulate(partial.begin(), partial.end(), 0.0);
  }

 private:
  int threads_;
  std::vector<GradientTape> tapes_;
  std::vector<CausalModel> replicas_;
};

void shuffle(std::vector<std::size_t>& order, std::uint64_t key) {
  NoiseStream rng(key);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

TrainResult train(CausalModel initial, std::span<const TransitionExample> examples,
                  const TrainOptions& options, std::ostream* log) {
  if (examples.empty()) throw InputError("training needs at least one transition");
  if (options.batch_size < 1) throw InputError("batch size must be positive");
  if (options.max_outer < 1 || options.max_epochs < 1) throw InputError("iteration caps must be positive");
  if (!(options.mu0 >= 0.0)) throw InputError("initial penalty weight must be nonnegative");

  TrainResult result;
  result.model = std::move(initial);
  CausalModel& model = result.model;
  RmspropState rms(model.params(), options.rmsprop);
  ShardedScorer scorer(model, options.threads);
  LagrangianState state;
  state.mu = options.mu0;

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    if (options.deterministic_log) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(options.batch_size);

  double h = dag_penalty(model.logits()).value;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    double prev_loss = std::numeric_limits<double>::quiet_NaN();
    double last_score = 0.0;
    for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
      shuffle(order, derive_key(options.seed, 1, static_cast<std::uint64_t>(outer),
                                static_cast<std::uint64_t>(epoch)));
      PenaltyResult penalty = dag_penalty(model.logits());
      double loss_sum = 0.0;
      double score_sum = 0.0;
      std::size_t step = 0;
      for (std::size_t lo = 0; lo < order.size(); lo += batch, ++step) {
        if (options.penalty_refresh > 0 && step > 0 &&
            step % static_cast<std::size_t>(options.penalty_refresh) == 0) {
          penalty = dag_penalty(model.logits());
        }
        const std::size_t hi = std::min(order.size(), lo + batch);
        const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
        const double n = static_cast<double>(idx.size());
        model.params().zero_grad();
        const auto key = derive_key(options.seed, 2,
                                    static_cast<std::uint64_t>(outer) * 1000003u +
                                        static_cast<std::uint64_t>(epoch),
                                    step);
        const double score = scorer.run(model, examples, idx, key, options.objective.score, -1.0 / n) / n;
        double penalty_part = 0.0;
        const double extra = add_regularizers(model, penalty, state, options.objective, penalty_part);
        const double loss = -score + extra;
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite objective at outer " << outer << ", epoch " << epoch << ", step "
              << step << " (score " << score << ", h " << penalty.value << ", lambda "
              << state.lambda << ", mu " << state.mu << ")";
          throw TrainingDiverged(msg.str());
        }
        rms.step(model.params());
        loss_sum += loss * n;
        score_sum += score * n;
      }
      const double total = static_cast<double>(order.size());
      const double loss = loss_sum / total;
      last_score = score_sum / total;
      h = dag_penalty(model.logits()).value;
      TrainLogRecord rec{outer, epoch, last_score, h, state.lambda, state.mu, elapsed_ms()};
      result.epochs.push_back(rec);
      if (log != nullptr) *log << to_json_line(rec) << '\n';
      if (std::isfinite(prev_loss) &&
          prev_loss - loss < options.rel_tolerance * std::abs(prev_loss)) {
        break;
      }
      prev_loss = loss;
    }
    result.outers.push_back(TrainLogRecord{outer, -1, last_score, h, state.lambda, state.mu, elapsed_ms()});
    if (h < options.h_tolerance) {
      result.converged = true;
      break;
    }
    state = multiplier_update(state, h, options.eta, options.delta);
  }
  result.lagrangian = state;
  result.final_h = h;
  return result;
}

}  // namespace causalrec
