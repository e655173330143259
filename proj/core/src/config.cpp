#include "causalrec/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "causalrec/error.hpp"
#include "json.hpp"

namespace causalrec {

using Json = nlohmann::ordered_json;

namespace {

// Reads the keys of one section, then rejects anything it did not consume.
class Section {
 public:
  Section(const Json& doc, const char* name) : name_(name) {
    if (doc.contains(name)) {
      node_ = &doc.at(name);
      if (!node_->is_object()) throw InputError(std::string("config section '") + name + "' must be an object");
    }
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw InputError(std::string("config key '") + name_ + "." + key + "' has the wrong type");
    }
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items()) {
      if (seen_.count(key) == 0) throw InputError("unknown config key '" + std::string(name_) + "." + key + "'");
    }
  }

 private:
  const char* name_;
  const Json* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

void RunConfig::validate() const {
  simulation.validate();
  if (model.equation_hidden < 1 || model.embedding_dim < 1 || model.rs_hidden < 1 || model.window < 1) {
    throw InputError("model widths and window must be positive");
  }
  if (model.disable_rs && model.disable_cm) throw InputError("cannot disable both mechanisms");
  if (model.coupled_r && (model.disable_rs || model.disable_cm)) {
    throw InputError("coupled_r needs both mechanisms enabled");
  }
  if (model.negatives < -1) throw InputError("model.negatives must be >= -1 (-1: all variables)");
  if (!(model.temperature > 0.0)) throw InputError("model.temperature must be positive");
  const auto& t = training;
  if (!(t.learning_rate > 0.0) || !(t.gamma_learning_rate >= 0.0)) throw InputError("learning rates must be positive");
  if (!(t.l2 >= 0.0) || !(t.sparsity >= 0.0) || !(t.mu0 >= 0.0)) throw InputError("regularisation weights must be nonnegative");
  if (!(t.eta >= 1.0) || !(t.delta > 0.0 && t.delta < 1.0)) throw InputError("eta must be >= 1 and delta in (0, 1)");
  if (!(t.h_tolerance > 0.0) || !(t.rel_tolerance >= 0.0)) throw InputError("tolerances must be positive");
  if (t.max_outer < 1 || t.max_epochs < 1 || t.batch_size < 1 || t.penalty_refresh < 0) {
    throw InputError("iteration caps and batch size must be positive");
  }
  if (t.threads < 1) throw InputError("threads must be positive");
  if (evaluation.negatives < 0) throw InputError("evaluation.negatives must be nonnegative");
  if (!(evaluation.threshold > 0.0 && evaluation.threshold < 1.0)) {
    throw InputError("evaluation.threshold must lie in (0, 1)");
  }
}

RunConfig config_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("config must be a JSON object");
  static const std::set<std::string> sections = {"simulation", "model", "training", "evaluation", "paths"};
  for (const auto& [key, value] : doc.items()) {
    if (sections.count(key) == 0) throw InputError("unknown config section '" + key + "'");
  }

  RunConfig c;
  {
    Section s(doc, "simulation");
    auto& v = c.simulation;
    s.read("d", v.d);
    s.read("p_keep", v.p_keep);
    s.read("n_users", v.n_users);
    s.read("traj_len", v.traj_len);
    s.read("p_int", v.p_int);
    s.read("slate_size", v.slate_size);
    s.read("seed", v.seed);
    s.read("equation_hidden", v.equation_hidden);
    s.read("weight_scale", v.weight_scale);
    s.read("recommender_dim", v.recommender_dim);
    s.finish();
  }
  {
    Section s(doc, "model");
    auto& v = c.model;
    std::string variant = to_string(v.variant);
    std::string indexing = to_string(v.indexing);
    s.read("variant", variant);
    s.read("equation_hidden", v.equation_hidden);
    s.read("embedding_dim", v.embedding_dim);
    s.read("rs_hidden", v.rs_hidden);
    s.read("window", v.window);
    s.read("disable_rs", v.disable_rs);
    s.read("disable_cm", v.disable_cm);
    s.read("coupled_r", v.coupled_r);
    s.read("expert_indexing", indexing);
    s.read("negatives", v.negatives);
    s.read("temperature", v.temperature);
    s.finish();
    v.variant = equation_variant_from_string(variant);
    v.indexing = expert_indexing_from_string(indexing);
  }
  {
    Section s(doc, "training");
    auto& v = c.training;
    s.read("learning_rate", v.learning_rate);
    s.read("gamma_learning_rate", v.gamma_learning_rate);
    s.read("l2", v.l2);
    s.read("sparsity", v.sparsity);
    s.read("mu0", v.mu0);
    s.read("eta", v.eta);
    s.read("delta", v.delta);
    s.read("h_tolerance", v.h_tolerance);
    s.read("max_outer", v.max_outer);
    s.read("max_epochs", v.max_epochs);
    s.read("rel_tolerance", v.rel_tolerance);
    s.read("batch_size", v.batch_size);
    s.read("penalty_refresh", v.penalty_refresh);
    s.read("init_seed", v.init_seed);
    s.read("seed", v.seed);
    s.read("threads", v.threads);
    s.finish();
  }
  {
    Section s(doc, "evaluation");
    s.read("negatives", c.evaluation.negatives);
    s.read("threshold", c.evaluation.threshold);
    s.read("seed", c.evaluation.seed);
    s.finish();
  }
  {
    Section s(doc, "paths");
    s.read("data", c.paths.data);
    s.read("truth", c.paths.truth);
    s.read("checkpoint", c.paths.checkpoint);
    s.read("log", c.paths.log);
    s.read("report", c.paths.report);
    s.finish();
  }
  c.validate();
  return c;
}

std::string config_to_json(const RunConfig& c) {
  const auto& sim = c.simulation;
  const auto& m = c.model;
  const auto& t = c.training;
  Json doc;
  doc["simulation"] = {{"d", sim.d},
                       {"p_keep", sim.p_keep},
                       {"n_users", sim.n_users},
                       {"traj_len", sim.traj_len},
                       {"p_int", sim.p_int},
                       {"slate_size", sim.slate_size},
                       {"seed", sim.seed},
                       {"equation_hidden", sim.equation_hidden},
                       {"weight_scale", sim.weight_scale},
                       {"recommender_dim", sim.recommender_dim}};
  doc["model"] = {{"variant", to_string(m.variant)},
                  {"equation_hidden", m.equation_hidden},
                  {"embedding_dim", m.embedding_dim},
                  {"rs_hidden", m.rs_hidden},
                  {"window", m.window},
                  {"disable_rs", m.disable_rs},
                  {"disable_cm", m.disable_cm},
                  {"coupled_r", m.coupled_r},
                  {"expert_indexing", to_string(m.indexing)},
                  {"negatives", m.negatives},
                  {"temperature", m.temperature}};
  doc["training"] = {{"learning_rate", t.learning_rate},
                     {"gamma_learning_rate", t.gamma_learning_rate},
                     {"l2", t.l2},
                     {"sparsity", t.sparsity},
                     {"mu0", t.mu0},
                     {"eta", t.eta},
                     {"delta", t.delta},
                     {"h_tolerance", t.h_tolerance},
                     {"max_outer", t.max_outer},
                     {"max_epochs", t.max_epochs},
                     {"rel_tolerance", t.rel_tolerance},
                     {"batch_size", t.batch_size},
                     {"penalty_refresh", t.penalty_refresh},
                     {"init_seed", t.init_seed},
                     {"seed", t.seed},
                     {"threads", t.threads}};
  doc["evaluation"] = {{"negatives", c.evaluation.negatives},
                       {"threshold", c.evaluation.threshold},
                       {"seed", c.evaluation.seed}};
  doc["paths"] = {{"data", c.paths.data},
                  {"truth", c.paths.truth},
                  {"checkpoint", c.paths.checkpoint},
                  {"log", c.paths.log},
                  {"report", c.paths.report}};
  return doc.dump(2);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

ModelShape model_shape(const RunConfig& config, int d) {
  ModelShape s;
  s.d = d;
  s.variant = config.model.variant;
  s.equation_hidden = config.model.equation_hidden;
  s.embedding_dim = config.model.embedding_dim;
  s.rs_hidden = config.model.rs_hidden;
  s.window = config.model.window;
  return s;
}

ExpertMode expert_mode(const ModelConfig& model) {
  if (model.disable_rs) return ExpertMode::kCausalOnly;
  if (model.disable_cm) return ExpertMode::kRsOnly;
  if (model.coupled_r) return ExpertMode::kCoupled;
  return ExpertMode::kSampled;
}

ScoreOptions score_options(const RunConfig& config) {
  ScoreOptions o;
  o.expert = expert_mode(config.model);
  o.indexing = config.model.indexing;
  o.negatives = config.model.negatives;
  o.temperature = config.model.temperature;
  return o;
}

TrainOptions train_options(const RunConfig& config) {
  const auto& t = config.training;
  TrainOptions o;
  o.objective.score = score_options(config);
  o.objective.l2 = t.l2;
  o.objective.sparsity = t.sparsity;
  o.rmsprop.learning_rate = t.learning_rate;
  if (t.gamma_learning_rate > 0.0) o.rmsprop.learning_rate_overrides["gamma"] = t.gamma_learning_rate;
  o.mu0 = t.mu0;
  o.eta = t.eta;
  o.delta = t.delta;
  o.h_tolerance = t.h_tolerance;
  o.max_outer = t.max_outer;
  o.max_epochs = t.max_epochs;
  o.rel_tolerance = t.rel_tolerance;
  o.batch_size = t.batch_size;
  o.penalty_refresh = t.penalty_refresh;
  o.seed = t.seed;
  o.threads = t.threads;
  return o;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return config_to_json(a) == config_to_json(b);
}

}  // namespace causalrec
