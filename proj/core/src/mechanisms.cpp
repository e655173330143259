#include "causalrec/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "causalrec/error.hpp"
#include "causalrec/math.hpp"
#include "json.hpp"

namespace causalrec {

std::string to_string(EquationVariant v) {
  return v == EquationVariant::kLinear ? "linear" : "nonlinear";
}

EquationVariant equation_variant_from_string(const std::string& s) {
  if (s == "linear") return EquationVariant::kLinear;
  if (s == "nonlinear") return EquationVariant::kNonlinear;
  throw InputError("unknown equation variant '" + s + "' (expected linear|nonlinear)");
}

StructuralEquation StructuralEquation::linear(std::vector<double> weights, double bias) {
  StructuralEquation f;
  f.variant_ = EquationVariant::kLinear;
  f.input_width_ = static_cast<int>(weights.size());
  f.w1_ = std::move(weights);
  f.b2_ = bias;
  return f;
}

StructuralEquation StructuralEquation::nonlinear(int input_width, int hidden,
                                                 std::vector<double> first_layer,
                                                 std::vector<double> first_bias,
                                                 std::vector<double> output_weights,
                                                 double output_bias) {
  if (first_layer.size() != static_cast<std::size_t>(input_width) * static_cast<std::size_t>(hidden) ||
      first_bias.size() != static_cast<std::size_t>(hidden) ||
      output_weights.size() != static_cast<std::size_t>(hidden)) {
    throw InputError("structural equation weight shapes do not match");
  }
  StructuralEquation f;
  f.variant_ = EquationVariant::kNonlinear;
  f.input_width_ = input_width;
  f.hidden_ = hidden;
  f.w1_ = std::move(first_layer);
  f.b1_ = std::move(first_bias);
  f.w2_ = std::move(output_weights);
  f.b2_ = output_bias;
  return f;
}

double StructuralEquation::logit_from_active(std::span<const int> active) const {
  if (variant_ == EquationVariant::kLinear) {
    double z = b2_;
    for (int k : active) z += w1_[static_cast<std::size_t>(k)];
    return z;
  }
  double z = b2_;
  const auto width = static_cast<std::size_t>(input_width_);
  for (int h = 0; h < hidden_; ++h) {
    double pre = b1_[static_cast<std::size_t>(h)];
    const double* row = w1_.data() + static_cast<std::size_t>(h) * width;
    for (int k : active) pre += row[k];
    z += w2_[static_cast<std::size_t>(h)] * leaky_relu(pre, kLeakySlope);
  }
  return z;
}

double StructuralEquation::probability_from_active(std::span<const int> active) const {
  return sigmoid(logit_from_active(active));
}

double causal_prob(const StructuralEquation& f, const HistoryVector& x,
                   std::span<const std::uint8_t> mask) {
  if (x.size() != f.input_width() || mask.size() != static_cast<std::size_t>(f.input_width())) {
    throw InputError("history and mask must match the equation input width");
  }
  std::vector<int> active;
  for (int k = 0; k < x.size(); ++k) {
    if (x[k] && mask[static_cast<std::size_t>(k)] != 0) active.push_back(k);
  }
  return f.probability_from_active(active);
}

std::vector<std::uint8_t> parent_mask(const CausalGraph& graph, int child) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(graph.size()), 0);
  for (int k = 0; k < graph.size(); ++k) mask[static_cast<std::size_t>(k)] = graph.at(child, k);
  return mask;
}

double expert_prob(const Eigen::MatrixXd& logits, int target, std::span<const int> history_set) {
  const auto d = static_cast<int>(logits.rows());
  if (target < 0 || target >= d) throw InputError("expert target out of range");
  double r = 1.0;
  for (int k : history_set) {
    if (k < 0 || k >= d) throw InputError("expert history index out of range");
    if (k == target) continue;
    r *= 1.0 - sigmoid(logits(target, k));
  }
  return r;
}

void ModelShape::validate() const {
  if (d < 1) throw InputError("model needs at least one variable");
  if (equation_hidden < 1) throw InputError("equation hidden width must be positive");
  if (embedding_dim < 1) throw InputError("embedding dimension must be positive");
  if (rs_hidden < 1) throw InputError("recurrent hidden width must be positive");
  if (window < 1) throw InputError("recommender window must be positive");
}

CausalModel::CausalModel(ModelShape shape) : shape_(shape) {
  shape_.validate();
  const int d = shape_.d;
  const int h = shape_.equation_hidden;
  const int e = shape_.embedding_dim;
  const int hg = shape_.rs_hidden;
  auto add = [this](const char* name, std::vector<int> dims) {
    params_.add(name, std::move(dims));
    return params_.tensors().size() - 1;
  };
  gamma_ = add("gamma", {d, d});
  if (shape_.variant == EquationVariant::kNonlinear) {
    f_w1_ = add("f.w1", {d, h, d});
    f_b1_ = add("f.b1", {d, h});
    f_w2_ = add("f.w2", {d, h});
    f_b2_ = add("f.b2", {d});
  } else {
    f_w1_ = add("f.w", {d, d});
    f_b2_ = add("f.b", {d});
  }
  emb_ = add("g.embedding", {d, e});
  w_ih_ = add("g.w_ih", {3 * hg, e});
  w_hh_ = add("g.w_hh", {3 * hg, hg});
  b_ih_ = add("g.b_ih", {3 * hg});
  b_hh_ = add("g.b_hh", {3 * hg});
  w_out_ = add("g.w_out", {d, hg});
  b_out_ = add("g.b_out", {d});
  projection_ = Tensor("g.projection", {d, 3 * hg});
}

void CausalModel::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Tensor& t, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.value) v = dist(rng);
  };
  for (auto& t : params_.tensors()) std::fill(t.value.begin(), t.value.end(), 0.0);
  if (shape_.variant == EquationVariant::kNonlinear) {
    fill(params_.at("f.w1"), shape_.d);
    fill(params_.at("f.w2"), shape_.equation_hidden);
  } else {
    fill(params_.at("f.w"), shape_.d);
  }
  fill(params_.at("g.embedding"), shape_.embedding_dim);
  fill(params_.at("g.w_ih"), shape_.embedding_dim);
  fill(params_.at("g.w_hh"), shape_.rs_hidden);
  fill(params_.at("g.w_out"), shape_.rs_hidden);
}

Eigen::MatrixXd CausalModel::logits() const {
  const int d = shape_.d;
  const auto& g = params_.at("gamma").value;
  Eigen::MatrixXd m(d, d);
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) m(j, k) = g[static_cast<std::size_t>(j * d + k)];
  }
  return m;
}

void CausalModel::set_logits(const Eigen::MatrixXd& logits) {
  const int d = shape_.d;
  if (logits.rows() != d || logits.cols() != d) throw InputError("logit matrix has wrong shape");
  auto& g = params_.at("gamma").value;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) g[static_cast<std::size_t>(j * d + k)] = logits(j, k);
  }
}

StructuralEquation CausalModel::equation(int j) const {
  const int d = shape_.d;
  if (j < 0 || j >= d) throw InputError("equation index out of range");
  const auto uj = static_cast<std::size_t>(j);
  const auto ud = static_cast<std::size_t>(d);
  if (shape_.variant == EquationVariant::kLinear) {
    const auto& w = params_.at("f.w").value;
    std::vector<double> row(w.begin() + static_cast<std::ptrdiff_t>(uj * ud),
                            w.begin() + static_cast<std::ptrdiff_t>((uj + 1) * ud));
    return StructuralEquation::linear(std::move(row), params_.at("f.b").value[uj]);
  }
  const auto h = static_cast<std::size_t>(shape_.equation_hidden);
  auto slice = [](const std::vector<double>& v, std::size_t from, std::size_t len) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(from),
                               v.begin() + static_cast<std::ptrdiff_t>(from + len));
  };
  return StructuralEquation::nonlinear(d, shape_.equation_hidden,
                                       slice(params_.at("f.w1").value, uj * h * ud, h * ud),
                                       slice(params_.at("f.b1").value, uj * h, h),
                                       slice(params_.at("f.w2").value, uj * h, h),
                                       params_.at("f.b2").value[uj]);
}

GradientTape::Id CausalModel::record_logit_row(GradientTape& tape, int j) {
  const auto d = static_cast<std::size_t>(shape_.d);
  return tape.parameter(slot(gamma_), static_cast<std::size_t>(j) * d, d);
}

GradientTape::Id CausalModel::record_equation(GradientTape& tape, int j,
                                              std::span<const int> columns,
                                              GradientTape::Id values) {
  return tape.sigmoid(record_equation_logit(tape, j, columns, values));
}

GradientTape::Id CausalModel::record_equation_logit(GradientTape& tape, int j,
                                                    std::span<const int> columns,
                                                    GradientTape::Id values) {
  const int d = shape_.d;
  const auto uj = static_cast<std::size_t>(j);
  const auto ud = static_cast<std::size_t>(d);
  if (shape_.variant == EquationVariant::kLinear) {
    const auto w = tape.parameter(slot(f_w1_), uj * ud, ud);
    const auto b = tape.parameter(slot(f_b2_), uj, 1);
    return tape.sparse_affine(w, 1, d, columns, values, b);
  }
  const int h = shape_.equation_hidden;
  const auto uh = static_cast<std::size_t>(h);
  const auto w1 = tape.parameter(slot(f_w1_), uj * uh * ud, uh * ud);
  const auto b1 = tape.parameter(slot(f_b1_), uj * uh, uh);
  const auto w2 = tape.parameter(slot(f_w2_), uj * uh, uh);
  const auto b2 = tape.parameter(slot(f_b2_), uj, 1);
  const auto hidden = tape.leaky_relu(tape.sparse_affine(w1, h, d, columns, values, b1), kLeakySlope);
  return tape.affine(w2, hidden, b2, 1, h);
}

GradientTape::Id CausalModel::record_rs(GradientTape& tape, std::span<const int> window) {
  if (window.empty()) throw InputError("recommender mechanism needs a non-empty history");
  const auto e = static_cast<std::size_t>(shape_.embedding_dim);
  const auto g3 = 3 * static_cast<std::size_t>(shape_.rs_hidden);
  const auto w_ih = batch_open_ ? GradientTape::Id{-1} : tape.parameter(slot(w_ih_));
  const auto w_hh = tape.parameter(slot(w_hh_));
  const auto b_ih = tape.parameter(slot(b_ih_));
  const auto b_hh = tape.parameter(slot(b_hh_));
  auto h = tape.zeros(static_cast<std::size_t>(shape_.rs_hidden));
  for (int event : window) {
    if (event < 0 || event >= shape_.d) throw InputError("history event out of range");
    const auto item = static_cast<std::size_t>(event);
    const auto x = batch_open_ ? tape.parameter(projection_, item * g3, g3)
                               : tape.parameter(slot(emb_), item * e, e);
    h = tape.gru_cell(x, h, w_ih, w_hh, b_ih, b_hh);
  }
  const auto w_out = tape.parameter(slot(w_out_));
  const auto b_out = tape.parameter(slot(b_out_));
  return tape.softmax(tape.affine(w_out, h, b_out, shape_.d, shape_.rs_hidden));
}

void CausalModel::begin_batch() {
  const auto d = shape_.d;
  const auto e = shape_.embedding_dim;
  const auto g3 = 3 * shape_.rs_hidden;
  using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<RowMajorMatrix> proj(projection_.value.data(), d, g3);
  Eigen::Map<const RowMajorMatrix> emb(slot(emb_).value.data(), d, e);
  Eigen::Map<const RowMajorMatrix> w(slot(w_ih_).value.data(), g3, e);
  proj.noalias() = emb * w.transpose();
  projection_.zero_grad();
  batch_open_ = true;
}

void CausalModel::end_batch() {
  if (!batch_open_) return;
  batch_open_ = false;
  const auto d = shape_.d;
  const auto e = shape_.embedding_dim;
  const auto g3 = 3 * shape_.rs_hidden;
  using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajorMatrix> dproj(projection_.grad.data(), d, g3);
  Eigen::Map<const RowMajorMatrix> emb(slot(emb_).value.data(), d, e);
  Eigen::Map<const RowMajorMatrix> w(slot(w_ih_).value.data(), g3, e);
  Eigen::Map<RowMajorMatrix>(slot(emb_).grad.data(), d, e).noalias() += dproj * w;
  Eigen::Map<RowMajorMatrix>(slot(w_ih_).grad.data(), g3, e).noalias() += dproj.transpose() * emb;
}

std::vector<double> CausalModel::rs_prob(std::span<const int> history) const {
  return causalrec::rs_prob(*this, history);
}

std::vector<double> rs_prob(const CausalModel& model, std::span<const int> history) {
  if (history.empty()) throw InputError("recommender mechanism needs a non-empty history");
  const auto& shape = model.shape();
  const auto window_len = std::min(history.size(), static_cast<std::size_t>(shape.window));
  const auto window = history.subspan(history.size() - window_len);
  const auto& params = model.params();
  const auto e = static_cast<std::size_t>(shape.embedding_dim);
  GradientTape tape;
  auto whole = [&](const char* name) {
    const auto& t = params.at(name);
    return tape.parameter(t, 0, t.size());
  };
  const auto w_ih = whole("g.w_ih");
  const auto w_hh = whole("g.w_hh");
  const auto b_ih = whole("g.b_ih");
  const auto b_hh = whole("g.b_hh");
  auto h = tape.zeros(static_cast<std::size_t>(shape.rs_hidden));
  for (int event : window) {
    if (event < 0 || event >= shape.d) throw InputError("history event out of range");
    const auto x = tape.parameter(params.at("g.embedding"), static_cast<std::size_t>(event) * e, e);
    h = tape.gru_cell(x, h, w_ih, w_hh, b_ih, b_hh);
  }
  const auto out = tape.softmax(tape.affine(whole("g.w_out"), h, whole("g.b_out"), shape.d, shape.rs_hidden));
  const auto v = tape.value(out);
  return {v.begin(), v.end()};
}

std::vector<std::string> CausalModel::mechanism_tensor_names() const {
  std::vector<std::string> out;
  for (const auto& t : params_.tensors()) {
    if (t.name != "gamma") out.push_back(t.name);
  }
  return out;
}

std::string CausalModel::metadata_json() const {
  nlohmann::ordered_json meta = {
      {"d", shape_.d},
      {"variant", to_string(shape_.variant)},
      {"equation_hidden", shape_.equation_hidden},
      {"embedding_dim", shape_.embedding_dim},
      {"rs_hidden", shape_.rs_hidden},
      {"window", shape_.window},
  };
  return meta.dump();
}

CausalModel CausalModel::from_parameters(ParameterStore params, const std::string& metadata_json) {
  ModelShape shape;
  try {
    const auto meta = nlohmann::json::parse(metadata_json);
    shape.d = meta.at("d").get<int>();
    shape.variant = equation_variant_from_string(meta.at("variant").get<std::string>());
    shape.equation_hidden = meta.at("equation_hidden").get<int>();
    shape.embedding_dim = meta.at("embedding_dim").get<int>();
    shape.rs_hidden = meta.at("rs_hidden").get<int>();
    shape.window = meta.at("window").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint metadata is missing model shape: ") + e.what());
  }
  CausalModel model(shape);
  for (auto& t : model.params_.tensors()) {
    if (!params.contains(t.name)) throw InputError("checkpoint lacks tensor '" + t.name + "'");
    const auto& src = params.at(t.name);
    if (src.shape != t.shape) throw InputError("checkpoint tensor '" + t.name + "' has wrong shape");
    t.value = src.value;
  }
  return model;
}

}  // namespace causalrec
