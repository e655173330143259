#include "causalrec/tape.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "causalrec/error.hpp"
#include "causalrec/math.hpp"

namespace causalrec {

using Id = GradientTape::Id;

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMajor = Eigen::Map<const RowMajorMatrix>;
using RowMajor = Eigen::Map<RowMajorMatrix>;

}  // namespace

void GradientTape::clear() {
  nodes_.clear();
  values_.clear();
  adjoints_.clear();
  aux_.clear();
  indices_.clear();
}

const GradientTape::Node& GradientTape::node(Id id) const {
  return nodes_[static_cast<std::size_t>(id)];
}

const double* GradientTape::val(const Node& n) const {
  return n.ext_value != nullptr ? n.ext_value : values_.data() + n.offset;
}

double* GradientTape::val_mut(Node& n) { return values_.data() + n.offset; }

double* GradientTape::adj(Node& n) {
  return n.ext_grad != nullptr ? n.ext_grad : adjoints_.data() + n.offset;
}

void GradientTape::check_size(Id id, std::size_t expected, const char* what) const {
  if (node(id).size != expected) {
    throw InputError(std::string("tape: size mismatch for ") + what);
  }
}

Id GradientTape::push(Node n, std::size_t size, std::size_t aux_size) {
  n.size = static_cast<std::uint32_t>(size);
  // Leaves bound to read-only tensors still get an adjoint slot.
  if (n.ext_grad == nullptr) {
    n.offset = values_.size();
    values_.resize(values_.size() + size, 0.0);
  }
  n.aux_offset = aux_.size();
  aux_.resize(aux_.size() + aux_size, 0.0);
  nodes_.push_back(n);
  return static_cast<Id>(nodes_.size() - 1);
}

std::span<const double> GradientTape::value(Id id) const {
  const auto& n = node(id);
  return {val(n), n.size};
}

double GradientTape::scalar(Id id) const {
  check_size(id, 1, "scalar read");
  return val(node(id))[0];
}

Id GradientTape::constant(std::span<const double> values) {
  Node n;
  n.op = Op::kConstant;
  const Id id = push(n, values.size());
  std::copy(values.begin(), values.end(), val_mut(nodes_.back()));
  return id;
}

Id GradientTape::constant(double value) { return constant(std::span<const double>(&value, 1)); }

Id GradientTape::zeros(std::size_t n) {
  Node node;
  node.op = Op::kConstant;
  return push(node, n);
}

Id GradientTape::parameter(Tensor& tensor) { return parameter(tensor, 0, tensor.size()); }

Id GradientTape::parameter(const Tensor& tensor, std::size_t offset, std::size_t length) {
  if (offset + length > tensor.size()) {
    throw InputError("tape: parameter slice out of range for '" + tensor.name + "'");
  }
  Node n;
  n.op = Op::kParameter;
  n.ext_value = tensor.value.data() + offset;
  return push(n, length);
}

Id GradientTape::parameter(Tensor& tensor, std::size_t offset, std::size_t length) {
  if (offset + length > tensor.size()) {
    throw InputError("tape: parameter slice out of range for '" + tensor.name + "'");
  }
  Node n;
  n.op = Op::kParameter;
  n.ext_value = tensor.value.data() + offset;
  n.ext_grad = tensor.grad.data() + offset;
  return push(n, length);
}

Id GradientTape::affine(Id w, Id x, Id b, int rows, int cols) {
  check_size(w, static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), "affine weight");
  check_size(x, static_cast<std::size_t>(cols), "affine input");
  if (b >= 0) check_size(b, static_cast<std::size_t>(rows), "affine bias");
  Node n;
  n.op = Op::kAffine;
  n.in = {w, x, b, -1, -1, -1};
  n.rows = rows;
  n.cols = cols;
  const Id id = push(n, static_cast<std::size_t>(rows));
  double* y = val_mut(nodes_.back());
  const double* wv = val(node(w));
  const double* xv = val(node(x));
  const double* bv = b >= 0 ? val(node(b)) : nullptr;
  for (int r = 0; r < rows; ++r) {
    const double* row = wv + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    double acc = bv != nullptr ? bv[r] : 0.0;
    for (int c = 0; c < cols; ++c) acc += row[c] * xv[c];
    y[r] = acc;
  }
  return id;
}

Id GradientTape::sparse_affine(Id w, int rows, int cols, std::span<const int> columns, Id v,
                               Id b) {
  check_size(w, static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
             "sparse affine weight");
  check_size(v, columns.size(), "sparse affine values");
  if (b >= 0) check_size(b, static_cast<std::size_t>(rows), "sparse affine bias");
  for (int c : columns) {
    if (c < 0 || c >= cols) throw InputError("tape: sparse affine column out of range");
  }
  Node n;
  n.op = Op::kSparseAffine;
  n.in = {w, v, b, -1, -1, -1};
  n.rows = rows;
  n.cols = cols;
  n.idx_offset = indices_.size();
  n.idx_count = static_cast<std::uint32_t>(columns.size());
  indices_.insert(indices_.end(), columns.begin(), columns.end());
  const Id id = push(n, static_cast<std::size_t>(rows));
  double* y = val_mut(nodes_.back());
  const double* wv = val(node(w));
  const double* vv = val(node(v));
  const double* bv = b >= 0 ? val(node(b)) : nullptr;
  for (int r = 0; r < rows; ++r) {
    const double* row = wv + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    double acc = bv != nullptr ? bv[r] : 0.0;
    for (std::size_t i = 0; i < columns.size(); ++i) acc += row[columns[i]] * vv[i];
    y[r] = acc;
  }
  return id;
}

Id GradientTape::leaky_relu(Id x, double slope) {
  Node n;
  n.op = Op::kLeakyRelu;
  n.in[0] = x;
  n.a = slope;
  const std::size_t size = node(x).size;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* xv = val(node(x));
  for (std::size_t i = 0; i < size; ++i) y[i] = causalrec::leaky_relu(xv[i], slope);
  return id;
}

Id GradientTape::sigmoid(Id x) {
  Node n;
  n.op = Op::kSigmoid;
  n.in[0] = x;
  const std::size_t size = node(x).size;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* xv = val(node(x));
  for (std::size_t i = 0; i < size; ++i) y[i] = causalrec::sigmoid(xv[i]);
  return id;
}

Id GradientTape::softmax(Id x) {
  Node n;
  n.op = Op::kSoftmax;
  n.in[0] = x;
  const std::size_t size = node(x).size;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* xv = val(node(x));
  const double top = *std::max_element(xv, xv + size);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    y[i] = std::exp(xv[i] - top);
    total += y[i];
  }
  for (std::size_t i = 0; i < size; ++i) y[i] /= total;
  return id;
}

Id GradientTape::gru_cell(Id x, Id h, Id w_ih, Id w_hh, Id b_ih, Id b_hh) {
  const auto hid = static_cast<int>(node(h).size);
  // Without w_ih, x already holds the input projection W_ih x.
  const auto in_dim = w_ih >= 0 ? static_cast<int>(node(x).size) : 0;
  if (w_ih >= 0) {
    check_size(w_ih, 3U * static_cast<std::size_t>(hid) * static_cast<std::size_t>(in_dim),
               "gru input weight");
  } else {
    check_size(x, 3U * static_cast<std::size_t>(hid), "gru projected input");
  }
  check_size(w_hh, 3U * static_cast<std::size_t>(hid) * static_cast<std::size_t>(hid),
             "gru hidden weight");
  check_size(b_ih, 3U * static_cast<std::size_t>(hid), "gru input bias");
  check_size(b_hh, 3U * static_cast<std::size_t>(hid), "gru hidden bias");
  Node n;
  n.op = Op::kGruCell;
  n.in = {x, h, w_ih, w_hh, b_ih, b_hh};
  n.rows = hid;
  n.cols = in_dim;
  // aux layout: r | z | n | (Un h + cn)
  const Id id = push(n, static_cast<std::size_t>(hid), 4U * static_cast<std::size_t>(hid));
  Node& self = nodes_.back();
  double* y = val_mut(self);
  double* aux = aux_.data() + self.aux_offset;
  const double* xv = val(node(x));
  const double* hv = val(node(h));
  const double* wh = val(node(w_hh));
  const double* bi = val(node(b_ih));
  const double* bh = val(node(b_hh));
  const auto h3 = 3 * hid;
  Eigen::VectorXd gi = Eigen::Map<const Eigen::VectorXd>(bi, h3);
  if (w_ih >= 0) {
    gi.noalias() += ConstRowMajor(val(node(w_ih)), h3, in_dim) * Eigen::Map<const Eigen::VectorXd>(xv, in_dim);
  } else {
    gi += Eigen::Map<const Eigen::VectorXd>(xv, h3);
  }
  Eigen::VectorXd gh = Eigen::Map<const Eigen::VectorXd>(bh, h3);
  gh.noalias() += ConstRowMajor(wh, h3, hid) * Eigen::Map<const Eigen::VectorXd>(hv, hid);
  for (int u = 0; u < hid; ++u) {
    const double r = causalrec::sigmoid(gi[u] + gh[u]);
    const double z = causalrec::sigmoid(gi[hid + u] + gh[hid + u]);
    const double cand = std::tanh(gi[2 * hid + u] + r * gh[2 * hid + u]);
    aux[u] = r;
    aux[hid + u] = z;
    aux[2 * hid + u] = cand;
    aux[3 * hid + u] = gh[2 * hid + u];
    y[u] = (1.0 - z) * cand + z * hv[u];
  }
  return id;
}

namespace {

std::size_t broadcast_size(std::size_t a, std::size_t b) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw InputError("tape: incompatible elementwise sizes");
}

}  // namespace

Id GradientTape::mul(Id a, Id b) {
  const std::size_t sa = node(a).size;
  const std::size_t sb = node(b).size;
  const std::size_t size = broadcast_size(sa, sb);
  Node n;
  n.op = Op::kMul;
  n.in[0] = a;
  n.in[1] = b;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* av = val(node(a));
  const double* bv = val(node(b));
  for (std::size_t i = 0; i < size; ++i) y[i] = av[sa == 1 ? 0 : i] * bv[sb == 1 ? 0 : i];
  return id;
}

Id GradientTape::add(Id a, Id b) {
  const std::size_t sa = node(a).size;
  const std::size_t sb = node(b).size;
  const std::size_t size = broadcast_size(sa, sb);
  Node n;
  n.op = Op::kAdd;
  n.in[0] = a;
  n.in[1] = b;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* av = val(node(a));
  const double* bv = val(node(b));
  for (std::size_t i = 0; i < size; ++i) y[i] = av[sa == 1 ? 0 : i] + bv[sb == 1 ? 0 : i];
  return id;
}

Id GradientTape::scale(Id x, double a, double b) {
  Node n;
  n.op = Op::kScale;
  n.in[0] = x;
  n.a = a;
  n.b = b;
  const std::size_t size = node(x).size;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* xv = val(node(x));
  for (std::size_t i = 0; i < size; ++i) y[i] = a * xv[i] + b;
  return id;
}

Id GradientTape::log(Id x, double floor) {
  Node n;
  n.op = Op::kLog;
  n.in[0] = x;
  n.a = floor;
  const std::size_t size = node(x).size;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* xv = val(node(x));
  for (std::size_t i = 0; i < size; ++i) y[i] = std::log(std::max(xv[i], floor));
  return id;
}

Id GradientTape::exp(Id x) {
  Node n;
  n.op = Op::kExp;
  n.in[0] = x;
  const std::size_t size = node(x).size;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* xv = val(node(x));
  for (std::size_t i = 0; i < size; ++i) y[i] = std::exp(xv[i]);
  return id;
}

Id GradientTape::logit(Id p, double eps) {
  Node n;
  n.op = Op::kLogit;
  n.in[0] = p;
  n.a = eps;
  const std::size_t size = node(p).size;
  const Id id = push(n, size);
  double* y = val_mut(nodes_.back());
  const double* pv = val(node(p));
  for (std::size_t i = 0; i < size; ++i) {
    const double q = std::clamp(pv[i], eps, 1.0 - eps);
    y[i] = std::log(q) - std::log1p(-q);
  }
  return id;
}

Id GradientTape::sum(Id x) {
  Node n;
  n.op = Op::kSum;
  n.in[0] = x;
  const Id id = push(n, 1);
  const double* xv = val(node(x));
  double acc = 0.0;
  for (std::size_t i = 0; i < node(x).size; ++i) acc += xv[i];
  val_mut(nodes_.back())[0] = acc;
  return id;
}

Id GradientTape::mean(Id x) {
  if (node(x).size == 0) throw InputError("tape: mean of an empty vector");
  Node n;
  n.op = Op::kMean;
  n.in[0] = x;
  const Id id = push(n, 1);
  const double* xv = val(node(x));
  double acc = 0.0;
  for (std::size_t i = 0; i < node(x).size; ++i) acc += xv[i];
  val_mut(nodes_.back())[0] = acc / static_cast<double>(node(x).size);
  return id;
}

Id GradientTape::prod(Id x) {
  Node n;
  n.op = Op::kProd;
  n.in[0] = x;
  const Id id = push(n, 1);
  const double* xv = val(node(x));
  double acc = 1.0;
  for (std::size_t i = 0; i < node(x).size; ++i) acc *= xv[i];
  val_mut(nodes_.back())[0] = acc;
  return id;
}

Id GradientTape::gather(Id x, std::span<const int> indices) {
  const std::size_t src = node(x).size;
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= src) {
      throw InputError("tape: gather index out of range");
    }
  }
  Node n;
  n.op = Op::kGather;
  n.in[0] = x;
  n.idx_offset = indices_.size();
  n.idx_count = static_cast<std::uint32_t>(indices.size());
  indices_.insert(indices_.end(), indices.begin(), indices.end());
  const Id id = push(n, indices.size());
  double* y = val_mut(nodes_.back());
  const double* xv = val(node(x));
  for (std::size_t i = 0; i < indices.size(); ++i) y[i] = xv[indices[i]];
  return id;
}

Id GradientTape::straight_through(Id logits, std::span<const double> noise, double temperature,
                                  bool hard) {
  check_size(logits, noise.size(), "straight-through noise");
  Node n;
  n.op = Op::kStraightThrough;
  n.in[0] = logits;
  n.a = temperature;
  const std::size_t size = noise.size();
  const Id id = push(n, size, size);
  Node& self = nodes_.back();
  double* y = val_mut(self);
  double* surrogate = aux_.data() + self.aux_offset;
  const double* xv = val(node(logits));
  for (std::size_t i = 0; i < size; ++i) {
    surrogate[i] = causalrec::sigmoid((xv[i] + noise[i]) / temperature);
    y[i] = hard ? (surrogate[i] >= 0.5 ? 1.0 : 0.0) : surrogate[i];
  }
  return id;
}

std::span<const double> GradientTape::adjoint(Id id) const {
  const auto& n = node(id);
  if (n.ext_grad != nullptr) throw InputError("tape: parameter adjoints live in the tensor");
  if (adjoints_.size() < values_.size()) return {};
  return {adjoints_.data() + n.offset, n.size};
}

void GradientTape::backward(Id output, double seed) {
  check_size(output, 1, "backward output");
  adjoints_.assign(values_.size(), 0.0);
  adj(nodes_[static_cast<std::size_t>(output)])[0] = seed;

  for (auto i = static_cast<std::ptrdiff_t>(output); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.op == Op::kConstant || n.op == Op::kParameter) continue;
    const double* gy = adj(n);
    const double* y = val(n);
    const std::size_t size = n.size;

    switch (n.op) {
      case Op::kAffine:
      case Op::kSparseAffine: {
        Node& w = nodes_[static_cast<std::size_t>(n.in[0])];
        Node& x = nodes_[static_cast<std::size_t>(n.in[1])];
        const double* wv = val(w);
        const double* xv = val(x);
        double* gw = adj(w);
        double* gx = adj(x);
        const auto cols = static_cast<std::size_t>(n.cols);
        if (n.op == Op::kAffine) {
          for (int r = 0; r < n.rows; ++r) {
            const double g = gy[r];
            if (g == 0.0) continue;
            const std::size_t base = static_cast<std::size_t>(r) * cols;
            for (std::size_t c = 0; c < cols; ++c) {
              gx[c] += wv[base + c] * g;
              gw[base + c] += xv[c] * g;
            }
          }
        } else {
          const int* cols_idx = indices_.data() + n.idx_offset;
          for (int r = 0; r < n.rows; ++r) {
            const double g = gy[r];
            if (g == 0.0) continue;
            const std::size_t base = static_cast<std::size_t>(r) * cols;
            for (std::size_t k = 0; k < n.idx_count; ++k) {
              const std::size_t c = base + static_cast<std::size_t>(cols_idx[k]);
              gx[k] += wv[c] * g;
              gw[c] += xv[k] * g;
            }
          }
        }
        if (n.in[2] >= 0) {
          double* gb = adj(nodes_[static_cast<std::size_t>(n.in[2])]);
          for (int r = 0; r < n.rows; ++r) gb[r] += gy[r];
        }
        break;
      }
      case Op::kLeakyRelu: {
        Node& x = nodes_[static_cast<std::size_t>(n.in[0])];
        const double* xv = val(x);
        double* gx = adj(x);
        for (std::size_t k = 0; k < size; ++k) gx[k] += gy[k] * (xv[k] > 0 ? 1.0 : n.a);
        break;
      }
      case Op::kSigmoid: {
        double* gx = adj(nodes_[static_cast<std::size_t>(n.in[0])]);
        for (std::size_t k = 0; k < size; ++k) gx[k] += gy[k] * y[k] * (1.0 - y[k]);
        break;
      }
      case Op::kSoftmax: {
        double* gx = adj(nodes_[static_cast<std::size_t>(n.in[0])]);
        double inner = 0.0;
        for (std::size_t k = 0; k < size; ++k) inner += gy[k] * y[k];
        for (std::size_t k = 0; k < size; ++k) gx[k] += y[k] * (gy[k] - inner);
        break;
      }
      case Op::kGruCell: {
        Node& x = nodes_[static_cast<std::size_t>(n.in[0])];
        Node& h = nodes_[static_cast<std::size_t>(n.in[1])];
        Node& wh_n = nodes_[static_cast<std::size_t>(n.in[3])];
        Node& bi_n = nodes_[static_cast<std::size_t>(n.in[4])];
        Node& bh_n = nodes_[static_cast<std::size_t>(n.in[5])];
        const int hid = n.rows;
        const int in_dim = n.cols;
        const double* aux = aux_.data() + n.aux_offset;
        const double* xv = val(x);
        const double* hv = val(h);
        const double* wh = val(wh_n);
        double* gx = adj(x);
        double* gh = adj(h);
        double* gwh = adj(wh_n);
        double* gbi = adj(bi_n);
        double* gbh = adj(bh_n);
        const int h3 = 3 * hid;
        Eigen::VectorXd dgi(h3);
        Eigen::VectorXd dgh(h3);
        for (int u = 0; u < hid; ++u) {
          const double r = aux[u];
          const double z = aux[hid + u];
          const double cand = aux[2 * hid + u];
          const double gh_n = aux[3 * hid + u];
          const double g = gy[u];
          const double dz = g * (hv[u] - cand);
          const double dn = g * (1.0 - z);
          gh[u] += g * z;
          const double dn_pre = dn * (1.0 - cand * cand);
          const double dr_pre = dn_pre * gh_n * r * (1.0 - r);
          const double dz_pre = dz * z * (1.0 - z);
          // pre-activation adjoints for the input and hidden projections
          dgi[u] = dr_pre;
          dgi[hid + u] = dz_pre;
          dgi[2 * hid + u] = dn_pre;
          dgh[u] = dr_pre;
          dgh[hid + u] = dz_pre;
          dgh[2 * hid + u] = dn_pre * r;
        }
        const Eigen::Map<const Eigen::VectorXd> hvec(hv, hid);
        if (n.in[2] >= 0) {
          Node& wi_n = nodes_[static_cast<std::size_t>(n.in[2])];
          const Eigen::Map<const Eigen::VectorXd> xvec(xv, in_dim);
          Eigen::Map<Eigen::VectorXd>(gx, in_dim).noalias() +=
              ConstRowMajor(val(wi_n), h3, in_dim).transpose() * dgi;
          RowMajor(adj(wi_n), h3, in_dim).noalias() += dgi * xvec.transpose();
        } else {
          Eigen::Map<Eigen::VectorXd>(gx, h3) += dgi;
        }
        Eigen::Map<Eigen::VectorXd>(gh, hid).noalias() += ConstRowMajor(wh, h3, hid).transpose() * dgh;
        RowMajor(gwh, h3, hid).noalias() += dgh * hvec.transpose();
        Eigen::Map<Eigen::VectorXd>(gbi, h3) += dgi;
        Eigen::Map<Eigen::VectorXd>(gbh, h3) += dgh;
        break;
      }
      case Op::kMul:
      case Op::kAdd: {
        Node& a = nodes_[static_cast<std::size_t>(n.in[0])];
        Node& b = nodes_[static_cast<std::size_t>(n.in[1])];
        const bool a_scalar = a.size == 1 && size != 1;
        const bool b_scalar = b.size == 1 && size != 1;
        const double* av = val(a);
        const double* bv = val(b);
        double* ga = adj(a);
        double* gb = adj(b);
        for (std::size_t k = 0; k < size; ++k) {
          const double da = n.op == Op::kMul ? bv[b_scalar ? 0 : k] : 1.0;
          const double db = n.op == Op::kMul ? av[a_scalar ? 0 : k] : 1.0;
          ga[a_scalar ? 0 : k] += gy[k] * da;
          gb[b_scalar ? 0 : k] += gy[k] * db;
        }
        break;
      }
      case Op::kScale: {
        double* gx = adj(nodes_[static_cast<std::size_t>(n.in[0])]);
        for (std::size_t k = 0; k < size; ++k) gx[k] += gy[k] * n.a;
        break;
      }
      case Op::kLog: {
        Node& x = nodes_[static_cast<std::size_t>(n.in[0])];
        const double* xv = val(x);
        double* gx = adj(x);
        for (std::size_t k = 0; k < size; ++k) {
          if (xv[k] > n.a) gx[k] += gy[k] / xv[k];
        }
        break;
      }
      case Op::kExp: {
        double* gx = adj(nodes_[static_cast<std::size_t>(n.in[0])]);
        for (std::size_t k = 0; k < size; ++k) gx[k] += gy[k] * y[k];
        break;
      }
      case Op::kLogit: {
        Node& p = nodes_[static_cast<std::size_t>(n.in[0])];
        const double* pv = val(p);
        double* gp = adj(p);
        for (std::size_t k = 0; k < size; ++k) {
          if (pv[k] > n.a && pv[k] < 1.0 - n.a) gp[k] += gy[k] / (pv[k] * (1.0 - pv[k]));
        }
        break;
      }
      case Op::kSum:
      case Op::kMean: {
        Node& x = nodes_[static_cast<std::size_t>(n.in[0])];
        double* gx = adj(x);
        const double g = n.op == Op::kSum ? gy[0] : gy[0] / static_cast<double>(x.size);
        for (std::size_t k = 0; k < x.size; ++k) gx[k] += g;
        break;
      }
      case Op::kProd: {
        Node& x = nodes_[static_cast<std::size_t>(n.in[0])];
        const double* xv = val(x);
        double* gx = adj(x);
        // prefix/suffix products keep this exact when some factors are zero
        double prefix = 1.0;
        std::vector<double> suffix(x.size + 1, 1.0);
        for (std::size_t k = x.size; k-- > 0;) suffix[k] = suffix[k + 1] * xv[k];
        for (std::size_t k = 0; k < x.size; ++k) {
          gx[k] += gy[0] * prefix * suffix[k + 1];
          prefix *= xv[k];
        }
        break;
      }
      case Op::kGather: {
        double* gx = adj(nodes_[static_cast<std::size_t>(n.in[0])]);
        const int* idx = indices_.data() + n.idx_offset;
        for (std::size_t k = 0; k < size; ++k) gx[idx[k]] += gy[k];
        break;
      }
      case Op::kStraightThrough: {
        double* gx = adj(nodes_[static_cast<std::size_t>(n.in[0])]);
        const double* surrogate = aux_.data() + n.aux_offset;
        for (std::size_t k = 0; k < size; ++k) {
          gx[k] += gy[k] * surrogate[k] * (1.0 - surrogate[k]) / n.a;
        }
        break;
      }
      case Op::kConstant:
      case Op::kParameter:
        break;
    }
  }
}

}  // namespace causalrec
