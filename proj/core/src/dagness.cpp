#include "causalrec/dagness.hpp"

#include <array>
#include <cmath>

#include <Eigen/LU>

#include "causalrec/error.hpp"
#include "causalrec/math.hpp"

namespace causalrec {

namespace {

using Eigen::MatrixXd;

// Pade coefficients and 1-norm thresholds from Higham (2005).
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

double one_norm(const MatrixXd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

// Low-degree approximant: U = A * sum b_odd A^(2k), V = sum b_even A^(2k).
template <std::size_t N>
MatrixXd pade_low(const MatrixXd& a, const std::array<double, N>& b) {
  const auto n = a.rows();
  const MatrixXd ident = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  MatrixXd power = ident;
  MatrixXd u_inner = MatrixXd::Zero(n, n);
  MatrixXd v = MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k + 1 < N; k += 2) {
    v += b[k] * power;
    u_inner += b[k + 1] * power;
    power = power * a2;
  }
  const MatrixXd u = a * u_inner;
  return (v - u).partialPivLu().solve(v + u);
}

MatrixXd pade13(const MatrixXd& a) {
  const auto& b = kPade13;
  const auto n = a.rows();
  const MatrixXd ident = MatrixXd::Identity(n, n);
  const MatrixXd a2 = a * a;
  const MatrixXd a4 = a2 * a2;
  const MatrixXd a6 = a4 * a2;
  const MatrixXd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
           b[3] * a2 + b[1] * ident);
  const MatrixXd v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
                     b[4] * a4 + b[2] * a2 + b[0] * ident;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

MatrixXd matrix_exponential(const MatrixXd& w) {
  if (w.rows() != w.cols()) {
    throw InputError("matrix exponential needs a square matrix");
  }
  if (!w.allFinite()) {
    throw InputError("matrix exponential input has non-finite entries");
  }
  const auto n = w.rows();
  if (n == 0) return MatrixXd(0, 0);

  const double norm = one_norm(w);
  if (norm <= kTheta3) return pade_low(w, kPade3);
  if (norm <= kTheta5) return pade_low(w, kPade5);
  if (norm <= kTheta7) return pade_low(w, kPade7);
  if (norm <= kTheta9) return pade_low(w, kPade9);

  int squarings = 0;
  if (norm > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
  }
  MatrixXd result = pade13(w / std::ldexp(1.0, squarings));
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
  }
  return result;
}

double trace_exp_excess(const MatrixXd& a) {
  return matrix_exponential(a).trace() - static_cast<double>(a.rows());
}

PenaltyResult dag_penalty(const MatrixXd& logits) {
  if (logits.rows() != logits.cols()) {
    throw InputError("logit matrix must be square");
  }
  const auto d = logits.rows();
  MatrixXd probs = MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (j != k) probs(j, k) = sigmoid(logits(j, k));
    }
  }
  const MatrixXd e = matrix_exponential(probs);

  PenaltyResult out;
  out.value = e.trace() - static_cast<double>(d);
  out.gradient_wrt_logits = MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k < d; ++k) {
      if (j == k) continue;
      const double p = probs(j, k);
      out.gradient_wrt_logits(j, k) = e(k, j) * p * (1.0 - p);
    }
  }
  return out;
}

}  // namespace causalrec
