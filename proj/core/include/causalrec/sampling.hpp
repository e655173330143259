#pragma once

// Straight-through reparameterised Bernoulli sampling.
//
// A draw s ~ Bernoulli(sigmoid(g)) is written as
//     1(sigmoid(g + l) >= 0.5) + sigmoid(g + l) - stop_gradient(sigmoid(g + l))
// with l standard-logistic. The forward value is the hard indicator; the
// backward pass sees d sigmoid(g + l) / dg.

#include <cmath>
#include <cstdint>
#include <cstddef>

namespace causalrec {

/// Counter-based uniform stream: the k-th draw of stream `key` is a pure
/// function of (key, k), so per-transition noise can be replayed exactly and
/// partitioned across workers without coordination.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t key) : key_(key) {}

  /// Uniform in the open interval (0, 1).
  double operator()();
  std::uint64_t next_u64();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
/// Order-sensitive combination of stream identifiers into one key.
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0);

/// log(u) - log(1 - u), redrawing while the source returns 0 or 1.
template <typename UniformSource>
double logistic_noise(UniformSource& uniform) {
  for (;;) {
    const double u = uniform();
    if (u > 0.0 && u < 1.0) return std::log(u) - std::log1p(-u);
  }
}

struct STSample {
  int forward = 0;         // hard {0, 1} value
  double surrogate = 0.0;  // sigmoid((g + l) / temperature)
  double noise = 0.0;      // the logistic draw l

  /// d surrogate / d logit.
  double gradient(double temperature = 1.0) const {
    return surrogate * (1.0 - surrogate) / temperature;
  }
};

STSample st_bernoulli(double logit, double noise, double temperature = 1.0);

template <typename UniformSource>
STSample st_bernoulli(double logit, UniformSource& uniform, double temperature = 1.0) {
  return st_bernoulli(logit, logistic_noise(uniform), temperature);
}

/// Mean straight-through gradient over n draws, compared with the exact
/// derivative sigmoid'(logit) of E[forward]. Returns the relative error, or
/// the absolute mean when the exact derivative is zero.
double st_gradient_check(double logit, std::size_t n, std::uint64_t seed);

/// Mean straight-through gradient over n draws (the quantity st_gradient_check
/// compares against sigmoid'(logit)).
double st_mean_gradient(double logit, std::size_t n, std::uint64_t seed);

}  // namespace causalrec
