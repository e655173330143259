#include "causalrec/sampling.hpp"

#include "causalrec/math.hpp"

namespace causalrec {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finaliser
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ a);
  k = mix64(k ^ b);
  return mix64(k ^ c);
}

std::uint64_t NoiseStream::next_u64() {
  return mix64(key_ ^ mix64(counter_++));
}

double NoiseStream::operator()() {
  // 53 random bits centred in their cell: never exactly 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t NoiseStream::below(std::uint64_t n) {
  // Lemire's multiply-shift; the bias is < n / 2^64.
  __extension__ using u128 = unsigned __int128;
  const auto wide = static_cast<u128>(next_u64()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

STSample st_bernoulli(double logit, double noise, double temperature) {
  STSample s;
  s.noise = noise;
  s.surrogate = sigmoid((logit + noise) / temperature);
  s.forward = s.surrogate >= 0.5 ? 1 : 0;
  return s;
}

double st_mean_gradient(double logit, std::size_t n, std::uint64_t seed) {
  NoiseStream stream(seed);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += st_bernoulli(logit, stream).gradient();
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

double st_gradient_check(double logit, std::size_t n, std::uint64_t seed) {
  const double mean = st_mean_gradient(logit, n, seed);
  const double p = sigmoid(logit);
  const double exact = p * (1.0 - p);
  if (exact == 0.0) return std::abs(mean);
  return std::abs(mean - exact) / exact;
}

}  // namespace causalrec
