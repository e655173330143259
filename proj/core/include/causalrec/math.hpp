#pragma once

#include <cmath>

namespace causalrec {

inline double sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double leaky_relu(double x, double slope = 0.01) {
  return x > 0 ? x : slope * x;
}

}  // namespace causalrec
