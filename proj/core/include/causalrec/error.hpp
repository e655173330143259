#pragma once

#include <stdexcept>
#include <string>

namespace causalrec {

/// Malformed caller input: bad shapes, out-of-range indices, invalid files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The training loss became non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace causalrec
