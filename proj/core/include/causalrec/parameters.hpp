#pragma once

// Named dense tensors with gradient buffers, plus the versioned JSON
// checkpoint archive.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace causalrec {

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(std::string name, std::vector<int> shape);

  std::size_t size() const { return value.size(); }
  void zero_grad();
};

std::size_t element_count(const std::vector<int>& shape);

class ParameterStore {
 public:
  /// Adds a zero-initialised tensor; names must be unique. The returned
  /// reference is invalidated by the next add().
  Tensor& add(const std::string& name, std::vector<int> shape);

  bool contains(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  void zero_grad();
  std::size_t parameter_count() const;

 private:
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

inline constexpr int kCheckpointVersion = 1;

/// Checkpoint archive: {"format": "causalrec-checkpoint", "version": 1,
/// "metadata": {...}, "tensors": [{"name", "shape", "data"}, ...]}.
/// Metadata is an opaque JSON object string owned by the caller.
void write_checkpoint(std::ostream& out, const ParameterStore& params,
                      const std::string& metadata_json);
/// Returns the parameters and stores the metadata JSON text in `metadata_json`.
ParameterStore read_checkpoint(std::istream& in, std::string& metadata_json);

}  // namespace causalrec
