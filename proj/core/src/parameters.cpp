#include "causalrec/parameters.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "causalrec/error.hpp"
#include "json.hpp"

namespace causalrec {

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 0) throw InputError("negative tensor dimension");
    n *= static_cast<std::size_t>(s);
  }
  return n;
}

Tensor::Tensor(std::string n, std::vector<int> s)
    : name(std::move(n)),
      shape(std::move(s)),
      value(element_count(shape), 0.0),
      grad(element_count(shape), 0.0) {}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

Tensor& ParameterStore::add(const std::string& name, std::vector<int> shape) {
  if (index_.count(name) != 0) {
    throw InputError("duplicate tensor '" + name + "'");
  }
  // Tensors hold their buffers on the heap, so growing the vector keeps
  // element pointers handed out by value.data() valid.
  index_.emplace(name, tensors_.size());
  tensors_.emplace_back(name, std::move(shape));
  return tensors_.back();
}

bool ParameterStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InputError("no tensor named '" + name + "'");
  return tensors_[it->second];
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InputError("no tensor named '" + name + "'");
  return tensors_[it->second];
}

void ParameterStore::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void write_checkpoint(std::ostream& out, const ParameterStore& params,
                      const std::string& metadata_json) {
  nlohmann::ordered_json doc;
  doc["format"] = "causalrec-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["metadata"] = metadata_json.empty() ? nlohmann::ordered_json::object()
                                          : nlohmann::ordered_json::parse(metadata_json);
  auto& tensors = doc["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : params.tensors()) {
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"data", t.value}});
  }
  out << doc.dump() << '\n';
}

ParameterStore read_checkpoint(std::istream& in, std::string& metadata_json) {
  try {
    nlohmann::ordered_json doc;
    in >> doc;
    if (doc.at("format").get<std::string>() != "causalrec-checkpoint") {
      throw InputError("not a causalrec checkpoint");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw InputError("unsupported checkpoint version " + std::to_string(version));
    }
    metadata_json = doc.at("metadata").dump();
    ParameterStore params;
    for (const auto& t : doc.at("tensors")) {
      auto& tensor = params.add(t.at("name").get<std::string>(),
                                t.at("shape").get<std::vector<int>>());
      auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != tensor.size()) {
        throw InputError("tensor '" + tensor.name + "' data does not match its shape");
      }
      tensor.value = std::move(data);
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace causalrec
