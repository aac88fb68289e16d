#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "p4rec/num/tape.hpp"
#include "p4rec/num/tensor.hpp"

namespace p4rec::num {

// Named gradients aligned with a ParamStore's entry order.
struct Gradients {
  std::vector<std::string> names;
  std::vector<Tensor> values;

  double squared_norm() const {
    double s = 0;
    for (const Tensor& t : values) {
      for (int i = 0; i < t.size(); ++i) s += t.at(i) * t.at(i);
    }
    return s;
  }
};

// Ordered collection of named parameter tensors owned by a model.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor value);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  size_t count() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  Tensor& value(size_t i) { return values_[i]; }
  const Tensor& value(size_t i) const { return values_[i]; }

  int64_t total_size() const;

  // FNV-1a over the raw little-endian bytes of every parameter whose name
  // matches the predicate (all parameters if absent).
  uint64_t checksum(const std::function<bool(const std::string&)>& filter = nullptr) const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, size_t> index_;
};

// Binds parameters to tape nodes for one forward pass. Parameters whose
// names fail the trainable predicate enter the tape as constants and never
// receive gradients (used for the frozen stage of warm-start training).
class TapeBind {
 public:
  TapeBind(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}
  TapeBind(Tape& tape, ParamStore& store, std::function<bool(const std::string&)> trainable)
      : tape_(tape), store_(store), trainable_(std::move(trainable)) {}

  int operator[](const std::string& name);

  // After tape.backward(): gradients for every bound trainable parameter,
  // zeros for parameters never used by the forward pass.
  Gradients collect() const;

 private:
  Tape& tape_;
  ParamStore& store_;
  std::function<bool(const std::string&)> trainable_;
  std::unordered_map<std::string, int> bound_;
};

}  // namespace p4rec::num
