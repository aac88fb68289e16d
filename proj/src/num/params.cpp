#include "p4rec/num/params.hpp"

#include <cstring>
#include <stdexcept>

namespace p4rec::num {

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
  index_[name] = names_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
  return values_.back();
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown name " + name);
  return values_[it->second];
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown name " + name);
  return values_[it->second];
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const Tensor& t : values_) n += t.size();
  return n;
}

uint64_t ParamStore::checksum(const std::function<bool(const std::string&)>& filter) const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (size_t i = 0; i < names_.size(); ++i) {
    if (filter && !filter(names_[i])) continue;
    mix(names_[i].data(), names_[i].size());
    mix(values_[i].data(), static_cast<size_t>(values_[i].size()) * sizeof(double));
  }
  return h;
}

int TapeBind::operator[](const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Tensor& v = store_.at(name);
  const bool train = !trainable_ || trainable_(name);
  const int id = train ? tape_.leaf(v) : tape_.constant(v);
  bound_[name] = id;
  return id;
}

Gradients TapeBind::collect() const {
  Gradients g;
  for (const std::string& name : store_.names()) {
    if (trainable_ && !trainable_(name)) continue;
    g.names.push_back(name);
    auto it = bound_.find(name);
    if (it == bound_.end()) {
      g.values.push_back(Tensor::zeros(store_.at(name).shape()));
    } else {
      g.values.push_back(tape_.grad_or_zero(it->second));
    }
  }
  return g;
}

}  // namespace p4rec::num
