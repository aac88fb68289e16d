#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "p4rec/num/params.hpp"

namespace p4rec::num {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moment tensors are created on first use per
// parameter name and always match the parameter's shape.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  int64_t step_count() const { return t_; }

  // Applies one update in place. Gradient shapes must match the named
  // parameters.
  void step(ParamStore& params, const Gradients& grads);

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace p4rec::num
