#include "p4rec/num/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace p4rec::num {

void AdamState::step(ParamStore& params, const Gradients& grads) {
  t_ += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < grads.names.size(); ++i) {
    Tensor& p = params.at(grads.names[i]);
    const Tensor& g = grads.values[i];
    if (!p.same_shape(g)) {
      throw std::invalid_argument("adam_step: shape mismatch for " + grads.names[i]);
    }
    Moments& mo = moments_[grads.names[i]];
    if (mo.m.size() == 0) {
      mo.m = Tensor::zeros(p.shape());
      mo.v = Tensor::zeros(p.shape());
    }
    for (int j = 0; j < p.size(); ++j) {
      const double gj = g.at(j);
      mo.m.at(j) = cfg_.beta1 * mo.m.at(j) + (1.0 - cfg_.beta1) * gj;
      mo.v.at(j) = cfg_.beta2 * mo.v.at(j) + (1.0 - cfg_.beta2) * gj * gj;
      const double mhat = mo.m.at(j) / bc1;
      const double vhat = mo.v.at(j) / bc2;
      p.at(j) -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace p4rec::num
