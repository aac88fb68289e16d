#pragma once

// Central finite-difference oracle used by gradient tests. Lives in test
// code and stays independent of the tape's backward pass.

#include <cmath>
#include <functional>
#include <string>

#include "p4rec/num/params.hpp"
#include "p4rec/num/tensor.hpp"

namespace p4rec_test {

struct GradCheckResult {
  bool ok = true;
  double worst_rel = 0.0;
  std::string worst_at;
};

// f evaluates the scalar objective from the current store contents.
// analytic holds d(objective)/d(param) for every checked parameter.
inline GradCheckResult finite_diff_check(p4rec::num::ParamStore& store,
                                         const std::function<double()>& f,
                                         const p4rec::num::Gradients& analytic,
                                         double step = 1e-5, double rel_tol = 1e-4,
                                         double abs_tol = 1e-7) {
  GradCheckResult res;
  for (size_t pi = 0; pi < analytic.names.size(); ++pi) {
    p4rec::num::Tensor& p = store.at(analytic.names[pi]);
    const p4rec::num::Tensor& g = analytic.values[pi];
    for (int j = 0; j < p.size(); ++j) {
      const double orig = p.at(j);
      p.at(j) = orig + step;
      const double fp = f();
      p.at(j) = orig - step;
      const double fm = f();
      p.at(j) = orig;
      const double fd = (fp - fm) / (2.0 * step);
      const double ad = g.at(j);
      const double err = std::abs(fd - ad);
      const double rel = err / std::max({std::abs(fd), std::abs(ad), 1e-12});
      if (err > abs_tol && rel > rel_tol) {
        res.ok = false;
        if (rel > res.worst_rel) {
          res.worst_rel = rel;
          res.worst_at = analytic.names[pi] + "[" + std::to_string(j) + "] ad=" +
                         std::to_string(ad) + " fd=" + std::to_string(fd);
        }
      }
    }
  }
  return res;
}

}  // namespace p4rec_test
