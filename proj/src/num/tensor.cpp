#include "p4rec/num/tensor.hpp"

#include <cmath>

namespace p4rec::num {

size_t Tensor::count(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
    n *= static_cast<size_t>(d);
  }
  return n;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::check_finite(const char* where) const {
  if (!all_finite()) {
    throw std::invalid_argument(std::string(where) + ": non-finite entry");
  }
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("cosine_similarity: shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  double ab = 0, aa = 0, bb = 0;
  for (int i = 0; i < a.size(); ++i) {
    ab += a.data()[i] * b.data()[i];
    aa += a.data()[i] * a.data()[i];
    bb += b.data()[i] * b.data()[i];
  }
  if (aa == 0.0 || bb == 0.0) {
    throw std::invalid_argument("cosine_similarity: zero-norm input");
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

Tensor stable_softmax(const Tensor& x) {
  x.check_finite("stable_softmax");
  const int c = x.cols();
  const int r = x.size() / c;
  Tensor out = Tensor::zeros(x.shape());
  for (int i = 0; i < r; ++i) {
    const double* xi = x.data() + static_cast<size_t>(i) * c;
    double* oi = out.data() + static_cast<size_t>(i) * c;
    double m = xi[0];
    for (int j = 1; j < c; ++j) m = std::max(m, xi[j]);
    double z = 0;
    for (int j = 0; j < c; ++j) {
      oi[j] = std::exp(xi[j] - m);
      z += oi[j];
    }
    for (int j = 0; j < c; ++j) oi[j] /= z;
  }
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  // log(1+e^x) = max(x,0) + log1p(e^{-|x|})
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace p4rec::num
