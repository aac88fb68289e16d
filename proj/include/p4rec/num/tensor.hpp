#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace p4rec::num {

// Dense row-major tensor of 64-bit floats. Ranks 0..2 cover everything in
// this project; higher ranks are allowed but nothing constructs them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_.assign(count(t.shape_), 0.0);
    return t;
  }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.data_) x = v;
    t.check_finite("Tensor::full");
    return t;
  }

  static Tensor scalar(double v) { return full({}, v); }

  static Tensor vec(std::vector<double> data) {
    Tensor t;
    t.shape_ = {static_cast<int>(data.size())};
    t.data_ = std::move(data);
    t.check_finite("Tensor::vec");
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<double> data) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    if (count(t.shape_) != t.data_.size()) {
      throw std::invalid_argument("Tensor::from: shape/data size mismatch");
    }
    t.check_finite("Tensor::from");
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int size() const { return static_cast<int>(data_.size()); }
  int dim(int i) const { return shape_.at(static_cast<size_t>(i)); }
  bool is_scalar() const { return data_.size() == 1 && shape_.empty(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double& at(int i) { return data_[static_cast<size_t>(i)]; }
  double at(int i) const { return data_[static_cast<size_t>(i)]; }
  double& at(int i, int j) { return data_[static_cast<size_t>(i) * cols() + j]; }
  double at(int i, int j) const { return data_[static_cast<size_t>(i) * cols() + j]; }

  // First dimension, or 1 for scalars/empty.
  int rows() const { return shape_.empty() ? 1 : shape_[0]; }
  // Last dimension, or 1 for scalars.
  int cols() const { return shape_.empty() ? 1 : shape_.back(); }

  double item() const {
    if (data_.size() != 1) throw std::logic_error("Tensor::item: not a scalar");
    return data_[0];
  }

  bool all_finite() const;
  void check_finite(const char* where) const;

  std::string shape_str() const;

 private:
  static size_t count(const std::vector<int>& shape);

  std::vector<int> shape_;
  std::vector<double> data_;
};

// a.b / (|a| |b|); throws on zero-norm input or shape mismatch.
double cosine_similarity(const Tensor& a, const Tensor& b);

// Max-shifted softmax over the last axis (rows of a 2-D tensor, or the whole
// of a 1-D tensor). Outputs strictly positive, each row sums to 1.
Tensor stable_softmax(const Tensor& x);

double stable_sigmoid(double x);

// log(1 + e^x) without overflow.
double softplus(double x);

}  // namespace p4rec::num
