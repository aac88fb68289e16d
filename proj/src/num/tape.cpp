#include "p4rec/num/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace p4rec::num {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

void matmul_raw(double* out, const double* x, bool tx, const double* y, bool ty, int m, int n,
                int k, bool accumulate) {
  if (!accumulate) {
    for (size_t i = 0; i < static_cast<size_t>(m) * n; ++i) out[i] = 0.0;
  }
  if (!tx && !ty) {
    // x[m,k] * y[k,n]
    for (int i = 0; i < m; ++i) {
      double* oi = out + static_cast<size_t>(i) * n;
      const double* xi = x + static_cast<size_t>(i) * k;
      for (int l = 0; l < k; ++l) {
        const double a = xi[l];
        if (a == 0.0) continue;
        const double* yl = y + static_cast<size_t>(l) * n;
        for (int j = 0; j < n; ++j) oi[j] += a * yl[j];
      }
    }
  } else if (!tx && ty) {
    // x[m,k] * y[n,k]^T
    for (int i = 0; i < m; ++i) {
      double* oi = out + static_cast<size_t>(i) * n;
      const double* xi = x + static_cast<size_t>(i) * k;
      for (int j = 0; j < n; ++j) {
        const double* yj = y + static_cast<size_t>(j) * k;
        double acc = 0.0;
        for (int l = 0; l < k; ++l) acc += xi[l] * yj[l];
        oi[j] += acc;
      }
    }
  } else if (tx && !ty) {
    // x[k,m]^T * y[k,n]
    for (int l = 0; l < k; ++l) {
      const double* xl = x + static_cast<size_t>(l) * m;
      const double* yl = y + static_cast<size_t>(l) * n;
      for (int i = 0; i < m; ++i) {
        const double a = xl[i];
        if (a == 0.0) continue;
        double* oi = out + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) oi[j] += a * yl[j];
      }
    }
  } else {
    // x[k,m]^T * y[n,k]^T
    for (int i = 0; i < m; ++i) {
      double* oi = out + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* yj = y + static_cast<size_t>(j) * k;
        double acc = 0.0;
        for (int l = 0; l < k; ++l) acc += x[static_cast<size_t>(l) * m + i] * yj[l];
        oi[j] += acc;
      }
    }
  }
}

int Tape::push(Node n) {
  require(!backward_done_, "Tape: cannot extend after backward");
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

bool Tape::any_needs_grad(const std::vector<int>& ids) const {
  if (!grad_enabled_) return false;
  for (int id : ids) {
    if (nodes_[static_cast<size_t>(id)].needs_grad) return true;
  }
  return false;
}

int Tape::leaf(Tensor v) {
  Node n;
  n.op = Op::kInput;
  n.needs_grad = grad_enabled_;
  n.value = std::move(v);
  return push(std::move(n));
}

int Tape::constant(Tensor v) {
  Node n;
  n.op = Op::kInput;
  n.needs_grad = false;
  n.value = std::move(v);
  return push(std::move(n));
}

int Tape::unary(Op op, int a, Tensor value) {
  Node n;
  n.op = op;
  n.inputs = {a};
  n.needs_grad = any_needs_grad({a});
  n.value = std::move(value);
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.same_shape(tb), "add: shape mismatch");
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out.at(i) += tb.at(i);
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a, b};
  n.needs_grad = any_needs_grad({a, b});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.same_shape(tb), "sub: shape mismatch");
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out.at(i) -= tb.at(i);
  Node n;
  n.op = Op::kSub;
  n.inputs = {a, b};
  n.needs_grad = any_needs_grad({a, b});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::mul(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.same_shape(tb), "mul: shape mismatch");
  Tensor out = ta;
  for (int i = 0; i < out.size(); ++i) out.at(i) *= tb.at(i);
  Node n;
  n.op = Op::kMul;
  n.inputs = {a, b};
  n.needs_grad = any_needs_grad({a, b});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::scale(int a, double c) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out.at(i) *= c;
  Node n;
  n.op = Op::kScale;
  n.inputs = {a};
  n.daux = c;
  n.needs_grad = any_needs_grad({a});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::matmul(int a, int b, bool trans_a, bool trans_b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.rank() == 2 && tb.rank() == 2, "matmul: rank-2 operands required");
  const int m = trans_a ? ta.dim(1) : ta.dim(0);
  const int k = trans_a ? ta.dim(0) : ta.dim(1);
  const int k2 = trans_b ? tb.dim(1) : tb.dim(0);
  const int nn = trans_b ? tb.dim(0) : tb.dim(1);
  require(k == k2, "matmul: inner dimension mismatch");
  Tensor out = Tensor::zeros({m, nn});
  matmul_raw(out.data(), ta.data(), trans_a, tb.data(), trans_b, m, nn, k, false);
  Node n;
  n.op = Op::kMatmul;
  n.inputs = {a, b};
  n.iaux = {trans_a ? 1 : 0, trans_b ? 1 : 0};
  n.needs_grad = any_needs_grad({a, b});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::add_row(int a, int row) {
  const Tensor& ta = val(a);
  const Tensor& tr = val(row);
  require(ta.rank() == 2 && tr.rank() == 1 && ta.dim(1) == tr.dim(0),
          "add_row: [m,n] plus [n] required");
  Tensor out = ta;
  for (int i = 0; i < ta.dim(0); ++i) {
    for (int j = 0; j < ta.dim(1); ++j) out.at(i, j) += tr.at(j);
  }
  Node n;
  n.op = Op::kAddRow;
  n.inputs = {a, row};
  n.needs_grad = any_needs_grad({a, row});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::rows(int a, std::vector<int> idx) {
  const Tensor& ta = val(a);
  require(ta.rank() == 2, "rows: rank-2 input required");
  const int d = ta.dim(1);
  Tensor out = Tensor::zeros({static_cast<int>(idx.size()), d});
  for (size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] >= 0 && idx[r] < ta.dim(0), "rows: index out of range");
    for (int j = 0; j < d; ++j) out.at(static_cast<int>(r), j) = ta.at(idx[r], j);
  }
  Node n;
  n.op = Op::kRows;
  n.inputs = {a};
  n.iaux.assign(idx.begin(), idx.end());
  n.needs_grad = any_needs_grad({a});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::gather(int a, std::vector<int> idx) {
  const Tensor& ta = val(a);
  require(ta.rank() == 1, "gather: rank-1 input required");
  Tensor out = Tensor::zeros({static_cast<int>(idx.size())});
  for (size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] >= 0 && idx[r] < ta.dim(0), "gather: index out of range");
    out.at(static_cast<int>(r)) = ta.at(idx[r]);
  }
  Node n;
  n.op = Op::kGather;
  n.inputs = {a};
  n.iaux.assign(idx.begin(), idx.end());
  n.needs_grad = any_needs_grad({a});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::pick_cols(int a, std::vector<int> idx) {
  const Tensor& ta = val(a);
  require(ta.rank() == 2, "pick_cols: rank-2 input required");
  require(static_cast<int>(idx.size()) == ta.dim(0), "pick_cols: one index per row required");
  Tensor out = Tensor::zeros({ta.dim(0)});
  for (int i = 0; i < ta.dim(0); ++i) {
    require(idx[static_cast<size_t>(i)] >= 0 && idx[static_cast<size_t>(i)] < ta.dim(1),
            "pick_cols: index out of range");
    out.at(i) = ta.at(i, idx[static_cast<size_t>(i)]);
  }
  Node n;
  n.op = Op::kPickCols;
  n.inputs = {a};
  n.iaux.assign(idx.begin(), idx.end());
  n.needs_grad = any_needs_grad({a});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::relu(int a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out.at(i) = out.at(i) > 0 ? out.at(i) : 0.0;
  return unary(Op::kRelu, a, std::move(out));
}

int Tape::tanh_(int a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out.at(i) = std::tanh(out.at(i));
  return unary(Op::kTanh, a, std::move(out));
}

int Tape::sigmoid(int a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out.at(i) = stable_sigmoid(out.at(i));
  return unary(Op::kSigmoid, a, std::move(out));
}

int Tape::softplus_(int a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out.at(i) = softplus(out.at(i));
  return unary(Op::kSoftplus, a, std::move(out));
}

int Tape::log_(int a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out.at(i) = std::log(out.at(i));
  return unary(Op::kLog, a, std::move(out));
}

int Tape::exp_(int a) {
  Tensor out = val(a);
  for (int i = 0; i < out.size(); ++i) out.at(i) = std::exp(out.at(i));
  return unary(Op::kExp, a, std::move(out));
}

int Tape::sum(int a) {
  double s = 0;
  for (int i = 0; i < val(a).size(); ++i) s += val(a).at(i);
  return unary(Op::kSum, a, Tensor::scalar(s));
}

int Tape::mean(int a) {
  double s = 0;
  for (int i = 0; i < val(a).size(); ++i) s += val(a).at(i);
  return unary(Op::kMean, a, Tensor::scalar(s / val(a).size()));
}

int Tape::sum_cols(int a) {
  const Tensor& ta = val(a);
  require(ta.rank() == 2, "sum_cols: rank-2 input required");
  Tensor out = Tensor::zeros({ta.dim(0)});
  for (int i = 0; i < ta.dim(0); ++i) {
    double s = 0;
    for (int j = 0; j < ta.dim(1); ++j) s += ta.at(i, j);
    out.at(i) = s;
  }
  return unary(Op::kSumCols, a, std::move(out));
}

int Tape::weighted_pool_rows(int a, int w) {
  const Tensor& ta = val(a);
  const Tensor& tw = val(w);
  require(ta.rank() == 2 && tw.rank() == 1 && tw.dim(0) == ta.dim(0),
          "weighted_pool_rows: ([L,d], [L]) required");
  Tensor out = Tensor::zeros({ta.dim(1)});
  for (int i = 0; i < ta.dim(0); ++i) {
    const double wi = tw.at(i);
    if (wi == 0.0) continue;
    for (int j = 0; j < ta.dim(1); ++j) out.at(j) += wi * ta.at(i, j);
  }
  Node n;
  n.op = Op::kWeightedPoolRows;
  n.inputs = {a, w};
  n.needs_grad = any_needs_grad({a, w});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::softmax_rows(int a) {
  return unary(Op::kSoftmaxRows, a, stable_softmax(val(a)));
}

int Tape::log_softmax_rows(int a) {
  const Tensor& x = val(a);
  const int c = x.cols();
  const int r = x.size() / c;
  Tensor out = Tensor::zeros(x.shape());
  for (int i = 0; i < r; ++i) {
    const double* xi = x.data() + static_cast<size_t>(i) * c;
    double* oi = out.data() + static_cast<size_t>(i) * c;
    double m = xi[0];
    for (int j = 1; j < c; ++j) m = std::max(m, xi[j]);
    double z = 0;
    for (int j = 0; j < c; ++j) z += std::exp(xi[j] - m);
    const double lz = m + std::log(z);
    for (int j = 0; j < c; ++j) oi[j] = xi[j] - lz;
  }
  return unary(Op::kLogSoftmaxRows, a, std::move(out));
}

int Tape::concat_rows(const std::vector<int>& parts) {
  require(!parts.empty(), "concat_rows: empty part list");
  int total = 0;
  const int d = val(parts[0]).dim(1);
  for (int p : parts) {
    require(val(p).rank() == 2 && val(p).dim(1) == d, "concat_rows: column mismatch");
    total += val(p).dim(0);
  }
  Tensor out = Tensor::zeros({total, d});
  int r = 0;
  for (int p : parts) {
    const Tensor& tp = val(p);
    for (int i = 0; i < tp.dim(0); ++i, ++r) {
      for (int j = 0; j < d; ++j) out.at(r, j) = tp.at(i, j);
    }
  }
  Node n;
  n.op = Op::kConcatRows;
  n.inputs = parts;
  n.needs_grad = any_needs_grad(parts);
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::concat_cols(const std::vector<int>& parts) {
  require(!parts.empty(), "concat_cols: empty part list");
  const int r = val(parts[0]).dim(0);
  int total = 0;
  for (int p : parts) {
    require(val(p).rank() == 2 && val(p).dim(0) == r, "concat_cols: row mismatch");
    total += val(p).dim(1);
  }
  Tensor out = Tensor::zeros({r, total});
  int c0 = 0;
  for (int p : parts) {
    const Tensor& tp = val(p);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < tp.dim(1); ++j) out.at(i, c0 + j) = tp.at(i, j);
    }
    c0 += tp.dim(1);
  }
  Node n;
  n.op = Op::kConcatCols;
  n.inputs = parts;
  n.needs_grad = any_needs_grad(parts);
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::slice_cols(int a, int begin, int end) {
  const Tensor& ta = val(a);
  require(ta.rank() == 2 && begin >= 0 && end <= ta.dim(1) && begin < end,
          "slice_cols: bad range");
  Tensor out = Tensor::zeros({ta.dim(0), end - begin});
  for (int i = 0; i < ta.dim(0); ++i) {
    for (int j = begin; j < end; ++j) out.at(i, j - begin) = ta.at(i, j);
  }
  Node n;
  n.op = Op::kSliceCols;
  n.inputs = {a};
  n.iaux = {begin, end};
  n.needs_grad = any_needs_grad({a});
  n.value = std::move(out);
  return push(std::move(n));
}

int Tape::layer_norm_rows(int a, int gain, int bias, double eps) {
  const Tensor& x = val(a);
  const Tensor& g = val(gain);
  const Tensor& b = val(bias);
  require(x.rank() == 2 && g.rank() == 1 && b.rank() == 1 && g.dim(0) == x.dim(1) &&
              b.dim(0) == x.dim(1),
          "layer_norm_rows: ([L,d], [d], [d]) required");
  const int rows_n = x.dim(0);
  const int d = x.dim(1);
  Tensor out = Tensor::zeros(x.shape());
  Tensor saved = Tensor::zeros({rows_n, 2});
  for (int i = 0; i < rows_n; ++i) {
    double mu = 0;
    for (int j = 0; j < d; ++j) mu += x.at(i, j);
    mu /= d;
    double var = 0;
    for (int j = 0; j < d; ++j) {
      const double dx = x.at(i, j) - mu;
      var += dx * dx;
    }
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + eps);
    saved.at(i, 0) = mu;
    saved.at(i, 1) = rstd;
    for (int j = 0; j < d; ++j) {
      out.at(i, j) = g.at(j) * (x.at(i, j) - mu) * rstd + b.at(j);
    }
  }
  Node n;
  n.op = Op::kLayerNormRows;
  n.inputs = {a, gain, bias};
  n.daux = eps;
  n.needs_grad = any_needs_grad({a, gain, bias});
  n.value = std::move(out);
  n.saved = std::move(saved);
  return push(std::move(n));
}

int Tape::reshape(int a, std::vector<int> new_shape) {
  Tensor out = Tensor::from(std::move(new_shape), val(a).raw());
  require(out.size() == val(a).size(), "reshape: element count mismatch");
  return unary(Op::kReshape, a, std::move(out));
}

int Tape::dot(int a, int b) {
  const Tensor& ta = val(a);
  const Tensor& tb = val(b);
  require(ta.rank() == 1 && tb.rank() == 1 && ta.dim(0) == tb.dim(0),
          "dot: rank-1 same-length inputs required");
  double s = 0;
  for (int i = 0; i < ta.size(); ++i) s += ta.at(i) * tb.at(i);
  Node n;
  n.op = Op::kDot;
  n.inputs = {a, b};
  n.needs_grad = any_needs_grad({a, b});
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.size() == 0 && n.value.size() > 0) n.grad = Tensor::zeros(n.value.shape());
  return n.grad;
}

void Tape::backward(int root) {
  require(root >= 0 && root < static_cast<int>(nodes_.size()), "backward: bad root");
  require(val(root).size() == 1, "backward: root must be scalar");
  require(grad_enabled_, "backward: tape built with gradients disabled");
  require(!backward_done_, "backward: already run on this tape");
  backward_done_ = true;
  grad_buf(root).at(0) = 1.0;
  for (int id = root; id >= 0; --id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.op != Op::kInput) backward_node(id);
  }
}

void Tape::backward_node(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  const Tensor& go = n.grad;
  auto in_needs = [&](int slot) {
    return nodes_[static_cast<size_t>(n.inputs[static_cast<size_t>(slot)])].needs_grad;
  };
  auto gin = [&](int slot) -> Tensor& { return grad_buf(n.inputs[static_cast<size_t>(slot)]); };
  auto vin = [&](int slot) -> const Tensor& {
    return nodes_[static_cast<size_t>(n.inputs[static_cast<size_t>(slot)])].value;
  };

  switch (n.op) {
    case Op::kInput:
      break;
    case Op::kAdd: {
      for (int s = 0; s < 2; ++s) {
        if (!in_needs(s)) continue;
        Tensor& g = gin(s);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i);
      }
      break;
    }
    case Op::kSub: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i);
      }
      if (in_needs(1)) {
        Tensor& g = gin(1);
        for (int i = 0; i < go.size(); ++i) g.at(i) -= go.at(i);
      }
      break;
    }
    case Op::kMul: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const Tensor& b = vin(1);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i) * b.at(i);
      }
      if (in_needs(1)) {
        Tensor& g = gin(1);
        const Tensor& a = vin(0);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i) * a.at(i);
      }
      break;
    }
    case Op::kScale: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i) * n.daux;
      }
      break;
    }
    case Op::kMatmul: {
      const bool ta = n.iaux[0] != 0;
      const bool tb = n.iaux[1] != 0;
      const Tensor& A = vin(0);
      const Tensor& B = vin(1);
      const int m = n.value.dim(0);
      const int nn = n.value.dim(1);
      const int k = ta ? A.dim(0) : A.dim(1);
      if (in_needs(0)) {
        Tensor& gA = gin(0);
        if (!ta) {
          // dA[m,k] += go[m,nn] * op(B)^T
          matmul_raw(gA.data(), go.data(), false, B.data(), !tb, m, k, nn, true);
        } else {
          // dA_raw[k,m] += op(B) * go^T
          matmul_raw(gA.data(), B.data(), tb, go.data(), true, k, m, nn, true);
        }
      }
      if (in_needs(1)) {
        Tensor& gB = gin(1);
        if (!tb) {
          // dB[k,nn] += op(A)^T * go
          matmul_raw(gB.data(), A.data(), !ta, go.data(), false, k, nn, m, true);
        } else {
          // dB_raw[nn,k] += go^T * op(A)
          matmul_raw(gB.data(), go.data(), true, A.data(), ta, nn, k, m, true);
        }
      }
      break;
    }
    case Op::kAddRow: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i);
      }
      if (in_needs(1)) {
        Tensor& g = gin(1);
        const int r = go.dim(0), c = go.dim(1);
        for (int i = 0; i < r; ++i) {
          for (int j = 0; j < c; ++j) g.at(j) += go.at(i, j);
        }
      }
      break;
    }
    case Op::kRows: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const int d = go.dim(1);
        for (size_t r = 0; r < n.iaux.size(); ++r) {
          const int src = n.iaux[r];
          for (int j = 0; j < d; ++j) g.at(src, j) += go.at(static_cast<int>(r), j);
        }
      }
      break;
    }
    case Op::kGather: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (size_t r = 0; r < n.iaux.size(); ++r) g.at(n.iaux[r]) += go.at(static_cast<int>(r));
      }
      break;
    }
    case Op::kPickCols: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (size_t i = 0; i < n.iaux.size(); ++i) {
          g.at(static_cast<int>(i), n.iaux[i]) += go.at(static_cast<int>(i));
        }
      }
      break;
    }
    case Op::kRelu: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const Tensor& x = vin(0);
        for (int i = 0; i < go.size(); ++i) {
          if (x.at(i) > 0) g.at(i) += go.at(i);
        }
      }
      break;
    }
    case Op::kTanh: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (int i = 0; i < go.size(); ++i) {
          g.at(i) += go.at(i) * (1.0 - n.value.at(i) * n.value.at(i));
        }
      }
      break;
    }
    case Op::kSigmoid: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (int i = 0; i < go.size(); ++i) {
          g.at(i) += go.at(i) * n.value.at(i) * (1.0 - n.value.at(i));
        }
      }
      break;
    }
    case Op::kSoftplus: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const Tensor& x = vin(0);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i) * stable_sigmoid(x.at(i));
      }
      break;
    }
    case Op::kLog: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const Tensor& x = vin(0);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i) / x.at(i);
      }
      break;
    }
    case Op::kExp: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i) * n.value.at(i);
      }
      break;
    }
    case Op::kSum: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const double s = go.at(0);
        for (int i = 0; i < g.size(); ++i) g.at(i) += s;
      }
      break;
    }
    case Op::kMean: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const double s = go.at(0) / g.size();
        for (int i = 0; i < g.size(); ++i) g.at(i) += s;
      }
      break;
    }
    case Op::kSumCols: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const int r = g.dim(0), c = g.dim(1);
        for (int i = 0; i < r; ++i) {
          for (int j = 0; j < c; ++j) g.at(i, j) += go.at(i);
        }
      }
      break;
    }
    case Op::kWeightedPoolRows: {
      const Tensor& a = vin(0);
      const Tensor& w = vin(1);
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (int i = 0; i < a.dim(0); ++i) {
          const double wi = w.at(i);
          if (wi == 0.0) continue;
          for (int j = 0; j < a.dim(1); ++j) g.at(i, j) += wi * go.at(j);
        }
      }
      if (in_needs(1)) {
        Tensor& g = gin(1);
        for (int i = 0; i < a.dim(0); ++i) {
          double s = 0;
          for (int j = 0; j < a.dim(1); ++j) s += a.at(i, j) * go.at(j);
          g.at(i) += s;
        }
      }
      break;
    }
    case Op::kSoftmaxRows: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const int c = n.value.cols();
        const int r = n.value.size() / c;
        for (int i = 0; i < r; ++i) {
          const double* p = n.value.data() + static_cast<size_t>(i) * c;
          const double* dy = go.data() + static_cast<size_t>(i) * c;
          double dp = 0;
          for (int j = 0; j < c; ++j) dp += p[j] * dy[j];
          double* gx = g.data() + static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) gx[j] += p[j] * (dy[j] - dp);
        }
      }
      break;
    }
    case Op::kLogSoftmaxRows: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const int c = n.value.cols();
        const int r = n.value.size() / c;
        for (int i = 0; i < r; ++i) {
          const double* lp = n.value.data() + static_cast<size_t>(i) * c;
          const double* dy = go.data() + static_cast<size_t>(i) * c;
          double s = 0;
          for (int j = 0; j < c; ++j) s += dy[j];
          double* gx = g.data() + static_cast<size_t>(i) * c;
          for (int j = 0; j < c; ++j) gx[j] += dy[j] - std::exp(lp[j]) * s;
        }
      }
      break;
    }
    case Op::kConcatRows: {
      int r0 = 0;
      for (size_t s = 0; s < n.inputs.size(); ++s) {
        const Tensor& part = vin(static_cast<int>(s));
        if (in_needs(static_cast<int>(s))) {
          Tensor& g = gin(static_cast<int>(s));
          for (int i = 0; i < part.dim(0); ++i) {
            for (int j = 0; j < part.dim(1); ++j) g.at(i, j) += go.at(r0 + i, j);
          }
        }
        r0 += part.dim(0);
      }
      break;
    }
    case Op::kConcatCols: {
      int c0 = 0;
      for (size_t s = 0; s < n.inputs.size(); ++s) {
        const Tensor& part = vin(static_cast<int>(s));
        if (in_needs(static_cast<int>(s))) {
          Tensor& g = gin(static_cast<int>(s));
          for (int i = 0; i < part.dim(0); ++i) {
            for (int j = 0; j < part.dim(1); ++j) g.at(i, j) += go.at(i, c0 + j);
          }
        }
        c0 += part.dim(1);
      }
      break;
    }
    case Op::kSliceCols: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const int begin = n.iaux[0];
        for (int i = 0; i < go.dim(0); ++i) {
          for (int j = 0; j < go.dim(1); ++j) g.at(i, begin + j) += go.at(i, j);
        }
      }
      break;
    }
    case Op::kLayerNormRows: {
      const Tensor& x = vin(0);
      const Tensor& gainv = vin(1);
      const int r = x.dim(0), d = x.dim(1);
      for (int i = 0; i < r; ++i) {
        const double mu = n.saved.at(i, 0);
        const double rstd = n.saved.at(i, 1);
        // dxhat, plus gain/bias grads
        double mean_dxhat = 0, mean_dxhat_xhat = 0;
        std::vector<double> dxhat(static_cast<size_t>(d));
        std::vector<double> xhat(static_cast<size_t>(d));
        for (int j = 0; j < d; ++j) {
          xhat[static_cast<size_t>(j)] = (x.at(i, j) - mu) * rstd;
          dxhat[static_cast<size_t>(j)] = go.at(i, j) * gainv.at(j);
          mean_dxhat += dxhat[static_cast<size_t>(j)];
          mean_dxhat_xhat += dxhat[static_cast<size_t>(j)] * xhat[static_cast<size_t>(j)];
        }
        mean_dxhat /= d;
        mean_dxhat_xhat /= d;
        if (in_needs(0)) {
          Tensor& g = gin(0);
          for (int j = 0; j < d; ++j) {
            g.at(i, j) += rstd * (dxhat[static_cast<size_t>(j)] - mean_dxhat -
                                  xhat[static_cast<size_t>(j)] * mean_dxhat_xhat);
          }
        }
        if (in_needs(1)) {
          Tensor& g = gin(1);
          for (int j = 0; j < d; ++j) g.at(j) += go.at(i, j) * xhat[static_cast<size_t>(j)];
        }
        if (in_needs(2)) {
          Tensor& g = gin(2);
          for (int j = 0; j < d; ++j) g.at(j) += go.at(i, j);
        }
      }
      break;
    }
    case Op::kReshape: {
      if (in_needs(0)) {
        Tensor& g = gin(0);
        for (int i = 0; i < go.size(); ++i) g.at(i) += go.at(i);
      }
      break;
    }
    case Op::kDot: {
      const double s = go.at(0);
      if (in_needs(0)) {
        Tensor& g = gin(0);
        const Tensor& b = vin(1);
        for (int i = 0; i < g.size(); ++i) g.at(i) += s * b.at(i);
      }
      if (in_needs(1)) {
        Tensor& g = gin(1);
        const Tensor& a = vin(0);
        for (int i = 0; i < g.size(); ++i) g.at(i) += s * a.at(i);
      }
      break;
    }
  }
}

Tensor Tape::grad_or_zero(int id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.size() == 0) return Tensor::zeros(n.value.shape());
  return n.grad;
}

}  // namespace p4rec::num
