#pragma once

#include <cstdint>
#include <vector>

#include "p4rec/num/tensor.hpp"

namespace p4rec::num {

enum class Op : uint8_t {
  kInput,
  kAdd,
  kSub,
  kMul,
  kScale,
  kMatmul,
  kAddRow,
  kRows,
  kGather,
  kPickCols,
  kRelu,
  kTanh,
  kSigmoid,
  kSoftplus,
  kLog,
  kExp,
  kSum,
  kMean,
  kSumCols,
  kWeightedPoolRows,
  kSoftmaxRows,
  kLogSoftmaxRows,
  kConcatRows,
  kConcatCols,
  kSliceCols,
  kLayerNormRows,
  kReshape,
  kDot,
};

// Reverse-mode tape. Nodes are appended in topological order by
// construction; backward() makes a single reverse sweep, visiting each node
// exactly once. A tape is confined to one thread from construction through
// backward.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {
    nodes_.reserve(256);
  }

  // Leaf that participates in differentiation (a parameter or input we
  // want gradients for).
  int leaf(Tensor v);
  // Leaf treated as a constant; never receives a gradient.
  int constant(Tensor v);

  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int scale(int a, double c);
  // op(A) * op(B) for 2-D tensors; trans flags transpose the operand.
  int matmul(int a, int b, bool trans_a = false, bool trans_b = false);
  // [m,n] plus a row vector [n] broadcast over rows.
  int add_row(int a, int row);
  // Gather rows of a 2-D tensor; duplicate indices accumulate in backward.
  int rows(int a, std::vector<int> idx);
  // Gather elements of a 1-D tensor.
  int gather(int a, std::vector<int> idx);
  // out[i] = a[i, idx[i]] for a 2-D tensor.
  int pick_cols(int a, std::vector<int> idx);
  int relu(int a);
  int tanh_(int a);
  int sigmoid(int a);
  int softplus_(int a);
  int log_(int a);
  int exp_(int a);
  int sum(int a);
  int mean(int a);
  // [L,d] -> [L]: per-row sum over the last axis.
  int sum_cols(int a);
  // (a [L,d], w [L]) -> [d]: sum_i w_i * a[i,:].
  int weighted_pool_rows(int a, int w);
  int softmax_rows(int a);
  int log_softmax_rows(int a);
  int concat_rows(const std::vector<int>& parts);
  int concat_cols(const std::vector<int>& parts);
  int slice_cols(int a, int begin, int end);
  // Per-row layer norm with learnable gain/bias (both [d]).
  int layer_norm_rows(int a, int gain, int bias, double eps = 1e-5);
  int reshape(int a, std::vector<int> new_shape);
  // (a [n], b [n]) -> scalar.
  int dot(int a, int b);

  const Tensor& val(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool grad_enabled() const { return grad_enabled_; }
  size_t size() const { return nodes_.size(); }

  // root must be scalar. Fills gradients for every node that needs one.
  void backward(int root);

  // Gradient of a node after backward(); zeros if the node was never
  // reached (unused parameter).
  Tensor grad_or_zero(int id) const;

 private:
  struct Node {
    Op op = Op::kInput;
    bool needs_grad = false;
    std::vector<int32_t> inputs;
    std::vector<int32_t> iaux;
    double daux = 0.0;
    Tensor value;
    Tensor grad;   // lazily allocated during backward
    Tensor saved;  // op-specific saved values (e.g. layernorm stats)
  };

  int push(Node n);
  Tensor& grad_buf(int id);
  bool any_needs_grad(const std::vector<int>& ids) const;
  int unary(Op op, int a, Tensor value);
  void backward_node(int id);

  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

// out[M,N] (+)= op(X)[M,K] * op(Y)[K,N]; raw kernel shared by forward and
// backward matmul paths.
void matmul_raw(double* out, const double* x, bool tx, const double* y, bool ty, int m, int n,
                int k, bool accumulate);

}  // namespace p4rec::num
