// Dense 64-bit tensor with reverse-mode gradients. Only the operations the
// pipeline equations need; shapes are 1-3 dimensional, row-major.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "tcda/util.hpp"

namespace tcda {

using Shape = std::vector<int>;

int64_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Process-wide autodiff switch. Evaluation paths turn it off to skip taping.
bool& grad_enabled();
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev; }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& s, bool requires_grad = false);
  static Tensor full(const Shape& s, double v);
  static Tensor scalar(double v);
  static Tensor from_data(const Shape& s, std::vector<double> v,
                          bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int ndim() const { return int(node_->shape.size()); }
  int dim(int i) const { return node_->shape[size_t(i)]; }
  int rows() const { return node_->shape[0]; }
  int cols() const { return node_->shape[1]; }
  int64_t numel() const { return int64_t(node_->value.size()); }

  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& mutable_data() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }

  double item() const;
  double at(int i, int j) const { return node_->value[size_t(i) * cols() + j]; }
  double at(int i, int j, int k) const {
    return node_->value[(size_t(i) * dim(1) + j) * dim(2) + k];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool b) { node_->requires_grad = b; }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  // Reverse sweep from a scalar output.
  void backward();

  std::shared_ptr<TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<TensorNode> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Elementwise and linear algebra. All operations are out-of-place and
// register their gradient rule when taping is active.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k]x[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k]x[n,k]^T

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_scalars(const std::vector<Tensor>& scalars);  // -> [1,m]
Tensor slice_rows(const Tensor& x, int row0, int count);
Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);
Tensor mean_rows(const Tensor& x, const std::vector<int>& idx);  // -> [1,d]
Tensor sum_all(const Tensor& x);  // -> scalar

Tensor sigmoid(const Tensor& x);
Tensor tanh_t(const Tensor& x);
Tensor relu(const Tensor& x);

// Softmax over the last axis.
Tensor softmax_last(const Tensor& x);
// Layer norm over the last axis; gain/bias shaped [1,d].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps);

// Row-wise rotary rotation; pos has one entry per row, width must be even.
Tensor rotary(const Tensor& x, const std::vector<double>& pos, double theta);

// Elementwise mask select: out[i] = mask[i] ? a[i] : b[i].
Tensor select_mask(const std::vector<uint8_t>& mask, const Tensor& a,
                   const Tensor& b);

// Weighted cross entropy over a label grid. class_mats holds one [m,n] logit
// matrix per class; gold and cell_mask are row-major [m*n]; class_weights has
// one entry per class, applied by the gold class of each unmasked cell.
Tensor grid_cross_entropy(const std::vector<Tensor>& class_mats,
                          const std::vector<int>& gold,
                          const std::vector<uint8_t>& cell_mask,
                          const std::vector<double>& class_weights);

// Inverted dropout; identity when train is false or p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng, bool train);

}  // namespace tcda
