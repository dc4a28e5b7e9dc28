#include "tcda/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>

#include "tcda/kernels.hpp"

namespace tcda {

int64_t shape_size(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

bool& grad_enabled() {
  static bool on = true;
  return on;
}

namespace {

void check_finite(const std::vector<double>& v) {
  if (!checked_mode()) return;
  for (double x : v)
    if (!std::isfinite(x)) throw ShapeError("non-finite value at tensor creation");
}

Tensor make_node(Shape shape, std::vector<double> value,
                 const std::vector<Tensor>& parents,
                 std::function<void(TensorNode&)> bw) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool req = false;
  if (grad_enabled())
    for (const auto& p : parents)
      if (p.node()->requires_grad) req = true;
  n->requires_grad = req;
  if (req) {
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(bw);
  }
  return Tensor::wrap(std::move(n));
}

void accum(TensorNode& dst, const std::vector<double>& src) {
  dst.ensure_grad();
  for (size_t i = 0; i < src.size(); ++i) dst.grad[i] += src[i];
}

void require_2d(const Tensor& t, const char* who) {
  if (t.ndim() != 2) throw ShapeError(std::string(who) + ": expected 2-d tensor");
}

}  // namespace

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->shape = s;
  n->value.assign(size_t(shape_size(s)), 0.0);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::full(const Shape& s, double v) {
  auto t = zeros(s);
  for (auto& x : t.mutable_data()) x = v;
  return t;
}

Tensor Tensor::scalar(double v) { return from_data({1, 1}, {v}); }

Tensor Tensor::from_data(const Shape& s, std::vector<double> v,
                         bool requires_grad) {
  if (int64_t(v.size()) != shape_size(s))
    throw ShapeError("from_data: payload size does not match shape " + shape_str(s));
  check_finite(v);
  auto n = std::make_shared<TensorNode>();
  n->shape = s;
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item: tensor is not scalar");
  return node_->value[0];
}

void Tensor::backward() {
  if (numel() != 1) throw ShapeError("backward: output must be scalar");
  if (!node_->requires_grad) return;

  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  struct Frame {
    TensorNode* n;
    size_t next;
  };
  std::vector<Frame> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      TensorNode* p = f.n->parents[f.next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ------------------------------------------------------------ elementwise --

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("add: shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  std::vector<double> v(a.data());
  for (size_t i = 0; i < v.size(); ++i) v[i] += b.data()[i];
  return make_node(a.shape(), std::move(v), {a, b}, [](TensorNode& self) {
    for (int k = 0; k < 2; ++k)
      if (self.parents[k]->requires_grad) accum(*self.parents[k], self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("sub: shape mismatch");
  std::vector<double> v(a.data());
  for (size_t i = 0; i < v.size(); ++i) v[i] -= b.data()[i];
  return make_node(a.shape(), std::move(v), {a, b}, [](TensorNode& self) {
    if (self.parents[0]->requires_grad) accum(*self.parents[0], self.grad);
    if (self.parents[1]->requires_grad) {
      auto& p = *self.parents[1];
      p.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("mul: shape mismatch");
  std::vector<double> v(a.data());
  for (size_t i = 0; i < v.size(); ++i) v[i] *= b.data()[i];
  return make_node(a.shape(), std::move(v), {a, b}, [](TensorNode& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) {
      a.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        a.grad[i] += self.grad[i] * b.value[i];
    }
    if (b.requires_grad) {
      b.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        b.grad[i] += self.grad[i] * a.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> v(a.data());
  for (auto& x : v) x *= s;
  return make_node(a.shape(), std::move(v), {a}, [s](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += s * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> v(a.data());
  for (auto& x : v) x += s;
  return make_node(a.shape(), std::move(v), {a}, [](TensorNode& self) {
    if (self.parents[0]->requires_grad) accum(*self.parents[0], self.grad);
  });
}

// ----------------------------------------------------------------- matmul --

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw ShapeError("matmul: inner extents differ " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  std::vector<double> v(size_t(m) * n);
  kernels::mm_nn(a.data().data(), b.data().data(), v.data(), m, k, n);
  return make_node({m, n}, std::move(v), {a, b}, [m, k, n](TensorNode& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) {
      std::vector<double> tmp(size_t(m) * k);
      kernels::mm_nt(self.grad.data(), b.value.data(), tmp.data(), m, n, k);
      accum(a, tmp);
    }
    if (b.requires_grad) {
      std::vector<double> tmp(size_t(k) * n);
      kernels::mm_tn(a.value.data(), self.grad.data(), tmp.data(), k, m, n);
      accum(b, tmp);
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  const int m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k)
    throw ShapeError("matmul_nt: inner extents differ " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()) + "^T");
  std::vector<double> v(size_t(m) * n);
  kernels::mm_nt(a.data().data(), b.data().data(), v.data(), m, k, n);
  return make_node({m, n}, std::move(v), {a, b}, [m, k, n](TensorNode& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) {
      std::vector<double> tmp(size_t(m) * k);
      kernels::mm_nn(self.grad.data(), b.value.data(), tmp.data(), m, n, k);
      accum(a, tmp);
    }
    if (b.requires_grad) {
      std::vector<double> tmp(size_t(n) * k);
      kernels::mm_tn(self.grad.data(), a.value.data(), tmp.data(), n, m, k);
      accum(b, tmp);
    }
  });
}

// ----------------------------------------------------------- shape plumbing --

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_2d(a, "concat_cols");
  require_2d(b, "concat_cols");
  if (a.rows() != b.rows()) throw ShapeError("concat_cols: row mismatch");
  const int m = a.rows(), p = a.cols(), q = b.cols();
  std::vector<double> v(size_t(m) * (p + q));
  for (int i = 0; i < m; ++i) {
    std::memcpy(&v[size_t(i) * (p + q)], &a.data()[size_t(i) * p], sizeof(double) * p);
    std::memcpy(&v[size_t(i) * (p + q) + p], &b.data()[size_t(i) * q],
                sizeof(double) * q);
  }
  return make_node({m, p + q}, std::move(v), {a, b}, [m, p, q](TensorNode& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) {
      a.ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < p; ++j)
          a.grad[size_t(i) * p + j] += self.grad[size_t(i) * (p + q) + j];
    }
    if (b.requires_grad) {
      b.ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < q; ++j)
          b.grad[size_t(i) * q + j] += self.grad[size_t(i) * (p + q) + p + j];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  const int d = parts[0].cols();
  int m = 0;
  for (const auto& t : parts) {
    require_2d(t, "concat_rows");
    if (t.cols() != d) throw ShapeError("concat_rows: column mismatch");
    m += t.rows();
  }
  std::vector<double> v;
  v.reserve(size_t(m) * d);
  for (const auto& t : parts) v.insert(v.end(), t.data().begin(), t.data().end());
  return make_node({m, d}, std::move(v), parts, [](TensorNode& self) {
    size_t off = 0;
    for (auto& pp : self.parents) {
      const size_t n = pp->value.size();
      if (pp->requires_grad) {
        pp->ensure_grad();
        for (size_t i = 0; i < n; ++i) pp->grad[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

Tensor concat_scalars(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw ShapeError("concat_scalars: empty input");
  std::vector<double> v;
  v.reserve(scalars.size());
  for (const auto& t : scalars) v.push_back(t.item());
  return make_node({1, int(scalars.size())}, std::move(v), scalars,
                   [](TensorNode& self) {
                     for (size_t i = 0; i < self.parents.size(); ++i)
                       if (self.parents[i]->requires_grad) {
                         self.parents[i]->ensure_grad();
                         self.parents[i]->grad[0] += self.grad[i];
                       }
                   });
}

Tensor slice_rows(const Tensor& x, int row0, int count) {
  require_2d(x, "slice_rows");
  if (row0 < 0 || count < 0 || row0 + count > x.rows())
    throw ShapeError("slice_rows: range out of bounds");
  const int d = x.cols();
  std::vector<double> v(x.data().begin() + size_t(row0) * d,
                        x.data().begin() + size_t(row0 + count) * d);
  return make_node({count, d}, std::move(v), {x}, [row0, d](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      p.grad[size_t(row0) * d + i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
  require_2d(x, "gather_rows");
  const int d = x.cols();
  std::vector<double> v(idx.size() * size_t(d));
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= x.rows()) throw ShapeError("gather_rows: bad index");
    std::memcpy(&v[i * d], &x.data()[size_t(idx[i]) * d], sizeof(double) * d);
  }
  return make_node({int(idx.size()), d}, std::move(v), {x},
                   [idx, d](TensorNode& self) {
                     auto& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     p.ensure_grad();
                     for (size_t i = 0; i < idx.size(); ++i)
                       for (int j = 0; j < d; ++j)
                         p.grad[size_t(idx[i]) * d + j] += self.grad[i * d + j];
                   });
}

Tensor mean_rows(const Tensor& x, const std::vector<int>& idx) {
  require_2d(x, "mean_rows");
  if (idx.empty()) throw ShapeError("mean_rows: empty selection");
  const int d = x.cols();
  std::vector<double> v(size_t(d), 0.0);
  for (int r : idx) {
    if (r < 0 || r >= x.rows()) throw ShapeError("mean_rows: bad index");
    for (int j = 0; j < d; ++j) v[j] += x.data()[size_t(r) * d + j];
  }
  const double inv = 1.0 / double(idx.size());
  for (auto& e : v) e *= inv;
  return make_node({1, d}, std::move(v), {x}, [idx, d, inv](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int r : idx)
      for (int j = 0; j < d; ++j) p.grad[size_t(r) * d + j] += inv * self.grad[j];
  });
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_node({1, 1}, {s}, {x}, [](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (auto& g : p.grad) g += self.grad[0];
  });
}

// ------------------------------------------------------------- activations --

Tensor sigmoid(const Tensor& x) {
  std::vector<double> v(x.data());
  for (auto& e : v) e = 1.0 / (1.0 + std::exp(-e));
  return make_node(x.shape(), std::move(v), {x}, [](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.value[i];
      p.grad[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor tanh_t(const Tensor& x) {
  std::vector<double> v(x.data());
  for (auto& e : v) e = std::tanh(e);
  return make_node(x.shape(), std::move(v), {x}, [](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double t = self.value[i];
      p.grad[i] += self.grad[i] * (1.0 - t * t);
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> v(x.data());
  for (auto& e : v) e = e > 0.0 ? e : 0.0;
  return make_node(x.shape(), std::move(v), {x}, [](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
  });
}

// ------------------------------------------------------- softmax / layernorm --

Tensor softmax_last(const Tensor& x) {
  if (x.ndim() < 1) throw ShapeError("softmax_last: empty shape");
  const int cols = x.dim(x.ndim() - 1);
  if (cols < 1) throw ShapeError("softmax_last: empty axis");
  const int rows = int(x.numel() / cols);
  std::vector<double> v(x.data().size());
  kernels::softmax_rows(x.data().data(), v.data(), rows, cols);
  return make_node(x.shape(), std::move(v), {x}, [rows, cols](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int i = 0; i < rows; ++i) {
      const double* pr = &self.value[size_t(i) * cols];
      const double* gr = &self.grad[size_t(i) * cols];
      double dot = 0.0;
      for (int j = 0; j < cols; ++j) dot += pr[j] * gr[j];
      for (int j = 0; j < cols; ++j)
        p.grad[size_t(i) * cols + j] += pr[j] * (gr[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  require_2d(x, "layer_norm");
  const int rows = x.rows(), d = x.cols();
  if (gain.numel() != d || bias.numel() != d)
    throw ShapeError("layer_norm: affine width mismatch");
  std::vector<double> mean(rows), var(rows);
  kernels::row_stats(x.data().data(), rows, d, mean.data(), var.data());
  std::vector<double> v(size_t(rows) * d);
  for (int i = 0; i < rows; ++i) {
    const double inv = 1.0 / std::sqrt(var[i] + eps);
    for (int j = 0; j < d; ++j) {
      const double xh = (x.data()[size_t(i) * d + j] - mean[i]) * inv;
      v[size_t(i) * d + j] = gain.data()[j] * xh + bias.data()[j];
    }
  }
  return make_node(
      x.shape(), std::move(v), {x, gain, bias},
      [rows, d, eps, mean, var](TensorNode& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        for (int i = 0; i < rows; ++i) {
          const double inv = 1.0 / std::sqrt(var[i] + eps);
          const double* xi = &px.value[size_t(i) * d];
          const double* gi = &self.grad[size_t(i) * d];
          if (pg.requires_grad || pb.requires_grad) {
            pg.ensure_grad();
            pb.ensure_grad();
            for (int j = 0; j < d; ++j) {
              const double xh = (xi[j] - mean[i]) * inv;
              if (pg.requires_grad) pg.grad[j] += gi[j] * xh;
              if (pb.requires_grad) pb.grad[j] += gi[j];
            }
          }
          if (px.requires_grad) {
            px.ensure_grad();
            // dxh = g * gain; dx via standard layer norm backward
            double sum_dxh = 0.0, sum_dxh_xh = 0.0;
            for (int j = 0; j < d; ++j) {
              const double xh = (xi[j] - mean[i]) * inv;
              const double dxh = gi[j] * pg.value[j];
              sum_dxh += dxh;
              sum_dxh_xh += dxh * xh;
            }
            for (int j = 0; j < d; ++j) {
              const double xh = (xi[j] - mean[i]) * inv;
              const double dxh = gi[j] * pg.value[j];
              px.grad[size_t(i) * d + j] +=
                  inv * (dxh - sum_dxh / d - xh * sum_dxh_xh / d);
            }
          }
        }
      });
}

// ------------------------------------------------------------------ rotary --

Tensor rotary(const Tensor& x, const std::vector<double>& pos, double theta) {
  require_2d(x, "rotary");
  if (x.cols() % 2 != 0) throw ShapeError("rotary: width must be even");
  if (int(pos.size()) != x.rows()) throw ShapeError("rotary: one position per row");
  std::vector<double> v(x.data().size());
  kernels::rotary_rows(x.data().data(), v.data(), x.rows(), x.cols(), pos.data(),
                       theta, +1);
  const int rows = x.rows(), cols = x.cols();
  return make_node(x.shape(), std::move(v), {x},
                   [pos, theta, rows, cols](TensorNode& self) {
                     auto& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     std::vector<double> tmp(self.grad.size());
                     kernels::rotary_rows(self.grad.data(), tmp.data(), rows, cols,
                                          pos.data(), theta, -1);
                     accum(p, tmp);
                   });
}

// ------------------------------------------------------------------ select --

Tensor select_mask(const std::vector<uint8_t>& mask, const Tensor& a,
                   const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("select_mask: shape mismatch");
  if (int64_t(mask.size()) != a.numel())
    throw ShapeError("select_mask: mask size mismatch");
  std::vector<double> v(a.data().size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = mask[i] ? a.data()[i] : b.data()[i];
  return make_node(a.shape(), std::move(v), {a, b}, [mask](TensorNode& self) {
    auto& a = *self.parents[0];
    auto& b = *self.parents[1];
    if (a.requires_grad) {
      a.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        if (mask[i]) a.grad[i] += self.grad[i];
    }
    if (b.requires_grad) {
      b.ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i)
        if (!mask[i]) b.grad[i] += self.grad[i];
    }
  });
}

// -------------------------------------------------------------------- loss --

Tensor grid_cross_entropy(const std::vector<Tensor>& class_mats,
                          const std::vector<int>& gold,
                          const std::vector<uint8_t>& cell_mask,
                          const std::vector<double>& class_weights) {
  if (class_mats.empty()) throw ShapeError("grid_cross_entropy: no classes");
  const int C = int(class_mats.size());
  const int64_t cells = class_mats[0].numel();
  for (const auto& m : class_mats)
    if (m.numel() != cells) throw ShapeError("grid_cross_entropy: grid mismatch");
  if (int64_t(gold.size()) != cells || int64_t(cell_mask.size()) != cells)
    throw ShapeError("grid_cross_entropy: label size mismatch");
  if (int(class_weights.size()) != C)
    throw ShapeError("grid_cross_entropy: weight per class required");
  for (int64_t i = 0; i < cells; ++i)
    if (cell_mask[i] && (gold[i] < 0 || gold[i] >= C))
      throw ShapeError("grid_cross_entropy: gold class out of range");

  auto probs = std::make_shared<std::vector<double>>(size_t(cells) * C);
  double loss = 0.0;
  std::vector<double> logit(C);
  for (int64_t i = 0; i < cells; ++i) {
    if (!cell_mask[i]) continue;
    double mx = -1e300;
    for (int c = 0; c < C; ++c) {
      logit[c] = class_mats[c].data()[i];
      if (logit[c] > mx) mx = logit[c];
    }
    double sum = 0.0;
    for (int c = 0; c < C; ++c) {
      const double e = std::exp(logit[c] - mx);
      (*probs)[size_t(i) * C + c] = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (int c = 0; c < C; ++c) (*probs)[size_t(i) * C + c] *= inv;
    const double lse = mx + std::log(sum);
    loss += class_weights[gold[i]] * (lse - logit[gold[i]]);
  }

  return make_node({1, 1}, {loss}, class_mats,
                   [gold, cell_mask, class_weights, probs, C,
                    cells](TensorNode& self) {
                     const double g = self.grad[0];
                     for (int c = 0; c < C; ++c) {
                       auto& p = *self.parents[c];
                       if (!p.requires_grad) continue;
                       p.ensure_grad();
                       for (int64_t i = 0; i < cells; ++i) {
                         if (!cell_mask[i]) continue;
                         const double w = class_weights[gold[i]];
                         const double pc = (*probs)[size_t(i) * C + c];
                         p.grad[i] += g * w * (pc - (gold[i] == c ? 1.0 : 0.0));
                       }
                     }
                   });
}

// ----------------------------------------------------------------- dropout --

Tensor dropout(const Tensor& x, double p, Rng& rng, bool train) {
  if (!train || p <= 0.0) return x;
  if (p >= 1.0) throw ShapeError("dropout: rate must be < 1");
  const double keep = 1.0 - p;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto mask = std::make_shared<std::vector<double>>(x.data().size());
  std::vector<double> v(x.data().size());
  for (size_t i = 0; i < v.size(); ++i) {
    const double m = u(rng) < keep ? 1.0 / keep : 0.0;
    (*mask)[i] = m;
    v[i] = x.data()[i] * m;
  }
  return make_node(x.shape(), std::move(v), {x}, [mask](TensorNode& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      p.grad[i] += self.grad[i] * (*mask)[i];
  });
}

}  // namespace tcda
