#pragma once

// Small reverse-mode autodiff engine in double precision. Graphs are built
// eagerly per forward pass; backward() walks the tape in reverse topological
// order. Inner loops route through umbra::kernels.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace umbra {

using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode {
  Shape shape;
  std::shared_ptr<std::vector<double>> values;
  std::shared_ptr<std::vector<double>> grad;  // lazily allocated
  bool requires_grad = false;
  bool leaf = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;
  const char* op = "";

  std::vector<double>& ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : n_(std::move(n)) {}

  static Tensor zeros(const Shape& s);
  static Tensor full(const Shape& s, double v);
  static Tensor from_data(const Shape& s, std::vector<double> data);
  // Leaf with requires_grad set; used for parameters and gradient-checked inputs.
  static Tensor leaf(const Shape& s, std::vector<double> data);

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  int dim(int i) const { return n_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(n_->values->size()); }
  const std::vector<double>& values() const { return *n_->values; }
  std::vector<double>& values() { return *n_->values; }
  bool requires_grad() const { return n_->requires_grad; }
  bool has_grad() const { return n_->grad != nullptr; }
  std::vector<double>& grad() { return n_->ensure_grad(); }
  const std::vector<double>& grad() const { return *n_->grad; }
  void zero_grad();
  double item() const;

  std::shared_ptr<TensorNode> node() const { return n_; }

 private:
  std::shared_ptr<TensorNode> n_;
};

// Accumulates gradients into every reachable node with requires_grad.
// root must be a scalar (numel == 1).
void backward(const Tensor& root);

// ---- elementwise / algebra ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// Broadcast multiply by a [1]-shaped (typically learnable) scalar.
Tensor scale_by(const Tensor& a, const Tensor& s);
Tensor add_scalar(const Tensor& a, double s);
Tensor sigmoid(const Tensor& a);
Tensor gelu(const Tensor& a);

// ---- matrix ops ([m,k] row-major) ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);
Tensor add_rowvec(const Tensor& x, const Tensor& b);  // [m,n] + [n]
Tensor softmax_rows(const Tensor& x);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, int c0, int c1);
Tensor reshape(const Tensor& a, const Shape& s);  // shares storage
// LayerNorm over the last dimension of an [m,n] tensor.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = 1e-5);

// ---- reductions (outputs are [1]) ----
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

// ---- losses (fused, numerically stable) ----
Tensor bce_with_logits_mean(const Tensor& logits, const Tensor& target);
Tensor mse_mean(const Tensor& a, const Tensor& b);

// ---- spatiotemporal grid ops on [T,h,w,C] ----
Tensor avgpool2x2(const Tensor& x);
Tensor upsample_bilinear(const Tensor& x, int factor);  // align_corners=false
Tensor spatial_mean(const Tensor& x);                   // -> [T,C]
Tensor im2col3x3(const Tensor& x);                      // -> [T*h*w, 9*C], zero pad
Tensor space_to_patches(const Tensor& x, int p);        // -> [T*(h/p)*(w/p), p*p*C]

}  // namespace umbra
