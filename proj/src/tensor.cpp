#include "umbra/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "umbra/kernels.hpp"

namespace umbra {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

// dst[i] += a[i] * b[i]
void madd(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<Tensor> parents, const char* op) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->values = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(shape_numel(n->shape)), 0.0);
  n->op = op;
  for (const auto& p : parents) {
    n->requires_grad = n->requires_grad || p.requires_grad();
    n->parents.push_back(p.node());
  }
  return n;
}

}  // namespace

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

std::vector<double>& TensorNode::ensure_grad() {
  if (!grad) grad = std::make_shared<std::vector<double>>(values->size(), 0.0);
  return *grad;
}

Tensor Tensor::zeros(const Shape& s) {
  return Tensor(make_node(s, {}, "zeros"));
}

Tensor Tensor::full(const Shape& s, double v) {
  Tensor t = zeros(s);
  std::fill(t.values().begin(), t.values().end(), v);
  return t;
}

Tensor Tensor::from_data(const Shape& s, std::vector<double> data) {
  check(static_cast<std::int64_t>(data.size()) == shape_numel(s),
        "from_data: size mismatch for shape " + shape_str(s));
  auto n = std::make_shared<TensorNode>();
  n->shape = s;
  n->values = std::make_shared<std::vector<double>>(std::move(data));
  n->op = "data";
  return Tensor(n);
}

Tensor Tensor::leaf(const Shape& s, std::vector<double> data) {
  Tensor t = from_data(s, std::move(data));
  t.node()->requires_grad = true;
  t.node()->leaf = true;
  return t;
}

void Tensor::zero_grad() {
  if (n_->grad) std::fill(n_->grad->begin(), n_->grad->end(), 0.0);
}

double Tensor::item() const {
  check(numel() == 1, "item(): tensor is not scalar");
  return (*n_->values)[0];
}

void backward(const Tensor& root) {
  check(root.numel() == 1, "backward(): root must be scalar");
  if (!root.requires_grad()) return;

  // Post-order DFS over requires_grad subgraph; reversed order processes each
  // node after all of its consumers.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  struct Frame {
    TensorNode* n;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root.node().get(), 0});
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      TensorNode* p = f.n->parents[f.next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn && n->grad) n->backward_fn(*n);
  }
}

// ---------------- elementwise ----------------

Tensor add(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
  auto n = make_node(a.shape(), {a, b}, "add");
  kernels::add(a.values().data(), b.values().data(), n->values->data(), n->values->size());
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      const auto& g = *self.grad;
      for (int k = 0; k < 2; ++k) {
        auto& p = *self.parents[static_cast<std::size_t>(k)];
        if (p.requires_grad) kernels::axpy(1.0, g.data(), p.ensure_grad().data(), g.size());
      }
    };
  }
  return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "sub: shape mismatch");
  auto n = make_node(a.shape(), {a, b}, "sub");
  kernels::sub(a.values().data(), b.values().data(), n->values->data(), n->values->size());
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      const auto& g = *self.grad;
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      if (pa.requires_grad) kernels::axpy(1.0, g.data(), pa.ensure_grad().data(), g.size());
      if (pb.requires_grad) kernels::axpy(-1.0, g.data(), pb.ensure_grad().data(), g.size());
    };
  }
  return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "mul: shape mismatch");
  auto n = make_node(a.shape(), {a, b}, "mul");
  kernels::mul(a.values().data(), b.values().data(), n->values->data(), n->values->size());
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      const auto& g = *self.grad;
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      if (pa.requires_grad) madd(pa.ensure_grad().data(), g.data(), pb.values->data(), g.size());
      if (pb.requires_grad) madd(pb.ensure_grad().data(), g.data(), pa.values->data(), g.size());
    };
  }
  return Tensor(n);
}

Tensor div(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "div: shape mismatch");
  auto n = make_node(a.shape(), {a, b}, "div");
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& out = *n->values;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      const auto& g = *self.grad;
      const auto& out = *self.values;
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      const auto& bv = *pb.values;
      if (pa.requires_grad) {
        auto& ga = pa.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / bv[i];
      }
      if (pb.requires_grad) {
        auto& gb = pb.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * out[i] / bv[i];
      }
    };
  }
  return Tensor(n);
}

Tensor scale(const Tensor& a, double s) {
  auto n = make_node(a.shape(), {a}, "scale");
  kernels::scale(a.values().data(), s, n->values->data(), n->values->size());
  if (n->requires_grad) {
    n->backward_fn = [s](TensorNode& self) {
      auto& p = *self.parents[0];
      kernels::axpy(s, self.grad->data(), p.ensure_grad().data(), self.grad->size());
    };
  }
  return Tensor(n);
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  check(s.numel() == 1, "scale_by: scalar tensor required");
  auto n = make_node(a.shape(), {a, s}, "scale_by");
  const double sv = s.values()[0];
  kernels::scale(a.values().data(), sv, n->values->data(), n->values->size());
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      const auto& g = *self.grad;
      auto& pa = *self.parents[0];
      auto& ps = *self.parents[1];
      const double sv = (*ps.values)[0];
      if (pa.requires_grad) kernels::axpy(sv, g.data(), pa.ensure_grad().data(), g.size());
      if (ps.requires_grad)
        ps.ensure_grad()[0] += kernels::dot(g.data(), pa.values->data(), g.size());
    };
  }
  return Tensor(n);
}

Tensor add_scalar(const Tensor& a, double s) {
  auto n = make_node(a.shape(), {a}, "add_scalar");
  const auto& av = a.values();
  auto& out = *n->values;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + s;
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      auto& p = *self.parents[0];
      kernels::axpy(1.0, self.grad->data(), p.ensure_grad().data(), self.grad->size());
    };
  }
  return Tensor(n);
}

Tensor sigmoid(const Tensor& a) {
  auto n = make_node(a.shape(), {a}, "sigmoid");
  const auto& av = a.values();
  auto& out = *n->values;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      const auto& g = *self.grad;
      const auto& y = *self.values;
      auto& gp = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] * y[i] * (1.0 - y[i]);
    };
  }
  return Tensor(n);
}

Tensor gelu(const Tensor& a) {
  auto n = make_node(a.shape(), {a}, "gelu");
  const auto& av = a.values();
  auto& out = *n->values;
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x * inv_sqrt2));
  }
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      constexpr double is2 = 0.7071067811865475244;
      constexpr double inv_sqrt_2pi = 0.3989422804014326779;
      const auto& g = *self.grad;
      const auto& x = *self.parents[0]->values;
      auto& gp = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double cdf = 0.5 * (1.0 + std::erf(x[i] * is2));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
        gp[i] += g[i] * (cdf + x[i] * pdf);
      }
    };
  }
  return Tensor(n);
}

// ---------------- matrix ----------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.shape().size() == 2 && b.shape().size() == 2, "matmul: rank-2 tensors required");
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n_cols = b.dim(1);
  check(k == k2, "matmul: inner dim mismatch " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  auto n = make_node({m, n_cols}, {a, b}, "matmul");
  const double* av = a.values().data();
  const double* bv = b.values().data();
  double* out = n->values->data();
  for (int i = 0; i < m; ++i) {
    double* orow = out + static_cast<std::size_t>(i) * n_cols;
    const double* arow = av + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip != 0.0)
        kernels::axpy(aip, bv + static_cast<std::size_t>(p) * n_cols, orow,
                      static_cast<std::size_t>(n_cols));
    }
  }
  if (n->requires_grad) {
    n->backward_fn = [m, k, n_cols](TensorNode& self) {
      const auto& g = *self.grad;
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      const double* av = pa.values->data();
      const double* bv = pb.values->data();
      if (pa.requires_grad) {
        auto& ga = pa.ensure_grad();
        for (int i = 0; i < m; ++i) {
          const double* grow = g.data() + static_cast<std::size_t>(i) * n_cols;
          double* garow = ga.data() + static_cast<std::size_t>(i) * k;
          for (int p = 0; p < k; ++p)
            garow[p] += kernels::dot(grow, bv + static_cast<std::size_t>(p) * n_cols,
                                     static_cast<std::size_t>(n_cols));
        }
      }
      if (pb.requires_grad) {
        auto& gb = pb.ensure_grad();
        for (int i = 0; i < m; ++i) {
          const double* grow = g.data() + static_cast<std::size_t>(i) * n_cols;
          const double* arow = av + static_cast<std::size_t>(i) * k;
          for (int p = 0; p < k; ++p) {
            const double aip = arow[p];
            if (aip != 0.0)
              kernels::axpy(aip, grow, gb.data() + static_cast<std::size_t>(p) * n_cols,
                            static_cast<std::size_t>(n_cols));
          }
        }
      }
    };
  }
  return Tensor(n);
}

Tensor transpose2d(const Tensor& a) {
  check(a.shape().size() == 2, "transpose2d: rank-2 required");
  const int m = a.dim(0), c = a.dim(1);
  auto n = make_node({c, m}, {a}, "transpose");
  const auto& av = a.values();
  auto& out = *n->values;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < c; ++j)
      out[static_cast<std::size_t>(j) * m + i] = av[static_cast<std::size_t>(i) * c + j];
  if (n->requires_grad) {
    n->backward_fn = [m, c](TensorNode& self) {
      const auto& g = *self.grad;
      auto& gp = self.parents[0]->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j)
          gp[static_cast<std::size_t>(i) * c + j] += g[static_cast<std::size_t>(j) * m + i];
    };
  }
  return Tensor(n);
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
  check(x.shape().size() == 2 && b.shape().size() == 1 && x.dim(1) == b.dim(0),
        "add_rowvec: want [m,n] + [n]");
  const int m = x.dim(0), c = x.dim(1);
  auto n = make_node(x.shape(), {x, b}, "add_rowvec");
  const auto& xv = x.values();
  const auto& bv = b.values();
  auto& out = *n->values;
  for (int i = 0; i < m; ++i)
    kernels::add(xv.data() + static_cast<std::size_t>(i) * c, bv.data(),
                 out.data() + static_cast<std::size_t>(i) * c, static_cast<std::size_t>(c));
  if (n->requires_grad) {
    n->backward_fn = [m, c](TensorNode& self) {
      const auto& g = *self.grad;
      auto& px = *self.parents[0];
      auto& pb = *self.parents[1];
      if (px.requires_grad)
        kernels::axpy(1.0, g.data(), px.ensure_grad().data(), g.size());
      if (pb.requires_grad) {
        auto& gb = pb.ensure_grad();
        for (int i = 0; i < m; ++i)
          kernels::axpy(1.0, g.data() + static_cast<std::size_t>(i) * c, gb.data(),
                        static_cast<std::size_t>(c));
      }
    };
  }
  return Tensor(n);
}

Tensor softmax_rows(const Tensor& x) {
  check(x.shape().size() == 2, "softmax_rows: rank-2 required");
  const int m = x.dim(0), c = x.dim(1);
  auto n = make_node(x.shape(), {x}, "softmax");
  const auto& xv = x.values();
  auto& out = *n->values;
  for (int i = 0; i < m; ++i) {
    const double* row = xv.data() + static_cast<std::size_t>(i) * c;
    double* orow = out.data() + static_cast<std::size_t>(i) * c;
    const double mx = kernels::max_value(row, static_cast<std::size_t>(c));
    double s = 0.0;
    for (int j = 0; j < c; ++j) {
      orow[j] = std::exp(row[j] - mx);
      s += orow[j];
    }
    kernels::scale(orow, 1.0 / s, orow, static_cast<std::size_t>(c));
  }
  if (n->requires_grad) {
    n->backward_fn = [m, c](TensorNode& self) {
      const auto& g = *self.grad;
      const auto& y = *self.values;
      auto& gp = self.parents[0]->ensure_grad();
      for (int i = 0; i < m; ++i) {
        const double* grow = g.data() + static_cast<std::size_t>(i) * c;
        const double* yrow = y.data() + static_cast<std::size_t>(i) * c;
        double* gprow = gp.data() + static_cast<std::size_t>(i) * c;
        const double d = kernels::dot(grow, yrow, static_cast<std::size_t>(c));
        for (int j = 0; j < c; ++j) gprow[j] += yrow[j] * (grow[j] - d);
      }
    };
  }
  return Tensor(n);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check(a.shape().size() == 2 && b.shape().size() == 2 && a.dim(0) == b.dim(0),
        "concat_cols: row count mismatch");
  const int m = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  auto n = make_node({m, ca + cb}, {a, b}, "concat_cols");
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& out = *n->values;
  for (int i = 0; i < m; ++i) {
    std::copy_n(av.data() + static_cast<std::size_t>(i) * ca, ca,
                out.data() + static_cast<std::size_t>(i) * (ca + cb));
    std::copy_n(bv.data() + static_cast<std::size_t>(i) * cb, cb,
                out.data() + static_cast<std::size_t>(i) * (ca + cb) + ca);
  }
  if (n->requires_grad) {
    n->backward_fn = [m, ca, cb](TensorNode& self) {
      const auto& g = *self.grad;
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      for (int i = 0; i < m; ++i) {
        const double* grow = g.data() + static_cast<std::size_t>(i) * (ca + cb);
        if (pa.requires_grad)
          kernels::axpy(1.0, grow, pa.ensure_grad().data() + static_cast<std::size_t>(i) * ca,
                        static_cast<std::size_t>(ca));
        if (pb.requires_grad)
          kernels::axpy(1.0, grow + ca,
                        pb.ensure_grad().data() + static_cast<std::size_t>(i) * cb,
                        static_cast<std::size_t>(cb));
      }
    };
  }
  return Tensor(n);
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  check(a.shape().size() == 2 && 0 <= c0 && c0 < c1 && c1 <= a.dim(1),
        "slice_cols: bad range");
  const int m = a.dim(0), c = a.dim(1), w = c1 - c0;
  auto n = make_node({m, w}, {a}, "slice_cols");
  const auto& av = a.values();
  auto& out = *n->values;
  for (int i = 0; i < m; ++i)
    std::copy_n(av.data() + static_cast<std::size_t>(i) * c + c0, w,
                out.data() + static_cast<std::size_t>(i) * w);
  if (n->requires_grad) {
    n->backward_fn = [m, c, c0, w](TensorNode& self) {
      const auto& g = *self.grad;
      auto& gp = self.parents[0]->ensure_grad();
      for (int i = 0; i < m; ++i)
        kernels::axpy(1.0, g.data() + static_cast<std::size_t>(i) * w,
                      gp.data() + static_cast<std::size_t>(i) * c + c0,
                      static_cast<std::size_t>(w));
    };
  }
  return Tensor(n);
}

Tensor reshape(const Tensor& a, const Shape& s) {
  check(shape_numel(s) == a.numel(),
        "reshape: numel mismatch " + shape_str(a.shape()) + " -> " + shape_str(s));
  auto n = std::make_shared<TensorNode>();
  n->shape = s;
  n->values = a.node()->values;  // shared storage
  n->op = "reshape";
  n->requires_grad = a.requires_grad();
  n->parents.push_back(a.node());
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      auto& p = *self.parents[0];
      kernels::axpy(1.0, self.grad->data(), p.ensure_grad().data(), self.grad->size());
    };
  }
  return Tensor(n);
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  check(x.shape().size() == 2, "layer_norm_rows: rank-2 required");
  const int m = x.dim(0), c = x.dim(1);
  check(gamma.shape() == Shape{c} && beta.shape() == Shape{c},
        "layer_norm_rows: gamma/beta must be [C]");
  auto n = make_node(x.shape(), {x, gamma, beta}, "layer_norm");
  const auto& xv = x.values();
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  auto& out = *n->values;
  for (int i = 0; i < m; ++i) {
    const double* row = xv.data() + static_cast<std::size_t>(i) * c;
    double* orow = out.data() + static_cast<std::size_t>(i) * c;
    const double mu = kernels::sum(row, static_cast<std::size_t>(c)) / c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= c;
    const double ivar = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < c; ++j) orow[j] = gv[j] * ((row[j] - mu) * ivar) + bv[j];
  }
  if (n->requires_grad) {
    n->backward_fn = [m, c, eps](TensorNode& self) {
      const auto& g = *self.grad;
      auto& px = *self.parents[0];
      auto& pg = *self.parents[1];
      auto& pb = *self.parents[2];
      const auto& xv = *px.values;
      const auto& gv = *pg.values;
      for (int i = 0; i < m; ++i) {
        const double* row = xv.data() + static_cast<std::size_t>(i) * c;
        const double* grow = g.data() + static_cast<std::size_t>(i) * c;
        const double mu = kernels::sum(row, static_cast<std::size_t>(c)) / c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= c;
        const double ivar = 1.0 / std::sqrt(var + eps);
        if (pg.requires_grad || pb.requires_grad) {
          auto& gg = pg.ensure_grad();
          auto& gb = pb.ensure_grad();
          for (int j = 0; j < c; ++j) {
            gg[j] += grow[j] * ((row[j] - mu) * ivar);
            gb[j] += grow[j];
          }
        }
        if (px.requires_grad) {
          auto& gx = px.ensure_grad();
          double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
          for (int j = 0; j < c; ++j) {
            const double xhat = (row[j] - mu) * ivar;
            const double dxhat = grow[j] * gv[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
          }
          double* gxrow = gx.data() + static_cast<std::size_t>(i) * c;
          for (int j = 0; j < c; ++j) {
            const double xhat = (row[j] - mu) * ivar;
            const double dxhat = grow[j] * gv[j];
            gxrow[j] += ivar * (dxhat - (sum_dxhat + xhat * sum_dxhat_xhat) / c);
          }
        }
      }
    };
  }
  return Tensor(n);
}

// ---------------- reductions / losses ----------------

Tensor sum_all(const Tensor& a) {
  auto n = make_node({1}, {a}, "sum_all");
  (*n->values)[0] = kernels::sum(a.values().data(), a.values().size());
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      const double g0 = (*self.grad)[0];
      auto& gp = self.parents[0]->ensure_grad();
      for (auto& v : gp) v += g0;
    };
  }
  return Tensor(n);
}

Tensor mean_all(const Tensor& a) {
  auto n = make_node({1}, {a}, "mean_all");
  const double inv = 1.0 / static_cast<double>(a.numel());
  (*n->values)[0] = kernels::sum(a.values().data(), a.values().size()) * inv;
  if (n->requires_grad) {
    n->backward_fn = [inv](TensorNode& self) {
      const double g0 = (*self.grad)[0] * inv;
      auto& gp = self.parents[0]->ensure_grad();
      for (auto& v : gp) v += g0;
    };
  }
  return Tensor(n);
}

Tensor bce_with_logits_mean(const Tensor& logits, const Tensor& target) {
  check(logits.shape() == target.shape(), "bce_with_logits: shape mismatch");
  auto n = make_node({1}, {logits, target}, "bce_logits");
  const auto& zv = logits.values();
  const auto& tv = target.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    const double z = zv[i];
    // max(z,0) - z*t + log(1 + exp(-|z|))
    acc += (z > 0.0 ? z : 0.0) - z * tv[i] + std::log1p(std::exp(-std::abs(z)));
  }
  (*n->values)[0] = acc / static_cast<double>(zv.size());
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      auto& pz = *self.parents[0];
      auto& pt = *self.parents[1];
      const auto& zv = *pz.values;
      const auto& tv = *pt.values;
      const double g0 = (*self.grad)[0] / static_cast<double>(zv.size());
      if (pz.requires_grad) {
        auto& gz = pz.ensure_grad();
        for (std::size_t i = 0; i < zv.size(); ++i) {
          const double z = zv[i];
          const double s =
              z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
          gz[i] += g0 * (s - tv[i]);
        }
      }
      if (pt.requires_grad) {
        auto& gt = pt.ensure_grad();
        for (std::size_t i = 0; i < zv.size(); ++i) gt[i] -= g0 * zv[i];
      }
    };
  }
  return Tensor(n);
}

Tensor mse_mean(const Tensor& a, const Tensor& b) {
  check(a.shape() == b.shape(), "mse_mean: shape mismatch");
  auto n = make_node({1}, {a, b}, "mse");
  const auto& av = a.values();
  const auto& bv = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  (*n->values)[0] = acc / static_cast<double>(av.size());
  if (n->requires_grad) {
    n->backward_fn = [](TensorNode& self) {
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      const auto& av = *pa.values;
      const auto& bv = *pb.values;
      const double g0 = 2.0 * (*self.grad)[0] / static_cast<double>(av.size());
      if (pa.requires_grad) {
        auto& ga = pa.ensure_grad();
        for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g0 * (av[i] - bv[i]);
      }
      if (pb.requires_grad) {
        auto& gb = pb.ensure_grad();
        for (std::size_t i = 0; i < av.size(); ++i) gb[i] -= g0 * (av[i] - bv[i]);
      }
    };
  }
  return Tensor(n);
}

// ---------------- grid ops ----------------

namespace {
void check_rank4(const Tensor& x, const char* who) {
  check(x.shape().size() == 4, std::string(who) + ": rank-4 [T,h,w,C] required, got " +
                                   shape_str(x.shape()));
}
}  // namespace

Tensor avgpool2x2(const Tensor& x) {
  check_rank4(x, "avgpool2x2");
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  check(h % 2 == 0 && w % 2 == 0, "avgpool2x2: odd spatial dims");
  auto n = make_node({t, h / 2, w / 2, c}, {x}, "avgpool2x2");
  const auto& xv = x.values();
  auto& out = *n->values;
  const int oh = h / 2, ow = w / 2;
  auto in_at = [&](int tt, int yy, int xx) {
    return xv.data() + ((static_cast<std::size_t>(tt) * h + yy) * w + xx) * c;
  };
  for (int tt = 0; tt < t; ++tt)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double* orow = out.data() + ((static_cast<std::size_t>(tt) * oh + oy) * ow + ox) * c;
        for (int j = 0; j < c; ++j)
          orow[j] = 0.25 * (in_at(tt, 2 * oy, 2 * ox)[j] + in_at(tt, 2 * oy, 2 * ox + 1)[j] +
                            in_at(tt, 2 * oy + 1, 2 * ox)[j] +
                            in_at(tt, 2 * oy + 1, 2 * ox + 1)[j]);
      }
  if (n->requires_grad) {
    n->backward_fn = [t, h, w, c](TensorNode& self) {
      const auto& g = *self.grad;
      auto& gp = self.parents[0]->ensure_grad();
      const int oh = h / 2, ow = w / 2;
      for (int tt = 0; tt < t; ++tt)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const double* grow =
                g.data() + ((static_cast<std::size_t>(tt) * oh + oy) * ow + ox) * c;
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                double* dst = gp.data() + ((static_cast<std::size_t>(tt) * h + 2 * oy + dy) * w +
                                           2 * ox + dx) *
                                              c;
                kernels::axpy(0.25, grow, dst, static_cast<std::size_t>(c));
              }
          }
    };
  }
  return Tensor(n);
}

namespace {
struct LerpTable {
  std::vector<int> i0, i1;
  std::vector<double> w1;  // weight of i1; weight of i0 is 1-w1
};

LerpTable make_lerp(int in, int out, int factor) {
  LerpTable t;
  t.i0.resize(out);
  t.i1.resize(out);
  t.w1.resize(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) / factor - 0.5;
    if (src < 0) src = 0;
    if (src > in - 1) src = in - 1;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in - 2) lo = in - 2;
    if (lo < 0) lo = 0;
    const int hi = in > 1 ? lo + 1 : 0;
    t.i0[o] = lo;
    t.i1[o] = hi;
    t.w1[o] = in > 1 ? src - lo : 0.0;
  }
  return t;
}
}  // namespace

Tensor upsample_bilinear(const Tensor& x, int factor) {
  check_rank4(x, "upsample_bilinear");
  check(factor >= 1, "upsample_bilinear: factor must be >= 1");
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int oh = h * factor, ow = w * factor;
  auto n = make_node({t, oh, ow, c}, {x}, "upsample_bilinear");
  const LerpTable ty = make_lerp(h, oh, factor);
  const LerpTable tx = make_lerp(w, ow, factor);
  const auto& xv = x.values();
  auto& out = *n->values;
  for (int tt = 0; tt < t; ++tt)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double wy1 = ty.w1[oy], wx1 = tx.w1[ox];
        const double w00 = (1 - wy1) * (1 - wx1), w01 = (1 - wy1) * wx1;
        const double w10 = wy1 * (1 - wx1), w11 = wy1 * wx1;
        const double* r00 =
            xv.data() + ((static_cast<std::size_t>(tt) * h + ty.i0[oy]) * w + tx.i0[ox]) * c;
        const double* r01 =
            xv.data() + ((static_cast<std::size_t>(tt) * h + ty.i0[oy]) * w + tx.i1[ox]) * c;
        const double* r10 =
            xv.data() + ((static_cast<std::size_t>(tt) * h + ty.i1[oy]) * w + tx.i0[ox]) * c;
        const double* r11 =
            xv.data() + ((static_cast<std::size_t>(tt) * h + ty.i1[oy]) * w + tx.i1[ox]) * c;
        double* orow = out.data() + ((static_cast<std::size_t>(tt) * oh + oy) * ow + ox) * c;
        for (int j = 0; j < c; ++j)
          orow[j] = w00 * r00[j] + w01 * r01[j] + w10 * r10[j] + w11 * r11[j];
      }
  if (n->requires_grad) {
    n->backward_fn = [t, h, w, c, factor](TensorNode& self) {
      const int oh = h * factor, ow = w * factor;
      const LerpTable ty = make_lerp(h, oh, factor);
      const LerpTable tx = make_lerp(w, ow, factor);
      const auto& g = *self.grad;
      auto& gp = self.parents[0]->ensure_grad();
      for (int tt = 0; tt < t; ++tt)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const double wy1 = ty.w1[oy], wx1 = tx.w1[ox];
            const double ws[4] = {(1 - wy1) * (1 - wx1), (1 - wy1) * wx1, wy1 * (1 - wx1),
                                  wy1 * wx1};
            const int ys[4] = {ty.i0[oy], ty.i0[oy], ty.i1[oy], ty.i1[oy]};
            const int xs[4] = {tx.i0[ox], tx.i1[ox], tx.i0[ox], tx.i1[ox]};
            const double* grow =
                g.data() + ((static_cast<std::size_t>(tt) * oh + oy) * ow + ox) * c;
            for (int k = 0; k < 4; ++k) {
              if (ws[k] == 0.0) continue;
              double* dst =
                  gp.data() + ((static_cast<std::size_t>(tt) * h + ys[k]) * w + xs[k]) * c;
              kernels::axpy(ws[k], grow, dst, static_cast<std::size_t>(c));
            }
          }
    };
  }
  return Tensor(n);
}

Tensor spatial_mean(const Tensor& x) {
  check_rank4(x, "spatial_mean");
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  auto n = make_node({t, c}, {x}, "spatial_mean");
  const double inv = 1.0 / (static_cast<double>(h) * w);
  const auto& xv = x.values();
  auto& out = *n->values;
  for (int tt = 0; tt < t; ++tt) {
    double* orow = out.data() + static_cast<std::size_t>(tt) * c;
    for (int i = 0; i < h * w; ++i)
      kernels::axpy(inv, xv.data() + (static_cast<std::size_t>(tt) * h * w + i) * c, orow,
                    static_cast<std::size_t>(c));
  }
  if (n->requires_grad) {
    n->backward_fn = [t, h, w, c, inv](TensorNode& self) {
      const auto& g = *self.grad;
      auto& gp = self.parents[0]->ensure_grad();
      for (int tt = 0; tt < t; ++tt) {
        const double* grow = g.data() + static_cast<std::size_t>(tt) * c;
        for (int i = 0; i < h * w; ++i)
          kernels::axpy(inv, grow, gp.data() + (static_cast<std::size_t>(tt) * h * w + i) * c,
                        static_cast<std::size_t>(c));
      }
    };
  }
  return Tensor(n);
}

Tensor im2col3x3(const Tensor& x) {
  check_rank4(x, "im2col3x3");
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  auto n = make_node({t * h * w, 9 * c}, {x}, "im2col3x3");
  const auto& xv = x.values();
  auto& out = *n->values;
  std::size_t row = 0;
  for (int tt = 0; tt < t; ++tt)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx, ++row) {
        double* orow = out.data() + row * 9 * c;
        int k = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx, ++k) {
            const int sy = y + dy, sx = xx + dx;
            double* dst = orow + static_cast<std::size_t>(k) * c;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;  // zero pad
            std::copy_n(xv.data() + ((static_cast<std::size_t>(tt) * h + sy) * w + sx) * c, c,
                        dst);
          }
      }
  if (n->requires_grad) {
    n->backward_fn = [t, h, w, c](TensorNode& self) {
      const auto& g = *self.grad;
      auto& gp = self.parents[0]->ensure_grad();
      std::size_t row = 0;
      for (int tt = 0; tt < t; ++tt)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx, ++row) {
            const double* grow = g.data() + row * 9 * c;
            int k = 0;
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx, ++k) {
                const int sy = y + dy, sx = xx + dx;
                if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                kernels::axpy(1.0, grow + static_cast<std::size_t>(k) * c,
                              gp.data() + ((static_cast<std::size_t>(tt) * h + sy) * w + sx) * c,
                              static_cast<std::size_t>(c));
              }
          }
    };
  }
  return Tensor(n);
}

Tensor space_to_patches(const Tensor& x, int p) {
  check_rank4(x, "space_to_patches");
  const int t = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  check(p >= 1 && h % p == 0 && w % p == 0, "space_to_patches: dims not divisible by patch");
  const int gh = h / p, gw = w / p;
  auto n = make_node({t * gh * gw, p * p * c}, {x}, "space_to_patches");
  const auto& xv = x.values();
  auto& out = *n->values;
  std::size_t row = 0;
  for (int tt = 0; tt < t; ++tt)
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx, ++row) {
        double* orow = out.data() + row * p * p * c;
        for (int dy = 0; dy < p; ++dy)
          for (int dx = 0; dx < p; ++dx)
            std::copy_n(
                xv.data() +
                    ((static_cast<std::size_t>(tt) * h + gy * p + dy) * w + gx * p + dx) * c,
                c, orow + (static_cast<std::size_t>(dy) * p + dx) * c);
      }
  if (n->requires_grad) {
    n->backward_fn = [t, h, w, c, p](TensorNode& self) {
      const int gh = h / p, gw = w / p;
      const auto& g = *self.grad;
      auto& gp = self.parents[0]->ensure_grad();
      std::size_t row = 0;
      for (int tt = 0; tt < t; ++tt)
        for (int gy = 0; gy < gh; ++gy)
          for (int gx = 0; gx < gw; ++gx, ++row) {
            const double* grow = g.data() + row * p * p * c;
            for (int dy = 0; dy < p; ++dy)
              for (int dx = 0; dx < p; ++dx)
                kernels::axpy(
                    1.0, grow + (static_cast<std::size_t>(dy) * p + dx) * c,
                    gp.data() +
                        ((static_cast<std::size_t>(tt) * h + gy * p + dy) * w + gx * p + dx) * c,
                    static_cast<std::size_t>(c));
          }
    };
  }
  return Tensor(n);
}

}  // namespace umbra
