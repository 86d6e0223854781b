#include "umbra/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace umbra {

Tensor ParamStore::create(const std::string& name, const Shape& shape, bool trainable,
                          const std::function<double()>& init) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  std::vector<double> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = init();
  Tensor t = Tensor::leaf(shape, std::move(data));
  if (!trainable) t.node()->requires_grad = false;
  index_[name] = entries_.size();
  entries_.push_back({name, t, trainable});
  return t;
}

Tensor ParamStore::zeros_param(const std::string& name, const Shape& shape, bool trainable) {
  return create(name, shape, trainable, [] { return 0.0; });
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return entries_[it->second].tensor;
}

std::int64_t ParamStore::count_total() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

std::int64_t ParamStore::count_trainable() const {
  std::int64_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.tensor.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

std::uint64_t ParamStore::checksum(bool trainable, bool frozen) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& e : entries_) {
    if (e.trainable && !trainable) continue;
    if (!e.trainable && !frozen) continue;
    h = fnv1a64(e.name.data(), e.name.size(), h);
    for (double d : e.tensor.values()) {
      const float f = static_cast<float>(d);
      h = fnv1a64(&f, sizeof(f), h);
    }
  }
  return h;
}

Linear Linear::create(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
                      bool trainable, bool with_bias, double init_std, bool zero_init) {
  Linear l;
  l.in = in;
  l.out = out;
  const double std = init_std >= 0.0 ? init_std : 1.0 / std::sqrt(static_cast<double>(in));
  if (zero_init) {
    l.weight = ps.zeros_param(name + ".weight", {in, out}, trainable);
  } else {
    l.weight = ps.create(name + ".weight", {in, out}, trainable,
                         [&rng, std] { return rng.normal(0.0, std); });
  }
  if (with_bias) l.bias = ps.zeros_param(name + ".bias", {out}, trainable);
  return l;
}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = matmul(x, weight);
  if (bias.defined()) y = add_rowvec(y, bias);
  return y;
}

Mlp Mlp::create(ParamStore& ps, const std::string& name, int in, int hidden, int out, Rng& rng,
                bool trainable) {
  Mlp m;
  m.fc1 = Linear::create(ps, name + ".fc1", in, hidden, rng, trainable);
  m.fc2 = Linear::create(ps, name + ".fc2", hidden, out, rng, trainable);
  return m;
}

Tensor Mlp::forward(const Tensor& x) const { return fc2.forward(gelu(fc1.forward(x))); }

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, int c, bool trainable) {
  LayerNorm ln;
  ln.gamma = ps.create(name + ".gamma", {c}, trainable, [] { return 1.0; });
  ln.beta = ps.zeros_param(name + ".beta", {c}, trainable);
  return ln;
}

Tensor LayerNorm::forward(const Tensor& x) const { return layer_norm_rows(x, gamma, beta, eps); }

CrossAttention CrossAttention::create(ParamStore& ps, const std::string& name, int channels,
                                      int n_heads, Rng& rng, bool trainable) {
  if (n_heads < 1 || channels % n_heads != 0)
    throw std::invalid_argument("attention: channels must divide by n_heads");
  CrossAttention a;
  a.n_heads = n_heads;
  a.channels = channels;
  a.q = Linear::create(ps, name + ".q", channels, channels, rng, trainable);
  a.k = Linear::create(ps, name + ".k", channels, channels, rng, trainable);
  a.v = Linear::create(ps, name + ".v", channels, channels, rng, trainable);
  a.o = Linear::create(ps, name + ".o", channels, channels, rng, trainable);
  return a;
}

Tensor CrossAttention::forward(const Tensor& query, const Tensor& kv) const {
  return forward_with_probs(query, kv, nullptr);
}

Tensor CrossAttention::forward_with_probs(const Tensor& query, const Tensor& kv,
                                          std::vector<Tensor>* probs) const {
  if (query.shape().size() != 2 || kv.shape().size() != 2)
    throw std::invalid_argument("attention: rank-2 sequences required");
  if (query.dim(1) != channels || kv.dim(1) != channels)
    throw std::invalid_argument("attention: channel mismatch (query " +
                                shape_str(query.shape()) + ", kv " + shape_str(kv.shape()) +
                                ", expected C=" + std::to_string(channels) + ")");
  const int d = channels / n_heads;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor qp = q.forward(query);
  Tensor kp = k.forward(kv);
  Tensor vp = v.forward(kv);
  Tensor heads;
  for (int h = 0; h < n_heads; ++h) {
    Tensor qh = slice_cols(qp, h * d, (h + 1) * d);
    Tensor kh = slice_cols(kp, h * d, (h + 1) * d);
    Tensor vh = slice_cols(vp, h * d, (h + 1) * d);
    Tensor scores = scale(matmul(qh, transpose2d(kh)), inv_sqrt_d);
    Tensor p = softmax_rows(scores);
    if (probs) probs->push_back(p);
    Tensor oh = matmul(p, vh);
    heads = h == 0 ? oh : concat_cols(heads, oh);
  }
  return o.forward(heads);
}

}  // namespace umbra
