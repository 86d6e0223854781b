#pragma once

// Parameter registry and the shared attention/MLP primitives used by the
// VMM, DSB and TTB blocks.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "umbra/rng.hpp"
#include "umbra/tensor.hpp"

namespace umbra {

// Ordered, name-addressed parameter store. Creation order defines
// serialization order, so construction must be deterministic.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };

  Tensor create(const std::string& name, const Shape& shape, bool trainable,
                const std::function<double()>& init);
  Tensor zeros_param(const std::string& name, const Shape& shape, bool trainable);

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Tensor get(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  std::int64_t count_total() const;
  std::int64_t count_trainable() const;
  void zero_grads();

  // FNV-1a over float32-serialized values, in registry order.
  std::uint64_t checksum(bool trainable, bool frozen) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out], undefined when bias-less
  int in = 0, out = 0;

  // init_std < 0 selects 1/sqrt(in).
  static Linear create(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
                       bool trainable, bool with_bias = true, double init_std = -1.0,
                       bool zero_init = false);
  Tensor forward(const Tensor& x) const;  // [m,in] -> [m,out]
};

// Two linear layers that first compress, then restore the channel width.
struct Mlp {
  Linear fc1, fc2;

  static Mlp create(ParamStore& ps, const std::string& name, int in, int hidden, int out,
                    Rng& rng, bool trainable);
  Tensor forward(const Tensor& x) const;
};

struct LayerNorm {
  Tensor gamma, beta;
  double eps = 1e-5;

  static LayerNorm create(ParamStore& ps, const std::string& name, int c, bool trainable);
  Tensor forward(const Tensor& x) const;  // [m,C]
};

// Standard multi-head attention: softmax(QK^T/sqrt(d))V per head, heads
// concatenated, output-projected. Queries and keys/values may come from
// different sequences (cross attention); q == kv gives self attention.
struct CrossAttention {
  int n_heads = 1;
  int channels = 0;
  Linear q, k, v, o;

  static CrossAttention create(ParamStore& ps, const std::string& name, int channels,
                               int n_heads, Rng& rng, bool trainable);
  Tensor forward(const Tensor& query, const Tensor& kv) const;
  // Also exposes the per-head softmax weight matrices (for inspection/tests).
  Tensor forward_with_probs(const Tensor& query, const Tensor& kv,
                            std::vector<Tensor>* probs) const;
};

}  // namespace umbra
