// Copyright 2026 The HLA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hla/attention_block.hpp"

#include <cmath>

#include "hla/streaming.hpp"
#include "hla/value_modulation.hpp"

namespace hla {

template <Real T>
Tensor<T> linear_forward(const Linear<T>& layer, const Tensor<T>& x) {
  const std::size_t in = layer.in_features(), out = layer.out_features();
  if (x.rank() == 0 || x.dim(-1) != in || layer.bias.shape() != Shape{out}) {
    throw DimensionError("linear: input " + shape_to_string(x.shape()) +
                         " vs weight " + shape_to_string(layer.weight.shape()));
  }
  Shape shape = x.shape();
  shape.back() = out;
  Tensor<T> y(shape);
  const std::size_t rows = x.size() / in;
  const T* w = layer.weight.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * in;
    T* yr = y.data() + r * out;
    for (std::size_t j = 0; j < out; ++j) yr[j] = layer.bias[j];
    for (std::size_t i = 0; i < in; ++i) {
      const T xi = xr[i];
      const T* wi = w + i * out;
      for (std::size_t j = 0; j < out; ++j) yr[j] += xi * wi[j];
    }
  }
  return y;
}

template <Real T>
Tensor<T> linear_backward(const Linear<T>& layer, const Tensor<T>& x,
                          const Tensor<T>& grad_out, Linear<T>& grads) {
  const std::size_t in = layer.in_features(), out = layer.out_features();
  if (x.dim(-1) != in || grad_out.dim(-1) != out ||
      x.size() / in != grad_out.size() / out) {
    throw DimensionError("linear_backward: shape mismatch");
  }
  Tensor<T> grad_x(x.shape());
  const std::size_t rows = x.size() / in;
  const T* w = layer.weight.data();
  T* gw = grads.weight.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * in;
    const T* gr = grad_out.data() + r * out;
    T* gx = grad_x.data() + r * in;
    for (std::size_t j = 0; j < out; ++j) grads.bias[j] += gr[j];
    for (std::size_t i = 0; i < in; ++i) {
      T acc{0};
      const T* wi = w + i * out;
      T* gwi = gw + i * out;
      for (std::size_t j = 0; j < out; ++j) {
        acc += wi[j] * gr[j];
        gwi[j] += xr[i] * gr[j];
      }
      gx[i] = acc;
    }
  }
  return grad_x;
}

template <Real T>
Tensor<T> split_heads(const Tensor<T>& x, std::size_t heads) {
  if (x.rank() != 3 || heads == 0 || x.dim(2) % heads != 0) {
    throw DimensionError("split_heads: expected [B,N,H*d], got " +
                         shape_to_string(x.shape()));
  }
  const std::size_t b = x.dim(0), n = x.dim(1), d = x.dim(2) / heads;
  Tensor<T> out({b, heads, n, d});
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t t = 0; t < n; ++t)
        for (std::size_t c = 0; c < d; ++c)
          out[((bi * heads + h) * n + t) * d + c] =
              x[(bi * n + t) * heads * d + h * d + c];
  return out;
}

template <Real T>
Tensor<T> merge_heads(const Tensor<T>& x) {
  if (x.rank() != 4) {
    throw DimensionError("merge_heads: expected [B,H,N,d]");
  }
  const std::size_t b = x.dim(0), heads = x.dim(1), n = x.dim(2), d = x.dim(3);
  Tensor<T> out({b, n, heads * d});
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t t = 0; t < n; ++t)
        for (std::size_t c = 0; c < d; ++c)
          out[(bi * n + t) * heads * d + h * d + c] =
              x[((bi * heads + h) * n + t) * d + c];
  return out;
}

std::size_t BlockShape::head_dim() const {
  if (heads == 0 || model_dim % heads != 0) {
    throw ConfigError("block: model_dim " + std::to_string(model_dim) +
                      " is not divisible by heads " + std::to_string(heads));
  }
  return model_dim / heads;
}

template <Real T>
BlockParams<T> BlockParams<T>::zeros_like(const BlockParams& other) {
  BlockParams z = other;
  for (auto* l : {&z.to_q, &z.to_k, &z.to_v, &z.to_out}) {
    l->weight.fill(T{0});
    l->bias.fill(T{0});
  }
  z.phi_q = FeatureMapParams<T>::zeros_like(other.phi_q);
  for (auto& p : z.phi_k) p = FeatureMapParams<T>::zeros_like(p);
  z.phi_v1 = FeatureMapParams<T>::zeros_like(other.phi_v1);
  z.phi_v2 = FeatureMapParams<T>::zeros_like(other.phi_v2);
  return z;
}

template <Real T>
std::vector<Tensor<T>*> BlockParams<T>::parameters() {
  std::vector<Tensor<T>*> out;
  for (auto* l : {&to_q, &to_k, &to_v, &to_out}) {
    out.push_back(&l->weight);
    out.push_back(&l->bias);
  }
  for (Tensor<T>* t : feature_parameters()) out.push_back(t);
  return out;
}

template <Real T>
std::vector<Tensor<T>*> BlockParams<T>::feature_parameters() {
  std::vector<Tensor<T>*> out;
  auto append = [&out](FeatureMapParams<T>& p) {
    for (Tensor<T>* t : p.parameters()) out.push_back(t);
  };
  append(phi_q);
  for (auto& p : phi_k) append(p);
  if (use_modulation) {
    append(phi_v1);
    append(phi_v2);
  }
  return out;
}

template <Real T>
BlockParams<T> init_block_params(const BlockShape& shape, std::mt19937_64& rng) {
  const std::size_t d = shape.head_dim();
  const std::size_t dm = shape.model_dim;
  BlockParams<T> p;
  p.heads = shape.heads;
  auto init_linear = [&](Linear<T>& l) {
    l = Linear<T>::zeros(dm, dm);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dm));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : l.weight.values()) w = static_cast<T>(dist(rng));
  };
  init_linear(p.to_q);
  init_linear(p.to_k);
  init_linear(p.to_v);
  init_linear(p.to_out);
  const std::size_t phi_hidden = shape.phi_hidden ? shape.phi_hidden : d;
  const FeatureMapShape qk{d, phi_hidden, shape.d_phi, true, false};
  p.phi_q = init_feature_map<T>(qk, rng);
  for (std::size_t f = 0; f < shape.factors; ++f) {
    p.phi_k.push_back(init_feature_map<T>(qk, rng));
  }
  const std::size_t mod_hidden =
      shape.modulation_hidden ? shape.modulation_hidden : d;
  const FeatureMapShape gate{d, mod_hidden, d, false, shape.modulation_layernorm};
  p.phi_v1 = init_feature_map<T>(gate, rng);
  p.phi_v2 = init_feature_map<T>(gate, rng);
  p.use_rope = shape.use_rope;
  p.use_modulation = shape.use_modulation;
  p.rope_base = shape.rope_base;
  p.scale = default_query_scale(d);
  p.hla.factors = shape.factors;
  p.hla.d_phi = shape.d_phi;
  p.hla.head_dim = d;
  p.hla.eps = shape.eps;
  p.hla.causal = shape.causal;
  p.hla.decay = shape.decay;
  p.hla.validate();
  return p;
}

namespace {

template <Real T>
RopeConfig rope_for(const BlockParams<T>& p) {
  return RopeConfig{p.head_dim(), p.rope_base, {}};
}

template <Real T>
void check_block(const BlockParams<T>& p, const Tensor<T>& x) {
  if (p.heads == 0 || p.model_dim() % p.heads != 0) {
    throw ConfigError("block: model_dim not divisible by heads");
  }
  if (x.rank() != 3 || x.dim(2) != p.model_dim()) {
    throw DimensionError("block: expected x[B,N," +
                         std::to_string(p.model_dim()) + "], got " +
                         shape_to_string(x.shape()));
  }
  if (p.phi_k.size() != p.hla.factors) {
    throw ConfigError("block: number of key maps != factors");
  }
  if (p.hla.head_dim != p.head_dim()) {
    throw ConfigError("block: hla.head_dim != model_dim / heads");
  }
}

}  // namespace

template <Real T>
Tensor<T> hla_attention_block(const BlockParams<T>& params, const Tensor<T>& x,
                              BlockCache<T>* cache) {
  check_block(params, x);
  BlockCache<T> local;
  BlockCache<T>& c = cache ? *cache : local;
  c.x = x;
  c.q = split_heads(linear_forward(params.to_q, x), params.heads);
  c.k = split_heads(linear_forward(params.to_k, x), params.heads);
  c.v = split_heads(linear_forward(params.to_v, x), params.heads);
  if (params.use_rope) {
    const RopeConfig rope = rope_for(params);
    c.q = apply_rope(c.q, rope);
    c.k = apply_rope(c.k, rope);
  }
  c.q = scale_queries(c.q, params.scale);
  c.phi_q = phi_forward(params.phi_q, c.q);
  c.phi_k.clear();
  for (const auto& p : params.phi_k) c.phi_k.push_back(phi_forward(p, c.k));
  if (params.hla.causal) {
    c.attention.out = causal_forward<T>(params.hla, c.phi_q, c.phi_k, c.v);
    c.attention.eta = Tensor<T>();
  } else {
    c.attention = hla_forward<T>(params.hla, c.phi_q, c.phi_k, c.v);
  }
  c.modulated = params.use_modulation
                    ? modulate(c.attention.out, c.v, params.phi_v1, params.phi_v2)
                    : c.attention.out;
  c.merged = merge_heads(c.modulated);
  return linear_forward(params.to_out, c.merged);
}

template <Real T>
BlockGrads<T> block_backward_from_attention(const BlockParams<T>& params,
                                            const BlockCache<T>& cache,
                                            const Tensor<T>& grad_merged) {
  if (params.hla.causal) {
    throw ConfigError("block_backward: only the non-causal block is "
                      "differentiable");
  }
  if (grad_merged.shape() != cache.merged.shape()) {
    throw DimensionError("block_backward: gradient shape mismatch");
  }
  BlockGrads<T> g{BlockParams<T>::zeros_like(params), Tensor<T>()};
  const Tensor<T> grad_heads = split_heads(grad_merged, params.heads);
  Tensor<T> grad_t = grad_heads;
  Tensor<T> grad_v = Tensor<T>::zeros_like(cache.v);
  if (params.use_modulation) {
    auto mg = modulate_backward(cache.attention.out, cache.v, params.phi_v1,
                                params.phi_v2, grad_heads, g.params.phi_v1,
                                g.params.phi_v2);
    grad_t = std::move(mg.t);
    grad_v = std::move(mg.v);
  }
  auto hg = hla_backward<T>(params.hla, cache.phi_q, cache.phi_k, cache.v,
                            cache.attention, grad_t);
  for (std::size_t i = 0; i < grad_v.size(); ++i) grad_v[i] += hg.v[i];

  Tensor<T> grad_q = phi_backward(params.phi_q, cache.q, hg.phi_q, g.params.phi_q);
  for (auto& x : grad_q.values()) x *= static_cast<T>(params.scale);
  Tensor<T> grad_k = Tensor<T>::zeros_like(cache.k);
  for (std::size_t f = 0; f < params.phi_k.size(); ++f) {
    const Tensor<T> gk =
        phi_backward(params.phi_k[f], cache.k, hg.phi_ks[f], g.params.phi_k[f]);
    for (std::size_t i = 0; i < gk.size(); ++i) grad_k[i] += gk[i];
  }
  if (params.use_rope) {
    const RopeConfig rope = rope_for(params);
    grad_q = rope_backward(grad_q, rope);
    grad_k = rope_backward(grad_k, rope);
  }
  g.x = linear_backward(params.to_q, cache.x, merge_heads(grad_q), g.params.to_q);
  const Tensor<T> gx_k =
      linear_backward(params.to_k, cache.x, merge_heads(grad_k), g.params.to_k);
  const Tensor<T> gx_v =
      linear_backward(params.to_v, cache.x, merge_heads(grad_v), g.params.to_v);
  for (std::size_t i = 0; i < g.x.size(); ++i) g.x[i] += gx_k[i] + gx_v[i];
  return g;
}

template <Real T>
BlockGrads<T> block_backward(const BlockParams<T>& params,
                             const BlockCache<T>& cache,
                             const Tensor<T>& grad_out) {
  Linear<T> out_grads = Linear<T>::zeros(params.to_out.in_features(),
                                         params.to_out.out_features());
  const Tensor<T> grad_merged =
      linear_backward(params.to_out, cache.merged, grad_out, out_grads);
  BlockGrads<T> g = block_backward_from_attention(params, cache, grad_merged);
  g.params.to_out = std::move(out_grads);
  return g;
}

#define HLA_INSTANTIATE(T)                                                    \
  template struct BlockParams<T>;                                             \
  template Tensor<T> linear_forward<T>(const Linear<T>&, const Tensor<T>&);   \
  template Tensor<T> linear_backward<T>(const Linear<T>&, const Tensor<T>&,   \
                                        const Tensor<T>&, Linear<T>&);        \
  template Tensor<T> split_heads<T>(const Tensor<T>&, std::size_t);           \
  template Tensor<T> merge_heads<T>(const Tensor<T>&);                        \
  template BlockParams<T> init_block_params<T>(const BlockShape&,             \
                                               std::mt19937_64&);             \
  template Tensor<T> hla_attention_block<T>(const BlockParams<T>&,            \
                                            const Tensor<T>&,                 \
                                            BlockCache<T>*);                  \
  template BlockGrads<T> block_backward<T>(                                   \
      const BlockParams<T>&, const BlockCache<T>&, const Tensor<T>&);         \
  template BlockGrads<T> block_backward_from_attention<T>(                    \
      const BlockParams<T>&, const BlockCache<T>&, const Tensor<T>&);
HLA_INSTANTIATE(float)
HLA_INSTANTIATE(double)
#undef HLA_INSTANTIATE

}  // namespace hla
