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

#include "hla/hla_kernel.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <string>

#include "hla/detail/layout.hpp"
#include "hla/detail/outer_rows.hpp"
#include "hla/parallel.hpp"

namespace hla {
namespace {

using detail::SeqDims;
using detail::seq_dims;

std::size_t checked_bytes(std::size_t elements, std::size_t width,
                          std::size_t cap, const char* what) {
  if (elements > cap / width) {
    throw MemoryCapError(std::string(what) + ": needs more than " +
                         std::to_string(cap) +
                         " bytes (HLA_MEMORY_CAP_BYTES)");
  }
  return elements * width;
}

struct Operands {
  SeqDims q;
  SeqDims k;
  SeqDims v;
  std::size_t volume = 0;
};

template <Real T>
Operands check_operands(const HlaConfig& cfg, const Tensor<T>& phi_q,
                        std::span<const Tensor<T>> phi_ks, const Tensor<T>& v) {
  cfg.validate();
  Operands ops;
  ops.q = seq_dims(phi_q, "hla phi_q");
  ops.v = seq_dims(v, "hla v");
  if (phi_ks.size() != cfg.factors) {
    throw DimensionError("hla: expected " + std::to_string(cfg.factors) +
                         " key feature tensors, got " +
                         std::to_string(phi_ks.size()));
  }
  if (ops.q.dim != cfg.d_phi) {
    throw DimensionError("hla: phi_q trailing dim " +
                         std::to_string(ops.q.dim) + " != d_phi " +
                         std::to_string(cfg.d_phi));
  }
  if (ops.v.dim != cfg.head_dim) {
    throw DimensionError("hla: v trailing dim " + std::to_string(ops.v.dim) +
                         " != head_dim " + std::to_string(cfg.head_dim));
  }
  if (ops.v.batch != ops.q.batch || ops.v.heads != ops.q.heads) {
    throw DimensionError("hla: batch/head extents of q and v differ");
  }
  for (const auto& k : phi_ks) {
    const SeqDims dk = seq_dims(k, "hla phi_k");
    if (dk.batch != ops.q.batch || dk.heads != ops.q.heads ||
        dk.seq != ops.v.seq || dk.dim != cfg.d_phi) {
      throw DimensionError("hla: phi_k shape " + shape_to_string(k.shape()) +
                           " inconsistent with v " +
                           shape_to_string(v.shape()));
    }
    ops.k = dk;
  }
  detail::require_nonnegative(phi_q, "hla phi_q");
  for (const auto& k : phi_ks) detail::require_nonnegative(k, "hla phi_k");
  ops.volume = cfg.feature_volume();
  checked_bytes(ops.volume * (cfg.head_dim + 1), sizeof(T),
                cfg.memory_cap_bytes, "hla context");
  return ops;
}

// Context and key-sum accumulation for one slice.
template <Real T>
void accumulate_context(std::span<const Tensor<T>> phi_ks, const T* vs,
                        std::size_t slice, std::size_t nk, std::size_t dp,
                        std::size_t d, Expansion expansion, std::vector<T>& tk,
                        std::vector<T>& context, std::vector<T>& ksum) {
  const std::size_t volume = tk.size();
  std::vector<const T*> rows(phi_ks.size());
  for (std::size_t j = 0; j < nk; ++j) {
    for (std::size_t f = 0; f < phi_ks.size(); ++f) {
      rows[f] = phi_ks[f].data() + (slice * nk + j) * dp;
    }
    detail::expand_row<T>(rows, dp, tk.data(), expansion);
    const T* vj = vs + j * d;
    for (std::size_t p = 0; p < volume; ++p) {
      const T t = tk[p];
      ksum[p] += t;
      T* cp = context.data() + p * d;
      for (std::size_t c = 0; c < d; ++c) cp[c] += t * vj[c];
    }
  }
}

}  // namespace

std::size_t default_memory_cap_bytes() {
  const char* env = std::getenv("HLA_MEMORY_CAP_BYTES");
  if (env == nullptr || *env == '\0') return kDefaultMemoryCapBytes;
  std::size_t value = 0;
  const char* end = env + std::strlen(env);
  auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    return kDefaultMemoryCapBytes;
  }
  return value;
}

std::size_t feature_volume(std::size_t d_phi, std::size_t factors) {
  std::size_t volume = 1;
  for (std::size_t f = 0; f < factors; ++f) {
    if (d_phi != 0 && volume > std::numeric_limits<std::size_t>::max() / d_phi) {
      throw MemoryCapError("d_phi^F overflows: d_phi=" + std::to_string(d_phi) +
                           " F=" + std::to_string(factors));
    }
    volume *= d_phi;
  }
  return volume;
}

std::size_t HlaConfig::feature_volume() const {
  return hla::feature_volume(d_phi, factors);
}

void HlaConfig::validate() const {
  if (factors < 2) {
    throw ConfigError("hla config: factors must be >= 2, got " +
                      std::to_string(factors));
  }
  if (d_phi == 0) throw ConfigError("hla config: d_phi must be positive");
  if (head_dim == 0) throw ConfigError("hla config: head_dim must be positive");
  if (!std::isfinite(eps) || eps < 0.0) {
    throw ConfigError("hla config: eps must be finite and >= 0, got " +
                      std::to_string(eps));
  }
  if (!(decay > 0.0) || decay > 1.0) {
    throw ConfigError("hla config: decay must lie in (0, 1], got " +
                      std::to_string(decay));
  }
  const std::size_t volume = feature_volume();
  if (volume > memory_cap_bytes / sizeof(double) / (head_dim + 1)) {
    throw MemoryCapError("hla config: context of d_phi^F=" +
                         std::to_string(volume) + " x " +
                         std::to_string(head_dim + 1) +
                         " exceeds the memory cap of " +
                         std::to_string(memory_cap_bytes) + " bytes");
  }
}

template <Real T>
Tensor<T> build_query_tensor(const Tensor<T>& phi_q, std::size_t factors,
                             std::size_t memory_cap, Expansion expansion) {
  if (factors < 2) throw ConfigError("build_query_tensor: factors must be >= 2");
  const SeqDims dq = seq_dims(phi_q, "build_query_tensor");
  const std::size_t volume = feature_volume(dq.dim, factors);
  checked_bytes(dq.slices() * dq.seq * volume, sizeof(T), memory_cap,
                "build_query_tensor");
  Tensor<T> out({dq.batch, dq.heads, dq.seq, volume});
  std::vector<const T*> rows(factors);
  for (std::size_t r = 0; r < dq.slices() * dq.seq; ++r) {
    std::fill(rows.begin(), rows.end(), phi_q.data() + r * dq.dim);
    detail::expand_row<T>(rows, dq.dim, out.data() + r * volume, expansion);
  }
  return out;
}

template <Real T>
Tensor<T> build_key_tensor(std::span<const Tensor<T>> phi_ks,
                           std::size_t memory_cap, Expansion expansion) {
  if (phi_ks.size() < 2) {
    throw ConfigError("build_key_tensor: need at least two factors");
  }
  const SeqDims dk = seq_dims(phi_ks[0], "build_key_tensor");
  for (const auto& k : phi_ks) {
    if (k.shape() != phi_ks[0].shape()) {
      throw DimensionError("build_key_tensor: factor shapes differ");
    }
  }
  const std::size_t volume = feature_volume(dk.dim, phi_ks.size());
  checked_bytes(dk.slices() * dk.seq * volume, sizeof(T), memory_cap,
                "build_key_tensor");
  Tensor<T> out({dk.batch, dk.heads, dk.seq, volume});
  std::vector<const T*> rows(phi_ks.size());
  for (std::size_t r = 0; r < dk.slices() * dk.seq; ++r) {
    for (std::size_t f = 0; f < phi_ks.size(); ++f) {
      rows[f] = phi_ks[f].data() + r * dk.dim;
    }
    detail::expand_row<T>(rows, dk.dim, out.data() + r * volume, expansion);
  }
  return out;
}

template <Real T>
HlaOutput<T> hla_forward(const HlaConfig& cfg, const Tensor<T>& phi_q,
                         std::span<const Tensor<T>> phi_ks, const Tensor<T>& v) {
  if (cfg.causal) {
    throw ConfigError("hla_forward: causal configs go through causal_forward");
  }
  const Operands ops = check_operands(cfg, phi_q, phi_ks, v);
  const std::size_t dp = cfg.d_phi, d = cfg.head_dim, volume = ops.volume;
  const std::size_t nq = ops.q.seq, nk = ops.v.seq;
  HlaOutput<T> result{Tensor<T>({ops.q.batch, ops.q.heads, nq, d}),
                      Tensor<T>({ops.q.batch, ops.q.heads, nq})};
  const T eps = static_cast<T>(cfg.eps);

  parallel_for(ops.q.slices(), [&](std::size_t s) {
    std::vector<T> context(volume * d, T{0}), ksum(volume, T{0}), t(volume);
    accumulate_context<T>(phi_ks, v.data() + s * nk * d, s, nk, dp, d,
                          cfg.expansion, t, context, ksum);
    std::vector<const T*> rows(cfg.factors);
    for (std::size_t i = 0; i < nq; ++i) {
      std::fill(rows.begin(), rows.end(), phi_q.data() + (s * nq + i) * dp);
      detail::expand_row<T>(rows, dp, t.data(), cfg.expansion);
      T eta{0};
      for (std::size_t p = 0; p < volume; ++p) eta += t[p] * ksum[p];
      T* o = result.out.data() + (s * nq + i) * d;
      for (std::size_t p = 0; p < volume; ++p) {
        const T tp = t[p];
        const T* cp = context.data() + p * d;
        for (std::size_t c = 0; c < d; ++c) o[c] += tp * cp[c];
      }
      const T denom = eta + eps;
      for (std::size_t c = 0; c < d; ++c) o[c] /= denom;
      result.eta[s * nq + i] = eta;
    }
  });
  return result;
}

template <Real T>
HlaGrads<T> hla_backward(const HlaConfig& cfg, const Tensor<T>& phi_q,
                         std::span<const Tensor<T>> phi_ks, const Tensor<T>& v,
                         const HlaOutput<T>& forward, const Tensor<T>& grad_out) {
  if (cfg.causal) {
    throw ConfigError("hla_backward: only the non-causal path is differentiable");
  }
  const Operands ops = check_operands(cfg, phi_q, phi_ks, v);
  const std::size_t dp = cfg.d_phi, d = cfg.head_dim, volume = ops.volume;
  const std::size_t nq = ops.q.seq, nk = ops.v.seq, factors = cfg.factors;
  const Shape out_shape{ops.q.batch, ops.q.heads, nq, d};
  if (grad_out.shape() != out_shape || forward.out.shape() != out_shape ||
      forward.eta.shape() != Shape{ops.q.batch, ops.q.heads, nq}) {
    throw DimensionError("hla_backward: grad_out/forward shapes do not match "
                         "the inputs");
  }
  HlaGrads<T> grads;
  grads.phi_q = Tensor<T>::zeros_like(phi_q);
  for (const auto& k : phi_ks) grads.phi_ks.push_back(Tensor<T>::zeros_like(k));
  grads.v = Tensor<T>::zeros_like(v);
  const T eps = static_cast<T>(cfg.eps);

  parallel_for(ops.q.slices(), [&](std::size_t s) {
    std::vector<T> context(volume * d, T{0}), ksum(volume, T{0}), t(volume);
    const T* vs = v.data() + s * nk * d;
    accumulate_context<T>(phi_ks, vs, s, nk, dp, d, cfg.expansion, t, context,
                          ksum);
    std::vector<T> d_context(volume * d, T{0}), d_ksum(volume, T{0});
    std::vector<T> dt(volume), d_num(d);
    std::vector<const T*> rows(factors);
    std::vector<T*> row_grads(factors);

    for (std::size_t i = 0; i < nq; ++i) {
      const std::size_t r = s * nq + i;
      const T* qi = phi_q.data() + r * dp;
      std::fill(rows.begin(), rows.end(), qi);
      detail::expand_row<T>(rows, dp, t.data(), cfg.expansion);
      const T denom = forward.eta[r] + eps;
      const T* g = grad_out.data() + r * d;
      const T* o = forward.out.data() + r * d;
      T g_dot_out{0};
      for (std::size_t c = 0; c < d; ++c) {
        d_num[c] = g[c] / denom;
        g_dot_out += g[c] * o[c];
      }
      const T d_eta = -g_dot_out / denom;
      for (std::size_t p = 0; p < volume; ++p) {
        const T* cp = context.data() + p * d;
        T* dcp = d_context.data() + p * d;
        T acc = ksum[p] * d_eta;
        const T tp = t[p];
        for (std::size_t c = 0; c < d; ++c) {
          acc += cp[c] * d_num[c];
          dcp[c] += tp * d_num[c];
        }
        dt[p] = acc;
        d_ksum[p] += tp * d_eta;
      }
      std::fill(row_grads.begin(), row_grads.end(),
                grads.phi_q.data() + r * dp);
      detail::expand_row_backward<T>(rows, dp, dt.data(), row_grads);
    }

    for (std::size_t j = 0; j < nk; ++j) {
      const std::size_t r = s * nk + j;
      for (std::size_t f = 0; f < factors; ++f) {
        rows[f] = phi_ks[f].data() + r * dp;
        row_grads[f] = grads.phi_ks[f].data() + r * dp;
      }
      detail::expand_row<T>(rows, dp, t.data(), cfg.expansion);
      const T* vj = vs + j * d;
      T* dvj = grads.v.data() + r * d;
      for (std::size_t p = 0; p < volume; ++p) {
        const T* dcp = d_context.data() + p * d;
        T acc = d_ksum[p];
        const T tp = t[p];
        for (std::size_t c = 0; c < d; ++c) {
          acc += dcp[c] * vj[c];
          dvj[c] += dcp[c] * tp;
        }
        dt[p] = acc;
      }
      detail::expand_row_backward<T>(rows, dp, dt.data(), row_grads);
    }
  });
  return grads;
}

#define HLA_INSTANTIATE(T)                                                    \
  template Tensor<T> build_query_tensor<T>(const Tensor<T>&, std::size_t,     \
                                           std::size_t, Expansion);           \
  template Tensor<T> build_key_tensor<T>(std::span<const Tensor<T>>,          \
                                         std::size_t, Expansion);             \
  template HlaOutput<T> hla_forward<T>(const HlaConfig&, const Tensor<T>&,    \
                                       std::span<const Tensor<T>>,            \
                                       const Tensor<T>&);                     \
  template HlaGrads<T> hla_backward<T>(                                       \
      const HlaConfig&, const Tensor<T>&, std::span<const Tensor<T>>,         \
      const Tensor<T>&, const HlaOutput<T>&, const Tensor<T>&);
HLA_INSTANTIATE(float)
HLA_INSTANTIATE(double)
#undef HLA_INSTANTIATE

}  // namespace hla
