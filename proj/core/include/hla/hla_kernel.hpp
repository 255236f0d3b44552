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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hla/tensor.hpp"

namespace hla {

inline constexpr std::size_t kDefaultMemoryCapBytes = std::size_t{1} << 30;

/// Reads HLA_MEMORY_CAP_BYTES; falls back to kDefaultMemoryCapBytes when the
/// variable is unset or unparsable.
std::size_t default_memory_cap_bytes();

/// How the F-fold outer product of a row is expanded.
enum class Expansion {
  kFused,    // hand-unrolled loops for F = 2 and F = 3, generic otherwise
  kGeneric,  // iterated Kronecker expansion for every F
};

struct HlaConfig {
  std::size_t factors = 3;
  std::size_t d_phi = 6;
  std::size_t head_dim = 128;
  double eps = 1e-6;
  bool causal = false;
  double decay = 1.0;
  std::size_t memory_cap_bytes = default_memory_cap_bytes();
  Expansion expansion = Expansion::kFused;

  /// d_phi^F; throws MemoryCapError on overflow.
  std::size_t feature_volume() const;

  /// Throws ConfigError or MemoryCapError. eps may be 0 (exact
  /// normalization) but not negative.
  void validate() const;
};

/// d_phi^factors with an overflow check.
std::size_t feature_volume(std::size_t d_phi, std::size_t factors);

/// Flattened F-fold self outer products of every row: [B,H,N,d_phi^F].
template <Real T>
Tensor<T> build_query_tensor(const Tensor<T>& phi_q, std::size_t factors,
                             std::size_t memory_cap = default_memory_cap_bytes(),
                             Expansion expansion = Expansion::kFused);

/// Flattened outer products phi_k1 (x) ... (x) phi_kF per row.
template <Real T>
Tensor<T> build_key_tensor(std::span<const Tensor<T>> phi_ks,
                           std::size_t memory_cap = default_memory_cap_bytes(),
                           Expansion expansion = Expansion::kFused);

template <Real T>
struct HlaOutput {
  Tensor<T> out;  // [B,H,Nq,d]
  Tensor<T> eta;  // [B,H,Nq]
};

/// Linear-time, non-causal HLA. Per batch x head slice it accumulates the
/// context C = sum_j T_k[j] v_j^T ([d_phi^F, d]) and the key sum
/// s = sum_j T_k[j], then emits out_i = T_q[i] C / (T_q[i] . s + eps).
/// Memory beyond the outputs is O(d_phi^F * d) per slice being processed.
template <Real T>
HlaOutput<T> hla_forward(const HlaConfig& cfg, const Tensor<T>& phi_q,
                         std::span<const Tensor<T>> phi_ks, const Tensor<T>& v);

template <Real T>
struct HlaGrads {
  Tensor<T> phi_q;
  std::vector<Tensor<T>> phi_ks;
  Tensor<T> v;
};

/// Exact gradients of hla_forward given its inputs and result.
template <Real T>
HlaGrads<T> hla_backward(const HlaConfig& cfg, const Tensor<T>& phi_q,
                         std::span<const Tensor<T>> phi_ks, const Tensor<T>& v,
                         const HlaOutput<T>& forward, const Tensor<T>& grad_out);

}  // namespace hla
