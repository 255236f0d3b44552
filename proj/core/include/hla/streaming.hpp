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
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "hla/hla_kernel.hpp"
#include "hla/tensor.hpp"

namespace hla {

inline constexpr std::size_t kDefaultChunkSize = 64;

/// Recurrent state of one batch x head stream. After absorbing tokens
/// 0..t the context is sum_j decay^(t-j) T_k[j] v_j^T and eta_acc is
/// sum_j decay^(t-j) T_k[j]. Its size does not depend on the step count.
template <Real T>
struct ContextState {
  Tensor<T> context;  // [d_phi^F, d]
  Tensor<T> eta_acc;  // [d_phi^F]
  std::size_t step = 0;
  T decay{1};
};

template <Real T>
ContextState<T> state_init(const HlaConfig& cfg);

/// Absorbs one token: context <- decay * context + T_k (x) v and
/// eta_acc <- decay * eta_acc + T_k, with T_k the outer product of the F
/// key feature rows.
template <Real T>
void state_push(ContextState<T>& state,
                std::span<const std::span<const T>> phi_k_rows,
                std::span<const T> v_row,
                Expansion expansion = Expansion::kFused);

/// (T_q . context) / (T_q . eta_acc + eps) for the query feature row.
template <Real T>
std::vector<T> state_query(const ContextState<T>& state,
                           std::span<const T> phi_q_row, const HlaConfig& cfg);

/// Causal HLA over [B,H,N,*] inputs, identical to sweeping state_push and
/// state_query over the sequence. Tokens are processed in chunks of
/// `chunk_size`: inside a chunk the scores are formed directly, across
/// chunks the carried state is used. chunk_size == 1 is the pure recurrence.
template <Real T>
Tensor<T> causal_forward(const HlaConfig& cfg, const Tensor<T>& phi_q,
                         std::span<const Tensor<T>> phi_ks, const Tensor<T>& v,
                         std::size_t chunk_size = kDefaultChunkSize);

struct StreamingOpCount {
  std::uint64_t push_multiplies = 0;  // d_phi^F * d per pushed token
  std::uint64_t push_adds = 0;        // same number of additions
  std::uint64_t query_ops = 0;        // N * d_phi^F * d for N queries
  std::uint64_t decay_path_total = 0; // 3 * d_phi^F * d + N * d * d_phi^F
};

StreamingOpCount op_count(const HlaConfig& cfg, std::uint64_t n);

/// Writes state.json ({step, decay, config}) plus context.bin and
/// eta_acc.bin in the binary tensor format.
template <Real T>
void save_state(const std::filesystem::path& dir, const ContextState<T>& state,
                const HlaConfig& cfg);

template <Real T>
std::pair<ContextState<T>, HlaConfig> load_state(
    const std::filesystem::path& dir);

}  // namespace hla
