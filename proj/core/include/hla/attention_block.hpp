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
#include <random>
#include <vector>

#include "hla/feature_maps.hpp"
#include "hla/hla_kernel.hpp"
#include "hla/tensor.hpp"

namespace hla {

/// Affine map over the trailing axis; weight is [in, out].
template <Real T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
  static Linear zeros(std::size_t in, std::size_t out) {
    return {Tensor<T>({in, out}), Tensor<T>({out})};
  }
};

template <Real T>
Tensor<T> linear_forward(const Linear<T>& layer, const Tensor<T>& x);

/// Accumulates into `grads` and returns dL/dx.
template <Real T>
Tensor<T> linear_backward(const Linear<T>& layer, const Tensor<T>& x,
                          const Tensor<T>& grad_out, Linear<T>& grads);

/// [B, N, H*d] -> [B, H, N, d] and back.
template <Real T>
Tensor<T> split_heads(const Tensor<T>& x, std::size_t heads);
template <Real T>
Tensor<T> merge_heads(const Tensor<T>& x);

struct BlockShape {
  std::size_t model_dim = 1536;
  std::size_t heads = 12;
  std::size_t factors = 3;
  std::size_t d_phi = 6;
  std::size_t phi_hidden = 0;         // 0 -> head dim
  std::size_t modulation_hidden = 0;  // 0 -> head dim
  bool use_rope = true;
  bool use_modulation = true;
  bool modulation_layernorm = true;
  double rope_base = kDefaultRopeBase;
  double eps = 1e-6;
  bool causal = false;
  double decay = 1.0;

  std::size_t head_dim() const;
};

template <Real T>
struct BlockParams {
  std::size_t heads = 1;
  Linear<T> to_q, to_k, to_v, to_out;
  FeatureMapParams<T> phi_q;
  std::vector<FeatureMapParams<T>> phi_k;  // one per factor
  FeatureMapParams<T> phi_v1, phi_v2;
  bool use_rope = true;
  bool use_modulation = true;
  double rope_base = kDefaultRopeBase;
  double scale = 1.0;
  HlaConfig hla;

  std::size_t model_dim() const { return to_q.in_features(); }
  std::size_t head_dim() const { return model_dim() / heads; }

  /// Same layout with every tensor zeroed (gradient accumulator).
  static BlockParams zeros_like(const BlockParams& other);

  /// Every trainable tensor, projections first, in a fixed order.
  std::vector<Tensor<T>*> parameters();
  /// Only the feature-map and modulation tensors.
  std::vector<Tensor<T>*> feature_parameters();
};

/// Projections ~ U(-1/sqrt(D), 1/sqrt(D)) with zero bias, phi maps per
/// init_feature_map. phi_q and phi_kf end in a ReLU, the modulation gates
/// do not and carry a layer-norm when requested.
template <Real T>
BlockParams<T> init_block_params(const BlockShape& shape, std::mt19937_64& rng);

/// Intermediate values kept for the backward pass.
template <Real T>
struct BlockCache {
  Tensor<T> x;         // [B,N,D]
  Tensor<T> q;         // after RoPE and scaling, [B,H,N,d]
  Tensor<T> k;         // after RoPE
  Tensor<T> v;
  Tensor<T> phi_q;     // [B,H,N,d_phi]
  std::vector<Tensor<T>> phi_k;
  HlaOutput<T> attention;   // before modulation
  Tensor<T> modulated;      // after modulation, [B,H,N,d]
  Tensor<T> merged;         // modulated, [B,N,D]; input of to_out
};

/// Full attention block on x[B, N, D], D = heads * head_dim.
template <Real T>
Tensor<T> hla_attention_block(const BlockParams<T>& params, const Tensor<T>& x,
                              BlockCache<T>* cache = nullptr);

template <Real T>
struct BlockGrads {
  BlockParams<T> params;
  Tensor<T> x;
};

template <Real T>
BlockGrads<T> block_backward(const BlockParams<T>& params,
                             const BlockCache<T>& cache,
                             const Tensor<T>& grad_out);

/// Backward pass starting from the gradient of the pre-projection output
/// (cache.merged); to_out receives no gradient.
template <Real T>
BlockGrads<T> block_backward_from_attention(const BlockParams<T>& params,
                                            const BlockCache<T>& cache,
                                            const Tensor<T>& grad_merged);

}  // namespace hla
