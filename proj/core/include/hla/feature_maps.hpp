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

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "hla/tensor.hpp"

namespace hla {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kDefaultRopeBase = 10000.0;

struct FeatureMapShape {
  std::size_t d_in = 128;
  std::size_t d_hidden = 128;
  std::size_t d_out = 6;
  bool relu_output = true;
  bool layernorm = false;
};

/// Weights of one phi network:
///   y = relu?(layernorm?(gelu(x * w1 + b1) * w2 + b2))
/// Weights are stored [fan_in, fan_out]. ln_gamma/ln_beta are only
/// meaningful when `layernorm` is set.
template <Real T>
struct FeatureMapParams {
  Tensor<T> w1;
  Tensor<T> b1;
  Tensor<T> w2;
  Tensor<T> b2;
  bool relu_output = false;
  bool layernorm = false;
  Tensor<T> ln_gamma;
  Tensor<T> ln_beta;

  std::size_t d_in() const { return w1.dim(0); }
  std::size_t d_hidden() const { return w1.dim(1); }
  std::size_t d_out() const { return w2.dim(1); }
  FeatureMapShape map_shape() const {
    return {d_in(), d_hidden(), d_out(), relu_output, layernorm};
  }

  /// Throws DimensionError if the tensors do not form a consistent network.
  void validate() const;

  /// Trainable tensors in a fixed order (layer-norm pair only when enabled).
  std::vector<Tensor<T>*> parameters();
  std::vector<const Tensor<T>*> parameters() const;

  /// All-zero weights with the given layout; gamma is zero too, which makes
  /// this the natural gradient accumulator.
  static FeatureMapParams zeros(const FeatureMapShape& shape);
  static FeatureMapParams zeros_like(const FeatureMapParams& other) {
    return zeros(other.map_shape());
  }
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0, gamma 1, beta 0.
template <Real T>
FeatureMapParams<T> init_feature_map(const FeatureMapShape& shape,
                                     std::mt19937_64& rng);

/// Applies the network to the trailing axis of `x`.
template <Real T>
Tensor<T> phi_forward(const FeatureMapParams<T>& p, const Tensor<T>& x);

/// Accumulates parameter gradients into `grads` and returns dL/dx.
template <Real T>
Tensor<T> phi_backward(const FeatureMapParams<T>& p, const Tensor<T>& x,
                       const Tensor<T>& grad_out, FeatureMapParams<T>& grads);

template <Real T>
T gelu(T x);
template <Real T>
T gelu_derivative(T x);

struct RopeConfig {
  std::size_t head_dim = 128;
  double base = kDefaultRopeBase;
  /// Explicit position per sequence index; empty means 0, 1, ..., N-1.
  std::vector<std::size_t> positions;

  void validate() const;
};

/// Rotates channel pairs (2i, 2i+1) of x[..., N, head_dim] by
/// p * base^(-2i / head_dim) where p is the position of the row.
template <Real T>
Tensor<T> apply_rope(const Tensor<T>& x, const RopeConfig& cfg);

/// Adjoint of apply_rope (rotation by the negated angle).
template <Real T>
Tensor<T> rope_backward(const Tensor<T>& grad, const RopeConfig& cfg);

template <Real T>
Tensor<T> scale_queries(const Tensor<T>& q, double scale);

inline double default_query_scale(std::size_t head_dim) {
  return 1.0 / std::sqrt(static_cast<double>(head_dim));
}

}  // namespace hla
