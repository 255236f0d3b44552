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

#include "hla/feature_maps.hpp"
#include "hla/tensor.hpp"

namespace hla {

/// Residual gate without a squashing activation:
///   t + phi_v1(t) (.) phi_v2(v)
/// Both networks map d -> d and must not carry the output ReLU.
template <Real T>
Tensor<T> modulate(const Tensor<T>& t, const Tensor<T>& v,
                   const FeatureMapParams<T>& p1, const FeatureMapParams<T>& p2);

template <Real T>
struct ModulationGrads {
  Tensor<T> t;
  Tensor<T> v;
};

/// Accumulates parameter gradients into g1/g2 and returns the input
/// gradients.
template <Real T>
ModulationGrads<T> modulate_backward(const Tensor<T>& t, const Tensor<T>& v,
                                     const FeatureMapParams<T>& p1,
                                     const FeatureMapParams<T>& p2,
                                     const Tensor<T>& grad_out,
                                     FeatureMapParams<T>& g1,
                                     FeatureMapParams<T>& g2);

}  // namespace hla
