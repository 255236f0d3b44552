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

#include "hla/value_modulation.hpp"

namespace hla {
namespace {

template <Real T>
void check(const Tensor<T>& t, const Tensor<T>& v, const FeatureMapParams<T>& p1,
           const FeatureMapParams<T>& p2) {
  if (t.shape() != v.shape()) {
    throw DimensionError("modulate: t " + shape_to_string(t.shape()) +
                         " and v " + shape_to_string(v.shape()) + " differ");
  }
  p1.validate();
  p2.validate();
  const std::size_t d = t.dim(-1);
  for (const auto* p : {&p1, &p2}) {
    if (p->d_in() != d || p->d_out() != d) {
      throw DimensionError("modulate: gate networks must map " +
                           std::to_string(d) + " -> " + std::to_string(d));
    }
    if (p->relu_output) {
      throw ContractError("modulate: gate networks must not squash their "
                          "output (relu_output is set)");
    }
  }
}

}  // namespace

template <Real T>
Tensor<T> modulate(const Tensor<T>& t, const Tensor<T>& v,
                   const FeatureMapParams<T>& p1, const FeatureMapParams<T>& p2) {
  check(t, v, p1, p2);
  const Tensor<T> gate_t = phi_forward(p1, t);
  const Tensor<T> gate_v = phi_forward(p2, v);
  Tensor<T> out = t;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += gate_t[i] * gate_v[i];
  return out;
}

template <Real T>
ModulationGrads<T> modulate_backward(const Tensor<T>& t, const Tensor<T>& v,
                                     const FeatureMapParams<T>& p1,
                                     const FeatureMapParams<T>& p2,
                                     const Tensor<T>& grad_out,
                                     FeatureMapParams<T>& g1,
                                     FeatureMapParams<T>& g2) {
  check(t, v, p1, p2);
  if (grad_out.shape() != t.shape()) {
    throw DimensionError("modulate_backward: grad_out shape mismatch");
  }
  const Tensor<T> gate_t = phi_forward(p1, t);
  const Tensor<T> gate_v = phi_forward(p2, v);
  Tensor<T> d_gate_t(t.shape()), d_gate_v(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    d_gate_t[i] = grad_out[i] * gate_v[i];
    d_gate_v[i] = grad_out[i] * gate_t[i];
  }
  ModulationGrads<T> grads{phi_backward(p1, t, d_gate_t, g1),
                           phi_backward(p2, v, d_gate_v, g2)};
  for (std::size_t i = 0; i < t.size(); ++i) grads.t[i] += grad_out[i];
  return grads;
}

template Tensor<float> modulate<float>(const Tensor<float>&, const Tensor<float>&,
                                       const FeatureMapParams<float>&,
                                       const FeatureMapParams<float>&);
template Tensor<double> modulate<double>(const Tensor<double>&,
                                         const Tensor<double>&,
                                         const FeatureMapParams<double>&,
                                         const FeatureMapParams<double>&);
template ModulationGrads<float> modulate_backward<float>(
    const Tensor<float>&, const Tensor<float>&, const FeatureMapParams<float>&,
    const FeatureMapParams<float>&, const Tensor<float>&,
    FeatureMapParams<float>&, FeatureMapParams<float>&);
template ModulationGrads<double> modulate_backward<double>(
    const Tensor<double>&, const Tensor<double>&,
    const FeatureMapParams<double>&, const FeatureMapParams<double>&,
    const Tensor<double>&, FeatureMapParams<double>&,
    FeatureMapParams<double>&);

}  // namespace hla
