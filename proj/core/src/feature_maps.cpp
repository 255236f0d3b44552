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

#include "hla/feature_maps.hpp"

#include <cmath>
#include <numbers>

namespace hla {

template <Real T>
void FeatureMapParams<T>::validate() const {
  if (w1.rank() != 2 || w2.rank() != 2 || b1.rank() != 1 || b2.rank() != 1) {
    throw DimensionError("feature map: expected 2-D weights and 1-D biases");
  }
  if (b1.dim(0) != w1.dim(1) || w2.dim(0) != w1.dim(1) ||
      b2.dim(0) != w2.dim(1)) {
    throw DimensionError("feature map: inconsistent layer sizes w1" +
                         shape_to_string(w1.shape()) + " w2" +
                         shape_to_string(w2.shape()));
  }
  if (layernorm && (ln_gamma.shape() != b2.shape() ||
                    ln_beta.shape() != b2.shape())) {
    throw DimensionError("feature map: layer-norm parameters must be [d_out]");
  }
}

template <Real T>
std::vector<Tensor<T>*> FeatureMapParams<T>::parameters() {
  std::vector<Tensor<T>*> out{&w1, &b1, &w2, &b2};
  if (layernorm) {
    out.push_back(&ln_gamma);
    out.push_back(&ln_beta);
  }
  return out;
}

template <Real T>
std::vector<const Tensor<T>*> FeatureMapParams<T>::parameters() const {
  std::vector<const Tensor<T>*> out{&w1, &b1, &w2, &b2};
  if (layernorm) {
    out.push_back(&ln_gamma);
    out.push_back(&ln_beta);
  }
  return out;
}

template <Real T>
FeatureMapParams<T> FeatureMapParams<T>::zeros(const FeatureMapShape& s) {
  FeatureMapParams p;
  p.w1 = Tensor<T>({s.d_in, s.d_hidden});
  p.b1 = Tensor<T>({s.d_hidden});
  p.w2 = Tensor<T>({s.d_hidden, s.d_out});
  p.b2 = Tensor<T>({s.d_out});
  p.relu_output = s.relu_output;
  p.layernorm = s.layernorm;
  p.ln_gamma = Tensor<T>({s.d_out});
  p.ln_beta = Tensor<T>({s.d_out});
  return p;
}

template <Real T>
FeatureMapParams<T> init_feature_map(const FeatureMapShape& shape,
                                     std::mt19937_64& rng) {
  auto p = FeatureMapParams<T>::zeros(shape);
  auto uniform_fill = [&rng](Tensor<T>& w) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.dim(0)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& x : w.values()) x = static_cast<T>(dist(rng));
  };
  uniform_fill(p.w1);
  uniform_fill(p.w2);
  p.ln_gamma.fill(T{1});
  return p;
}

template <Real T>
T gelu(T x) {
  return T(0.5) * x * (T{1} + std::erf(x * (T{1} / std::numbers::sqrt2_v<T>)));
}

template <Real T>
T gelu_derivative(T x) {
  const T cdf = T(0.5) * (T{1} + std::erf(x * (T{1} / std::numbers::sqrt2_v<T>)));
  const T pdf = std::exp(T(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<T> *
                (T{1} / std::numbers::sqrt2_v<T>);
  return cdf + x * pdf;
}

namespace {

// Per-row intermediates of the forward pass.
template <Real T>
struct RowActivations {
  std::vector<T> hidden_pre;  // x*w1 + b1
  std::vector<T> hidden;      // gelu(hidden_pre)
  std::vector<T> out_pre;     // hidden*w2 + b2
  std::vector<T> normed;      // (out_pre - mean) / sigma, when layer-norm
  std::vector<T> final_pre;   // value fed to the output relu
  T inv_sigma{1};

  explicit RowActivations(const FeatureMapParams<T>& p)
      : hidden_pre(p.d_hidden()),
        hidden(p.d_hidden()),
        out_pre(p.d_out()),
        normed(p.d_out()),
        final_pre(p.d_out()) {}
};

template <Real T>
void forward_row(const FeatureMapParams<T>& p, const T* x,
                 RowActivations<T>& act) {
  const std::size_t din = p.d_in(), dh = p.d_hidden(), dout = p.d_out();
  const T* w1 = p.w1.data();
  const T* w2 = p.w2.data();
  for (std::size_t j = 0; j < dh; ++j) {
    T acc = p.b1[j];
    for (std::size_t i = 0; i < din; ++i) acc += x[i] * w1[i * dh + j];
    act.hidden_pre[j] = acc;
    act.hidden[j] = gelu(acc);
  }
  for (std::size_t j = 0; j < dout; ++j) {
    T acc = p.b2[j];
    for (std::size_t i = 0; i < dh; ++i) acc += act.hidden[i] * w2[i * dout + j];
    act.out_pre[j] = acc;
  }
  if (p.layernorm) {
    T mean{0};
    for (T z : act.out_pre) mean += z;
    mean /= static_cast<T>(dout);
    T var{0};
    for (T z : act.out_pre) var += (z - mean) * (z - mean);
    var /= static_cast<T>(dout);
    act.inv_sigma = T{1} / std::sqrt(var + static_cast<T>(kLayerNormEps));
    for (std::size_t j = 0; j < dout; ++j) {
      act.normed[j] = (act.out_pre[j] - mean) * act.inv_sigma;
      act.final_pre[j] = act.normed[j] * p.ln_gamma[j] + p.ln_beta[j];
    }
  } else {
    act.final_pre = act.out_pre;
  }
}

template <Real T>
std::size_t check_rows(const FeatureMapParams<T>& p, const Tensor<T>& x) {
  p.validate();
  if (x.rank() == 0 || x.dim(-1) != p.d_in()) {
    throw DimensionError("phi: input trailing dim " +
                         shape_to_string(x.shape()) + " != d_in " +
                         std::to_string(p.d_in()));
  }
  return x.size() / p.d_in();
}

Shape with_last(const Shape& s, std::size_t last) {
  Shape out = s;
  out.back() = last;
  return out;
}

}  // namespace

template <Real T>
Tensor<T> phi_forward(const FeatureMapParams<T>& p, const Tensor<T>& x) {
  const std::size_t rows = check_rows(p, x);
  const std::size_t din = p.d_in(), dout = p.d_out();
  Tensor<T> y(with_last(x.shape(), dout));
  RowActivations<T> act(p);
  for (std::size_t r = 0; r < rows; ++r) {
    forward_row(p, x.data() + r * din, act);
    T* out = y.data() + r * dout;
    for (std::size_t j = 0; j < dout; ++j) {
      const T z = act.final_pre[j];
      out[j] = p.relu_output ? std::max(z, T{0}) : z;
    }
  }
  return y;
}

template <Real T>
Tensor<T> phi_backward(const FeatureMapParams<T>& p, const Tensor<T>& x,
                       const Tensor<T>& grad_out, FeatureMapParams<T>& grads) {
  const std::size_t rows = check_rows(p, x);
  const std::size_t din = p.d_in(), dh = p.d_hidden(), dout = p.d_out();
  if (grad_out.shape() != with_last(x.shape(), dout)) {
    throw DimensionError("phi_backward: grad_out shape " +
                         shape_to_string(grad_out.shape()));
  }
  if (grads.map_shape().d_in != din || grads.d_hidden() != dh ||
      grads.d_out() != dout) {
    throw DimensionError("phi_backward: gradient buffers do not match params");
  }
  Tensor<T> grad_x(x.shape());
  RowActivations<T> act(p);
  std::vector<T> d_final(dout), d_out_pre(dout), d_hidden(dh);
  const T* w1 = p.w1.data();
  const T* w2 = p.w2.data();
  T* gw1 = grads.w1.data();
  T* gw2 = grads.w2.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * din;
    const T* gy = grad_out.data() + r * dout;
    forward_row(p, xr, act);
    for (std::size_t j = 0; j < dout; ++j) {
      d_final[j] = (p.relu_output && !(act.final_pre[j] > T{0})) ? T{0} : gy[j];
    }
    if (p.layernorm) {
      T mean_g{0}, mean_gx{0};
      for (std::size_t j = 0; j < dout; ++j) {
        grads.ln_gamma[j] += d_final[j] * act.normed[j];
        grads.ln_beta[j] += d_final[j];
        const T g = d_final[j] * p.ln_gamma[j];
        mean_g += g;
        mean_gx += g * act.normed[j];
      }
      mean_g /= static_cast<T>(dout);
      mean_gx /= static_cast<T>(dout);
      for (std::size_t j = 0; j < dout; ++j) {
        const T g = d_final[j] * p.ln_gamma[j];
        d_out_pre[j] = act.inv_sigma * (g - mean_g - act.normed[j] * mean_gx);
      }
    } else {
      d_out_pre = d_final;
    }
    for (std::size_t j = 0; j < dout; ++j) grads.b2[j] += d_out_pre[j];
    for (std::size_t i = 0; i < dh; ++i) {
      T acc{0};
      for (std::size_t j = 0; j < dout; ++j) {
        gw2[i * dout + j] += act.hidden[i] * d_out_pre[j];
        acc += w2[i * dout + j] * d_out_pre[j];
      }
      d_hidden[i] = acc * gelu_derivative(act.hidden_pre[i]);
      grads.b1[i] += d_hidden[i];
    }
    T* gx = grad_x.data() + r * din;
    for (std::size_t i = 0; i < din; ++i) {
      T acc{0};
      for (std::size_t j = 0; j < dh; ++j) {
        gw1[i * dh + j] += xr[i] * d_hidden[j];
        acc += w1[i * dh + j] * d_hidden[j];
      }
      gx[i] = acc;
    }
  }
  return grad_x;
}

void RopeConfig::validate() const {
  if (head_dim == 0 || head_dim % 2 != 0) {
    throw DimensionError("rope: head_dim must be even and positive, got " +
                         std::to_string(head_dim));
  }
  if (!(base > 1.0) || !std::isfinite(base)) {
    throw ConfigError("rope: base must be a finite value > 1");
  }
}

namespace {

template <Real T>
Tensor<T> rotate(const Tensor<T>& x, const RopeConfig& cfg, double sign) {
  cfg.validate();
  if (x.rank() < 2 || x.dim(-1) != cfg.head_dim) {
    throw DimensionError("rope: expected [..., N, " +
                         std::to_string(cfg.head_dim) + "], got " +
                         shape_to_string(x.shape()));
  }
  const std::size_t d = cfg.head_dim;
  const std::size_t n = x.dim(-2);
  if (!cfg.positions.empty() && cfg.positions.size() != n) {
    throw DimensionError("rope: positions has " +
                         std::to_string(cfg.positions.size()) +
                         " entries for sequence length " + std::to_string(n));
  }
  // cos/sin table per (row, pair), shared by all leading slices.
  const std::size_t pairs = d / 2;
  std::vector<T> cos_t(n * pairs), sin_t(n * pairs);
  for (std::size_t s = 0; s < n; ++s) {
    const double pos = static_cast<double>(
        cfg.positions.empty() ? s : cfg.positions[s]);
    for (std::size_t i = 0; i < pairs; ++i) {
      const double freq =
          std::pow(cfg.base, -2.0 * static_cast<double>(i) /
                                 static_cast<double>(d));
      const double angle = sign * pos * freq;
      cos_t[s * pairs + i] = static_cast<T>(std::cos(angle));
      sin_t[s * pairs + i] = static_cast<T>(std::sin(angle));
    }
  }
  Tensor<T> out(x.shape());
  const std::size_t rows = x.size() / d;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t s = r % n;
    const T* in = x.data() + r * d;
    T* o = out.data() + r * d;
    for (std::size_t i = 0; i < pairs; ++i) {
      const T c = cos_t[s * pairs + i], sn = sin_t[s * pairs + i];
      const T a = in[2 * i], b = in[2 * i + 1];
      o[2 * i] = a * c - b * sn;
      o[2 * i + 1] = a * sn + b * c;
    }
  }
  return out;
}

}  // namespace

template <Real T>
Tensor<T> apply_rope(const Tensor<T>& x, const RopeConfig& cfg) {
  return rotate(x, cfg, 1.0);
}

template <Real T>
Tensor<T> rope_backward(const Tensor<T>& grad, const RopeConfig& cfg) {
  return rotate(grad, cfg, -1.0);
}

template <Real T>
Tensor<T> scale_queries(const Tensor<T>& q, double scale) {
  if (!std::isfinite(scale) || !(scale > 0.0)) {
    throw ConfigError("scale_queries: scale must be finite and > 0");
  }
  Tensor<T> out = q;
  const T s = static_cast<T>(scale);
  for (auto& x : out.values()) x *= s;
  return out;
}

#define HLA_INSTANTIATE(T)                                                   \
  template struct FeatureMapParams<T>;                                       \
  template FeatureMapParams<T> init_feature_map<T>(const FeatureMapShape&,   \
                                                   std::mt19937_64&);        \
  template Tensor<T> phi_forward<T>(const FeatureMapParams<T>&,              \
                                    const Tensor<T>&);                       \
  template Tensor<T> phi_backward<T>(const FeatureMapParams<T>&,             \
                                     const Tensor<T>&, const Tensor<T>&,     \
                                     FeatureMapParams<T>&);                  \
  template T gelu<T>(T);                                                     \
  template T gelu_derivative<T>(T);                                          \
  template Tensor<T> apply_rope<T>(const Tensor<T>&, const RopeConfig&);     \
  template Tensor<T> rope_backward<T>(const Tensor<T>&, const RopeConfig&);  \
  template Tensor<T> scale_queries<T>(const Tensor<T>&, double);
HLA_INSTANTIATE(float)
HLA_INSTANTIATE(double)
#undef HLA_INSTANTIATE

}  // namespace hla
