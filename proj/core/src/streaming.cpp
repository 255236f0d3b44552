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

#include "hla/streaming.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "hla/detail/layout.hpp"
#include "hla/detail/outer_rows.hpp"
#include "hla/parallel.hpp"
#include "hla/tensor_io.hpp"

namespace hla {

template <Real T>
ContextState<T> state_init(const HlaConfig& cfg) {
  cfg.validate();
  const std::size_t volume = cfg.feature_volume();
  ContextState<T> s;
  s.context = Tensor<T>({volume, cfg.head_dim});
  s.eta_acc = Tensor<T>({volume});
  s.decay = static_cast<T>(cfg.decay);
  return s;
}

template <Real T>
void state_push(ContextState<T>& state,
                std::span<const std::span<const T>> phi_k_rows,
                std::span<const T> v_row, Expansion expansion) {
  const std::size_t volume = state.eta_acc.size();
  const std::size_t d = state.context.dim(1);
  if (phi_k_rows.empty()) throw DimensionError("state_push: no key rows");
  const std::size_t dp = phi_k_rows[0].size();
  std::vector<const T*> rows;
  for (const auto& r : phi_k_rows) {
    if (r.size() != dp) throw DimensionError("state_push: key rows differ");
    for (T x : r) {
      if (x < T{0} || std::isnan(x)) {
        throw ContractError("state_push: key feature rows must be >= 0");
      }
    }
    rows.push_back(r.data());
  }
  if (feature_volume(dp, rows.size()) != volume) {
    throw DimensionError("state_push: d_phi^F does not match the state");
  }
  if (v_row.size() != d) {
    throw DimensionError("state_push: value row has " +
                         std::to_string(v_row.size()) + " entries, state " +
                         std::to_string(d));
  }
  std::vector<T> tk(volume);
  detail::expand_row<T>(rows, dp, tk.data(), expansion);
  const T decay = state.decay;
  for (std::size_t p = 0; p < volume; ++p) {
    const T t = tk[p];
    state.eta_acc[p] = decay * state.eta_acc[p] + t;
    T* cp = state.context.data() + p * d;
    for (std::size_t c = 0; c < d; ++c) cp[c] = decay * cp[c] + t * v_row[c];
  }
  ++state.step;
}

template <Real T>
std::vector<T> state_query(const ContextState<T>& state,
                           std::span<const T> phi_q_row, const HlaConfig& cfg) {
  if (state.step == 0) {
    throw ContractError("state_query: state has not absorbed any token");
  }
  const std::size_t volume = state.eta_acc.size();
  const std::size_t d = state.context.dim(1);
  if (feature_volume(phi_q_row.size(), cfg.factors) != volume) {
    throw DimensionError("state_query: query row does not match the state");
  }
  for (T x : phi_q_row) {
    if (x < T{0} || std::isnan(x)) {
      throw ContractError("state_query: query feature row must be >= 0");
    }
  }
  std::vector<const T*> rows(cfg.factors, phi_q_row.data());
  std::vector<T> tq(volume);
  detail::expand_row<T>(rows, phi_q_row.size(), tq.data(), cfg.expansion);
  std::vector<T> out(d, T{0});
  T eta{0};
  for (std::size_t p = 0; p < volume; ++p) {
    const T t = tq[p];
    eta += t * state.eta_acc[p];
    const T* cp = state.context.data() + p * d;
    for (std::size_t c = 0; c < d; ++c) out[c] += t * cp[c];
  }
  const T denom = eta + static_cast<T>(cfg.eps);
  for (auto& x : out) x /= denom;
  return out;
}

template <Real T>
Tensor<T> causal_forward(const HlaConfig& cfg, const Tensor<T>& phi_q,
                         std::span<const Tensor<T>> phi_ks, const Tensor<T>& v,
                         std::size_t chunk_size) {
  cfg.validate();
  if (chunk_size == 0) throw ConfigError("causal_forward: chunk_size must be > 0");
  const auto dq = detail::seq_dims(phi_q, "causal_forward phi_q");
  const auto dv = detail::seq_dims(v, "causal_forward v");
  if (phi_ks.size() != cfg.factors) {
    throw DimensionError("causal_forward: expected " +
                         std::to_string(cfg.factors) + " key tensors");
  }
  if (dq.dim != cfg.d_phi || dv.dim != cfg.head_dim ||
      dv.batch != dq.batch || dv.heads != dq.heads || dv.seq != dq.seq) {
    throw DimensionError("causal_forward: q/v shapes inconsistent with config");
  }
  for (const auto& k : phi_ks) {
    if (k.shape() != phi_q.shape()) {
      throw DimensionError("causal_forward: phi_k shape " +
                           shape_to_string(k.shape()) + " != phi_q shape");
    }
    detail::require_nonnegative(k, "causal_forward phi_k");
  }
  detail::require_nonnegative(phi_q, "causal_forward phi_q");

  const std::size_t n = dq.seq, dp = cfg.d_phi, d = cfg.head_dim;
  const std::size_t volume = cfg.feature_volume();
  const T decay = static_cast<T>(cfg.decay);
  const T eps = static_cast<T>(cfg.eps);
  Tensor<T> out({dq.batch, dq.heads, n, d});

  parallel_for(dq.slices(), [&](std::size_t s) {
    std::vector<T> context(volume * d, T{0}), eta_acc(volume, T{0});
    const std::size_t chunk = std::min(chunk_size, n);
    std::vector<T> tq(chunk * volume), tk(chunk * volume);
    std::vector<T> decay_pow(chunk + 1);
    decay_pow[0] = T{1};
    for (std::size_t i = 1; i <= chunk; ++i) decay_pow[i] = decay_pow[i - 1] * decay;
    std::vector<const T*> rows(cfg.factors);
    const T* vs = v.data() + s * n * d;

    for (std::size_t c0 = 0; c0 < n; c0 += chunk) {
      const std::size_t len = std::min(chunk, n - c0);
      for (std::size_t r = 0; r < len; ++r) {
        const std::size_t row = s * n + c0 + r;
        std::fill(rows.begin(), rows.end(), phi_q.data() + row * dp);
        detail::expand_row<T>(rows, dp, tq.data() + r * volume, cfg.expansion);
        for (std::size_t f = 0; f < cfg.factors; ++f) {
          rows[f] = phi_ks[f].data() + row * dp;
        }
        detail::expand_row<T>(rows, dp, tk.data() + r * volume, cfg.expansion);
      }
      // Outputs: carried state decayed to each row plus in-chunk scores.
      for (std::size_t i = 0; i < len; ++i) {
        const T* ti = tq.data() + i * volume;
        T* o = out.data() + (s * n + c0 + i) * d;
        T eta{0};
        if (c0 > 0) {
          const T carry = decay_pow[i + 1];
          for (std::size_t p = 0; p < volume; ++p) {
            const T tp = ti[p];
            eta += tp * eta_acc[p];
            const T* cp = context.data() + p * d;
            for (std::size_t c = 0; c < d; ++c) o[c] += tp * cp[c];
          }
          eta *= carry;
          for (std::size_t c = 0; c < d; ++c) o[c] *= carry;
        }
        for (std::size_t j = 0; j <= i; ++j) {
          const T* tj = tk.data() + j * volume;
          T score{0};
          for (std::size_t p = 0; p < volume; ++p) score += ti[p] * tj[p];
          score *= decay_pow[i - j];
          eta += score;
          const T* vj = vs + (c0 + j) * d;
          for (std::size_t c = 0; c < d; ++c) o[c] += score * vj[c];
        }
        const T denom = eta + eps;
        for (std::size_t c = 0; c < d; ++c) o[c] /= denom;
      }
      // Carry the state past this chunk.
      const T shrink = decay_pow[len];
      if (shrink != T{1}) {
        for (auto& x : context) x *= shrink;
        for (auto& x : eta_acc) x *= shrink;
      }
      for (std::size_t j = 0; j < len; ++j) {
        const T w = decay_pow[len - 1 - j];
        const T* tj = tk.data() + j * volume;
        const T* vj = vs + (c0 + j) * d;
        for (std::size_t p = 0; p < volume; ++p) {
          const T t = w * tj[p];
          eta_acc[p] += t;
          T* cp = context.data() + p * d;
          for (std::size_t c = 0; c < d; ++c) cp[c] += t * vj[c];
        }
      }
    }
  });
  return out;
}

StreamingOpCount op_count(const HlaConfig& cfg, std::uint64_t n) {
  const auto volume = static_cast<std::uint64_t>(cfg.feature_volume());
  const auto d = static_cast<std::uint64_t>(cfg.head_dim);
  StreamingOpCount c;
  c.push_multiplies = volume * d;
  c.push_adds = volume * d;
  c.query_ops = n * volume * d;
  c.decay_path_total = 3 * volume * d + n * d * volume;
  return c;
}

namespace {

nlohmann::json config_to_json(const HlaConfig& cfg) {
  return {{"factors", cfg.factors},
          {"d_phi", cfg.d_phi},
          {"head_dim", cfg.head_dim},
          {"eps", cfg.eps},
          {"causal", cfg.causal},
          {"decay", cfg.decay},
          {"expansion", cfg.expansion == Expansion::kFused ? "fused" : "generic"}};
}

HlaConfig config_from_json(const nlohmann::json& j) {
  HlaConfig cfg;
  cfg.factors = j.at("factors").get<std::size_t>();
  cfg.d_phi = j.at("d_phi").get<std::size_t>();
  cfg.head_dim = j.at("head_dim").get<std::size_t>();
  cfg.eps = j.at("eps").get<double>();
  cfg.causal = j.at("causal").get<bool>();
  cfg.decay = j.at("decay").get<double>();
  const auto expansion = j.value("expansion", std::string("fused"));
  cfg.expansion = expansion == "generic" ? Expansion::kGeneric : Expansion::kFused;
  return cfg;
}

}  // namespace

template <Real T>
void save_state(const std::filesystem::path& dir, const ContextState<T>& state,
                const HlaConfig& cfg) {
  std::filesystem::create_directories(dir);
  nlohmann::json header{{"step", state.step},
                        {"decay", static_cast<double>(state.decay)},
                        {"precision", std::string(to_string(precision_of<T>))},
                        {"config", config_to_json(cfg)}};
  std::ofstream os(dir / "state.json", std::ios::trunc);
  if (!os) throw FormatError("save_state: cannot write " + dir.string());
  os << header.dump(2) << '\n';
  save_tensor(dir / "context.bin", state.context);
  save_tensor(dir / "eta_acc.bin", state.eta_acc);
}

template <Real T>
std::pair<ContextState<T>, HlaConfig> load_state(
    const std::filesystem::path& dir) {
  std::ifstream is(dir / "state.json");
  if (!is) throw FormatError("load_state: missing " + (dir / "state.json").string());
  ContextState<T> state;
  HlaConfig cfg;
  try {
    const auto header = nlohmann::json::parse(is);
    if (header.at("precision").get<std::string>() != to_string(precision_of<T>)) {
      throw FormatError("load_state: stored precision is " +
                        header.at("precision").get<std::string>());
    }
    state.step = header.at("step").get<std::size_t>();
    state.decay = static_cast<T>(header.at("decay").get<double>());
    cfg = config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("load_state: bad header: ") + e.what());
  }
  cfg.validate();
  state.context = load_tensor<T>(dir / "context.bin");
  state.eta_acc = load_tensor<T>(dir / "eta_acc.bin");
  const std::size_t volume = cfg.feature_volume();
  if (state.context.shape() != Shape{volume, cfg.head_dim} ||
      state.eta_acc.shape() != Shape{volume}) {
    throw FormatError("load_state: tensors do not match the stored config");
  }
  return {std::move(state), cfg};
}

#define HLA_INSTANTIATE(T)                                                     \
  template ContextState<T> state_init<T>(const HlaConfig&);                    \
  template void state_push<T>(ContextState<T>&,                                \
                              std::span<const std::span<const T>>,             \
                              std::span<const T>, Expansion);                  \
  template std::vector<T> state_query<T>(const ContextState<T>&,               \
                                         std::span<const T>,                   \
                                         const HlaConfig&);                    \
  template Tensor<T> causal_forward<T>(const HlaConfig&, const Tensor<T>&,     \
                                       std::span<const Tensor<T>>,             \
                                       const Tensor<T>&, std::size_t);         \
  template void save_state<T>(const std::filesystem::path&,                    \
                              const ContextState<T>&, const HlaConfig&);       \
  template std::pair<ContextState<T>, HlaConfig> load_state<T>(                \
      const std::filesystem::path&);
HLA_INSTANTIATE(float)
HLA_INSTANTIATE(double)
#undef HLA_INSTANTIATE

}  // namespace hla
