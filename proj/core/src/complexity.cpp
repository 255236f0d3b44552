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

#include "hla/complexity.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "hla/error.hpp"

namespace hla {

std::string to_string(AttentionKind kind) {
  switch (kind) {
    case AttentionKind::kSoftmax: return "softmax";
    case AttentionKind::kLinear: return "linear";
    case AttentionKind::kHla: return "hla";
  }
  return "unknown";
}

void ModelSpec::validate() const {
  if (tokens == 0 || heads == 0 || head_dim == 0 || model_dim == 0) {
    throw ConfigError("model spec: dimensions must be positive");
  }
  if (model_dim != heads * head_dim) {
    throw ConfigError("model spec: model_dim " + std::to_string(model_dim) +
                      " != heads * head_dim " +
                      std::to_string(heads * head_dim));
  }
  if (kind != AttentionKind::kSoftmax && d_phi == 0) {
    throw ConfigError("model spec: d_phi must be positive");
  }
  if (kind == AttentionKind::kHla && factors < 2) {
    throw ConfigError("model spec: HLA needs at least 2 factors");
  }
  if (!(softmax_cost >= 0)) {
    throw ConfigError("model spec: softmax cost must be nonnegative");
  }
}

double FlopsReport::kernel() const {
  return scores + softmax + weighted_sum + key_tensor + context +
         query_tensor + normalization + output;
}

void FlopsReport::finalize() {
  total = projections + phi_maps + modulation + kernel();
}

namespace {

double projection_flops(const ModelSpec& s) {
  if (!s.include_projections) return 0;
  const double n = static_cast<double>(s.tokens);
  const double dm = static_cast<double>(s.model_dim);
  return 4.0 * 2.0 * n * dm * dm;
}

// Two-layer network d_in -> hidden -> d_out, per row.
double mlp_flops(double d_in, double hidden, double d_out) {
  return 2.0 * d_in * hidden + 2.0 * hidden * d_out;
}

// Shared by linear attention (one factor) and HLA.
FlopsReport factored(const ModelSpec& s, double factors) {
  s.validate();
  const double n = static_cast<double>(s.tokens);
  const double h = static_cast<double>(s.heads);
  const double d = static_cast<double>(s.head_dim);
  const double dp = static_cast<double>(s.d_phi);
  const double hid = static_cast<double>(s.hidden());
  const double vol = std::pow(dp, factors);
  const double rows = n * h;
  FlopsReport r;
  r.projections = projection_flops(s);
  if (s.include_phi_mlps) {
    r.phi_maps = (factors + 1.0) * rows * mlp_flops(d, hid, dp);
  }
  // Each extra factor multiplies a growing prefix; the final product
  // dominates at vol multiplies.
  r.key_tensor = rows * (factors - 1.0) * vol;
  r.query_tensor = rows * (factors - 1.0) * vol;
  r.context = rows * 2.0 * vol * d;
  r.normalization = rows * (vol + 2.0 * vol);  // key sum, then eta
  r.output = rows * (2.0 * vol * d + d);       // T_q C, then divide
  if (s.include_modulation) {
    r.modulation = rows * (2.0 * mlp_flops(d, hid, d) + 2.0 * d);
  }
  r.finalize();
  return r;
}

}  // namespace

FlopsReport flops_softmax(const ModelSpec& s) {
  s.validate();
  const double n = static_cast<double>(s.tokens);
  const double h = static_cast<double>(s.heads);
  const double d = static_cast<double>(s.head_dim);
  FlopsReport r;
  r.projections = projection_flops(s);
  r.scores = 2.0 * n * n * d * h;
  r.softmax = s.softmax_cost * n * n * h;
  r.weighted_sum = 2.0 * n * n * d * h;
  r.finalize();
  return r;
}

FlopsReport flops_linear(const ModelSpec& s) {
  ModelSpec one = s;
  one.kind = AttentionKind::kLinear;
  return factored(one, 1.0);
}

FlopsReport flops_hla(const ModelSpec& s) {
  ModelSpec copy = s;
  copy.kind = AttentionKind::kHla;
  return factored(copy, static_cast<double>(s.factors));
}

FlopsReport flops(const ModelSpec& spec) {
  switch (spec.kind) {
    case AttentionKind::kSoftmax: return flops_softmax(spec);
    case AttentionKind::kLinear: return flops_linear(spec);
    case AttentionKind::kHla: return flops_hla(spec);
  }
  throw ConfigError("model spec: unknown attention kind");
}

std::optional<std::uint64_t> crossover_point(const ModelSpec& quadratic,
                                             const ModelSpec& efficient) {
  if (quadratic.heads != efficient.heads ||
      quadratic.head_dim != efficient.head_dim) {
    throw ConfigError("crossover: specs must share heads and head_dim");
  }
  auto cheaper = [&](std::uint64_t n) {
    ModelSpec q = quadratic, e = efficient;
    q.tokens = e.tokens = n;
    return flops(e).total < flops(q).total;
  };
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
  if (!cheaper(kLimit)) return std::nullopt;
  if (cheaper(1)) return 1;
  // Both totals are a N^2 + b N with the efficient one linear, so the sign
  // of the difference flips at most once.
  std::uint64_t lo = 1, hi = kLimit;  // lo: not cheaper, hi: cheaper
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (cheaper(mid) ? hi : lo) = mid;
  }
  return hi;
}

namespace {

const std::vector<std::pair<std::string, ModelSpec>>& presets() {
  static const auto table = [] {
    std::vector<std::pair<std::string, ModelSpec>> t;
    const std::pair<const char*, std::uint64_t> res[] = {{"320p", 12600},
                                                         {"480p", 32760}};
    for (const auto& [tag, tokens] : res) {
      ModelSpec quad;
      quad.kind = AttentionKind::kSoftmax;
      quad.tokens = tokens;
      t.emplace_back(std::string("wan-") + tag + "-quad", quad);
      ModelSpec two;
      two.tokens = tokens;
      two.factors = 2;
      two.d_phi = 12;
      two.phi_hidden = 2560;
      t.emplace_back(std::string("wan-") + tag + "-2f", two);
      ModelSpec three;
      three.tokens = tokens;
      three.factors = 3;
      three.d_phi = 6;
      t.emplace_back(std::string("wan-") + tag + "-3f", three);
    }
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, spec] : presets()) names.push_back(name);
  return names;
}

ModelSpec preset(const std::string& name) {
  for (const auto& [n, spec] : presets()) {
    if (n == name) return spec;
  }
  std::string list;
  for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "'; available: " + list);
}

nlohmann::json to_json(const FlopsReport& r) {
  return {{"projections", r.projections},
          {"phi_maps", r.phi_maps},
          {"scores", r.scores},
          {"softmax", r.softmax},
          {"weighted_sum", r.weighted_sum},
          {"key_tensor", r.key_tensor},
          {"context", r.context},
          {"query_tensor", r.query_tensor},
          {"normalization", r.normalization},
          {"output", r.output},
          {"modulation", r.modulation},
          {"kernel", r.kernel()},
          {"total", r.total}};
}

nlohmann::json to_json(const ModelSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"tokens", s.tokens},
          {"heads", s.heads},
          {"head_dim", s.head_dim},
          {"d_phi", s.d_phi},
          {"factors", s.factors},
          {"model_dim", s.model_dim},
          {"phi_hidden", s.hidden()},
          {"include_phi_mlps", s.include_phi_mlps},
          {"include_projections", s.include_projections},
          {"include_modulation", s.include_modulation},
          {"softmax_cost", s.softmax_cost}};
}

std::string to_csv(const FlopsReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "component,flops\n";
  const nlohmann::json j = to_json(r);
  for (const auto& [key, value] : j.items()) {
    os << key << ',' << value.get<double>() << '\n';
  }
  return os.str();
}

}  // namespace hla
