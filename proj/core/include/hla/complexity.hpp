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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hla {

enum class AttentionKind { kSoftmax, kLinear, kHla };

std::string to_string(AttentionKind kind);

/// Shape of one attention layer. Counts are per layer and per sample.
struct ModelSpec {
  AttentionKind kind = AttentionKind::kHla;
  std::uint64_t tokens = 12600;
  std::uint64_t heads = 12;
  std::uint64_t head_dim = 128;
  std::uint64_t d_phi = 6;
  std::uint64_t factors = 3;
  std::uint64_t model_dim = 1536;
  std::uint64_t phi_hidden = 0;  // 0 -> head_dim
  bool include_phi_mlps = true;
  bool include_projections = true;
  bool include_modulation = true;
  double softmax_cost = 5.0;  // FLOPs per score element for exp + divide

  std::uint64_t hidden() const { return phi_hidden ? phi_hidden : head_dim; }
  /// Throws ConfigError when model_dim != heads * head_dim or a dim is 0.
  void validate() const;
};

/// Per-component FLOP counts. One multiply or one add is one FLOP, so a
/// length-n dot product costs 2n.
struct FlopsReport {
  double projections = 0;    // q, k, v and output maps
  double phi_maps = 0;       // query and key feature networks
  double scores = 0;         // Q K^T (softmax only)
  double softmax = 0;        // exp + normalize (softmax only)
  double weighted_sum = 0;   // A V (softmax only)
  double key_tensor = 0;     // outer products of key features
  double context = 0;        // sum_j T_k[j] v_j^T
  double query_tensor = 0;   // outer products of query features
  double normalization = 0;  // key sum and eta
  double output = 0;         // T_q C
  double modulation = 0;     // value modulation gates
  double total = 0;

  /// Attention core without projections, feature maps or modulation.
  double kernel() const;
  /// Recomputes total from the components.
  void finalize();
};

FlopsReport flops_softmax(const ModelSpec& spec);
FlopsReport flops_linear(const ModelSpec& spec);
FlopsReport flops_hla(const ModelSpec& spec);
/// Dispatches on spec.kind.
FlopsReport flops(const ModelSpec& spec);

/// Smallest token count at which `efficient` costs fewer FLOPs than
/// `quadratic` (totals), searched up to 2^40. nullopt if never.
std::optional<std::uint64_t> crossover_point(const ModelSpec& quadratic,
                                             const ModelSpec& efficient);

std::vector<std::string> preset_names();
/// Throws ConfigError listing the valid names.
ModelSpec preset(const std::string& name);

nlohmann::json to_json(const FlopsReport& report);
nlohmann::json to_json(const ModelSpec& spec);
/// "component,flops" rows, header included.
std::string to_csv(const FlopsReport& report);

}  // namespace hla
