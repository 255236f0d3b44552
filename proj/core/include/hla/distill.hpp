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
#include <vector>

#include "hla/attention_block.hpp"
#include "hla/tensor.hpp"

namespace hla {

enum class Optimizer { kGradientDescent, kAdam };

struct DistillConfig {
  std::uint64_t seed = 0;
  std::size_t steps = 200;
  std::size_t batch = 4;
  std::size_t tokens = 64;
  std::size_t heads = 2;
  std::size_t head_dim = 16;
  std::size_t d_phi = 4;
  std::size_t factors = 3;
  std::size_t phi_hidden = 0;  // 0 -> head_dim
  double learning_rate = 2e-3;
  Optimizer optimizer = Optimizer::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double eps = 1e-6;
  bool use_rope = true;
  double teacher_gain = 1.0;  // multiplies teacher queries (sharpness)
  // Zero the modulation layer-norm gain so training starts from plain HLA.
  bool zero_init_modulation = true;

  /// Throws ConfigError.
  void validate() const;
};

/// Everything a run needs; exposed so tests can tweak the starting point.
struct DistillProblem {
  BlockParams<double> student;
  Tensor<double> eval_x;       // [B,N,D]
  Tensor<double> eval_target;  // teacher output, [B,N,D]
};

/// Teacher: softmax attention over the student's frozen q/k/v projections
/// (RoPE applied when enabled), heads merged, no output projection.
Tensor<double> teacher_forward(const BlockParams<double>& params,
                               const Tensor<double>& x, double gain);

DistillProblem make_problem(const DistillConfig& cfg);

struct LossAndGrad {
  double loss = 0;
  BlockParams<double> grads;  // only feature parameters are filled
};

/// Mean squared error between the student's pre-projection output and the
/// target, with its gradient.
LossAndGrad distill_loss(const BlockParams<double>& student,
                         const Tensor<double>& x, const Tensor<double>& target);
double distill_loss_value(const BlockParams<double>& student,
                          const Tensor<double>& x, const Tensor<double>& target);

struct DistillResult {
  std::vector<double> losses;      // eval loss before step 0..steps
  std::vector<double> grad_norms;  // training-batch gradient norm, per step
  BlockParams<double> student;
};

/// Deterministic given cfg. Throws DivergenceError on a non-finite loss.
DistillResult distill_run(const DistillConfig& cfg);
DistillResult distill_run(const DistillConfig& cfg, DistillProblem problem);

/// Columns step,loss,grad_norm; the last row has an empty grad_norm.
void write_loss_csv(const std::filesystem::path& path, const DistillResult& r);
std::string loss_csv(const DistillResult& r);

}  // namespace hla
