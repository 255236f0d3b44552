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

#include "hla/distill.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "hla/error.hpp"
#include "hla/feature_maps.hpp"
#include "hla/reference_attention.hpp"

namespace hla {

void DistillConfig::validate() const {
  if (steps == 0) throw ConfigError("distill: steps must be >= 1");
  if (batch == 0 || tokens == 0 || heads == 0 || head_dim == 0 || d_phi == 0) {
    throw ConfigError("distill: dimensions must be positive");
  }
  if (factors < 2) throw ConfigError("distill: factors must be >= 2");
  if (use_rope && head_dim % 2 != 0) {
    throw ConfigError("distill: RoPE needs an even head_dim");
  }
  if (!std::isfinite(learning_rate) || learning_rate < 0) {
    throw ConfigError("distill: learning rate must be finite and >= 0");
  }
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_eps > 0)) {
    throw ConfigError("distill: invalid optimizer hyper-parameters");
  }
  if (!(teacher_gain > 0) || !std::isfinite(teacher_gain)) {
    throw ConfigError("distill: teacher_gain must be positive");
  }
}

namespace {

Tensor<double> normal_batch(const DistillConfig& cfg, std::mt19937_64& rng) {
  Tensor<double> x({cfg.batch, cfg.tokens, cfg.heads * cfg.head_dim});
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& e : x.values()) e = dist(rng);
  return x;
}

}  // namespace

Tensor<double> teacher_forward(const BlockParams<double>& p,
                               const Tensor<double>& x, double gain) {
  Tensor<double> q = split_heads(linear_forward(p.to_q, x), p.heads);
  Tensor<double> k = split_heads(linear_forward(p.to_k, x), p.heads);
  const Tensor<double> v = split_heads(linear_forward(p.to_v, x), p.heads);
  if (p.use_rope) {
    const RopeConfig rope{p.head_dim(), p.rope_base, {}};
    q = apply_rope(q, rope);
    k = apply_rope(k, rope);
  }
  if (gain != 1.0) q = scale_queries(q, gain);
  return merge_heads(softmax_attention(q, k, v));
}

DistillProblem make_problem(const DistillConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  BlockShape shape;
  shape.model_dim = cfg.heads * cfg.head_dim;
  shape.heads = cfg.heads;
  shape.factors = cfg.factors;
  shape.d_phi = cfg.d_phi;
  shape.phi_hidden = cfg.phi_hidden;
  shape.modulation_hidden = cfg.phi_hidden;
  shape.use_rope = cfg.use_rope;
  shape.eps = cfg.eps;
  DistillProblem p{init_block_params<double>(shape, rng), {}, {}};
  if (cfg.zero_init_modulation) p.student.phi_v1.ln_gamma.fill(0.0);
  p.eval_x = normal_batch(cfg, rng);
  p.eval_target = teacher_forward(p.student, p.eval_x, cfg.teacher_gain);
  return p;
}

namespace {

double mse(const Tensor<double>& a, const Tensor<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = a[i] - b[i];
    acc += e * e;
  }
  return acc / static_cast<double>(a.size());
}

}  // namespace

double distill_loss_value(const BlockParams<double>& student,
                          const Tensor<double>& x,
                          const Tensor<double>& target) {
  BlockCache<double> cache;
  hla_attention_block(student, x, &cache);
  return mse(cache.merged, target);
}

LossAndGrad distill_loss(const BlockParams<double>& student,
                         const Tensor<double>& x,
                         const Tensor<double>& target) {
  BlockCache<double> cache;
  hla_attention_block(student, x, &cache);
  const Tensor<double>& y = cache.merged;
  if (y.shape() != target.shape()) {
    throw DimensionError("distill: target shape mismatch");
  }
  Tensor<double> grad(y.shape());
  const double scale = 2.0 / static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) grad[i] = scale * (y[i] - target[i]);
  auto g = block_backward_from_attention(student, cache, grad);
  return {mse(y, target), std::move(g.params)};
}

DistillResult distill_run(const DistillConfig& cfg) {
  return distill_run(cfg, make_problem(cfg));
}

DistillResult distill_run(const DistillConfig& cfg, DistillProblem problem) {
  cfg.validate();
  // Training batches come from a stream separate from initialization so
  // tweaking the problem does not shift the data.
  std::mt19937_64 data_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  BlockParams<double>& student = problem.student;
  std::vector<Tensor<double>*> params = student.feature_parameters();
  std::vector<Tensor<double>> m, v;
  if (cfg.optimizer == Optimizer::kAdam) {
    for (auto* t : params) {
      m.push_back(Tensor<double>::zeros_like(*t));
      v.push_back(Tensor<double>::zeros_like(*t));
    }
  }
  DistillResult result;
  auto record = [&](std::size_t step) {
    const double loss =
        distill_loss_value(student, problem.eval_x, problem.eval_target);
    if (!std::isfinite(loss)) {
      throw DivergenceError(step, "distill: non-finite loss");
    }
    result.losses.push_back(loss);
  };
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    record(step);
    const Tensor<double> x = normal_batch(cfg, data_rng);
    const Tensor<double> target = teacher_forward(student, x, cfg.teacher_gain);
    LossAndGrad lg = distill_loss(student, x, target);
    if (!std::isfinite(lg.loss)) {
      throw DivergenceError(step, "distill: non-finite training loss");
    }
    std::vector<Tensor<double>*> grads = lg.grads.feature_parameters();
    double norm2 = 0;
    for (auto* g : grads)
      for (double e : g->values()) norm2 += e * e;
    result.grad_norms.push_back(std::sqrt(norm2));
    const double t = static_cast<double>(step + 1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto pv = params[i]->values();
      auto gv = grads[i]->values();
      if (cfg.optimizer == Optimizer::kGradientDescent) {
        for (std::size_t j = 0; j < pv.size(); ++j) {
          pv[j] -= cfg.learning_rate * gv[j];
        }
        continue;
      }
      auto mv = m[i].values();
      auto vv = v[i].values();
      const double c1 = 1.0 - std::pow(cfg.beta1, t);
      const double c2 = 1.0 - std::pow(cfg.beta2, t);
      for (std::size_t j = 0; j < pv.size(); ++j) {
        mv[j] = cfg.beta1 * mv[j] + (1 - cfg.beta1) * gv[j];
        vv[j] = cfg.beta2 * vv[j] + (1 - cfg.beta2) * gv[j] * gv[j];
        pv[j] -= cfg.learning_rate * (mv[j] / c1) /
                 (std::sqrt(vv[j] / c2) + cfg.adam_eps);
      }
    }
  }
  record(cfg.steps);
  result.student = std::move(student);
  return result;
}

std::string loss_csv(const DistillResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss,grad_norm\n";
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    os << i << ',' << r.losses[i] << ',';
    if (i < r.grad_norms.size()) os << r.grad_norms[i];
    os << '\n';
  }
  return os.str();
}

void write_loss_csv(const std::filesystem::path& path, const DistillResult& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << loss_csv(r);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace hla
