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

#include "hla_tools/check.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "hla/complexity.hpp"
#include "hla/error.hpp"
#include "hla/feature_maps.hpp"
#include "hla/reference_attention.hpp"
#include "hla/streaming.hpp"
#include "hla/value_modulation.hpp"

namespace hla::tools {

HlaConfig check_base_config(const CheckOptions& opts) {
  HlaConfig cfg;
  cfg.factors = 2;
  cfg.d_phi = 4;
  cfg.head_dim = 8;
  cfg.eps = 1e-6;
  for (const auto& [key, value] : opts.faults) {
    double x = 0;
    std::istringstream is(value);
    if (!(is >> x) || !is.eof()) {
      throw ConfigError("inject-fault: cannot parse '" + value + "' for " + key);
    }
    if (key == "eps") {
      cfg.eps = x;
    } else if (key == "decay") {
      cfg.decay = x;
    } else if (key == "factors" || key == "d_phi" || key == "head_dim" ||
               key == "memory_cap_bytes") {
      if (x < 0 || x != std::floor(x)) {
        throw ConfigError("inject-fault: " + key + " must be a whole number");
      }
      const auto n = static_cast<std::size_t>(x);
      if (key == "factors") cfg.factors = n;
      if (key == "d_phi") cfg.d_phi = n;
      if (key == "head_dim") cfg.head_dim = n;
      if (key == "memory_cap_bytes") cfg.memory_cap_bytes = n;
    } else {
      throw ConfigError("inject-fault: unknown key '" + key +
                        "' (eps, decay, factors, d_phi, head_dim, "
                        "memory_cap_bytes)");
    }
  }
  cfg.validate();
  if (cfg.head_dim == 0 || cfg.d_phi == 0) {
    throw ConfigError("check: head_dim and d_phi must be positive");
  }
  return cfg;
}

namespace {

using Rng = std::mt19937_64;

template <Real T>
Tensor<T> uniform(Shape shape, double lo, double hi, Rng& rng) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& e : t.values()) e = static_cast<T>(dist(rng));
  return t;
}

template <Real T>
Tensor<T> cast(const Tensor<double>& t) {
  std::vector<T> data(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) data[i] = static_cast<T>(t[i]);
  return Tensor<T>(t.shape(), std::move(data));
}

struct Tolerances {
  double oracle, identity, eta, rowsum, streaming, gradient;
  // Denominator floor for outputs. Outputs are averages of v rows with
  // |v| <= 1, so in single precision entries near zero are compared against
  // that scale instead of their own cancelled magnitude.
  double value_floor;
};

constexpr Tolerances kDoubleTol{1e-10, 1e-12, 1e-10, 1e-12, 1e-8, 1e-6, 1e-300};
constexpr Tolerances kSingleTol{1e-4, 1e-5, 1e-4, 1e-5, 1e-4, 1e-3, 1.0};

template <Real T>
SuiteResult oracle_suite(const HlaConfig& base, const Tolerances& tol, Rng& rng) {
  SuiteResult r{"oracle", 0, tol.oracle, true, ""};
  for (std::size_t f = 2; f <= 4; ++f) {
    HlaConfig cfg = base;
    cfg.factors = f;
    for (int c = 0; c < 50; ++c) {
      const Shape shape{2, 2, 16, cfg.d_phi};
      const auto pq = uniform<T>(shape, 0.05, 1, rng);
      std::vector<Tensor<T>> pk;
      for (std::size_t i = 0; i < f; ++i) pk.push_back(uniform<T>(shape, 0.05, 1, rng));
      const auto v = uniform<T>({2, 2, 16, cfg.head_dim}, -1, 1, rng);
      const auto fast = hla_forward<T>(cfg, pq, pk, v);
      const auto slow = naive_hla<T>(pq, pk, v, static_cast<T>(cfg.eps));
      r.max_error = std::max(r.max_error, max_relative_error(fast.out, slow.out, tol.value_floor));
    }
  }
  return r;
}

template <Real T>
SuiteResult identity_suite(const Tolerances& tol, Rng& rng) {
  SuiteResult r{"identity", 0, tol.identity, true, ""};
  std::uniform_int_distribution<std::size_t> dim(2, 6), fac(2, 4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int c = 0; c < 100; ++c) {
    const std::size_t d = dim(rng), f = fac(rng);
    std::vector<std::vector<T>> qs(f), rs(f);
    std::vector<T> q(d);
    for (auto& e : q) e = static_cast<T>(u(rng));
    T lhs{1};
    for (std::size_t i = 0; i < f; ++i) {
      qs[i] = q;
      rs[i].resize(d);
      for (auto& e : rs[i]) e = static_cast<T>(u(rng));
      T dot{0};
      for (std::size_t j = 0; j < d; ++j) dot += q[j] * rs[i][j];
      lhs *= dot;
    }
    const T rhs = reduce_all(hadamard(outer_product(qs), outer_product(rs)));
    // Normalize by the magnitude of the summands so cancellation does not
    // read as a relative error.
    T scale{1};
    for (const auto& ri : rs) {
      T n{0};
      for (std::size_t j = 0; j < d; ++j) n += std::abs(q[j] * ri[j]);
      scale *= n;
    }
    r.max_error = std::max(r.max_error, static_cast<double>(std::abs(lhs - rhs) /
                                                            std::max(scale, T(1e-30))));
  }
  return r;
}

template <Real T>
SuiteResult normalization_suite(const Tolerances& tol, Rng& rng) {
  SuiteResult r{"normalization", 0, std::max(tol.eta, tol.rowsum), true, ""};
  double eta_err = 0, sum_err = 0;
  for (std::size_t f = 2; f <= 3; ++f) {
    HlaConfig cfg;
    cfg.factors = f;
    cfg.d_phi = 4;
    cfg.head_dim = 8;
    cfg.eps = 0;
    for (int c = 0; c < 20; ++c) {
      const Shape shape{1, 2, 16, 4};
      const auto pq = uniform<T>(shape, 0.05, 1, rng);
      std::vector<Tensor<T>> pk;
      for (std::size_t i = 0; i < f; ++i) pk.push_back(uniform<T>(shape, 0.05, 1, rng));
      const auto v = uniform<T>({1, 2, 16, 8}, -1, 1, rng);
      const auto fast = hla_forward<T>(cfg, pq, pk, v);
      const auto slow = naive_hla<T>(pq, pk, v, T{0});
      eta_err = std::max(eta_err, max_relative_error(fast.eta, slow.row_sums));
      const std::size_t n = 16;
      for (std::size_t row = 0; row < slow.row_sums.size(); ++row) {
        double s = 0;
        for (std::size_t j = 0; j < n; ++j) {
          s += static_cast<double>(slow.scores[row * n + j]) /
               static_cast<double>(fast.eta[row]);
        }
        sum_err = std::max(sum_err, std::abs(s - 1.0));
      }
    }
  }
  r.max_error = std::max(eta_err, sum_err);
  r.passed = eta_err <= tol.eta && sum_err <= tol.rowsum;
  std::ostringstream os;
  os << "eta " << eta_err << ", row sums " << sum_err;
  r.detail = os.str();
  return r;
}

template <Real T>
SuiteResult streaming_suite(const HlaConfig& base, const Tolerances& tol, Rng& rng) {
  SuiteResult r{"streaming", 0, tol.streaming, true, ""};
  const std::size_t n = 32;
  for (std::size_t f = 2; f <= 3; ++f) {
    for (double decay : {1.0, 0.9}) {
      HlaConfig cfg = base;
      cfg.factors = f;
      cfg.decay = decay;
      cfg.causal = true;
      const Shape shape{1, 1, n, cfg.d_phi};
      const auto pq = uniform<T>(shape, 0.05, 1, rng);
      std::vector<Tensor<T>> pk;
      for (std::size_t i = 0; i < f; ++i) pk.push_back(uniform<T>(shape, 0.05, 1, rng));
      const auto v = uniform<T>({1, 1, n, cfg.head_dim}, -1, 1, rng);
      const auto chunked = causal_forward<T>(cfg, pq, pk, v, 5);
      const auto masked =
          naive_hla<T>(pq, pk, v, decay_mask<T>(n, static_cast<T>(decay)),
                       static_cast<T>(cfg.eps));
      Tensor<T> stepped({1, 1, n, cfg.head_dim});
      auto state = state_init<T>(cfg);
      for (std::size_t t = 0; t < n; ++t) {
        std::vector<std::span<const T>> rows;
        for (const auto& k : pk) rows.emplace_back(k.data() + t * cfg.d_phi, cfg.d_phi);
        state_push<T>(state, rows,
                      std::span<const T>(v.data() + t * cfg.head_dim, cfg.head_dim));
        const auto o = state_query<T>(
            state, std::span<const T>(pq.data() + t * cfg.d_phi, cfg.d_phi), cfg);
        std::copy(o.begin(), o.end(), stepped.data() + t * cfg.head_dim);
      }
      r.max_error =
          std::max({r.max_error, max_relative_error(chunked, masked.out, tol.value_floor),
                    max_relative_error(stepped, masked.out, tol.value_floor)});
    }
  }
  return r;
}

// Central differences of sum(w * f(x)) against an analytic gradient. The
// denominator is floored at 1e-3 of the largest gradient entry so entries
// that vanish analytically are judged on an absolute scale.
double fd_error(Tensor<double>& x, const Tensor<double>& analytic,
                const std::function<double()>& loss) {
  constexpr double h = 1e-5;
  double gmax = 0;
  for (double g : analytic.values()) gmax = std::max(gmax, std::abs(g));
  const double floor = std::max(1e-3 * gmax, 1e-12);
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = loss();
    x[i] = saved - h;
    const double down = loss();
    x[i] = saved;
    const double num = (up - down) / (2 * h);
    const double a = analytic[i];
    worst = std::max(worst, std::abs(num - a) /
                                std::max({std::abs(num), std::abs(a), floor}));
  }
  return worst;
}

double weighted(const Tensor<double>& y, const Tensor<double>& w) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

SuiteResult gradient_suite_double(const Tolerances& tol, Rng& rng) {
  SuiteResult r{"gradients", 0, tol.gradient, true, ""};
  HlaConfig cfg;
  cfg.factors = 2;
  cfg.d_phi = 3;
  cfg.head_dim = 4;
  const Shape shape{1, 1, 4, 3};
  auto pq = uniform<double>(shape, 0.2, 1, rng);
  std::vector<Tensor<double>> pk{uniform<double>(shape, 0.2, 1, rng),
                                 uniform<double>(shape, 0.2, 1, rng)};
  auto v = uniform<double>({1, 1, 4, 4}, -1, 1, rng);
  const auto w = uniform<double>({1, 1, 4, 4}, -1, 1, rng);
  auto loss = [&] { return weighted(hla_forward<double>(cfg, pq, pk, v).out, w); };
  const auto g = hla_backward<double>(cfg, pq, pk, v,
                                      hla_forward<double>(cfg, pq, pk, v), w);
  double hla_err = std::max(fd_error(pq, g.phi_q, loss), fd_error(v, g.v, loss));
  for (std::size_t f = 0; f < 2; ++f) {
    hla_err = std::max(hla_err, fd_error(pk[f], g.phi_ks[f], loss));
  }

  // phi network with layer-norm, checked on inputs and every parameter.
  auto p = init_feature_map<double>({4, 5, 3, false, true}, rng);
  for (auto* t : p.parameters())
    for (auto& e : t->values()) e += 0.1 * std::uniform_real_distribution<double>(-1, 1)(rng);
  auto x = uniform<double>({1, 1, 4, 4}, -1, 1, rng);
  const auto wphi = uniform<double>({1, 1, 4, 3}, -1, 1, rng);
  auto phi_loss = [&] { return weighted(phi_forward(p, x), wphi); };
  auto pg = FeatureMapParams<double>::zeros_like(p);
  const auto gx = phi_backward(p, x, wphi, pg);
  double phi_err = fd_error(x, gx, phi_loss);
  auto ps = p.parameters();
  auto gs = pg.parameters();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    phi_err = std::max(phi_err, fd_error(*ps[i], *gs[i], phi_loss));
  }

  auto p1 = init_feature_map<double>({4, 4, 4, false, true}, rng);
  auto p2 = init_feature_map<double>({4, 4, 4, false, true}, rng);
  auto t = uniform<double>({1, 1, 4, 4}, -1, 1, rng);
  auto vm = uniform<double>({1, 1, 4, 4}, -1, 1, rng);
  const auto wm = uniform<double>({1, 1, 4, 4}, -1, 1, rng);
  auto mod_loss = [&] { return weighted(modulate(t, vm, p1, p2), wm); };
  auto g1 = FeatureMapParams<double>::zeros_like(p1);
  auto g2 = FeatureMapParams<double>::zeros_like(p2);
  const auto mg = modulate_backward(t, vm, p1, p2, wm, g1, g2);
  double mod_err = std::max(fd_error(t, mg.t, mod_loss), fd_error(vm, mg.v, mod_loss));
  for (auto [pp, gg] : {std::pair{&p1, &g1}, std::pair{&p2, &g2}}) {
    auto a = pp->parameters();
    auto b = gg->parameters();
    for (std::size_t i = 0; i < a.size(); ++i) {
      mod_err = std::max(mod_err, fd_error(*a[i], *b[i], mod_loss));
    }
  }
  r.max_error = std::max({hla_err, phi_err, mod_err});
  std::ostringstream os;
  os << "hla " << hla_err << ", phi " << phi_err << ", modulate " << mod_err;
  r.detail = os.str();
  return r;
}

// Single precision: analytic float gradients against the double ones.
SuiteResult gradient_suite_single(const Tolerances& tol, Rng& rng) {
  SuiteResult r{"gradients", 0, tol.gradient, true, "float vs double analytic"};
  HlaConfig cfg;
  cfg.factors = 2;
  cfg.d_phi = 3;
  cfg.head_dim = 4;
  const Shape shape{1, 1, 4, 3};
  const auto pq = uniform<double>(shape, 0.2, 1, rng);
  const std::vector<Tensor<double>> pk{uniform<double>(shape, 0.2, 1, rng),
                                       uniform<double>(shape, 0.2, 1, rng)};
  const auto v = uniform<double>({1, 1, 4, 4}, -1, 1, rng);
  const auto w = uniform<double>({1, 1, 4, 4}, -1, 1, rng);
  const auto gd = hla_backward<double>(cfg, pq, pk, v,
                                       hla_forward<double>(cfg, pq, pk, v), w);
  const std::vector<Tensor<float>> pkf{cast<float>(pk[0]), cast<float>(pk[1])};
  const auto pqf = cast<float>(pq);
  const auto vf = cast<float>(v);
  const auto gf = hla_backward<float>(cfg, pqf, pkf, vf,
                                      hla_forward<float>(cfg, pqf, pkf, vf),
                                      cast<float>(w));
  r.max_error = std::max({max_relative_error(cast<float>(gd.phi_q), gf.phi_q, 1e-3),
                          max_relative_error(cast<float>(gd.v), gf.v, 1e-3),
                          max_relative_error(cast<float>(gd.phi_ks[0]), gf.phi_ks[0], 1e-3),
                          max_relative_error(cast<float>(gd.phi_ks[1]), gf.phi_ks[1], 1e-3)});
  return r;
}

Tensor<double> matmul_t(const Tensor<double>& a, const Tensor<double>& b) {
  // a[n, k] b[m, k]^T
  const std::size_t n = a.dim(0), m = b.dim(0), k = a.dim(1);
  Tensor<double> out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < k; ++c) out[i * m + j] += a[i * k + c] * b[j * k + c];
  return out;
}

SuiteResult rank_suite(Rng& rng) {
  SuiteResult r{"rank", 0, 0, true, ""};
  std::size_t violations = 0;
  for (int c = 0; c < 20; ++c) {
    const auto q = uniform<double>({8, 2}, 0, 1, rng);
    const auto k1 = uniform<double>({8, 2}, 0, 1, rng);
    const auto k2 = uniform<double>({8, 2}, 0, 1, rng);
    const auto a1 = matmul_t(q, k1), a2 = matmul_t(q, k2);
    const std::vector<Tensor<double>> factors{a1, a2};
    const auto rep =
        rank_bound_check(hadamard(a1, a2), factors, ProductKind::kHadamard);
    if (!rep.holds) ++violations;
    // phi(Q) C with C = phi(K)^T V of rank <= 2.
    const auto v = uniform<double>({8, 5}, -1, 1, rng);
    Tensor<double> ctx({2, 5});
    for (std::size_t j = 0; j < 8; ++j)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 5; ++b) ctx[a * 5 + b] += k1[j * 2 + a] * v[j * 5 + b];
    Tensor<double> ctx_t({5, 2});
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 5; ++b) ctx_t[b * 2 + a] = ctx[a * 5 + b];
    const auto prod = matmul_t(q, ctx_t);
    const std::vector<Tensor<double>> parts{q, ctx};
    const auto mrep = rank_bound_check(prod, parts, ProductKind::kMatrix);
    if (!mrep.holds) ++violations;
  }
  r.max_error = static_cast<double>(violations);
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " bound violations in 40 checks";
  return r;
}

SuiteResult flops_suite() {
  SuiteResult r{"flops", 0, 0.25, true, ""};
  const std::pair<const char*, double> table[] = {
      {"wan-320p-quad", 1.21e12}, {"wan-480p-quad", 7.21e12},
      {"wan-320p-2f", 0.97e12},   {"wan-480p-2f", 2.52e12},
      {"wan-320p-3f", 0.30e12},   {"wan-480p-3f", 0.77e12}};
  for (const auto& [name, target] : table) {
    const double got = flops(preset(name)).total;
    r.max_error = std::max(r.max_error, std::abs(got - target) / target);
  }
  bool ordered = true;
  for (const char* res : {"320p", "480p"}) {
    const std::string tag = std::string("wan-") + res;
    const double q = flops(preset(tag + "-quad")).total;
    const double two = flops(preset(tag + "-2f")).total;
    const double three = flops(preset(tag + "-3f")).total;
    ordered = ordered && three < two && two < q;
  }
  ModelSpec s = preset("wan-320p-3f");
  ModelSpec s2 = s;
  s2.tokens *= 2;
  const double hla_ratio = flops_hla(s2).kernel() / flops_hla(s).kernel();
  ModelSpec q = preset("wan-320p-quad");
  ModelSpec q2 = q;
  q2.tokens *= 2;
  const double sm_ratio = flops_softmax(q2).kernel() / flops_softmax(q).kernel();
  const bool ratios = hla_ratio >= 1.9 && hla_ratio <= 2.1 && sm_ratio >= 3.8 &&
                      sm_ratio <= 4.2;
  r.passed = r.max_error <= r.tolerance && ordered && ratios;
  std::ostringstream os;
  os << "ordering " << (ordered ? "ok" : "wrong") << ", doubling ratios hla "
     << hla_ratio << " softmax " << sm_ratio;
  r.detail = os.str();
  return r;
}

template <Real T>
std::vector<SuiteResult> run_all(const HlaConfig& base, const Tolerances& tol,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SuiteResult> out;
  out.push_back(oracle_suite<T>(base, tol, rng));
  out.push_back(identity_suite<T>(tol, rng));
  out.push_back(normalization_suite<T>(tol, rng));
  out.push_back(streaming_suite<T>(base, tol, rng));
  if constexpr (std::is_same_v<T, double>) {
    out.push_back(gradient_suite_double(tol, rng));
  } else {
    out.push_back(gradient_suite_single(tol, rng));
  }
  out.push_back(rank_suite(rng));
  out.push_back(flops_suite());
  for (auto& s : out) {
    if (s.name != "normalization" && s.name != "rank" && s.name != "flops") {
      s.passed = s.max_error <= s.tolerance;
    }
  }
  return out;
}

}  // namespace

std::vector<SuiteResult> run_checks(const CheckOptions& opts) {
  const HlaConfig base = check_base_config(opts);
  if (opts.precision == Precision::kSingle) {
    return run_all<float>(base, kSingleTol, opts.seed);
  }
  return run_all<double>(base, kDoubleTol, opts.seed);
}

}  // namespace hla::tools
