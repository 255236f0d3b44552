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

#include "hla_tools/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>

#include "hla/complexity.hpp"
#include "hla/distill.hpp"
#include "hla/error.hpp"
#include "hla/parallel.hpp"
#include "hla_tools/bench.hpp"
#include "hla_tools/check.hpp"

namespace hla::tools {

namespace {

struct CheckArgs {
  std::string precision = "double";
  std::uint64_t seed = 0;
  std::vector<std::string> faults;
};

struct FlopsArgs {
  std::string preset;
  std::string kind = "hla";
  ModelSpec spec;
  bool no_phi = false, no_projections = false, no_modulation = false;
  std::string format = "json";
  bool crossover = false;
};

struct DistillArgs {
  DistillConfig cfg;
  std::string optimizer = "adam";
  std::string out;
};

int cmd_check(const CheckArgs& a, std::ostream& out, std::ostream& err) {
  CheckOptions opts;
  opts.precision = a.precision == "single" ? Precision::kSingle : Precision::kDouble;
  opts.seed = a.seed;
  for (const auto& f : a.faults) {
    const auto eq = f.find('=');
    if (eq == std::string::npos || eq == 0) {
      err << "error: --inject-fault expects key=value, got '" << f << "'\n";
      return kExitUsage;
    }
    opts.faults[f.substr(0, eq)] = f.substr(eq + 1);
  }
  const auto results = run_checks(opts);
  bool ok = true;
  out << std::left << std::setw(15) << "suite" << std::setw(14) << "max_error"
      << std::setw(12) << "tolerance" << "status\n";
  for (const auto& r : results) {
    out << std::left << std::setw(15) << r.name << std::setw(14)
        << std::setprecision(3) << std::scientific << r.max_error
        << std::setw(12) << r.tolerance << std::defaultfloat
        << (r.passed ? "ok" : "FAILED");
    if (!r.detail.empty()) out << "  (" << r.detail << ')';
    out << '\n';
    if (!r.passed) {
      ok = false;
      err << "suite failed: " << r.name << '\n';
    }
  }
  out << "precision " << to_string(opts.precision) << ", "
      << (ok ? "all suites passed" : "FAILURES") << '\n';
  return ok ? kExitOk : kExitFailure;
}

int cmd_bench(const BenchConfig& cfg, const std::string& path, std::ostream& out) {
  cfg.validate();
  if (path.empty() || path == "-") {
    write_bench_csv(out, run_bench(cfg));
    return kExitOk;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open '" + path + "' for writing");
  write_bench_csv(file, run_bench(cfg));
  if (!file) throw Error("failed writing '" + path + "'");
  return kExitOk;
}

int cmd_flops(FlopsArgs a, std::ostream& out) {
  ModelSpec spec = a.spec;
  if (!a.preset.empty()) {
    spec = preset(a.preset);
  } else {
    if (a.kind == "softmax") spec.kind = AttentionKind::kSoftmax;
    else if (a.kind == "linear") spec.kind = AttentionKind::kLinear;
    else spec.kind = AttentionKind::kHla;
    spec.model_dim = spec.heads * spec.head_dim;
    spec.include_phi_mlps = !a.no_phi;
    spec.include_projections = !a.no_projections;
    spec.include_modulation = !a.no_modulation;
  }
  const FlopsReport r = flops(spec);
  if (a.format == "csv") {
    out << to_csv(r);
    return kExitOk;
  }
  nlohmann::json j{{"spec", to_json(spec)}, {"flops", to_json(r)},
                   {"tflops", r.total / 1e12}};
  if (!a.preset.empty()) j["preset"] = a.preset;
  if (a.crossover && spec.kind != AttentionKind::kSoftmax) {
    ModelSpec quad = spec;
    quad.kind = AttentionKind::kSoftmax;
    const auto n = crossover_point(quad, spec);
    j["crossover_tokens"] = n ? nlohmann::json(*n) : nlohmann::json(nullptr);
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_distill(DistillArgs a, std::ostream& out, std::ostream& err) {
  a.cfg.optimizer =
      a.optimizer == "adam" ? Optimizer::kAdam : Optimizer::kGradientDescent;
  try {
    const DistillResult r = distill_run(a.cfg);
    if (a.out.empty() || a.out == "-") {
      out << loss_csv(r);
    } else {
      write_loss_csv(a.out, r);
      out << "initial loss " << r.losses.front() << ", final loss "
          << r.losses.back() << '\n';
    }
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << " at step " << e.step() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Hadamard linear attention kernels: checks, benchmarks, "
               "FLOP counts and distillation runs"};
  app.name("hla");
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  CheckArgs check;
  auto* c = app.add_subcommand("check", "run the equivalence and invariant suites");
  c->add_option("--precision", check.precision)
      ->check(CLI::IsMember({"single", "double"}));
  c->add_option("--seed", check.seed);
  c->add_option("--inject-fault", check.faults,
                "override a base config field, e.g. eps=-1");

  BenchConfig bench;
  bench.variants.clear();
  std::string bench_out;
  auto* b = app.add_subcommand("bench", "time kernels over sequence lengths");
  b->add_option("--variant", bench.variants, "softmax, linear, hla2, hla3, hlaF")
      ->delimiter(',')
      ->check(CLI::IsMember(bench_variants()));
  b->add_option("--seq-lens", bench.seq_lens, "comma-separated, ascending")
      ->delimiter(',')
      ->required();
  b->add_option("--d", bench.d);
  b->add_option("--d-phi", bench.d_phi);
  b->add_option("--factors", bench.factors, "factor count of hlaF");
  b->add_option("--trials", bench.trials);
  b->add_option("--seed", bench.seed);
  b->add_option("--out", bench_out, "CSV path, '-' for stdout");

  FlopsArgs fl;
  auto* f = app.add_subcommand("flops", "analytic FLOP count of one layer");
  std::vector<std::string> names = preset_names();
  f->add_option("--preset", fl.preset)->check(CLI::IsMember(names));
  f->add_option("--kind", fl.kind)->check(CLI::IsMember({"softmax", "linear", "hla"}));
  f->add_option("--tokens", fl.spec.tokens);
  f->add_option("--heads", fl.spec.heads);
  f->add_option("--head-dim", fl.spec.head_dim);
  f->add_option("--d-phi", fl.spec.d_phi);
  f->add_option("--factors", fl.spec.factors);
  f->add_option("--phi-hidden", fl.spec.phi_hidden);
  f->add_flag("--no-phi", fl.no_phi);
  f->add_flag("--no-projections", fl.no_projections);
  f->add_flag("--no-modulation", fl.no_modulation);
  f->add_option("--format", fl.format)->check(CLI::IsMember({"json", "csv"}));
  f->add_flag("--crossover", fl.crossover,
              "also report the token count where the layer beats softmax");

  DistillArgs di;
  auto* d = app.add_subcommand("distill", "fit an HLA block to a softmax teacher");
  d->add_option("--seed", di.cfg.seed);
  d->add_option("--steps", di.cfg.steps);
  d->add_option("--batch", di.cfg.batch);
  d->add_option("--tokens", di.cfg.tokens);
  d->add_option("--heads", di.cfg.heads);
  d->add_option("--head-dim", di.cfg.head_dim);
  d->add_option("--d-phi", di.cfg.d_phi);
  d->add_option("--factors", di.cfg.factors);
  d->add_option("--phi-hidden", di.cfg.phi_hidden);
  d->add_option("--lr", di.cfg.learning_rate);
  d->add_option("--optimizer", di.optimizer)->check(CLI::IsMember({"gd", "adam"}));
  d->add_option("--teacher-gain", di.cfg.teacher_gain);
  d->add_option("--out", di.out, "CSV path, '-' for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // An unknown preset also lands here; list the valid ones.
    const int code = app.exit(e, out, err);
    if (code != 0 && f->parsed() && !fl.preset.empty()) {
      err << "available presets:";
      for (const auto& n : names) err << ' ' << n;
      err << '\n';
    }
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    if (c->parsed()) return cmd_check(check, out, err);
    if (b->parsed()) {
      if (bench.variants.empty()) bench.variants = {"hla3"};
      return cmd_bench(bench, bench_out, out);
    }
    if (f->parsed()) return cmd_flops(fl, out);
    if (d->parsed()) return cmd_distill(di, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const MemoryCapError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace hla::tools
