// Command-line front end: instance generation, single solves, benchmark runs
// and the diagnostics suite.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qnadmm/bench.hpp"
#include "qnadmm/diagnostics.hpp"
#include "qnadmm/errors.hpp"
#include "qnadmm/problem.hpp"
#include "qnadmm/solver.hpp"
#include "qnadmm/text.hpp"

namespace fs = std::filesystem;
using namespace qnadmm;

namespace {

constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InstanceFlags {
  GeneratorSpec gen;
  std::string bundle;
  std::optional<double> beta;

  void add(CLI::App* app) {
    app->add_option("--bundle", bundle, "Load the instance from a bundle directory");
    app->add_option("--n", gen.n, "Number of variables");
    app->add_option("--m", gen.m, "Number of observations");
    app->add_option("--s", gen.sparsity_s, "Density of the ground truth");
    app->add_option("--p", gen.density_p, "Density of A");
    app->add_option("--noise-var", gen.noise_var, "Observation noise variance");
    app->add_option("--tau-factor", gen.tau_factor, "tau = factor * ||A^T b||_inf");
    app->add_option("--beta", beta, "Penalty parameter");
    app->add_option("--seed", gen.seed, "Generator seed");
  }

  LassoProblem load() const {
    if (!bundle.empty()) {
      LoadedBundle b = load_bundle(bundle);
      return beta ? b.instance.problem.with_beta(*beta) : b.instance.problem;
    }
    GeneratorSpec g = gen;
    if (beta) g.beta = *beta;
    try {
      g.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return generate(g).problem;
  }
};

struct SolverFlags {
  std::string variant = "opt";
  std::optional<double> kappa;
  std::size_t memory = 10;
  std::string k_bar = "inf";
  double delta = 1e-5;
  double zeta = 0.99;
  double alpha = 1.0;
  double eps_abs = 1e-4;
  double eps_rel = 1e-3;
  std::size_t max_iter = 20000;

  void add(CLI::App* app) {
    app->add_option("--variant", variant,
                    "opt | spro | ipro | bfgs | lbfgs | bfgs_r | lbfgs_r");
    app->add_option("--kappa", kappa, "Safety factor on the eigenvalue estimate");
    app->add_option("--memory", memory, "L-BFGS memory");
    app->add_option("--k-bar", k_bar, "Last iteration with a metric update (lbfgs_r)");
    app->add_option("--delta", delta, "Shift of the damped update (bfgs_r)");
    app->add_option("--zeta", zeta, "Decay of the damped update (bfgs_r)");
    app->add_option("--alpha", alpha, "Multiplier steplength");
    app->add_option("--eps-abs", eps_abs, "Absolute stopping tolerance");
    app->add_option("--eps-rel", eps_rel, "Relative stopping tolerance");
    app->add_option("--max-iter", max_iter, "Iteration limit");
  }

  SolverConfig build() const {
    const auto v = parse_variant(variant);
    if (!v) throw UsageError("unknown variant '" + variant + "'");
    SolverConfig c;
    c.variant = *v;
    if (kappa) c.set_kappa(*kappa);
    c.memory = memory;
    c.delta = delta;
    c.zeta = zeta;
    c.alpha = alpha;
    c.eps_abs = eps_abs;
    c.eps_rel = eps_rel;
    c.max_iter = max_iter;
    try {
      const double kb = parse_double(k_bar);
      if (std::isinf(kb)) {
        c.k_bar.reset();
      } else if (kb >= 0 && kb == std::floor(kb)) {
        c.k_bar = static_cast<std::size_t>(kb);
      } else {
        throw UsageError("--k-bar must be a non-negative integer or inf");
      }
      c.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

void print_report(const LassoProblem& prob, const SolverConfig& config, const IterationReport& r) {
  std::printf("variant      %s\n", std::string(variant_label(config.variant)).c_str());
  std::printf("n m          %zu %zu\n", prob.n(), prob.m());
  std::printf("tau beta     %s %s\n", format_double(prob.tau()).c_str(),
              format_double(prob.beta()).c_str());
  std::printf("converged    %s\n", r.converged ? "yes" : "no");
  std::printf("iterations   %zu\n", r.iterations);
  std::printf("objective    %.10g\n", r.objective);
  std::printf("kkt          %.3e\n", r.kkt_final);
  if (!r.primal_residuals.empty()) {
    std::printf("residuals    %.3e %.3e\n", r.primal_residuals.back(), r.dual_residuals.back());
  }
  if (uses_metric(config.variant)) std::printf("metric upd.  %zu\n", r.metric_updates);
  std::printf("time         total %.4f  algo %.4f  factor %.4f  eig %.4f  qn %.4f\n",
              r.time_total, r.time_algo, r.time_factor, r.time_eig, r.time_qn);
}

int cmd_gen(const InstanceFlags& flags, const std::string& out) {
  GeneratorSpec g = flags.gen;
  if (flags.beta) g.beta = *flags.beta;
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const GeneratedInstance inst = generate(g);
  save_bundle(out, inst, g);
  std::printf("wrote %s (n=%zu m=%zu nnz=%zu tau=%s)\n", out.c_str(), g.n, g.m,
              inst.problem.a().nnz(), format_double(inst.problem.tau()).c_str());
  return 0;
}

int cmd_solve(const InstanceFlags& inst, const SolverFlags& sf, const std::string& residuals) {
  const SolverConfig config = sf.build();
  const LassoProblem prob = inst.load();
  const SolveResult res = solve(prob, config);
  print_report(prob, config, res.report);
  if (!residuals.empty()) {
    std::ofstream out(residuals);
    if (!out) throw IoError("cannot open " + residuals + " for writing");
    out << "step,primal,dual\n";
    for (std::size_t i = 0; i < res.report.iterations; ++i) {
      out << (i + 1) << ',' << format_double(res.report.primal_residuals[i]) << ','
          << format_double(res.report.dual_residuals[i]) << '\n';
    }
  }
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& output,
              const std::string& format, std::optional<std::size_t> threads,
              const std::string& trials_path) {
  ExperimentSpec spec;
  try {
    spec = load_experiment(config_path);
    if (!output.empty()) spec.output = output;
    if (!format.empty()) spec.format = format;
    if (threads) spec.threads = *threads;
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const ResultTable table = run_experiment(spec);
  if (!spec.output.empty()) {
    emit_table(table, spec.output, spec.format);
    std::printf("wrote %s\n", spec.output.string().c_str());
  } else if (spec.format == "csv") {
    write_csv(std::cout, table);
  } else {
    write_markdown(std::cout, table);
  }
  if (!trials_path.empty()) {
    std::ofstream out(trials_path);
    if (!out) throw IoError("cannot open " + trials_path + " for writing");
    write_trials_csv(out, spec, table);
  }
  for (const std::string& e : table.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
  return table.errors.empty() ? 0 : kExitSolver;
}

int cmd_verify(const InstanceFlags& inst, const SolverFlags& sf, const std::string& out_dir) {
  const SolverConfig config = sf.build();
  const LassoProblem prob = inst.load();
  if (prob.n() > kSpectralCap) {
    throw UsageError("verify needs n <= " + std::to_string(kSpectralCap));
  }
  bool ok = true;
  auto line = [&](const char* name, bool pass, const std::string& detail, bool asserted = true) {
    std::printf("%-6s %-22s %s\n", asserted ? (pass ? "PASS" : "FAIL") : "INFO", name,
                detail.c_str());
    if (asserted && !pass) ok = false;
  };

  const ReferenceSolution ref = reference_solve(prob);
  line("reference", ref.converged,
       std::to_string(ref.iterations) + " iterations, kkt " +
           format_double(kkt_residual(prob, ref.w_star.x)));

  const Trace trace = record_trace(prob, config);
  line("converged", trace.report.converged,
       std::to_string(trace.report.iterations) + " iterations");

  const TraceStep& last = trace.steps.back();
  const KktVector f = kkt_vector_at_step(prob, last.before.lambda, last.after);
  {
    const std::size_t n = prob.n();
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double eps_pri = sqrt_n * config.eps_abs +
                           config.eps_rel * std::max(norm2(last.after.x), norm2(last.after.y));
    const double eps_dual = sqrt_n * config.eps_abs + config.eps_rel * norm2(last.after.lambda);
    const double limit = 10.0 * (eps_pri + eps_dual) * (1.0 + norm2(last.after.lambda));
    line("kkt-vector", f.norm() <= limit,
         "||F|| " + format_double(f.norm()) + " <= " + format_double(limit));
  }

  std::vector<double> gamma;
  const bool damped = config.variant == Variant::BfgsR;
  if (damped) {
    const ConditionCertificate cert = certify_remedy2(trace);
    const double cap = cert.q_estimate / (config.delta * (1.0 - config.zeta));
    line("condition-1", cert.pass() && cert.gamma_sum <= cap,
         "gamma_sum " + format_double(cert.gamma_sum) + " <= " + format_double(cap) +
             (cert.failure.empty() ? "" : " (" + cert.failure + ")"));
    gamma = cert.gamma_series;
    const DescentCheck d = check_relaxed_descent(trace, ref.w_star, gamma);
    line("relaxed-descent", d.pass, "worst excess " + format_double(d.worst_excess));
  } else if (config.variant == Variant::LbfgsR && config.k_bar &&
             *config.k_bar < trace.steps.size()) {
    const ConditionCertificate cert = certify_frozen(trace, *config.k_bar);
    line("condition-1", cert.pass() && cert.gamma_sum == 0.0,
         "gamma_sum after k_bar " + format_double(cert.gamma_sum));
  } else if (uses_metric(config.variant)) {
    std::vector<DenseMatrix> series;
    for (const TraceStep& s : trace.steps) series.push_back(s.t);
    const ConditionCertificate cert =
        certify_condition1(series, DenseMatrix(prob.n(), prob.n()));
    line("condition-1", cert.pass(),
         "gamma_sum " + format_double(cert.gamma_sum) +
             (cert.failure.empty() ? "" : " (" + cert.failure + ")"),
         false);
  }
  if (!damped) {
    const DescentCheck d = check_descent(trace, ref.w_star);
    // The G-norm is only a norm for positive semidefinite T_k.
    const bool asserted = config.variant != Variant::Ipro;
    line("descent", d.pass, "worst excess " + format_double(d.worst_excess), asserted);
  }

  const MuEstimate mu = mu_hat_series(prob, trace);
  line("mu-hat", std::isfinite(mu.value()), "max ratio " + format_double(mu.value()), false);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_series_csv(fs::path(out_dir) / "primal_residual.csv", trace.report.primal_residuals, 1);
    write_series_csv(fs::path(out_dir) / "dual_residual.csv", trace.report.dual_residuals, 1);
    write_series_csv(fs::path(out_dir) / "mu_hat.csv", mu.ratio, 1);
    if (!gamma.empty()) write_series_csv(fs::path(out_dir) / "gamma.csv", gamma);
  }
  return ok ? 0 : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-metric ADMM for Lasso"};
  app.require_subcommand(1);

  InstanceFlags gen_inst;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "Write a random instance bundle");
  gen_inst.add(gen);
  gen->add_option("--out", gen_out, "Bundle directory")->required();

  InstanceFlags solve_inst;
  SolverFlags solve_flags;
  std::string residuals;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one instance and print a report");
  solve_inst.add(solve_cmd);
  solve_flags.add(solve_cmd);
  solve_cmd->add_option("--residuals", residuals, "Write the residual history as CSV");

  std::string bench_config, bench_output, bench_format, bench_trials;
  std::optional<std::size_t> bench_threads;
  CLI::App* bench = app.add_subcommand("bench", "Run an experiment file");
  bench->add_option("--config", bench_config, "Experiment file")->required();
  bench->add_option("--output", bench_output, "Override the output path");
  bench->add_option("--format", bench_format, "csv | markdown");
  bench->add_option("--threads", bench_threads, "Worker threads (0: all cores)");
  bench->add_option("--trials", bench_trials, "Write per-trial records as CSV");

  InstanceFlags verify_inst;
  verify_inst.gen.n = 32;
  verify_inst.gen.m = 16;
  verify_inst.gen.sparsity_s = 0.2;
  SolverFlags verify_flags;
  std::string verify_out;
  CLI::App* verify = app.add_subcommand("verify", "Run the diagnostics suite on one trace");
  verify_inst.add(verify);
  verify_flags.add(verify);
  verify->add_option("--out-dir", verify_out, "Write trajectories as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_inst, gen_out);
    if (*solve_cmd) return cmd_solve(solve_inst, solve_flags, residuals);
    if (*bench) return cmd_bench(bench_config, bench_output, bench_format, bench_threads, bench_trials);
    if (*verify) return cmd_verify(verify_inst, verify_flags, verify_out);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n\n%s", e.what(), app.help().c_str());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
  return kExitUsage;
}
