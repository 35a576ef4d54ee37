#include "qnadmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "qnadmm/errors.hpp"
#include "qnadmm/spectral.hpp"
#include "qnadmm/text.hpp"

namespace qnadmm {
namespace {

double quad_form(const DenseMatrix& t, std::span<const double> v) {
  return dot(v, multiply(t, v));
}

}  // namespace

double KktVector::norm() const {
  const double a = norm2(grad_f_part);
  const double b = norm2(subgrad_g_part);
  const double c = norm2(primal_gap);
  return std::sqrt(a * a + b * b + c * c);
}

Vector gradient_f(const LassoProblem& prob, std::span<const double> x) {
  return matvec_transpose(prob.a(), subtract(matvec(prob.a(), x), prob.b()));
}

Vector recover_eta_g(std::span<const double> lambda_prev, std::span<const double> x_new,
                     std::span<const double> y_new, double beta) {
  Vector out = scaled(subtract(x_new, y_new), beta);
  axpy(-1.0, lambda_prev, out);
  return out;
}

KktVector kkt_vector(const LassoProblem& prob, const WPoint& w, std::span<const double> eta_f,
                     std::span<const double> eta_g, bool check_inclusion) {
  const std::size_t n = prob.n();
  if (w.x.size() != n || w.y.size() != n || w.lambda.size() != n || eta_f.size() != n ||
      eta_g.size() != n) {
    throw DimensionError("kkt_vector: all vectors must have length n");
  }
  if (check_inclusion) {
    const double tau = prob.tau();
    const double tol = 1e-8 * std::max(1.0, tau);
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = w.y[i];
      const double gap = yi != 0.0 ? std::abs(eta_g[i] - std::copysign(tau, yi))
                                   : std::max(std::abs(eta_g[i]) - tau, 0.0);
      if (gap > tol) {
        throw Error("subgradient recovery failed at component " + std::to_string(i) +
                    " (violation " + format_double(gap) + ")");
      }
    }
  }
  KktVector f;
  f.grad_f_part = subtract(eta_f, w.lambda);
  f.subgrad_g_part = add(eta_g, w.lambda);
  f.primal_gap = subtract(w.x, w.y);
  return f;
}

KktVector kkt_vector_at_step(const LassoProblem& prob, std::span<const double> lambda_prev,
                             const WPoint& w_new) {
  const Vector eta_f = gradient_f(prob, w_new.x);
  const Vector eta_g = recover_eta_g(lambda_prev, w_new.x, w_new.y, prob.beta());
  return kkt_vector(prob, w_new, eta_f, eta_g, true);
}

double g_distance(const WPoint& w, const WPoint& w_star, const DenseMatrix& t,
                  const DenseMatrix* s, double beta) {
  const Vector dx = subtract(w.x, w_star.x);
  const Vector dy = subtract(w.y, w_star.y);
  const Vector dl = subtract(w.lambda, w_star.lambda);
  double out = quad_form(t, dx) + beta * dot(dy, dy) + dot(dl, dl) / beta;
  if (s) out += quad_form(*s, dy);
  return out;
}

ReferenceSolution reference_solve(const LassoProblem& prob) {
  SolverConfig config;
  config.variant = Variant::Opt;
  config.eps_abs = 1e-12;
  config.eps_rel = 1e-12;
  config.max_iter = 1'000'000;
  const SolveResult run = solve(prob, config);
  ReferenceSolution ref;
  ref.iterations = run.report.iterations;
  ref.converged = run.report.converged;
  ref.w_star.x = run.state.y;
  ref.w_star.y = run.state.y;
  ref.w_star.lambda = gradient_f(prob, run.state.y);
  return ref;
}

Trace record_trace(const LassoProblem& prob, const SolverConfig& config, std::size_t cap) {
  if (prob.n() > cap) {
    throw InvalidArgument("spectral check unavailable at this scale (n=" +
                          std::to_string(prob.n()) + ")");
  }
  Trace trace;
  trace.config = config;
  trace.beta = prob.beta();
  const auto observer = [&](const IterationEvent& e) {
    TraceStep step;
    step.k = e.k;
    step.before = {e.before.x, e.before.y, e.before.lambda};
    step.after = {e.x, e.y, e.lambda};
    step.t = proximal_matrix(e.strategy, prob);
    step.metric_updated = e.metric_updated;
    if (const auto* vm = std::get_if<VariableMetric>(&e.strategy)) {
      if (const auto* damped = std::get_if<DampedBMetric>(&vm->metric);
          damped && e.metric_updated) {
        step.weight = damped->last_weight();
        step.step_norm = damped->last_step_norm();
      }
    }
    trace.steps.push_back(std::move(step));
  };
  trace.report = solve(prob, config, observer).report;
  return trace;
}

DescentCheck check_descent(const Trace& trace, const WPoint& w_star, double tol) {
  DescentCheck out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const TraceStep& step = trace.steps[i];
    const double before = g_distance(step.before, w_star, step.t, nullptr, trace.beta);
    const double after = g_distance(step.after, w_star, step.t, nullptr, trace.beta);
    out.before.push_back(before);
    out.after.push_back(after);
    if (after - before > out.worst_excess) {
      out.worst_excess = after - before;
      out.worst_step = step.k;
    }
    if (after > before + tol) out.pass = false;
  }
  return out;
}

DescentCheck check_relaxed_descent(const Trace& trace, const WPoint& w_star,
                                   std::span<const double> gamma, double tol) {
  DescentCheck out;
  out.worst_excess = -std::numeric_limits<double>::infinity();
  const std::size_t count = trace.steps.empty() ? 0 : trace.steps.size() - 1;
  if (gamma.size() < count) throw DimensionError("check_relaxed_descent: gamma series too short");
  for (std::size_t i = 0; i < count; ++i) {
    const TraceStep& step = trace.steps[i];
    const DenseMatrix& t_next = trace.steps[i + 1].t;
    const double before = g_distance(step.before, w_star, step.t, nullptr, trace.beta);
    const double after = g_distance(step.after, w_star, t_next, nullptr, trace.beta);
    const double bound = (1.0 + gamma[i]) * before;
    out.before.push_back(before);
    out.after.push_back(after);
    if (after - bound > out.worst_excess) {
      out.worst_excess = after - bound;
      out.worst_step = step.k;
    }
    if (after > bound + tol) out.pass = false;
  }
  return out;
}

MuEstimate mu_hat_series(const LassoProblem& prob, const Trace& trace) {
  MuEstimate out;
  double running = 0.0;
  for (const TraceStep& step : trace.steps) {
    const KktVector f = kkt_vector_at_step(prob, step.before.lambda, step.after);
    const double f_norm = f.norm();
    const Vector dx = subtract(step.after.x, step.before.x);
    const Vector gap = subtract(step.after.x, step.before.y);
    const double denom = quad_form(step.t, dx) + dot(gap, gap);
    const double ratio = denom > 0.0 ? f_norm * f_norm / denom : 0.0;
    running = std::max(running, ratio);
    out.ratio.push_back(ratio);
    out.running.push_back(running);
  }
  return out;
}

double growth_factor(const DenseMatrix& t, const DenseMatrix& t_next, double tol) {
  if (t == t_next) return 0.0;
  const std::size_t n = t.rows();
  const SymmetricEigen eig = symmetric_eigen(t);
  double scale = 0.0;
  for (double d : eig.values) scale = std::max(scale, std::abs(d));

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (eig.values[i] > 1e-10 * scale) kept.push_back(i);

  double gamma = 0.0;
  if (!kept.empty()) {
    // C = P^T t_next P with P = V_r diag(d_r)^{-1/2}.
    DenseMatrix p(n, kept.size());
    for (std::size_t c = 0; c < kept.size(); ++c) {
      const double f = 1.0 / std::sqrt(eig.values[kept[c]]);
      for (std::size_t i = 0; i < n; ++i) p(i, c) = eig.vectors(i, kept[c]) * f;
    }
    const DenseMatrix c = multiply(p.transposed(), multiply(t_next, p));
    gamma = std::max(max_eigenvalue(symmetrized(c)) - 1.0, 0.0);
  }
  const DenseMatrix gap = (1.0 + gamma) * t - t_next;
  if (min_eigenvalue(symmetrized(gap)) < -tol) return std::numeric_limits<double>::infinity();
  return gamma;
}

ConditionCertificate certify_condition1(const std::vector<DenseMatrix>& t_series,
                                        const DenseMatrix& lower, double tol) {
  ConditionCertificate cert;
  auto fail = [&](std::size_t k, std::string why) {
    if (!cert.failed_step) {
      cert.failed_step = k;
      cert.failure = std::move(why);
    }
  };
  for (std::size_t k = 0; k < t_series.size(); ++k) {
    const DenseMatrix& t = t_series[k];
    const double t_min = min_eigenvalue(t);
    if (t_min < -tol) {
      cert.lower_bound_ok = false;
      fail(k, "indefinite T_k (min eigenvalue " + format_double(t_min) + ")");
    }
    const double lower_gap = min_eigenvalue(symmetrized(t - lower));
    if (lower_gap < -tol) {
      cert.lower_bound_ok = false;
      fail(k, "lower bound violated (min eigenvalue " + format_double(lower_gap) + ")");
    }
    if (k + 1 < t_series.size()) {
      const double gamma = growth_factor(t, t_series[k + 1], tol);
      cert.gamma_series.push_back(gamma);
      if (std::isfinite(gamma)) {
        cert.gamma_sum += gamma;
      } else {
        cert.growth_ok = false;
        fail(k, "T_{k+1} not dominated by a multiple of T_k");
      }
    }
  }
  return cert;
}

ConditionCertificate certify_remedy2(const Trace& trace, double tol) {
  if (trace.steps.empty()) throw InvalidArgument("certify_remedy2: empty trace");
  std::vector<DenseMatrix> series;
  double q = 0.0;
  for (const TraceStep& step : trace.steps) {
    series.push_back(step.t);
    q = std::max(q, step.step_norm);
  }
  const std::size_t n = series.front().rows();
  ConditionCertificate cert =
      certify_condition1(series, DenseMatrix::identity(n, trace.config.delta), tol);
  cert.q_estimate = q;
  return cert;
}

ConditionCertificate certify_frozen(const Trace& trace, std::size_t k_bar, double tol) {
  std::vector<DenseMatrix> series;
  for (const TraceStep& step : trace.steps)
    if (step.k >= k_bar) series.push_back(step.t);
  if (series.empty()) {
    throw InvalidArgument("certify_frozen: trace ends before k_bar = " + std::to_string(k_bar));
  }
  const DenseMatrix lower = series.front();
  return certify_condition1(series, lower, tol);
}

void write_series_csv(const std::filesystem::path& path, std::span<const double> values,
                      std::size_t first_step) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "step,value\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    out << (first_step + i) << ',' << format_double(values[i]) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace qnadmm
