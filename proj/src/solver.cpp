#include "qnadmm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "qnadmm/errors.hpp"
#include "qnadmm/spectral.hpp"

namespace qnadmm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double estimate_gram_max_eig(const LassoProblem& prob, const PowerIterationOptions& options) {
  const auto apply = [&](std::span<const double> v) {
    return matvec_transpose(prob.a(), matvec(prob.a(), v));
  };
  return max_eigenvalue_sym(apply, prob.n(), options);
}

}  // namespace

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::Opt: return "opt";
    case Variant::Spro: return "spro";
    case Variant::Ipro: return "ipro";
    case Variant::Bfgs: return "bfgs";
    case Variant::Lbfgs: return "lbfgs";
    case Variant::BfgsR: return "bfgs_r";
    case Variant::LbfgsR: return "lbfgs_r";
  }
  return "?";
}

std::string_view variant_label(Variant v) {
  switch (v) {
    case Variant::Opt: return "ADM-OPT";
    case Variant::Spro: return "ADM-SPRO";
    case Variant::Ipro: return "ADM-IPRO";
    case Variant::Bfgs: return "ADM-BFGS";
    case Variant::Lbfgs: return "ADM-LBFGS";
    case Variant::BfgsR: return "ADM-BFGS-R";
    case Variant::LbfgsR: return "ADM-LBFGS-R";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (name == variant_name(v) || name == variant_label(v)) return v;
  return std::nullopt;
}

bool uses_metric(Variant v) {
  return v == Variant::Bfgs || v == Variant::Lbfgs || v == Variant::BfgsR ||
         v == Variant::LbfgsR;
}

// ---------------------------------------------------------------------------
// SolverConfig
// ---------------------------------------------------------------------------

void SolverConfig::validate() const {
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  if (!(alpha > 0.0 && alpha < golden))
    throw InvalidArgument("alpha must lie in (0, (1+sqrt 5)/2)");
  if (!(eps_abs > 0.0) || !(eps_rel >= 0.0))
    throw InvalidArgument("stopping tolerances must be positive");
  if (max_iter == 0) throw InvalidArgument("max_iter must be at least 1");
  switch (variant) {
    case Variant::Opt: break;
    case Variant::Spro:
      if (!(kappa1 > 1.0)) throw InvalidArgument("kappa1 must exceed 1");
      break;
    case Variant::Ipro:
      if (!(kappa2 >= 0.75)) throw InvalidArgument("kappa2 must be at least 0.75");
      break;
    case Variant::BfgsR:
      if (!(delta > 0.0)) throw InvalidArgument("delta must be positive");
      if (!(zeta >= 0.0 && zeta < 1.0)) throw InvalidArgument("zeta must lie in [0, 1)");
      [[fallthrough]];
    case Variant::Bfgs:
    case Variant::Lbfgs:
      if (!(kappa3 >= 0.75)) throw InvalidArgument("kappa3 must be at least 0.75");
      if (memory == 0) throw InvalidArgument("L-BFGS memory must be at least 1");
      break;
    case Variant::LbfgsR:
      if (!(kappa3 >= 0.75)) throw InvalidArgument("kappa3 must be at least 0.75");
      if (memory == 0) throw InvalidArgument("L-BFGS memory must be at least 1");
      if (!k_bar) throw InvalidArgument("lbfgs_r needs a finite k_bar");
      break;
  }
}

double SolverConfig::kappa() const {
  switch (variant) {
    case Variant::Opt: return 1.0;
    case Variant::Spro: return kappa1;
    case Variant::Ipro: return kappa2;
    default: return kappa3;
  }
}

void SolverConfig::set_kappa(double kappa) {
  switch (variant) {
    case Variant::Opt: break;
    case Variant::Spro: kappa1 = kappa; break;
    case Variant::Ipro: kappa2 = kappa; break;
    default: kappa3 = kappa; break;
  }
}

AdmmState AdmmState::zeros(std::size_t n) {
  return {Vector(n, 0.0), Vector(n, 0.0), Vector(n, 0.0), Vector(n, 0.0), Vector(n, 0.0), 0};
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

XStrategy prepare_strategy(const LassoProblem& prob, const SolverConfig& config,
                           SetupTimings* timings) {
  config.validate();
  SetupTimings local;
  SetupTimings& t = timings ? *timings : local;
  const std::size_t n = prob.n();
  const double beta = prob.beta();

  if (config.variant == Variant::Opt) {
    const auto start = Clock::now();
    ExactCholesky exact;
    exact.fat_path = prob.m() < n;
    DenseMatrix system = exact.fat_path ? gram_rows(prob.a()) : gram_columns(prob.a());
    if (exact.fat_path) {
      system *= 1.0 / beta;
      for (std::size_t i = 0; i < system.rows(); ++i) system(i, i) += 1.0;
    } else {
      for (std::size_t i = 0; i < n; ++i) system(i, i) += beta;
    }
    exact.factor = cholesky(system);
    t.factor = seconds_since(start);
    return exact;
  }

  const auto start = Clock::now();
  const double gram_max = estimate_gram_max_eig(prob, config.power);
  t.eig = seconds_since(start);

  switch (config.variant) {
    case Variant::Spro: return FixedShift{config.kappa1 * (gram_max + beta), ShiftMode::Spro};
    case Variant::Ipro: return FixedShift{config.kappa2 * gram_max, ShiftMode::Ipro};
    case Variant::Bfgs: {
      const double xi = config.kappa3 * (gram_max + beta);
      return VariableMetric{BfgsMetric(n, xi), std::nullopt, xi};
    }
    case Variant::Lbfgs: {
      const double xi = config.kappa3 * (gram_max + beta);
      return VariableMetric{LbfgsMetric(n, config.memory, 1.0 / xi), std::nullopt, xi};
    }
    case Variant::LbfgsR: {
      const double xi = config.kappa3 * (gram_max + beta);
      return VariableMetric{LbfgsMetric(n, config.memory, 1.0 / xi), config.k_bar, xi};
    }
    case Variant::BfgsR: {
      // B_0 = kappa3 * lambda_max(M + delta I) * I, so B_0 >= M + delta I for kappa3 >= 1.
      const double xi = config.kappa3 * (gram_max + beta + config.delta);
      return VariableMetric{
          DampedBMetric(DenseMatrix::identity(n, xi), config.delta, config.zeta), std::nullopt,
          xi};
    }
    case Variant::Opt: break;
  }
  throw InvalidArgument("unknown variant");
}

Vector x_update_exact(const LassoProblem& prob, const AdmmState& state,
                      const ExactCholesky& strategy) {
  const double beta = prob.beta();
  Vector q = prob.atb();
  axpy(1.0, state.lambda, q);
  axpy(beta, state.y, q);
  if (!strategy.fat_path) return solve_spd(strategy.factor, q);
  // (beta I + A^T A)^{-1} = I/beta - A^T (I + A A^T / beta)^{-1} A / beta^2
  const Vector inner = solve_spd(strategy.factor, matvec(prob.a(), q));
  Vector x = scaled(q, 1.0 / beta);
  axpy(-1.0 / (beta * beta), matvec_transpose(prob.a(), inner), x);
  return x;
}

Vector x_update_fixed_shift(const LassoProblem& prob, const AdmmState& state,
                            const FixedShift& strategy) {
  const double beta = prob.beta();
  const double xi = strategy.xi;
  const Vector gram_x = matvec_transpose(prob.a(), matvec(prob.a(), state.x));
  const std::size_t n = prob.n();
  Vector out(n);
  if (strategy.mode == ShiftMode::Spro) {
    for (std::size_t i = 0; i < n; ++i) {
      const double grad = gram_x[i] - prob.atb()[i] - state.lambda[i] +
                          beta * (state.x[i] - state.y[i]);
      out[i] = state.x[i] - grad / xi;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = (state.lambda[i] + beta * state.y[i] + xi * state.x[i] - gram_x[i] +
                prob.atb()[i]) /
               (beta + xi);
    }
  }
  return out;
}

Vector x_update_metric(const LassoProblem& prob, const AdmmState& state,
                       VariableMetric& strategy) {
  const Vector mx = m_apply(prob, state.x);
  Vector r = prob.atb();
  axpy(1.0, state.lambda, r);
  axpy(prob.beta(), state.y, r);
  axpy(-1.0, mx, r);
  const Vector step = std::visit(
      [&](auto& metric) -> Vector {
        using T = std::decay_t<decltype(metric)>;
        if constexpr (std::is_same_v<T, DampedBMetric>) {
          return metric.solve(r);
        } else {
          return metric.apply(r);
        }
      },
      strategy.metric);
  return add(state.x, step);
}

Vector x_update(const LassoProblem& prob, const AdmmState& state, XStrategy& strategy) {
  return std::visit(
      [&](auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExactCholesky>) {
          return x_update_exact(prob, state, s);
        } else if constexpr (std::is_same_v<T, FixedShift>) {
          return x_update_fixed_shift(prob, state, s);
        } else {
          return x_update_metric(prob, state, s);
        }
      },
      strategy);
}

bool update_metric(const LassoProblem& prob, const AdmmState& state, VariableMetric& strategy) {
  if (state.k == 0) return false;
  if (strategy.k_bar && state.k > *strategy.k_bar) return false;
  Vector s = subtract(state.x, state.x_prev);
  if (norm2(s) <= 1e-12 * (1.0 + norm2(state.x))) return false;

  std::visit(
      [&](auto& metric) {
        using T = std::decay_t<decltype(metric)>;
        if constexpr (std::is_same_v<T, DampedBMetric>) {
          metric.update(s, [&](std::span<const double> v) { return m_apply(prob, v); });
        } else {
          Vector l = m_apply(prob, s);
          const UpdatePair pair(std::move(s), std::move(l));
          if constexpr (std::is_same_v<T, BfgsMetric>) {
            metric.update(pair);
          } else {
            metric.push(pair);
          }
        }
      },
      strategy.metric);
  ++strategy.updates;
  return true;
}

Vector y_update(const LassoProblem& prob, std::span<const double> x_new,
                std::span<const double> lambda) {
  Vector v(x_new.begin(), x_new.end());
  axpy(-1.0 / prob.beta(), lambda, v);
  return soft_threshold(v, prob.tau() / prob.beta());
}

Vector lambda_update(std::span<const double> lambda, std::span<const double> x_new,
                     std::span<const double> y_new, double beta, double alpha) {
  Vector out(lambda.begin(), lambda.end());
  const Vector gap = subtract(x_new, y_new);
  axpy(-alpha * beta, gap, out);
  return out;
}

StopCheck check_stop(std::span<const double> x, std::span<const double> y,
                     std::span<const double> y_prev, std::span<const double> lambda,
                     double eps_abs, double eps_rel, double beta) {
  const double sqrt_n = std::sqrt(static_cast<double>(x.size()));
  StopCheck out{};
  out.r_norm = norm2(subtract(x, y));
  out.s_norm = beta * norm2(subtract(y, y_prev));
  out.eps_pri = sqrt_n * eps_abs + eps_rel * std::max(norm2(x), norm2(y));
  out.eps_dual = sqrt_n * eps_abs + eps_rel * norm2(lambda);
  out.stop = out.r_norm <= out.eps_pri && out.s_norm <= out.eps_dual;
  return out;
}

DenseMatrix proximal_matrix(const XStrategy& strategy, const LassoProblem& prob) {
  const std::size_t n = prob.n();
  return std::visit(
      [&](const auto& s) -> DenseMatrix {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ExactCholesky>) {
          return DenseMatrix(n, n);
        } else {
          const double shift = [&] {
            if constexpr (std::is_same_v<T, FixedShift>) {
              return s.mode == ShiftMode::Spro ? s.xi - prob.beta() : s.xi;
            } else {
              return -prob.beta();
            }
          }();
          DenseMatrix t = -1.0 * gram_columns(prob.a());
          if constexpr (std::is_same_v<T, VariableMetric>) t += metric_matrix(s.metric);
          for (std::size_t i = 0; i < n; ++i) t(i, i) += shift;
          return symmetrized(t);
        }
      },
      strategy);
}

// ---------------------------------------------------------------------------
// Main loop
// ---------------------------------------------------------------------------

SolveResult solve(const LassoProblem& prob, const SolverConfig& config,
                  const IterationObserver& observer) {
  const auto start = Clock::now();
  SolveResult result{AdmmState::zeros(prob.n()), {}};
  AdmmState& state = result.state;
  IterationReport& report = result.report;

  SetupTimings setup;
  XStrategy strategy = prepare_strategy(prob, config, &setup);
  report.time_factor = setup.factor;
  report.time_eig = setup.eig;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (!std::is_same_v<T, ExactCholesky>) report.xi = s.xi;
      },
      strategy);

  const auto loop_start = Clock::now();
  for (std::size_t k = 0; k < config.max_iter; ++k) {
    state.k = k;
    bool metric_updated = false;
    if (auto* vm = std::get_if<VariableMetric>(&strategy)) {
      const auto qn_start = Clock::now();
      metric_updated = update_metric(prob, state, *vm);
      if (auto* damped = std::get_if<DampedBMetric>(&vm->metric)) damped->factorize();
      report.time_qn += seconds_since(qn_start);
    }

    Vector x_new = x_update(prob, state, strategy);
    Vector y_new = y_update(prob, x_new, state.lambda);
    Vector lambda_new = lambda_update(state.lambda, x_new, y_new, prob.beta(), config.alpha);
    const StopCheck stop = check_stop(x_new, y_new, state.y, lambda_new, config.eps_abs,
                                      config.eps_rel, prob.beta());
    report.primal_residuals.push_back(stop.r_norm);
    report.dual_residuals.push_back(stop.s_norm);

    if (observer) {
      observer(IterationEvent{k, state, x_new, y_new, lambda_new, strategy, metric_updated, stop});
    }

    state.x_prev = std::move(state.x);
    state.y_prev = std::move(state.y);
    state.x = std::move(x_new);
    state.y = std::move(y_new);
    state.lambda = std::move(lambda_new);
    state.k = k + 1;
    report.iterations = k + 1;
    if (stop.stop) {
      report.converged = true;
      break;
    }
  }
  const double loop_time = seconds_since(loop_start);

  if (const auto* vm = std::get_if<VariableMetric>(&strategy)) report.metric_updates = vm->updates;
  report.objective = objective(prob, state.x, state.y);
  report.kkt_final = kkt_residual(prob, state.y);
  report.time_algo = std::max(loop_time - report.time_qn, 0.0);
  report.time_total = seconds_since(start);
  return result;
}

}  // namespace qnadmm
