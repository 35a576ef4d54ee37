#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <variant>

#include "qnadmm/linalg.hpp"
#include "qnadmm/metric.hpp"
#include "qnadmm/problem.hpp"

namespace qnadmm {

// The seven x-subproblem treatments.
enum class Variant {
  Opt,     // exact x-update (Cholesky / Sherman-Morrison)
  Spro,    // T = xi I - beta I - A^T A, xi = kappa1 * lambda_max(M)
  Ipro,    // T = xi I - A^T A, xi = kappa2 * lambda_max(A^T A)
  Bfgs,    // dense BFGS on H_k, never frozen
  Lbfgs,   // limited-memory BFGS, never frozen
  BfgsR,   // damped direct update of B_k (second remedy)
  LbfgsR,  // limited-memory BFGS frozen after k_bar (first remedy)
};

inline constexpr std::array kAllVariants = {Variant::Opt,   Variant::Spro,  Variant::Ipro,
                                            Variant::Bfgs,  Variant::Lbfgs, Variant::BfgsR,
                                            Variant::LbfgsR};

std::string_view variant_name(Variant v);   // "opt", "spro", ...
std::string_view variant_label(Variant v);  // "ADM-OPT", "ADM-SPRO", ...
std::optional<Variant> parse_variant(std::string_view name);

bool uses_metric(Variant v);

struct SolverConfig {
  Variant variant = Variant::Opt;
  double alpha = 1.0;  // multiplier steplength
  double kappa1 = 1.01;
  double kappa2 = 0.8;
  double kappa3 = 1.01;
  std::size_t memory = 10;           // L-BFGS pairs
  std::optional<std::size_t> k_bar;  // last iteration with a metric update (LbfgsR)
  double delta = 1e-5;               // BfgsR shift
  double zeta = 0.99;                // BfgsR weights c_k = zeta^k
  double eps_abs = 1e-4;
  double eps_rel = 1e-3;
  std::size_t max_iter = 20000;
  PowerIterationOptions power;

  // Throws InvalidArgument on out-of-range parameters.
  void validate() const;

  // The kappa that scales xi for this variant (1.0 for Opt).
  double kappa() const;
  void set_kappa(double kappa);
};

struct AdmmState {
  Vector x;
  Vector y;
  Vector lambda;
  Vector x_prev;
  Vector y_prev;
  std::size_t k = 0;

  static AdmmState zeros(std::size_t n);
};

struct ExactCholesky {
  CholeskyFactor factor;  // of A^T A + beta I, or of I + A A^T / beta when fat
  bool fat_path = false;  // m < n: Sherman-Morrison route
};

enum class ShiftMode { Spro, Ipro };

struct FixedShift {
  double xi = 0.0;
  ShiftMode mode = ShiftMode::Spro;
};

struct VariableMetric {
  ProximalMetric metric;
  std::optional<std::size_t> k_bar;
  double xi = 0.0;  // initial scale: H_0 = I / xi or B_0 = xi I
  std::size_t updates = 0;
};

using XStrategy = std::variant<ExactCholesky, FixedShift, VariableMetric>;

struct SetupTimings {
  double factor = 0.0;  // Gram formation + Cholesky
  double eig = 0.0;     // maximum eigenvalue estimate
};

// Factorization or eigenvalue estimation, done once per problem.
XStrategy prepare_strategy(const LassoProblem& prob, const SolverConfig& config,
                           SetupTimings* timings = nullptr);

// Solves (A^T A + beta I) x = A^T b + lambda + beta y.
Vector x_update_exact(const LassoProblem& prob, const AdmmState& state,
                      const ExactCholesky& strategy);
Vector x_update_fixed_shift(const LassoProblem& prob, const AdmmState& state,
                            const FixedShift& strategy);
// x + H_k (lambda + beta y + A^T b - M x); for the damped metric H_k = B_k^{-1}.
Vector x_update_metric(const LassoProblem& prob, const AdmmState& state,
                       VariableMetric& strategy);
Vector x_update(const LassoProblem& prob, const AdmmState& state, XStrategy& strategy);

// Feeds the pair (x^k - x^{k-1}, M(x^k - x^{k-1})) to the metric when k is
// within the update window and the step is not negligible
// (||s|| > 1e-12 (1 + ||x||)). Returns whether the metric changed.
bool update_metric(const LassoProblem& prob, const AdmmState& state, VariableMetric& strategy);

Vector y_update(const LassoProblem& prob, std::span<const double> x_new,
                std::span<const double> lambda);
Vector lambda_update(std::span<const double> lambda, std::span<const double> x_new,
                     std::span<const double> y_new, double beta, double alpha);

struct StopCheck {
  bool stop;
  double r_norm;  // ||x - y||
  double s_norm;  // ||beta (y - y_prev)||
  double eps_pri;
  double eps_dual;
};

StopCheck check_stop(std::span<const double> x, std::span<const double> y,
                     std::span<const double> y_prev, std::span<const double> lambda,
                     double eps_abs, double eps_rel, double beta);

// Dense proximal matrix T_k currently held by a strategy (small n only).
DenseMatrix proximal_matrix(const XStrategy& strategy, const LassoProblem& prob);

struct IterationReport {
  std::size_t iterations = 0;
  bool converged = false;
  Vector primal_residuals;
  Vector dual_residuals;
  double objective = 0.0;
  double kkt_final = 0.0;  // kkt_residual at the final y
  double xi = 0.0;         // scale used by shift / metric variants
  std::size_t metric_updates = 0;
  double time_total = 0.0;
  double time_factor = 0.0;
  double time_eig = 0.0;
  double time_algo = 0.0;
  double time_qn = 0.0;
};

struct IterationEvent {
  std::size_t k;              // iteration producing w^{k+1}
  const AdmmState& before;    // w^k (plus previous iterates)
  const Vector& x;            // x^{k+1}
  const Vector& y;            // y^{k+1}
  const Vector& lambda;       // lambda^{k+1}
  const XStrategy& strategy;  // metric used for this x-update
  bool metric_updated;
  const StopCheck& stop;
};

using IterationObserver = std::function<void(const IterationEvent&)>;

struct SolveResult {
  AdmmState state;
  IterationReport report;
};

// Runs from x = y = lambda = 0 until the stopping test passes or max_iter is
// reached (reported as converged = false).
SolveResult solve(const LassoProblem& prob, const SolverConfig& config,
                  const IterationObserver& observer = {});

}  // namespace qnadmm
