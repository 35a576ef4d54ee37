#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qnadmm/linalg.hpp"
#include "qnadmm/problem.hpp"
#include "qnadmm/solver.hpp"

namespace qnadmm {

// A primal-dual point w = (x, y, lambda).
struct WPoint {
  Vector x;
  Vector y;
  Vector lambda;
};

// F = (eta_f - lambda; eta_g + lambda; x - y).
struct KktVector {
  Vector grad_f_part;
  Vector subgrad_g_part;
  Vector primal_gap;

  double norm() const;
};

// eta_f = A^T (A x - b).
Vector gradient_f(const LassoProblem& prob, std::span<const double> x);

// eta_g from the y-subproblem optimality: -lambda_prev + beta (x_new - y_new).
Vector recover_eta_g(std::span<const double> lambda_prev, std::span<const double> x_new,
                     std::span<const double> y_new, double beta);

// Assembles F at w. When check_inclusion is set, eta_g must lie in
// tau * d||y||_1 componentwise within 1e-8 * max(1, tau); otherwise throws
// Error("subgradient recovery failed ...").
KktVector kkt_vector(const LassoProblem& prob, const WPoint& w, std::span<const double> eta_f,
                     std::span<const double> eta_g, bool check_inclusion = true);

// F^{k+1} for one solver step (lambda_prev = lambda^k, w_new = w^{k+1}).
KktVector kkt_vector_at_step(const LassoProblem& prob, std::span<const double> lambda_prev,
                             const WPoint& w_new);

// ||w - w*||^2_G with G = diag(T, S + beta I, I / beta). Pass s = nullptr for S = 0.
double g_distance(const WPoint& w, const WPoint& w_star, const DenseMatrix& t,
                  const DenseMatrix* s, double beta);

struct ReferenceSolution {
  WPoint w_star;  // x* = y*, lambda* = A^T (A x* - b)
  std::size_t iterations = 0;
  bool converged = false;
};

// Exact-update run with eps_abs = eps_rel = 1e-12 and max_iter = 1e6.
ReferenceSolution reference_solve(const LassoProblem& prob);

struct TraceStep {
  std::size_t k = 0;
  WPoint before;  // w^k
  WPoint after;   // w^{k+1}
  DenseMatrix t;  // T_k used for this x-update
  bool metric_updated = false;
  double weight = 0.0;     // c_k of the damped metric at this step
  double step_norm = 0.0;  // ||B-bar_{k+1} - B_k|| of the last damped update
};

struct Trace {
  SolverConfig config;
  double beta = 0.0;
  std::vector<TraceStep> steps;
  IterationReport report;
};

// Solves while materializing T_k at every step. Throws InvalidArgument when
// n exceeds `cap`.
Trace record_trace(const LassoProblem& prob, const SolverConfig& config,
                   std::size_t cap = kSpectralCap);

struct DescentCheck {
  bool pass = true;
  Vector before;  // ||w^k - w*||^2_{G_k}
  Vector after;   // ||w^{k+1} - w*||^2_{G_k} (or G_{k+1} for the relaxed check)
  double worst_excess = 0.0;  // max of after - bound
  std::size_t worst_step = 0;
};

// ||w^{k+1} - w*||^2_{G_k} <= ||w^k - w*||^2_{G_k} + tol at every step.
DescentCheck check_descent(const Trace& trace, const WPoint& w_star, double tol = 1e-8);

// ||w^{k+1} - w*||^2_{G_{k+1}} <= (1 + gamma_k) ||w^k - w*||^2_{G_k} + tol, for
// every step that has a successor in the trace.
DescentCheck check_relaxed_descent(const Trace& trace, const WPoint& w_star,
                                   std::span<const double> gamma, double tol = 1e-8);

struct MuEstimate {
  Vector ratio;    // ||F^{k+1}||^2 / (||x^{k+1} - x^k||^2_{T_k} + ||x^{k+1} - y^k||^2)
  Vector running;  // running maximum of ratio
  double value() const { return running.empty() ? 0.0 : running.back(); }
};

// Steps whose denominator is exactly zero are skipped (ratio recorded as 0).
MuEstimate mu_hat_series(const LassoProblem& prob, const Trace& trace);

struct ConditionCertificate {
  Vector gamma_series;
  double gamma_sum = 0.0;
  bool growth_ok = true;
  bool lower_bound_ok = true;
  double q_estimate = 0.0;  // running max of ||B-bar_{k+1} - B_k|| (damped traces)
  std::optional<std::size_t> failed_step;
  std::string failure;

  bool pass() const { return growth_ok && lower_bound_ok; }
};

// Smallest gamma >= 0 with t_next <= (1 + gamma) t, from the pencil restricted
// to range(t) (eigenvalues below 1e-10 * ||t|| dropped). Returns +inf when
// t_next has weight outside range(t).
double growth_factor(const DenseMatrix& t, const DenseMatrix& t_next, double tol = 1e-8);

// Checks lower <= T_k and T_{k+1} <= (1 + gamma_k) T_k over a series.
ConditionCertificate certify_condition1(const std::vector<DenseMatrix>& t_series,
                                        const DenseMatrix& lower, double tol = 1e-8);

// Damped-metric trace: lower bound delta I; fills q_estimate.
ConditionCertificate certify_remedy2(const Trace& trace, double tol = 1e-8);

// Frozen trace: the tail from step k_bar on, against T_{k_bar}.
ConditionCertificate certify_frozen(const Trace& trace, std::size_t k_bar, double tol = 1e-8);

// "step,value" CSV.
void write_series_csv(const std::filesystem::path& path, std::span<const double> values,
                      std::size_t first_step = 0);

}  // namespace qnadmm
