#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>

#include "qnadmm/linalg.hpp"
#include "qnadmm/spectral.hpp"

namespace qnadmm {

// Secant pair s = x^{k+1} - x^k, l = M s. Construction rejects pairs whose
// curvature s^T l is at or below 1e-14 ||s|| ||l|| (CurvatureBreakdown).
struct UpdatePair {
  UpdatePair(Vector s_in, Vector l_in);

  Vector s;
  Vector l;
  double curvature;
};

// Inverse BFGS update of H, written in the rank-two form
//   H+ = H - (H l s^T + s l^T H) / s^T l + (1 + l^T H l / s^T l) s s^T / s^T l.
// Satisfies H+ l = s.
DenseMatrix bfgs_update_H(const DenseMatrix& h, const UpdatePair& pair);

// Direct BFGS update of B: B+ = B + l l^T / l^T s - B s s^T B / s^T B s.
// Satisfies B+ s = l. Throws MetricNotPositiveDefinite when s^T B s <= 0.
DenseMatrix bfgs_update_B(const DenseMatrix& b, const UpdatePair& pair);

// Dense inverse metric H_k, seeded with H_0 = I / xi0.
class BfgsMetric {
 public:
  BfgsMetric(std::size_t n, double xi0);

  void update(const UpdatePair& pair);
  Vector apply(std::span<const double> v) const { return multiply(h_, v); }

  const DenseMatrix& h() const noexcept { return h_; }
  double xi0() const noexcept { return xi0_; }
  std::size_t updates() const noexcept { return updates_; }

 private:
  DenseMatrix h_;
  double xi0_;
  std::size_t updates_ = 0;
};

struct StoredPair {
  Vector s;
  Vector l;
  double rho;  // 1 / s^T l
};

// Limited-memory BFGS over a fixed H_0 = gamma0 * I, keeping the newest
// `capacity` pairs. apply() is the two-loop recursion, O(capacity * n).
class LbfgsMetric {
 public:
  LbfgsMetric(std::size_t n, std::size_t capacity, double gamma0);

  void push(const UpdatePair& pair);
  Vector apply(std::span<const double> v) const;
  // Dense H_k, column by column through apply(). For small n only.
  DenseMatrix materialize() const;

  std::size_t dimension() const noexcept { return n_; }
  std::size_t size() const noexcept { return history_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  double gamma0() const noexcept { return gamma0_; }
  const std::deque<StoredPair>& history() const noexcept { return history_; }

 private:
  std::size_t n_;
  std::size_t capacity_;
  double gamma0_;
  std::deque<StoredPair> history_;
};

// Damped direct update used by the second convergence remedy:
//   B_{k+1} = B_k + c_k (l~ l~^T / l~^T s - B s s^T B / s^T B s),
//   l~ = M s + delta s,  c_k = zeta^k  (c_0 = 1).
// Keeps B_k >= M + delta I whenever B_0 >= M + delta I.
class DampedBMetric {
 public:
  DampedBMetric(DenseMatrix b0, double delta, double zeta);

  // Applies one damped step for iterate difference s (s must be nonzero) and
  // advances k. Steps with c_k < 1e-16 leave B and its factor untouched.
  void update(std::span<const double> s, const LinearOperator& m_apply);

  // B_k^{-1} r through a cached Cholesky factor, refactored after changes.
  Vector solve(std::span<const double> r);
  // Builds the Cholesky factor now if the cached one is stale.
  void factorize();

  const DenseMatrix& b() const noexcept { return b_; }
  double delta() const noexcept { return delta_; }
  double zeta() const noexcept { return zeta_; }
  std::size_t k() const noexcept { return k_; }
  double last_weight() const noexcept { return last_weight_; }
  // Spectral norm of the undamped step (B-bar_{k+1} - B_k) from the last update.
  double last_step_norm() const noexcept { return last_step_norm_; }
  bool factor_cached() const noexcept { return factor_.has_value(); }
  std::size_t factorizations() const noexcept { return factorizations_; }

 private:
  DenseMatrix b_;
  double delta_;
  double zeta_;
  std::size_t k_ = 0;
  double last_weight_ = 0.0;
  double last_step_norm_ = 0.0;
  std::optional<CholeskyFactor> factor_;
  std::size_t factorizations_ = 0;
};

using ProximalMetric = std::variant<BfgsMetric, LbfgsMetric, DampedBMetric>;

// Dense B_k represented by a metric (H^{-1} for the inverse forms).
DenseMatrix metric_matrix(const ProximalMetric& metric);

struct OrderCheck {
  bool pass;
  double min_eig;  // smallest eigenvalue of M^{-1} - H
};

// Spectral check of H <= M^{-1}. Throws InvalidArgument above `cap`.
OrderCheck verify_order(const DenseMatrix& h, const DenseMatrix& m, double tol = 1e-8,
                        std::size_t cap = kSpectralCap);

// Plain-text snapshot of a metric for offline analysis.
void dump_snapshot(std::ostream& out, const ProximalMetric& metric);

}  // namespace qnadmm
