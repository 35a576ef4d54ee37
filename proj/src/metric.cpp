#include "qnadmm/metric.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qnadmm/errors.hpp"
#include "qnadmm/text.hpp"

namespace qnadmm {
namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) +
                         ", got " + std::to_string(got));
  }
}

// Spectral norm of a u u^T - b w w^T: its nonzero eigenvalues are those of the
// 2x2 matrix [[a u.u, a u.w], [-b u.w, -b w.w]].
double rank_two_spectral_norm(std::span<const double> u, double a, std::span<const double> w,
                              double b) {
  const double uu = dot(u, u);
  const double ww = dot(w, w);
  const double uw = dot(u, w);
  const double trace = a * uu - b * ww;
  const double det = -a * b * (uu * ww - uw * uw);
  const double disc = std::sqrt(std::max(0.25 * trace * trace - det, 0.0));
  return std::max(std::abs(0.5 * trace + disc), std::abs(0.5 * trace - disc));
}

}  // namespace

UpdatePair::UpdatePair(Vector s_in, Vector l_in) : s(std::move(s_in)), l(std::move(l_in)) {
  require_dim(l.size(), s.size(), "UpdatePair");
  curvature = dot(s, l);
  if (!(curvature > 1e-14 * norm2(s) * norm2(l))) {
    throw CurvatureBreakdown("curvature breakdown: s^T l = " + format_double(curvature));
  }
}

DenseMatrix bfgs_update_H(const DenseMatrix& h, const UpdatePair& pair) {
  const std::size_t n = pair.s.size();
  require_dim(h.rows(), n, "bfgs_update_H");
  require_dim(h.cols(), n, "bfgs_update_H");
  const Vector hl = multiply(h, pair.l);
  const double sl = pair.curvature;
  const double coef = (1.0 + dot(pair.l, hl) / sl) / sl;
  const auto& s = pair.s;
  DenseMatrix out(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      out(i, j) = h(i, j) - (hl[i] * s[j] + s[i] * hl[j]) / sl + coef * s[i] * s[j];
  return out;
}

DenseMatrix bfgs_update_B(const DenseMatrix& b, const UpdatePair& pair) {
  const std::size_t n = pair.s.size();
  require_dim(b.rows(), n, "bfgs_update_B");
  require_dim(b.cols(), n, "bfgs_update_B");
  const Vector bs = multiply(b, pair.s);
  const double sbs = dot(pair.s, bs);
  if (!(sbs > 0.0)) {
    throw MetricNotPositiveDefinite("metric not positive definite: s^T B s = " +
                                    format_double(sbs));
  }
  const auto& l = pair.l;
  DenseMatrix out(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      out(i, j) = b(i, j) + l[i] * l[j] / pair.curvature - bs[i] * bs[j] / sbs;
  return out;
}

// ---------------------------------------------------------------------------
// BfgsMetric
// ---------------------------------------------------------------------------

BfgsMetric::BfgsMetric(std::size_t n, double xi0)
    : h_(DenseMatrix::identity(n, 1.0 / xi0)), xi0_(xi0) {
  if (!(xi0 > 0.0)) throw InvalidArgument("BfgsMetric: xi0 must be positive");
}

void BfgsMetric::update(const UpdatePair& pair) {
  h_ = bfgs_update_H(h_, pair);
  ++updates_;
}

// ---------------------------------------------------------------------------
// LbfgsMetric
// ---------------------------------------------------------------------------

LbfgsMetric::LbfgsMetric(std::size_t n, std::size_t capacity, double gamma0)
    : n_(n), capacity_(capacity), gamma0_(gamma0) {
  if (capacity == 0) throw InvalidArgument("LbfgsMetric: memory must be at least 1");
  if (!(gamma0 > 0.0)) throw InvalidArgument("LbfgsMetric: gamma0 must be positive");
}

void LbfgsMetric::push(const UpdatePair& pair) {
  require_dim(pair.s.size(), n_, "LbfgsMetric::push");
  history_.push_back({pair.s, pair.l, 1.0 / pair.curvature});
  if (history_.size() > capacity_) history_.pop_front();
}

Vector LbfgsMetric::apply(std::span<const double> v) const {
  require_dim(v.size(), n_, "LbfgsMetric::apply");
  Vector q(v.begin(), v.end());
  std::vector<double> alpha(history_.size());
  for (std::size_t i = history_.size(); i-- > 0;) {
    const auto& pair = history_[i];
    alpha[i] = pair.rho * dot(pair.s, q);
    axpy(-alpha[i], pair.l, q);
  }
  for (double& x : q) x *= gamma0_;
  for (std::size_t i = 0; i < history_.size(); ++i) {
    const auto& pair = history_[i];
    const double beta = pair.rho * dot(pair.l, q);
    axpy(alpha[i] - beta, pair.s, q);
  }
  return q;
}

DenseMatrix LbfgsMetric::materialize() const {
  DenseMatrix out(n_, n_);
  Vector e(n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    e[j] = 1.0;
    const Vector col = apply(e);
    std::ranges::copy(col, out.col(j).begin());
    e[j] = 0.0;
  }
  return symmetrized(out);
}

// ---------------------------------------------------------------------------
// DampedBMetric
// ---------------------------------------------------------------------------

DampedBMetric::DampedBMetric(DenseMatrix b0, double delta, double zeta)
    : b_(std::move(b0)), delta_(delta), zeta_(zeta) {
  if (!b_.square()) throw DimensionError("DampedBMetric: B0 must be square");
  if (!(delta > 0.0)) throw InvalidArgument("DampedBMetric: delta must be positive");
  if (!(zeta >= 0.0 && zeta < 1.0)) throw InvalidArgument("DampedBMetric: zeta must lie in [0, 1)");
}

void DampedBMetric::update(std::span<const double> s, const LinearOperator& m_apply) {
  const std::size_t n = b_.rows();
  require_dim(s.size(), n, "DampedBMetric::update");
  const double weight = std::pow(zeta_, static_cast<double>(k_));
  ++k_;
  last_weight_ = weight;
  if (weight < 1e-16) return;

  Vector shifted = m_apply(s);
  axpy(delta_, s, shifted);
  const UpdatePair pair(Vector(s.begin(), s.end()), std::move(shifted));
  const Vector bs = multiply(b_, pair.s);
  const double sbs = dot(pair.s, bs);
  if (!(sbs > 0.0)) {
    throw MetricNotPositiveDefinite("metric not positive definite: s^T B s = " +
                                    format_double(sbs));
  }
  const double a = 1.0 / pair.curvature;
  const double c = 1.0 / sbs;
  last_step_norm_ = rank_two_spectral_norm(pair.l, a, bs, c);
  const auto& l = pair.l;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      b_(i, j) += weight * (a * l[i] * l[j] - c * bs[i] * bs[j]);
  factor_.reset();
}

void DampedBMetric::factorize() {
  if (!factor_) {
    factor_ = cholesky(b_);
    ++factorizations_;
  }
}

Vector DampedBMetric::solve(std::span<const double> r) {
  factorize();
  return solve_spd(*factor_, r);
}

// ---------------------------------------------------------------------------
// Free functions
// ---------------------------------------------------------------------------

DenseMatrix metric_matrix(const ProximalMetric& metric) {
  return std::visit(
      [](const auto& m) -> DenseMatrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BfgsMetric>) {
          return spd_inverse(m.h());
        } else if constexpr (std::is_same_v<T, LbfgsMetric>) {
          return spd_inverse(m.materialize());
        } else {
          return m.b();
        }
      },
      metric);
}

OrderCheck verify_order(const DenseMatrix& h, const DenseMatrix& m, double tol, std::size_t cap) {
  if (m.rows() > cap) {
    throw InvalidArgument("spectral check unavailable at this scale (n=" +
                          std::to_string(m.rows()) + ")");
  }
  const DenseMatrix gap = spd_inverse(m) - h;
  const double min_eig = min_eigenvalue(gap, cap);
  return {min_eig >= -tol, min_eig};
}

void dump_snapshot(std::ostream& out, const ProximalMetric& metric) {
  auto write_matrix = [&](const char* name, const DenseMatrix& a) {
    out << "# " << name << ' ' << a.rows() << ' ' << a.cols() << '\n';
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j)
        out << (j ? " " : "") << format_double(a(i, j));
      out << '\n';
    }
  };
  auto write_vector_line = [&](std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v[i]);
    out << '\n';
  };
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BfgsMetric>) {
          out << "# bfgs xi0 " << format_double(m.xi0()) << " updates " << m.updates() << '\n';
          write_matrix("H", m.h());
        } else if constexpr (std::is_same_v<T, LbfgsMetric>) {
          out << "# lbfgs gamma0 " << format_double(m.gamma0()) << " pairs " << m.size()
              << " capacity " << m.capacity() << '\n';
          for (std::size_t i = 0; i < m.size(); ++i) {
            const auto& pair = m.history()[i];
            out << "# pair " << i << " rho " << format_double(pair.rho) << '\n';
            write_vector_line(pair.s);
            write_vector_line(pair.l);
          }
        } else {
          out << "# damped delta " << format_double(m.delta()) << " zeta "
              << format_double(m.zeta()) << " k " << m.k() << '\n';
          write_matrix("B", m.b());
        }
      },
      metric);
}

}  // namespace qnadmm
