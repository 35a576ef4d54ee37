#include "qnadmm/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qnadmm/errors.hpp"

namespace qnadmm {

SymmetricEigen symmetric_eigen(const DenseMatrix& s, std::size_t cap) {
  if (!s.square()) throw DimensionError("symmetric_eigen: matrix is not square");
  const std::size_t n = s.rows();
  if (n > cap) {
    throw InvalidArgument("spectral check unavailable at this scale (n=" + std::to_string(n) +
                          ", cap=" + std::to_string(cap) + ")");
  }
  DenseMatrix a = symmetrized(s);
  DenseMatrix v = DenseMatrix::identity(n);

  const double scale = std::max(norm_frobenius(a), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < j; ++i) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out{Vector(n), DenseMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    std::ranges::copy(v.col(order[k]), out.vectors.col(k).begin());
  }
  return out;
}

double min_eigenvalue(const DenseMatrix& s, std::size_t cap) {
  const auto eig = symmetric_eigen(s, cap);
  return eig.values.empty() ? 0.0 : eig.values.front();
}

double max_eigenvalue(const DenseMatrix& s, std::size_t cap) {
  const auto eig = symmetric_eigen(s, cap);
  return eig.values.empty() ? 0.0 : eig.values.back();
}

DenseMatrix spd_inverse(const DenseMatrix& s) {
  const CholeskyFactor factor = cholesky(s);
  const std::size_t n = s.rows();
  DenseMatrix out(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = solve_spd(factor, e);
    std::ranges::copy(col, out.col(j).begin());
    e[j] = 0.0;
  }
  return symmetrized(out);
}

}  // namespace qnadmm
