#pragma once

// Shared helpers for the test suites. Eigen serves as the independent dense
// oracle; nothing here is used by the library itself.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

#include "qnadmm/linalg.hpp"
#include "qnadmm/problem.hpp"

namespace qnadmm::testing {

inline Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd out(a.rows(), a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) out(i, j) = a(i, j);
  return out;
}

inline Eigen::MatrixXd to_eigen(const SparseMatrix& a) { return to_eigen(a.to_dense()); }

inline Eigen::VectorXd to_eigen(std::span<const double> v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i];
  return out;
}

inline DenseMatrix from_eigen(const Eigen::MatrixXd& a) {
  DenseMatrix out(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out(i, j) = a(i, j);
  return out;
}

inline Vector from_eigen_vec(const Eigen::VectorXd& v) { return Vector(v.data(), v.data() + v.size()); }

// Independent generator stream for test data.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<>(lo, hi)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }

  Vector vector(std::size_t n) {
    Vector v(n);
    for (double& x : v) x = normal();
    return v;
  }

  Eigen::MatrixXd gaussian(std::size_t rows, std::size_t cols) {
    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = normal();
    return g;
  }

  // Well-conditioned SPD matrix with spectrum roughly in [0.1, 3].
  Eigen::MatrixXd spd(std::size_t n) {
    const Eigen::MatrixXd g = gaussian(n, n);
    return g * g.transpose() / static_cast<double>(n) + 0.1 * Eigen::MatrixXd::Identity(n, n);
  }

  SparseMatrix sparse(std::size_t rows, std::size_t cols, double density) {
    std::vector<Triplet> entries;
    for (std::size_t j = 0; j < cols; ++j)
      for (std::size_t i = 0; i < rows; ++i)
        if (uniform(0.0, 1.0) < density) entries.push_back({i, j, normal()});
    return SparseMatrix::from_triplets(rows, cols, std::move(entries));
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

inline double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  return rel_diff(to_eigen(a), to_eigen(b));
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline double min_eig(const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

inline double max_eig(const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

// Small generated instance.
inline GeneratedInstance small_instance(std::size_t n, std::size_t m, double beta,
                                        std::uint64_t seed, double s = 0.2, double p = 0.5) {
  GeneratorSpec g;
  g.n = n;
  g.m = m;
  g.sparsity_s = s;
  g.density_p = p;
  g.beta = beta;
  g.seed = seed;
  return generate(g);
}

inline GeneratedInstance desk_instance(std::uint64_t seed, double beta = 10.0) {
  return small_instance(200, 100, beta, seed, 0.1, 0.5);
}

}  // namespace qnadmm::testing
