#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "qnadmm/linalg.hpp"
#include "qnadmm/random.hpp"

namespace qnadmm {

// min 1/2 ||Ax - b||^2 + tau ||y||_1  s.t. x - y = 0, with ADMM penalty beta.
class LassoProblem {
 public:
  LassoProblem(SparseMatrix a, Vector b, double tau, double beta);

  const SparseMatrix& a() const noexcept { return a_; }
  const Vector& b() const noexcept { return b_; }
  const Vector& atb() const noexcept { return atb_; }
  double tau() const noexcept { return tau_; }
  double beta() const noexcept { return beta_; }
  std::size_t n() const noexcept { return a_.cols(); }
  std::size_t m() const noexcept { return a_.rows(); }

  // Same data, different penalty.
  LassoProblem with_beta(double beta) const;

 private:
  SparseMatrix a_;
  Vector b_;
  Vector atb_;
  double tau_;
  double beta_;
};

// Random Lasso instance recipe: sparse ground truth, sparse Gaussian design,
// Gaussian observation noise and tau = tau_factor * ||A^T b||_inf.
struct GeneratorSpec {
  std::size_t n = 200;
  std::size_t m = 100;
  double sparsity_s = 0.1;  // density of the ground truth
  double density_p = 0.5;   // density of A
  double noise_var = 1e-3;
  double tau_factor = 0.1;
  double beta = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GeneratedInstance {
  LassoProblem problem;
  Vector ground_truth;
};

GeneratedInstance generate(const GeneratorSpec& spec);

// Sparse standard-normal sample: ceil(density * rows * cols) distinct positions
// drawn uniformly without replacement.
SparseMatrix sprandn(std::size_t rows, std::size_t cols, double density, Rng& rng);

// (A^T A + beta I) v without forming A^T A.
Vector m_apply(const LassoProblem& prob, std::span<const double> v);

// f(x) + g(y) = 1/2 ||Ax - b||^2 + tau ||y||_1
double objective(const LassoProblem& prob, std::span<const double> x, std::span<const double> y);

// Elementwise sign(v) * max(|v| - kappa, 0).
Vector soft_threshold(std::span<const double> v, double kappa);

// Worst violation of A^T(Ax - b) in -tau d||x||_1; zero iff x is optimal.
double kkt_residual(const LassoProblem& prob, std::span<const double> x);

// Instance bundle: A.mtx, b.txt, xbar.txt and a flat meta.toml.
void save_bundle(const std::filesystem::path& dir, const GeneratedInstance& instance,
                 const GeneratorSpec& spec);

struct LoadedBundle {
  GeneratedInstance instance;
  GeneratorSpec spec;
};

LoadedBundle load_bundle(const std::filesystem::path& dir);

}  // namespace qnadmm
