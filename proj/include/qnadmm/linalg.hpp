#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace qnadmm {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
double norm1(std::span<const double> v);
Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> v, double alpha);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// ---------------------------------------------------------------------------
// Dense matrices (column-major)
// ---------------------------------------------------------------------------

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static DenseMatrix identity(std::size_t n, double scale = 1.0);
  static DenseMatrix diagonal(std::span<const double> diag);
  // Builds a matrix from row-major nested initializer data; handy in tests.
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return values_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {values_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const {
    return {values_.data() + j * rows_, rows_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  DenseMatrix transposed() const;

  DenseMatrix& operator+=(const DenseMatrix& other);
  DenseMatrix& operator-=(const DenseMatrix& other);
  DenseMatrix& operator*=(double alpha);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double alpha, DenseMatrix a);

Vector multiply(const DenseMatrix& a, std::span<const double> v);
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);

double norm_inf(const DenseMatrix& a);  // max absolute row sum
double norm_frobenius(const DenseMatrix& a);
// ||S - S^T||_inf
double asymmetry(const DenseMatrix& s);
DenseMatrix symmetrized(const DenseMatrix& s);

// ---------------------------------------------------------------------------
// Sparse matrices (compressed column)
// ---------------------------------------------------------------------------

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;
  // Validates the compressed-column invariants; throws InvalidArgument.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> col_ptr,
               std::vector<std::size_t> row_idx, std::vector<double> values);

  // Duplicate entries are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_dense(const DenseMatrix& dense, double drop_tol = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> col_ptr() const noexcept { return col_ptr_; }
  std::span<const std::size_t> row_indices() const noexcept { return row_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  SparseMatrix transposed() const;
  DenseMatrix to_dense() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_ptr_{0};
  std::vector<std::size_t> row_idx_;
  std::vector<double> values_;
};

Vector matvec(const SparseMatrix& a, std::span<const double> v);
Vector matvec_transpose(const SparseMatrix& a, std::span<const double> v);

// A^T A as a dense n x n matrix.
DenseMatrix gram_columns(const SparseMatrix& a);
// A A^T as a dense m x m matrix.
DenseMatrix gram_rows(const SparseMatrix& a);

// ---------------------------------------------------------------------------
// Dense Cholesky
// ---------------------------------------------------------------------------

class CholeskyFactor {
 public:
  CholeskyFactor() = default;
  explicit CholeskyFactor(DenseMatrix lower) : lower_(std::move(lower)) {}

  std::size_t dimension() const noexcept { return lower_.rows(); }
  const DenseMatrix& lower() const noexcept { return lower_; }

 private:
  DenseMatrix lower_;
};

// Symmetry is checked to 1e-10 * ||S||_inf and the input is symmetrized before
// factoring. Throws NotPositiveDefinite carrying the failing pivot.
CholeskyFactor cholesky(const DenseMatrix& s);
Vector solve_spd(const CholeskyFactor& factor, std::span<const double> rhs);

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

using LinearOperator = std::function<Vector(std::span<const double>)>;

struct PowerIterationOptions {
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  std::uint64_t seed = 0x5eed;
};

// Dominant eigenvalue of a symmetric PSD operator. Stops when the relative
// Rayleigh-quotient change, extrapolated over its geometric tail, is at most
// tol; throws ConvergenceError carrying the last estimate otherwise.
double max_eigenvalue_sym(const LinearOperator& apply, std::size_t dim,
                          const PowerIterationOptions& options = {});

}  // namespace qnadmm
