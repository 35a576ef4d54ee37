#include "qnadmm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qnadmm/errors.hpp"
#include "qnadmm/random.hpp"

namespace qnadmm {
namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size " + std::to_string(a) +
                         " does not match " + std::to_string(b));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm_inf(std::span<const double> v) {
  double out = 0.0;
  for (double x : v) out = std::max(out, std::abs(x));
  return out;
}

double norm1(std::span<const double> v) {
  double out = 0.0;
  for (double x : v) out += std::abs(x);
  return out;
}

Vector add(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(std::span<const double> v, double alpha) {
  Vector out(v.begin(), v.end());
  for (double& x : out) x *= alpha;
  return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// ---------------------------------------------------------------------------
// DenseMatrix
// ---------------------------------------------------------------------------

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix DenseMatrix::identity(std::size_t n, double scale) {
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = scale;
  return out;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix out(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) out(i, i) = diag[i];
  return out;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  DenseMatrix out(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    require_same_size(rows[i].size(), c, "DenseMatrix::from_rows");
    for (std::size_t j = 0; j < c; ++j) out(i, j) = rows[i][j];
  }
  return out;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = (*this)(i, j);
  return out;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require_same_size(rows_, other.rows_, "DenseMatrix +=");
  require_same_size(cols_, other.cols_, "DenseMatrix +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  require_same_size(rows_, other.rows_, "DenseMatrix -=");
  require_same_size(cols_, other.cols_, "DenseMatrix -=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double alpha) {
  for (double& x : values_) x *= alpha;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double alpha, DenseMatrix a) { return a *= alpha; }

Vector multiply(const DenseMatrix& a, std::span<const double> v) {
  require_same_size(v.size(), a.cols(), "multiply");
  Vector out(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) axpy(v[j], a.col(j), out);
  return out;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_size(a.cols(), b.rows(), "multiply");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = 0; k < a.cols(); ++k) axpy(b(k, j), a.col(k), out.col(j));
  return out;
}

double norm_inf(const DenseMatrix& a) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) row += std::abs(a(i, j));
    out = std::max(out, row);
  }
  return out;
}

double norm_frobenius(const DenseMatrix& a) { return norm2(a.values()); }

double asymmetry(const DenseMatrix& s) {
  if (!s.square()) throw DimensionError("asymmetry: matrix is not square");
  double out = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j) row += std::abs(s(i, j) - s(j, i));
    out = std::max(out, row);
  }
  return out;
}

DenseMatrix symmetrized(const DenseMatrix& s) {
  if (!s.square()) throw DimensionError("symmetrized: matrix is not square");
  DenseMatrix out(s.rows(), s.cols());
  for (std::size_t j = 0; j < s.cols(); ++j)
    for (std::size_t i = 0; i < s.rows(); ++i) out(i, j) = 0.5 * (s(i, j) + s(j, i));
  return out;
}

// ---------------------------------------------------------------------------
// SparseMatrix
// ---------------------------------------------------------------------------

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols,
                           std::vector<std::size_t> col_ptr,
                           std::vector<std::size_t> row_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      col_ptr_(std::move(col_ptr)),
      row_idx_(std::move(row_idx)),
      values_(std::move(values)) {
  if (col_ptr_.size() != cols_ + 1 || col_ptr_.front() != 0)
    throw InvalidArgument("SparseMatrix: column offsets must have cols+1 entries from 0");
  if (row_idx_.size() != values_.size() || col_ptr_.back() != values_.size())
    throw InvalidArgument("SparseMatrix: stored values do not match last column offset");
  for (std::size_t j = 0; j < cols_; ++j) {
    if (col_ptr_[j] > col_ptr_[j + 1])
      throw InvalidArgument("SparseMatrix: column offsets must be nondecreasing");
    for (std::size_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      if (row_idx_[p] >= rows_) throw InvalidArgument("SparseMatrix: row index out of range");
      if (p > col_ptr_[j] && row_idx_[p] <= row_idx_[p - 1])
        throw InvalidArgument("SparseMatrix: row indices must increase within a column");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  for (const auto& t : entries)
    if (t.row >= rows || t.col >= cols)
      throw InvalidArgument("SparseMatrix::from_triplets: index out of range");
  std::ranges::sort(entries, [](const Triplet& a, const Triplet& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  std::vector<std::size_t> col_ptr(cols + 1, 0);
  std::vector<std::size_t> row_idx;
  std::vector<double> values;
  row_idx.reserve(entries.size());
  values.reserve(entries.size());
  for (std::size_t p = 0; p < entries.size(); ++p) {
    const auto& t = entries[p];
    if (p > 0 && entries[p - 1].col == t.col && entries[p - 1].row == t.row) {
      values.back() += t.value;
      continue;
    }
    row_idx.push_back(t.row);
    values.push_back(t.value);
    ++col_ptr[t.col + 1];
  }
  for (std::size_t j = 0; j < cols; ++j) col_ptr[j + 1] += col_ptr[j];
  return SparseMatrix(rows, cols, std::move(col_ptr), std::move(row_idx), std::move(values));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> col_ptr(n + 1);
  std::vector<std::size_t> row_idx(n);
  for (std::size_t j = 0; j <= n; ++j) col_ptr[j] = j;
  for (std::size_t j = 0; j < n; ++j) row_idx[j] = j;
  return SparseMatrix(n, n, std::move(col_ptr), std::move(row_idx), Vector(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense, double drop_tol) {
  std::vector<std::size_t> col_ptr(dense.cols() + 1, 0);
  std::vector<std::size_t> row_idx;
  std::vector<double> values;
  for (std::size_t j = 0; j < dense.cols(); ++j) {
    for (std::size_t i = 0; i < dense.rows(); ++i) {
      if (std::abs(dense(i, j)) > drop_tol) {
        row_idx.push_back(i);
        values.push_back(dense(i, j));
      }
    }
    col_ptr[j + 1] = values.size();
  }
  return SparseMatrix(dense.rows(), dense.cols(), std::move(col_ptr), std::move(row_idx),
                      std::move(values));
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<std::size_t> col_ptr(rows_ + 1, 0);
  for (std::size_t i : row_idx_) ++col_ptr[i + 1];
  for (std::size_t i = 0; i < rows_; ++i) col_ptr[i + 1] += col_ptr[i];
  std::vector<std::size_t> next(col_ptr.begin(), col_ptr.end() - 1);
  std::vector<std::size_t> row_idx(nnz());
  std::vector<double> values(nnz());
  // Visiting columns in order keeps the transposed row indices sorted.
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
      const std::size_t dest = next[row_idx_[p]]++;
      row_idx[dest] = j;
      values[dest] = values_[p];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(col_ptr), std::move(row_idx), std::move(values));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows_, cols_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) out(row_idx_[p], j) = values_[p];
  return out;
}

Vector matvec(const SparseMatrix& a, std::span<const double> v) {
  require_same_size(v.size(), a.cols(), "matvec");
  Vector out(a.rows(), 0.0);
  const auto ptr = a.col_ptr();
  const auto idx = a.row_indices();
  const auto val = a.values();
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double vj = v[j];
    if (vj == 0.0) continue;
    for (std::size_t p = ptr[j]; p < ptr[j + 1]; ++p) out[idx[p]] += val[p] * vj;
  }
  return out;
}

Vector matvec_transpose(const SparseMatrix& a, std::span<const double> v) {
  require_same_size(v.size(), a.rows(), "matvec_transpose");
  Vector out(a.cols(), 0.0);
  const auto ptr = a.col_ptr();
  const auto idx = a.row_indices();
  const auto val = a.values();
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t p = ptr[j]; p < ptr[j + 1]; ++p) sum += val[p] * v[idx[p]];
    out[j] = sum;
  }
  return out;
}

DenseMatrix gram_rows(const SparseMatrix& a) {
  // Sum of outer products of the columns of A.
  DenseMatrix out(a.rows(), a.rows());
  const auto ptr = a.col_ptr();
  const auto idx = a.row_indices();
  const auto val = a.values();
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t p = ptr[j]; p < ptr[j + 1]; ++p) {
      for (std::size_t q = ptr[j]; q <= p; ++q) out(idx[p], idx[q]) += val[p] * val[q];
    }
  }
  for (std::size_t j = 0; j < out.cols(); ++j)
    for (std::size_t i = 0; i < j; ++i) out(i, j) = out(j, i);
  return out;
}

DenseMatrix gram_columns(const SparseMatrix& a) { return gram_rows(a.transposed()); }

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

CholeskyFactor cholesky(const DenseMatrix& s) {
  if (!s.square()) throw DimensionError("cholesky: matrix is not square");
  const double scale = norm_inf(s);
  if (asymmetry(s) > 1e-10 * scale)
    throw InvalidArgument("cholesky: matrix is not symmetric");
  DenseMatrix l = symmetrized(s);
  const std::size_t n = l.rows();
  // Right-looking column Cholesky on the lower triangle, in place.
  for (std::size_t k = 0; k < n; ++k) {
    const double pivot = l(k, k);
    if (!(pivot > 0.0)) throw NotPositiveDefinite(k, pivot);
    const double diag = std::sqrt(pivot);
    l(k, k) = diag;
    for (std::size_t i = k + 1; i < n; ++i) l(i, k) /= diag;
    for (std::size_t j = k + 1; j < n; ++j) {
      const double ljk = l(j, k);
      if (ljk == 0.0) continue;
      for (std::size_t i = j; i < n; ++i) l(i, j) -= l(i, k) * ljk;
    }
  }
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) l(i, j) = 0.0;
  return CholeskyFactor(std::move(l));
}

Vector solve_spd(const CholeskyFactor& factor, std::span<const double> rhs) {
  require_same_size(rhs.size(), factor.dimension(), "solve_spd");
  const DenseMatrix& l = factor.lower();
  const std::size_t n = l.rows();
  Vector x(rhs.begin(), rhs.end());
  // L z = rhs
  for (std::size_t j = 0; j < n; ++j) {
    x[j] /= l(j, j);
    const double xj = x[j];
    for (std::size_t i = j + 1; i < n; ++i) x[i] -= l(i, j) * xj;
  }
  // L^T x = z
  for (std::size_t j = n; j-- > 0;) {
    double sum = x[j];
    for (std::size_t i = j + 1; i < n; ++i) sum -= l(i, j) * x[i];
    x[j] = sum / l(j, j);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Power iteration
// ---------------------------------------------------------------------------

double max_eigenvalue_sym(const LinearOperator& apply, std::size_t dim,
                          const PowerIterationOptions& options) {
  if (dim == 0) throw InvalidArgument("max_eigenvalue_sym: dimension must be positive");
  Rng rng(options.seed);
  Vector v(dim);
  for (double& x : v) x = rng.normal();
  const double start_norm = norm2(v);
  for (double& x : v) x /= start_norm;

  // Rayleigh quotients increase geometrically, so successive changes d_k shrink
  // by q = d_k / d_{k-1} and the remaining gap is about d_k q / (1 - q). Stop
  // once d_k / (1 - q) is within tol; a bare d_k test stops early on small gaps.
  double estimate = 0.0;
  double last_change = 0.0;
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    Vector w = apply(v);
    require_same_size(w.size(), dim, "max_eigenvalue_sym");
    const double rayleigh = dot(v, w);
    if (iter > 0) {
      const double change = std::abs(rayleigh - estimate);
      const double limit = options.tol * std::abs(rayleigh);
      if (change == 0.0) return rayleigh;
      if (iter > 1 && change < last_change) {
        const double q = change / last_change;
        if (change / (1.0 - q) <= limit) return rayleigh;
      }
      last_change = change;
    }
    estimate = rayleigh;
    const double wn = norm2(w);
    if (wn == 0.0) return 0.0;
    for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / wn;
  }
  throw ConvergenceError("max_eigenvalue_sym: power iteration did not converge", estimate);
}

}  // namespace qnadmm
