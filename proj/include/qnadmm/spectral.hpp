#pragma once

#include <cstddef>

#include "qnadmm/linalg.hpp"

namespace qnadmm {

// Default size limit for O(n^3) spectral diagnostics.
inline constexpr std::size_t kSpectralCap = 512;

struct SymmetricEigen {
  Vector values;        // ascending
  DenseMatrix vectors;  // column j pairs with values[j]
};

// Cyclic Jacobi rotations. Intended for diagnostics on matrices up to a few
// hundred rows; throws InvalidArgument above `cap`.
SymmetricEigen symmetric_eigen(const DenseMatrix& s, std::size_t cap = kSpectralCap);

double min_eigenvalue(const DenseMatrix& s, std::size_t cap = kSpectralCap);
double max_eigenvalue(const DenseMatrix& s, std::size_t cap = kSpectralCap);

// Inverse of an SPD matrix through its Cholesky factor.
DenseMatrix spd_inverse(const DenseMatrix& s);

}  // namespace qnadmm
