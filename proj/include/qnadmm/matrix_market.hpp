#pragma once

#include <filesystem>
#include <iosfwd>

#include "qnadmm/linalg.hpp"

namespace qnadmm {

// Matrix Market coordinate format, real general, 1-based indices.
void write_matrix_market(std::ostream& out, const SparseMatrix& a);
SparseMatrix read_matrix_market(std::istream& in);

void save_matrix_market(const std::filesystem::path& path, const SparseMatrix& a);
SparseMatrix load_matrix_market(const std::filesystem::path& path);

// One value per line, 17 significant digits.
void write_vector(std::ostream& out, std::span<const double> v);
Vector read_vector(std::istream& in);

void save_vector(const std::filesystem::path& path, std::span<const double> v);
Vector load_vector(const std::filesystem::path& path);

}  // namespace qnadmm
