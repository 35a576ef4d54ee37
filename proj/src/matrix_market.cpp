#include "qnadmm/matrix_market.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "qnadmm/errors.hpp"
#include "qnadmm/text.hpp"

namespace qnadmm {

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  const auto ptr = a.col_ptr();
  const auto idx = a.row_indices();
  const auto val = a.values();
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t p = ptr[j]; p < ptr[j + 1]; ++p)
      out << idx[p] + 1 << ' ' << j + 1 << ' ' << format_double(val[p]) << '\n';
}

SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw IoError("matrix market: missing %%MatrixMarket header");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (object != "matrix" || format != "coordinate" || field != "real" || symmetry != "general")
    throw IoError("matrix market: only 'matrix coordinate real general' is supported");

  while (std::getline(in, line) && (line.empty() || line.front() == '%')) {
  }
  std::size_t rows = 0, cols = 0, entries = 0;
  {
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> entries))
      throw IoError("matrix market: malformed size line");
  }
  std::vector<Triplet> triplets;
  triplets.reserve(entries);
  for (std::size_t k = 0; k < entries; ++k) {
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) throw IoError("matrix market: truncated entry list");
    if (i == 0 || j == 0 || i > rows || j > cols)
      throw IoError("matrix market: entry index out of range");
    triplets.push_back({i - 1, j - 1, v});
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(triplets));
}

void save_matrix_market(const std::filesystem::path& path, const SparseMatrix& a) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_matrix_market(out, a);
  if (!out) throw IoError("write failed: " + path.string());
}

SparseMatrix load_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return read_matrix_market(in);
}

void write_vector(std::ostream& out, std::span<const double> v) {
  for (double x : v) out << format_double(x) << '\n';
}

Vector read_vector(std::istream& in) {
  Vector out;
  double x = 0.0;
  while (in >> x) out.push_back(x);
  if (!in.eof()) throw IoError("vector file: non-numeric entry");
  return out;
}

void save_vector(const std::filesystem::path& path, std::span<const double> v) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_vector(out, v);
  if (!out) throw IoError("write failed: " + path.string());
}

Vector load_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  return read_vector(in);
}

}  // namespace qnadmm
