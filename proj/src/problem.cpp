#include "qnadmm/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qnadmm/errors.hpp"
#include "qnadmm/matrix_market.hpp"
#include "qnadmm/text.hpp"

namespace qnadmm {

LassoProblem::LassoProblem(SparseMatrix a, Vector b, double tau, double beta)
    : a_(std::move(a)), b_(std::move(b)), tau_(tau), beta_(beta) {
  if (a_.rows() == 0 || a_.cols() == 0) throw InvalidArgument("LassoProblem: empty design");
  if (b_.size() != a_.rows())
    throw DimensionError("LassoProblem: b has " + std::to_string(b_.size()) +
                         " entries, A has " + std::to_string(a_.rows()) + " rows");
  if (!(tau_ > 0.0)) throw InvalidArgument("LassoProblem: tau must be positive");
  if (!(beta_ > 0.0)) throw InvalidArgument("LassoProblem: beta must be positive");
  atb_ = matvec_transpose(a_, b_);
}

LassoProblem LassoProblem::with_beta(double beta) const {
  return LassoProblem(a_, b_, tau_, beta);
}

void GeneratorSpec::validate() const {
  if (n == 0 || m == 0) throw InvalidArgument("generator: n and m must be positive");
  if (!(sparsity_s > 0.0 && sparsity_s <= 1.0))
    throw InvalidArgument("generator: sparsity s must lie in (0, 1]");
  if (!(density_p > 0.0 && density_p <= 1.0))
    throw InvalidArgument("generator: density p must lie in (0, 1]");
  if (!(noise_var >= 0.0)) throw InvalidArgument("generator: noise variance must be >= 0");
  if (!(tau_factor > 0.0)) throw InvalidArgument("generator: tau factor must be positive");
  if (!(beta > 0.0)) throw InvalidArgument("generator: beta must be positive");
}

SparseMatrix sprandn(std::size_t rows, std::size_t cols, double density, Rng& rng) {
  const std::size_t total = rows * cols;
  const auto wanted = static_cast<std::size_t>(
      std::ceil(density * static_cast<double>(total) - 1e-9));
  const std::size_t k = std::min(wanted, total);

  // Selection sampling over column-major positions: exactly k distinct
  // positions, uniform over subsets, emitted already sorted.
  std::vector<std::size_t> col_ptr(cols + 1, 0);
  std::vector<std::size_t> row_idx;
  std::vector<double> values;
  row_idx.reserve(k);
  values.reserve(k);
  std::size_t chosen = 0;
  for (std::size_t pos = 0; pos < total && chosen < k; ++pos) {
    const double remaining = static_cast<double>(total - pos);
    if (rng.uniform() * remaining < static_cast<double>(k - chosen)) {
      row_idx.push_back(pos % rows);
      ++col_ptr[pos / rows + 1];
      ++chosen;
    }
  }
  for (std::size_t j = 0; j < cols; ++j) col_ptr[j + 1] += col_ptr[j];
  for (std::size_t p = 0; p < k; ++p) values.push_back(rng.normal());
  return SparseMatrix(rows, cols, std::move(col_ptr), std::move(row_idx), std::move(values));
}

GeneratedInstance generate(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const SparseMatrix xbar_sparse = sprandn(spec.n, 1, spec.sparsity_s, rng);
  Vector xbar(spec.n, 0.0);
  for (std::size_t p = 0; p < xbar_sparse.nnz(); ++p)
    xbar[xbar_sparse.row_indices()[p]] = xbar_sparse.values()[p];

  SparseMatrix a = sprandn(spec.m, spec.n, spec.density_p, rng);
  Vector b = matvec(a, xbar);
  const double noise_sd = std::sqrt(spec.noise_var);
  for (double& bi : b) bi += noise_sd * rng.normal();

  const double tau = spec.tau_factor * norm_inf(matvec_transpose(a, b));
  if (!(tau > 0.0)) throw InvalidArgument("zero regularization: ||A^T b||_inf vanished");
  return {LassoProblem(std::move(a), std::move(b), tau, spec.beta), std::move(xbar)};
}

Vector m_apply(const LassoProblem& prob, std::span<const double> v) {
  Vector out = matvec_transpose(prob.a(), matvec(prob.a(), v));
  axpy(prob.beta(), v, out);
  return out;
}

double objective(const LassoProblem& prob, std::span<const double> x, std::span<const double> y) {
  if (y.size() != prob.n()) throw DimensionError("objective: y has wrong length");
  const Vector residual = subtract(matvec(prob.a(), x), prob.b());
  return 0.5 * dot(residual, residual) + prob.tau() * norm1(y);
}

Vector soft_threshold(std::span<const double> v, double kappa) {
  if (!(kappa >= 0.0)) throw InvalidArgument("soft_threshold: kappa must be >= 0");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v[i]) - kappa;
    out[i] = mag > 0.0 ? std::copysign(mag, v[i]) : 0.0;
  }
  return out;
}

double kkt_residual(const LassoProblem& prob, std::span<const double> x) {
  const Vector grad =
      matvec_transpose(prob.a(), subtract(matvec(prob.a(), x), prob.b()));
  double worst = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double violation = x[i] != 0.0
                                 ? std::abs(grad[i] + prob.tau() * (x[i] > 0.0 ? 1.0 : -1.0))
                                 : std::max(std::abs(grad[i]) - prob.tau(), 0.0);
    worst = std::max(worst, violation);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Bundles
// ---------------------------------------------------------------------------

void save_bundle(const std::filesystem::path& dir, const GeneratedInstance& instance,
                 const GeneratorSpec& spec) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create bundle directory " + dir.string() + ": " + ec.message());
  save_matrix_market(dir / "A.mtx", instance.problem.a());
  save_vector(dir / "b.txt", instance.problem.b());
  save_vector(dir / "xbar.txt", instance.ground_truth);

  std::ofstream meta(dir / "meta.toml");
  if (!meta) throw IoError("cannot open for writing: " + (dir / "meta.toml").string());
  meta << "n = " << spec.n << '\n'
       << "m = " << spec.m << '\n'
       << "s = " << format_double(spec.sparsity_s) << '\n'
       << "p = " << format_double(spec.density_p) << '\n'
       << "noise_var = " << format_double(spec.noise_var) << '\n'
       << "tau_factor = " << format_double(spec.tau_factor) << '\n'
       << "tau = " << format_double(instance.problem.tau()) << '\n'
       << "beta = " << format_double(instance.problem.beta()) << '\n'
       << "seed = " << spec.seed << '\n';
  if (!meta) throw IoError("write failed: " + (dir / "meta.toml").string());
}

LoadedBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.toml");
  if (!meta_in) throw IoError("cannot open for reading: " + (dir / "meta.toml").string());
  std::stringstream buffer;
  buffer << meta_in.rdbuf();
  const auto meta = parse_key_values(buffer.str());
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw IoError("meta.toml: missing key '" + key + "'");
    return it->second;
  };

  GeneratorSpec spec;
  spec.n = static_cast<std::size_t>(parse_int(get("n")));
  spec.m = static_cast<std::size_t>(parse_int(get("m")));
  spec.sparsity_s = parse_double(get("s"));
  spec.density_p = parse_double(get("p"));
  spec.noise_var = meta.contains("noise_var") ? parse_double(get("noise_var")) : 1e-3;
  spec.tau_factor = meta.contains("tau_factor") ? parse_double(get("tau_factor")) : 0.1;
  spec.beta = parse_double(get("beta"));
  spec.seed = static_cast<std::uint64_t>(parse_int(get("seed")));
  const double tau = parse_double(get("tau"));

  SparseMatrix a = load_matrix_market(dir / "A.mtx");
  Vector b = load_vector(dir / "b.txt");
  Vector xbar = load_vector(dir / "xbar.txt");
  if (a.rows() != spec.m || a.cols() != spec.n)
    throw IoError("bundle: A.mtx shape does not match meta.toml");
  if (xbar.size() != spec.n) throw IoError("bundle: xbar.txt length does not match n");
  return {GeneratedInstance{LassoProblem(std::move(a), std::move(b), tau, spec.beta),
                            std::move(xbar)},
          spec};
}

}  // namespace qnadmm
