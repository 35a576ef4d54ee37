#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qnadmm/problem.hpp"
#include "qnadmm/solver.hpp"

namespace qnadmm {

enum class SweepAxis { None, Beta, Kappa, ZetaDelta, KBar };

std::string_view sweep_axis_name(SweepAxis axis);

struct SweepValue {
  std::string text;  // as written in the config, e.g. "0.5:1e-5"
  double a = 0.0;    // beta, kappa, zeta or k_bar
  double b = 0.0;    // delta for zeta_delta
};

struct VariantSpec {
  SolverConfig config;
  std::string label;
};

// One benchmark design. Rows are problem shapes; every row is solved for every
// seed, sweep value and variant on a shared instance per (row, seed).
struct ExperimentSpec {
  std::vector<GeneratorSpec> rows;
  std::vector<std::uint64_t> seeds;
  std::vector<VariantSpec> variants;
  SweepAxis sweep = SweepAxis::None;
  std::vector<SweepValue> sweep_values;
  std::filesystem::path output;
  std::string format = "csv";  // csv | markdown
  std::size_t threads = 0;     // 0: hardware concurrency
  bool diagnostics = false;

  // Throws InvalidArgument on empty seeds/variants or out-of-range sweep values.
  void validate() const;

  // Variant config with the sweep value applied.
  SolverConfig configure(const VariantSpec& variant, const SweepValue* value) const;
  double beta_for(const GeneratorSpec& row, const SweepValue* value) const;
};

// Parses the flat key = value grammar:
//   problem.{n,m,s,p,beta,noise_var,tau_factor}   template for every row
//   row.N.{...}                                   per-row overrides
//   seeds = 1-10 | 1, 2, 7
//   variant.N.{name,label,kappa,memory,k_bar,delta,zeta,alpha,eps_abs,eps_rel,max_iter}
//   sweep.axis = beta | kappa | zeta_delta | k_bar,  sweep.values = v1, v2, ...
//   output, format, threads, diagnostics
// Relative `output` paths resolve against `base_dir`.
ExperimentSpec parse_experiment(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment(const std::filesystem::path& path);

struct TrialRecord {
  std::size_t row = 0;
  std::size_t sweep = 0;  // index into sweep_values (0 when there is no sweep)
  std::size_t variant = 0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
  double kkt = 0.0;
  double time_total = 0.0;
  double time_algo = 0.0;
  double time_factor = 0.0;
  double time_eig = 0.0;
  double time_qn = 0.0;
  // Filled when diagnostics are on: ||F|| at the last step and its bound
  // 10 (eps_pri + eps_dual)(1 + ||lambda||).
  double kkt_vector_norm = 0.0;
  double kkt_vector_bound = 0.0;
};

struct ResultRow {
  std::size_t n = 0;
  std::size_t m = 0;
  double s = 0.0;
  double p = 0.0;
  double beta = 0.0;
  std::string sweep_value = "-";
  std::string variant;
  double iter_mean = 0.0;
  double time_total = 0.0;
  double time_algo = 0.0;
  double time_factor = 0.0;
  double time_eig = 0.0;
  double time_qn = 0.0;
  double conv_rate = 0.0;
  double obj_mean = 0.0;
  double kkt_mean = 0.0;
  double iter_median = 0.0;
  double iter_std = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<TrialRecord> trials;
  std::vector<std::string> errors;  // one per aborted spec row
};

// Solves every cell, in parallel across `spec.threads` workers. Output order
// is fixed by (row, sweep, variant) regardless of completion order.
ResultTable run_experiment(const ExperimentSpec& spec);

void write_csv(std::ostream& out, const ResultTable& table);
// Variants become column groups (Iter., Time, T-A); one line per (row, sweep).
void write_markdown(std::ostream& out, const ResultTable& table);
// Writes `table` to `path` in `format`; throws IoError naming the path.
void emit_table(const ResultTable& table, const std::filesystem::path& path,
                std::string_view format);
// Per-trial CSV, including the diagnostics columns.
void write_trials_csv(std::ostream& out, const ExperimentSpec& spec, const ResultTable& table);

ResultTable parse_csv(std::string_view text);

// Column positions of the timing fields in the CSV layout.
bool is_timing_column(std::string_view name);

}  // namespace qnadmm
