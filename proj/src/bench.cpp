#include "qnadmm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "qnadmm/diagnostics.hpp"
#include "qnadmm/errors.hpp"
#include "qnadmm/text.hpp"

namespace qnadmm {
namespace {

constexpr const char* kCsvHeader =
    "n,m,s,p,beta,sweep_value,variant,iter_mean,time_total,time_algo,time_factor,time_eig,"
    "time_qn,conv_rate,obj_mean,kkt_mean,iter_median,iter_std";

std::size_t parse_count(std::string_view text, const std::string& key) {
  const long long v = parse_int(text);
  if (v < 0) throw InvalidArgument(key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

void apply_problem_key(GeneratorSpec& g, const std::string& field, const std::string& value,
                       const std::string& key) {
  if (field == "n") g.n = parse_count(value, key);
  else if (field == "m") g.m = parse_count(value, key);
  else if (field == "s") g.sparsity_s = parse_double(value);
  else if (field == "p") g.density_p = parse_double(value);
  else if (field == "beta") g.beta = parse_double(value);
  else if (field == "noise_var") g.noise_var = parse_double(value);
  else if (field == "tau_factor") g.tau_factor = parse_double(value);
  else throw InvalidArgument("unknown key: " + key);
}

std::optional<std::size_t> parse_k_bar(std::string_view text, const std::string& key) {
  const double v = parse_double(text);
  if (std::isinf(v) && v > 0) return std::nullopt;
  if (!(v >= 0.0) || v != std::floor(v)) {
    throw InvalidArgument(key + " must be a non-negative integer or inf");
  }
  return static_cast<std::size_t>(v);
}

void apply_variant_key(VariantSpec& spec, const std::string& field, const std::string& value,
                       const std::string& key) {
  SolverConfig& c = spec.config;
  if (field == "name") {
    const auto v = parse_variant(trim(value));
    if (!v) throw InvalidArgument("unknown variant '" + value + "' in " + key);
    c.variant = *v;
  } else if (field == "label") spec.label = std::string(trim(value));
  else if (field == "kappa") c.set_kappa(parse_double(value));
  else if (field == "memory") c.memory = parse_count(value, key);
  else if (field == "k_bar") c.k_bar = parse_k_bar(value, key);
  else if (field == "delta") c.delta = parse_double(value);
  else if (field == "zeta") c.zeta = parse_double(value);
  else if (field == "alpha") c.alpha = parse_double(value);
  else if (field == "eps_abs") c.eps_abs = parse_double(value);
  else if (field == "eps_rel") c.eps_rel = parse_double(value);
  else if (field == "max_iter") c.max_iter = parse_count(value, key);
  else throw InvalidArgument("unknown key: " + key);
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& token : split(text, ',')) {
    const std::string_view t = trim(token);
    if (t.empty()) continue;
    const auto dash = t.find('-', 1);
    if (dash != std::string_view::npos) {
      const long long lo = parse_int(t.substr(0, dash));
      const long long hi = parse_int(t.substr(dash + 1));
      if (lo < 0 || hi < lo) throw InvalidArgument("bad seed range '" + std::string(t) + "'");
      for (long long s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
      const long long s = parse_int(t);
      if (s < 0) throw InvalidArgument("seeds must be non-negative");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  return seeds;
}

SweepAxis parse_axis(std::string_view text) {
  for (SweepAxis a : {SweepAxis::None, SweepAxis::Beta, SweepAxis::Kappa, SweepAxis::ZetaDelta,
                      SweepAxis::KBar}) {
    if (text == sweep_axis_name(a)) return a;
  }
  throw InvalidArgument("unknown sweep axis '" + std::string(text) + "'");
}

SweepValue parse_sweep_value(SweepAxis axis, std::string_view token) {
  SweepValue v;
  v.text = std::string(token);
  if (axis == SweepAxis::ZetaDelta) {
    const auto colon = token.find(':');
    if (colon == std::string_view::npos) {
      throw InvalidArgument("zeta_delta values are written zeta:delta, got '" + v.text + "'");
    }
    v.a = parse_double(token.substr(0, colon));
    v.b = parse_double(token.substr(colon + 1));
  } else {
    v.a = parse_double(token);
  }
  return v;
}

// "prefix.N.field" -> (N, field).
std::optional<std::pair<long long, std::string>> numbered(const std::string& key,
                                                          std::string_view prefix) {
  if (key.rfind(prefix, 0) != 0) return std::nullopt;
  const std::string rest = key.substr(prefix.size());
  const auto dot_pos = rest.find('.');
  if (dot_pos == std::string::npos) throw InvalidArgument("malformed key: " + key);
  return std::make_pair(parse_int(rest.substr(0, dot_pos)), rest.substr(dot_pos + 1));
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
}

}  // namespace

std::string_view sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::None: return "none";
    case SweepAxis::Beta: return "beta";
    case SweepAxis::Kappa: return "kappa";
    case SweepAxis::ZetaDelta: return "zeta_delta";
    case SweepAxis::KBar: return "k_bar";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ExperimentSpec
// ---------------------------------------------------------------------------

void ExperimentSpec::validate() const {
  if (rows.empty()) throw InvalidArgument("experiment has no problem rows");
  if (seeds.empty()) throw InvalidArgument("experiment has no seeds");
  if (variants.empty()) throw InvalidArgument("experiment has no variants");
  if (format != "csv" && format != "markdown") {
    throw InvalidArgument("format must be csv or markdown, got '" + format + "'");
  }
  if ((sweep == SweepAxis::None) != sweep_values.empty()) {
    throw InvalidArgument("sweep.axis and sweep.values must be given together");
  }
  for (const GeneratorSpec& row : rows) row.validate();
  const std::size_t sweeps = std::max<std::size_t>(sweep_values.size(), 1);
  for (std::size_t j = 0; j < sweeps; ++j) {
    const SweepValue* value = sweep_values.empty() ? nullptr : &sweep_values[j];
    for (const GeneratorSpec& row : rows) {
      if (!(beta_for(row, value) > 0.0)) throw InvalidArgument("beta must be positive");
    }
    for (const VariantSpec& v : variants) {
      try {
        configure(v, value).validate();
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(v.label + (value ? " at sweep value " + value->text : "") + ": " +
                              e.what());
      }
    }
  }
}

SolverConfig ExperimentSpec::configure(const VariantSpec& variant, const SweepValue* value) const {
  SolverConfig c = variant.config;
  if (!value) return c;
  switch (sweep) {
    case SweepAxis::Kappa: c.set_kappa(value->a); break;
    case SweepAxis::ZetaDelta:
      c.zeta = value->a;
      c.delta = value->b;
      break;
    case SweepAxis::KBar:
      if (std::isinf(value->a)) {
        c.k_bar.reset();
      } else {
        if (!(value->a >= 0.0) || value->a != std::floor(value->a)) {
          throw InvalidArgument("k_bar sweep values must be non-negative integers");
        }
        c.k_bar = static_cast<std::size_t>(value->a);
      }
      break;
    case SweepAxis::Beta:
    case SweepAxis::None: break;
  }
  return c;
}

double ExperimentSpec::beta_for(const GeneratorSpec& row, const SweepValue* value) const {
  return (value && sweep == SweepAxis::Beta) ? value->a : row.beta;
}

ExperimentSpec parse_experiment(std::string_view text, const std::filesystem::path& base_dir) {
  const auto kv = parse_key_values(text);
  ExperimentSpec spec;
  GeneratorSpec base;
  std::map<long long, std::vector<std::pair<std::string, std::string>>> row_keys;
  std::map<long long, std::vector<std::pair<std::string, std::string>>> variant_keys;
  std::string seeds_text = "1-10";
  std::string axis_text = "none";
  std::string values_text;

  for (const auto& [key, value] : kv) {
    if (key.rfind("problem.", 0) == 0) {
      apply_problem_key(base, key.substr(8), value, key);
    } else if (auto r = numbered(key, "row.")) {
      row_keys[r->first].emplace_back(r->second, value);
    } else if (auto v = numbered(key, "variant.")) {
      variant_keys[v->first].emplace_back(v->second, value);
    } else if (key == "seeds") {
      seeds_text = value;
    } else if (key == "sweep.axis") {
      axis_text = std::string(trim(value));
    } else if (key == "sweep.values") {
      values_text = value;
    } else if (key == "output") {
      spec.output = std::string(trim(value));
    } else if (key == "format") {
      spec.format = std::string(trim(value));
    } else if (key == "threads") {
      spec.threads = parse_count(value, key);
    } else if (key == "diagnostics") {
      spec.diagnostics = parse_bool(value);
    } else {
      throw InvalidArgument("unknown key: " + key);
    }
  }

  if (row_keys.empty()) {
    spec.rows.push_back(base);
  } else {
    for (const auto& [index, fields] : row_keys) {
      GeneratorSpec row = base;
      for (const auto& [field, value] : fields)
        apply_problem_key(row, field, value, "row." + std::to_string(index) + "." + field);
      spec.rows.push_back(row);
    }
  }
  for (const auto& [index, fields] : variant_keys) {
    // name first: kappa lands on a different field per variant
    VariantSpec v;
    const std::string prefix = "variant." + std::to_string(index) + ".";
    for (const auto& [field, value] : fields)
      if (field == "name") apply_variant_key(v, field, value, prefix + field);
    for (const auto& [field, value] : fields)
      if (field != "name") apply_variant_key(v, field, value, prefix + field);
    if (v.label.empty()) v.label = std::string(variant_label(v.config.variant));
    spec.variants.push_back(v);
  }
  spec.seeds = parse_seeds(seeds_text);
  spec.sweep = parse_axis(axis_text);
  for (const std::string& token : split(values_text, ',')) {
    const std::string_view t = trim(token);
    if (!t.empty()) spec.sweep_values.push_back(parse_sweep_value(spec.sweep, t));
  }
  if (!spec.output.empty() && spec.output.is_relative() && !base_dir.empty()) {
    spec.output = base_dir / spec.output;
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

ResultTable run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t rows = spec.rows.size();
  const std::size_t seeds = spec.seeds.size();
  const std::size_t sweeps = std::max<std::size_t>(spec.sweep_values.size(), 1);
  const std::size_t variants = spec.variants.size();
  auto sweep_ptr = [&](std::size_t j) -> const SweepValue* {
    return spec.sweep_values.empty() ? nullptr : &spec.sweep_values[j];
  };

  // One instance per (row, seed), shared by every variant and sweep value.
  std::vector<std::optional<GeneratedInstance>> instances(rows * seeds);
  std::vector<std::string> failures(rows * seeds);
  parallel_for(rows * seeds, spec.threads, [&](std::size_t idx) {
    GeneratorSpec g = spec.rows[idx / seeds];
    g.seed = spec.seeds[idx % seeds];
    try {
      instances[idx] = generate(g);
    } catch (const std::exception& e) {
      failures[idx] = "seed " + std::to_string(g.seed) + ": " + e.what();
    }
  });

  // Cells in (row, sweep, variant, seed) order.
  const std::size_t cells = rows * sweeps * variants * seeds;
  std::vector<TrialRecord> trials(cells);
  std::vector<std::string> cell_errors(cells);
  parallel_for(cells, spec.threads, [&](std::size_t idx) {
    const std::size_t i = idx % seeds;
    const std::size_t v = (idx / seeds) % variants;
    const std::size_t j = (idx / (seeds * variants)) % sweeps;
    const std::size_t r = idx / (seeds * variants * sweeps);
    TrialRecord& t = trials[idx];
    t.row = r;
    t.sweep = j;
    t.variant = v;
    t.seed = spec.seeds[i];
    const auto& inst = instances[r * seeds + i];
    if (!inst) return;
    try {
      const SweepValue* value = sweep_ptr(j);
      const LassoProblem prob = inst->problem.with_beta(spec.beta_for(spec.rows[r], value));
      const SolverConfig config = spec.configure(spec.variants[v], value);
      IterationObserver observer;
      if (spec.diagnostics) {
        observer = [&](const IterationEvent& e) {
          if (!e.stop.stop && e.k + 1 < config.max_iter) return;
          const KktVector f = kkt_vector_at_step(prob, e.before.lambda, {e.x, e.y, e.lambda});
          t.kkt_vector_norm = f.norm();
          t.kkt_vector_bound = 10.0 * (e.stop.eps_pri + e.stop.eps_dual) * (1.0 + norm2(e.lambda));
        };
      }
      const SolveResult res = solve(prob, config, observer);
      const IterationReport& rep = res.report;
      t.iterations = rep.iterations;
      t.converged = rep.converged;
      t.objective = rep.objective;
      t.kkt = rep.kkt_final;
      t.time_total = rep.time_total;
      t.time_algo = rep.time_algo;
      t.time_factor = rep.time_factor;
      t.time_eig = rep.time_eig;
      t.time_qn = rep.time_qn;
    } catch (const std::exception& e) {
      cell_errors[idx] = spec.variants[v].label + ", seed " + std::to_string(t.seed) + ": " +
                         e.what();
    }
  });

  ResultTable table;
  for (std::size_t r = 0; r < rows; ++r) {
    std::string error;
    for (std::size_t i = 0; i < seeds && error.empty(); ++i) error = failures[r * seeds + i];
    const std::size_t row_begin = r * sweeps * variants * seeds;
    const std::size_t row_end = row_begin + sweeps * variants * seeds;
    for (std::size_t c = row_begin; c < row_end && error.empty(); ++c) error = cell_errors[c];
    if (!error.empty()) {
      table.errors.push_back("row " + std::to_string(r + 1) + " aborted: " + error);
      continue;
    }
    const GeneratorSpec& g = spec.rows[r];
    for (std::size_t j = 0; j < sweeps; ++j) {
      for (std::size_t v = 0; v < variants; ++v) {
        const std::size_t first = ((r * sweeps + j) * variants + v) * seeds;
        std::vector<double> iters, total, algo, factor, eig, qn, conv, obj, kkt;
        for (std::size_t i = 0; i < seeds; ++i) {
          const TrialRecord& t = trials[first + i];
          iters.push_back(static_cast<double>(t.iterations));
          total.push_back(t.time_total);
          algo.push_back(t.time_algo);
          factor.push_back(t.time_factor);
          eig.push_back(t.time_eig);
          qn.push_back(t.time_qn);
          conv.push_back(t.converged ? 1.0 : 0.0);
          obj.push_back(t.objective);
          kkt.push_back(t.kkt);
          table.trials.push_back(t);
        }
        ResultRow row;
        row.n = g.n;
        row.m = g.m;
        row.s = g.sparsity_s;
        row.p = g.density_p;
        row.beta = spec.beta_for(g, sweep_ptr(j));
        row.sweep_value = spec.sweep_values.empty() ? "-" : spec.sweep_values[j].text;
        row.variant = spec.variants[v].label;
        row.iter_mean = mean_of(iters);
        row.time_total = mean_of(total);
        row.time_algo = mean_of(algo);
        row.time_factor = mean_of(factor);
        row.time_eig = mean_of(eig);
        row.time_qn = mean_of(qn);
        row.conv_rate = mean_of(conv);
        row.obj_mean = mean_of(obj);
        row.kkt_mean = mean_of(kkt);
        row.iter_median = median_of(iters);
        row.iter_std = stddev_of(iters);
        table.rows.push_back(row);
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const ResultTable& table) {
  out << kCsvHeader << '\n';
  for (const ResultRow& r : table.rows) {
    out << r.n << ',' << r.m << ',' << format_double(r.s) << ',' << format_double(r.p) << ','
        << format_double(r.beta) << ',' << r.sweep_value << ',' << r.variant << ','
        << format_double(r.iter_mean) << ',' << format_double(r.time_total) << ','
        << format_double(r.time_algo) << ',' << format_double(r.time_factor) << ','
        << format_double(r.time_eig) << ',' << format_double(r.time_qn) << ','
        << format_double(r.conv_rate) << ',' << format_double(r.obj_mean) << ','
        << format_double(r.kkt_mean) << ',' << format_double(r.iter_median) << ','
        << format_double(r.iter_std) << '\n';
  }
}

void write_markdown(std::ostream& out, const ResultTable& table) {
  std::vector<std::string> variants;
  for (const ResultRow& r : table.rows)
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end())
      variants.push_back(r.variant);

  out << "| Problem |";
  for (const std::string& v : variants) out << ' ' << v << " Iter. | " << v << " Time | " << v << " T-A |";
  out << "\n|---|";
  for (std::size_t i = 0; i < variants.size(); ++i) out << "---|---|---|";
  out << '\n';

  std::vector<std::string> keys;
  std::map<std::string, std::map<std::string, const ResultRow*>> cells;
  for (const ResultRow& r : table.rows) {
    std::string key = "n=" + std::to_string(r.n) + " m=" + std::to_string(r.m) +
                      " s=" + format_double(r.s) + " p=" + format_double(r.p) +
                      " beta=" + format_double(r.beta);
    if (r.sweep_value != "-") key += " sweep=" + r.sweep_value;
    if (!cells.count(key)) keys.push_back(key);
    cells[key][r.variant] = &r;
  }
  for (const std::string& key : keys) {
    out << "| " << key << " |";
    for (const std::string& v : variants) {
      const auto it = cells[key].find(v);
      if (it == cells[key].end()) {
        out << " - | - | - |";
      } else {
        const ResultRow& r = *it->second;
        out << ' ' << fixed(r.iter_mean, 1) << " | " << fixed(r.time_total, 3) << " | "
            << fixed(r.time_algo, 3) << " |";
      }
    }
    out << '\n';
  }
}

void emit_table(const ResultTable& table, const std::filesystem::path& path,
                std::string_view format) {
  if (format != "csv" && format != "markdown") {
    throw InvalidArgument("format must be csv or markdown");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (format == "csv") write_csv(out, table);
  else write_markdown(out, table);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void write_trials_csv(std::ostream& out, const ExperimentSpec& spec, const ResultTable& table) {
  out << "row,n,m,s,p,beta,sweep_value,variant,seed,iterations,converged,objective,kkt,"
         "time_total,time_algo,time_factor,time_eig,time_qn,kkt_vector_norm,kkt_vector_bound\n";
  for (const TrialRecord& t : table.trials) {
    const GeneratorSpec& g = spec.rows[t.row];
    const SweepValue* value = spec.sweep_values.empty() ? nullptr : &spec.sweep_values[t.sweep];
    out << (t.row + 1) << ',' << g.n << ',' << g.m << ',' << format_double(g.sparsity_s) << ','
        << format_double(g.density_p) << ',' << format_double(spec.beta_for(g, value)) << ','
        << (value ? value->text : "-") << ',' << spec.variants[t.variant].label << ',' << t.seed
        << ',' << t.iterations << ',' << (t.converged ? 1 : 0) << ','
        << format_double(t.objective) << ',' << format_double(t.kkt) << ','
        << format_double(t.time_total) << ',' << format_double(t.time_algo) << ','
        << format_double(t.time_factor) << ',' << format_double(t.time_eig) << ','
        << format_double(t.time_qn) << ',' << format_double(t.kkt_vector_norm) << ','
        << format_double(t.kkt_vector_bound) << '\n';
  }
}

ResultTable parse_csv(std::string_view text) {
  ResultTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) {
    throw InvalidArgument("parse_csv: unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 18) {
      throw InvalidArgument("parse_csv: line " + std::to_string(line_no) + " has " +
                            std::to_string(f.size()) + " fields");
    }
    ResultRow r;
    r.n = parse_count(f[0], "n");
    r.m = parse_count(f[1], "m");
    r.s = parse_double(f[2]);
    r.p = parse_double(f[3]);
    r.beta = parse_double(f[4]);
    r.sweep_value = std::string(trim(f[5]));
    r.variant = std::string(trim(f[6]));
    r.iter_mean = parse_double(f[7]);
    r.time_total = parse_double(f[8]);
    r.time_algo = parse_double(f[9]);
    r.time_factor = parse_double(f[10]);
    r.time_eig = parse_double(f[11]);
    r.time_qn = parse_double(f[12]);
    r.conv_rate = parse_double(f[13]);
    r.obj_mean = parse_double(f[14]);
    r.kkt_mean = parse_double(f[15]);
    r.iter_median = parse_double(f[16]);
    r.iter_std = parse_double(f[17]);
    table.rows.push_back(r);
  }
  return table;
}

bool is_timing_column(std::string_view name) { return name.rfind("time_", 0) == 0; }

}  // namespace qnadmm
