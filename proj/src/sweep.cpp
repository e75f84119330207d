#include "rac/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "rac/sim.hpp"

namespace rac {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || !std::isfinite(v)) {
    throw UsageError(key + ": not a number: '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw UsageError(key + ": not a non-negative integer: '" + text + "'");
  return v;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw UsageError(key + ": empty list");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(value, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_u64("seeds", item));
      continue;
    }
    const auto lo = parse_u64("seeds", item.substr(0, dash));
    const auto hi = parse_u64("seeds", item.substr(dash + 1));
    if (hi < lo) throw UsageError("seeds: empty range '" + item + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw UsageError("seeds: empty list");
  return out;
}

bool is_rac(const std::string& policy) { return policy.rfind("rac", 0) == 0; }

template <class T>
std::string join(const std::vector<T>& v, auto fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt(v[i]);
  }
  return s;
}

struct TraceSlot {
  double gamma = 0.0;
  double long_reuse = 0.0;
  std::uint64_t seed = 0;
  std::optional<Trace> trace;
  std::string error;
  std::size_t footprint = 0;
  std::map<double, double> full;  // hr_full per tau
};

struct Cell {
  std::size_t slot = 0;
  std::string policy;
  double capacity_frac = 0.0;
  double tau = 0.0;
  std::optional<AlphaSpec> alpha;
  std::optional<double> lambda;
};

SweepRow run_cell(const SweepGrid& grid, const TraceSlot& slot, const Cell& cell, const SweepOptions& opts) {
  SweepRow row;
  row.policy = cell.policy;
  row.capacity_frac = grid.capacity_abs ? "abs:" + std::to_string(*grid.capacity_abs) : format_number(cell.capacity_frac);
  row.gamma = format_number(slot.gamma);
  row.long_reuse = format_number(slot.long_reuse);
  row.tau = format_number(cell.tau);
  row.alpha = cell.alpha ? cell.alpha->str() : "na";
  row.lambda = cell.lambda ? format_number(*cell.lambda) : "na";
  row.seed = slot.seed;
  try {
    if (!slot.trace) throw GenerationError(slot.error);
    const Trace& trace = *slot.trace;
    const std::size_t capacity =
        grid.capacity_abs ? *grid.capacity_abs : capacity_from_fraction(cell.capacity_frac, slot.footprint);
    PolicyParams pp;
    pp.capacity = capacity;
    pp.seed = slot.seed;
    pp.rac = grid.rac;
    pp.rac.tau = cell.tau;
    if (cell.alpha) pp.rac.alpha = cell.alpha->resolve(capacity);
    if (cell.lambda) pp.rac.tsi.lambda = *cell.lambda;
    auto policy = make_policy(cell.policy, pp, &trace);
    SimOptions so;
    so.capacity = capacity;
    so.tau = cell.tau;
    so.exact_keys = grid.exact_keys;
    const auto start = std::chrono::steady_clock::now();
    SimResult r = run_sim(trace, *policy, so);
    const auto stop = std::chrono::steady_clock::now();
    row.hits = r.hits;
    row.misses = r.misses;
    row.hr = r.hr;
    row.hr_norm = normalize_hr(r.hr, slot.full.at(cell.tau));
    if (opts.timing) row.runtime_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.hr = row.hr_norm = nan;
    row.hits = row.misses = 0;
  }
  return row;
}

// Runs fn(i) for i in [0, n) on up to jobs threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

const std::vector<std::string>& axis_names() {
  static const std::vector<std::string> names = {"capacity_frac", "gamma", "long_reuse", "tau", "alpha", "lambda"};
  return names;
}

const std::string& axis_value(const SweepRow& r, const std::string& axis) {
  if (axis == "capacity_frac") return r.capacity_frac;
  if (axis == "gamma") return r.gamma;
  if (axis == "long_reuse") return r.long_reuse;
  if (axis == "tau") return r.tau;
  if (axis == "alpha") return r.alpha;
  if (axis == "lambda") return r.lambda;
  throw UsageError("unknown axis '" + axis + "'; expected one of capacity_frac, gamma, long_reuse, tau, alpha, lambda");
}

struct Moments {
  std::size_t n = 0;
  double sum = 0.0;
  double mean() const { return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN(); }
};

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

AlphaSpec AlphaSpec::parse(const std::string& text) {
  const std::string t = trim(text);
  AlphaSpec a;
  if (t.size() > 2 && t.ends_with("/C")) {
    a.value = parse_double("alpha", t.substr(0, t.size() - 2));
    a.per_capacity = true;
  } else {
    a.value = parse_double("alpha", t);
    a.per_capacity = false;
  }
  if (a.value < 0.0) throw UsageError("alpha must be >= 0");
  return a;
}

double AlphaSpec::resolve(std::size_t capacity) const {
  return per_capacity ? value / static_cast<double>(std::max<std::size_t>(1, capacity)) : value;
}

std::string AlphaSpec::str() const { return format_number(value) + (per_capacity ? "/C" : ""); }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void SweepGrid::validate() const {
  if (policies.empty()) throw UsageError("sweep grid has no policies");
  for (const auto& p : policies) {
    const auto& names = policy_names();
    if (std::find(names.begin(), names.end(), p) == names.end()) {
      std::string all;
      for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
      throw UsageError("unknown policy '" + p + "'; valid policies: " + all);
    }
  }
  if (capacity_fracs.empty() || gammas.empty() || long_reuses.empty() || taus.empty() || alphas.empty() ||
      lambdas.empty() || seeds.empty()) {
    throw UsageError("sweep grid has an empty axis");
  }
  for (double f : capacity_fracs) {
    if (!(f > 0.0)) throw UsageError("capacity fractions must be > 0");
  }
  if (capacity_abs && *capacity_abs == 0) throw UsageError("capacity must be >= 1");
  for (double t : taus) {
    if (!(t > -1.0 && t <= 1.0)) throw UsageError("tau must be in (-1, 1]");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw UsageError("lambda must be >= 0");
  }
  for (double g : gammas) {
    GenParams p = base;
    p.zipf_gamma = g;
    p.validate();
  }
  for (double lr : long_reuses) {
    GenParams p = base;
    p.long_reuse_target = lr;
    p.validate();
  }
}

std::string SweepGrid::describe() const {
  auto num = [](double v) { return format_number(v); };
  std::ostringstream os;
  os << "policies=" << join(policies, [](const std::string& s) { return s; });
  if (capacity_abs) {
    os << ";capacity_abs=" << *capacity_abs;
  } else {
    os << ";capacity=" << join(capacity_fracs, num);
  }
  os << ";gamma=" << join(gammas, num) << ";long_reuse=" << join(long_reuses, num) << ";tau=" << join(taus, num)
     << ";alpha=" << join(alphas, [](const AlphaSpec& a) { return a.str(); }) << ";lambda=" << join(lambdas, num)
     << ";seeds=" << join(seeds, [](std::uint64_t s) { return std::to_string(s); })
     << ";exact_keys=" << (exact_keys ? 1 : 0) << ";gen_base{" << base.describe() << "};rac_base{" << rac.describe() << "}";
  return os.str();
}

void apply_sweep_setting(SweepGrid& g, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "policies" || key == "policy") {
    g.policies = split(value, ',');
  } else if (key == "capacity") {
    g.capacity_fracs = parse_doubles(key, value);
  } else if (key == "capacity_abs") {
    g.capacity_abs = parse_u64(key, value);
  } else if (key == "gamma") {
    g.gammas = parse_doubles(key, value);
  } else if (key == "long_reuse") {
    g.long_reuses = parse_doubles(key, value);
  } else if (key == "tau") {
    g.taus = parse_doubles(key, value);
  } else if (key == "alpha") {
    g.alphas.clear();
    for (const auto& a : split(value, ',')) g.alphas.push_back(AlphaSpec::parse(a));
  } else if (key == "lambda") {
    g.lambdas = parse_doubles(key, value);
  } else if (key == "seeds" || key == "seed") {
    g.seeds = parse_seeds(value);
  } else if (key == "topics") {
    g.base.n_topics = parse_u64(key, value);
  } else if (key == "len") {
    g.base.trace_len = parse_u64(key, value);
  } else if (key == "dim") {
    g.base.dim = parse_u64(key, value);
  } else if (key == "sessions_per_topic") {
    g.base.sessions_per_topic = parse_u64(key, value);
  } else if (key == "capacity_ref") {
    g.base.capacity_ref = parse_u64(key, value);
  } else if (key == "sigma") {
    g.base.sigma = parse_double(key, value);
  } else if (key == "repeat_fraction") {
    g.base.repeat_fraction = parse_double(key, value);
  } else if (key == "tau_edge") {
    g.rac.tsi.tau_edge = parse_double(key, value);
  } else if (key == "route_tau") {
    g.rac.route_tau = parse_double(key, value);
  } else if (key == "structural_rank") {
    g.rac.use_structural_rank = parse_u64(key, value) != 0;
  } else if (key == "exact_keys") {
    g.exact_keys = parse_u64(key, value) != 0;
  } else {
    throw UsageError("unknown sweep key '" + key + "'");
  }
}

SweepGrid read_sweep_file(std::istream& in, SweepGrid grid) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(n, "expected key=value");
    try {
      apply_sweep_setting(grid, t.substr(0, eq), t.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return grid;
}

std::vector<SweepRow> run_sweep(const SweepGrid& grid, const SweepOptions& opts) {
  grid.validate();

  std::vector<TraceSlot> slots;
  for (double g : grid.gammas) {
    for (double lr : grid.long_reuses) {
      for (std::uint64_t s : grid.seeds) slots.push_back(TraceSlot{g, lr, s, std::nullopt, {}, 0, {}});
    }
  }
  parallel_for(slots.size(), opts.jobs, [&](std::size_t i) {
    TraceSlot& slot = slots[i];
    try {
      GenParams p = grid.base;
      p.zipf_gamma = slot.gamma;
      p.long_reuse_target = slot.long_reuse;
      p.seed = slot.seed;
      slot.trace = generate_trace(p);
      slot.footprint = unique_footprint(*slot.trace, grid.taus.front());
      for (double tau : grid.taus) slot.full[tau] = hr_full(*slot.trace, tau, grid.exact_keys);
    } catch (const std::exception& e) {
      slot.trace.reset();
      slot.error = e.what();
    }
  });

  // Seeds innermost so each cell's runs are adjacent in the table.
  const std::vector<double> fracs = grid.capacity_abs ? std::vector<double>{0.0} : grid.capacity_fracs;
  const std::size_t n_seeds = grid.seeds.size();
  std::vector<Cell> cells;
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    for (std::size_t li = 0; li < grid.long_reuses.size(); ++li) {
      const std::size_t first_slot = (gi * grid.long_reuses.size() + li) * n_seeds;
      auto add = [&](const std::string& policy, double cf, double tau, std::optional<AlphaSpec> a,
                     std::optional<double> l) {
        for (std::size_t k = 0; k < n_seeds; ++k) cells.push_back(Cell{first_slot + k, policy, cf, tau, a, l});
      };
      for (const auto& policy : grid.policies) {
        for (double cf : fracs) {
          for (double tau : grid.taus) {
            if (!is_rac(policy)) {
              add(policy, cf, tau, std::nullopt, std::nullopt);
              continue;
            }
            for (const auto& a : grid.alphas) {
              for (double l : grid.lambdas) add(policy, cf, tau, a, l);
            }
          }
        }
      }
    }
  }

  std::vector<SweepRow> rows(cells.size());
  parallel_for(cells.size(), opts.jobs, [&](std::size_t i) {
    rows[i] = run_cell(grid, slots[cells[i].slot], cells[i], opts);
  });
  return rows;
}

const char* const kResultColumns =
    "policy,capacity_frac,gamma,long_reuse,tau,alpha,lambda,seed,hits,misses,hr,hr_norm,runtime_ms";

void write_result_row(const SweepRow& r, std::ostream& out) {
  out << csv_field(r.policy) << ',' << r.capacity_frac << ',' << r.gamma << ',' << r.long_reuse << ',' << r.tau
      << ',' << r.alpha << ',' << r.lambda << ',' << r.seed << ',';
  if (r.failed) {
    out << "nan,nan,nan,nan,";
  } else {
    out << r.hits << ',' << r.misses << ',' << format_number(r.hr) << ',' << format_number(r.hr_norm) << ',';
  }
  out << format_number(r.runtime_ms) << '\n';
}

void write_results_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << kResultColumns << '\n';
  for (const auto& r : rows) write_result_row(r, out);
  for (const auto& r : rows) {
    if (!r.failed) continue;
    std::string msg = r.error;
    for (char& c : msg) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    out << "# failed policy=" << r.policy << " capacity_frac=" << r.capacity_frac << " gamma=" << r.gamma
        << " long_reuse=" << r.long_reuse << " tau=" << r.tau << " alpha=" << r.alpha << " lambda=" << r.lambda
        << " seed=" << r.seed << ": " << msg << '\n';
  }
}

std::vector<SweepRow> read_results_csv(std::istream& in) {
  std::vector<SweepRow> rows;
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != kResultColumns) throw ParseError(n, "expected header '" + std::string(kResultColumns) + "'");
      header = true;
      continue;
    }
    const auto f = split(t, ',');
    if (f.size() != 13) throw ParseError(n, "expected 13 fields, got " + std::to_string(f.size()));
    SweepRow r;
    r.policy = f[0];
    r.capacity_frac = f[1];
    r.gamma = f[2];
    r.long_reuse = f[3];
    r.tau = f[4];
    r.alpha = f[5];
    r.lambda = f[6];
    try {
      r.seed = parse_u64("seed", f[7]);
      if (f[8] == "nan") {
        r.failed = true;
        r.hr = r.hr_norm = std::numeric_limits<double>::quiet_NaN();
      } else {
        r.hits = parse_u64("hits", f[8]);
        r.misses = parse_u64("misses", f[9]);
        r.hr = parse_double("hr", f[10]);
        r.hr_norm = parse_double("hr_norm", f[11]);
      }
      r.runtime_ms = parse_double("runtime_ms", f[12]);
    } catch (const UsageError& e) {
      throw ParseError(n, e.what());
    }
    rows.push_back(std::move(r));
  }
  if (!header) throw ValidationError("results file has no header line");
  return rows;
}

std::vector<CellSummary> summarize(const std::vector<SweepRow>& rows) {
  std::vector<CellSummary> cells;
  std::vector<std::vector<double>> norms;
  std::map<std::vector<std::string>, std::size_t> index;
  for (const auto& r : rows) {
    std::vector<std::string> key = {r.policy, r.capacity_frac, r.gamma, r.long_reuse, r.tau, r.alpha, r.lambda};
    auto [it, fresh] = index.try_emplace(key, cells.size());
    if (fresh) {
      cells.push_back(CellSummary{r.policy, r.capacity_frac, r.gamma, r.long_reuse, r.tau, r.alpha, r.lambda});
      norms.emplace_back();
    }
    CellSummary& c = cells[it->second];
    if (r.failed) {
      ++c.failed;
      continue;
    }
    ++c.runs;
    c.mean_hr += r.hr;
    c.mean_hr_norm += r.hr_norm;
    norms[it->second].push_back(r.hr_norm);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CellSummary& c = cells[i];
    if (c.runs == 0) {
      c.mean_hr = c.mean_hr_norm = c.std_hr_norm = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    c.mean_hr /= static_cast<double>(c.runs);
    c.mean_hr_norm /= static_cast<double>(c.runs);
    c.std_hr_norm = sample_std(norms[i]);
  }
  return cells;
}

void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& out) {
  out << "policy,capacity_frac,gamma,long_reuse,tau,alpha,lambda,runs,failed,mean_hr,mean_hr_norm,std_hr_norm\n";
  for (const auto& c : cells) {
    out << csv_field(c.policy) << ',' << c.capacity_frac << ',' << c.gamma << ',' << c.long_reuse << ',' << c.tau
        << ',' << c.alpha << ',' << c.lambda << ',' << c.runs << ',' << c.failed << ',' << format_number(c.mean_hr)
        << ',' << format_number(c.mean_hr_norm) << ',' << format_number(c.std_hr_norm) << '\n';
  }
}

std::vector<std::string> varying_axes(const std::vector<SweepRow>& rows) {
  std::vector<std::string> out;
  for (const auto& axis : axis_names()) {
    std::vector<std::string> seen;
    for (const auto& r : rows) {
      const auto& v = axis_value(r, axis);
      if (v == "na") continue;
      if (std::find(seen.begin(), seen.end(), v) == seen.end()) seen.push_back(v);
    }
    if (seen.size() > 1) out.push_back(axis);
  }
  return out;
}

void write_plot_data(const std::vector<SweepRow>& rows, const std::string& axis, std::ostream& out) {
  std::vector<std::string> xs, policies;
  std::map<std::pair<std::string, std::string>, Moments> acc;
  for (const auto& r : rows) {
    const auto& x = axis_value(r, axis);
    if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
    if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) policies.push_back(r.policy);
    if (r.failed) continue;
    auto& m = acc[{x, r.policy}];
    ++m.n;
    m.sum += r.hr_norm;
  }
  out << axis;
  for (const auto& p : policies) out << ',' << csv_field(p);
  out << '\n';
  for (const auto& x : xs) {
    out << x;
    for (const auto& p : policies) {
      auto it = acc.find({x, p});
      out << ',' << (it == acc.end() ? "nan" : format_number(it->second.mean()));
    }
    out << '\n';
  }
}

}  // namespace rac
