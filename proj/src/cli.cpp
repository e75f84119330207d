#include "rac/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>
#include <tuple>

#include "rac/gen.hpp"
#include "rac/sim.hpp"
#include "rac/sweep.hpp"
#include "rac/trace_io.hpp"

namespace rac {

namespace {

struct GenFlags {
  GenParams p;
  std::uint64_t seed = 1;
};

void add_gen_flags(CLI::App* app, GenFlags& g) {
  app->add_option("--gamma", g.p.zipf_gamma, "Zipf exponent of the topic process");
  app->add_option("--long-reuse", g.p.long_reuse_target, "target share of reuses farther apart than capacity_ref");
  app->add_option("--topics", g.p.n_topics, "number of topics");
  app->add_option("--len", g.p.trace_len, "trace length");
  app->add_option("--dim", g.p.dim, "embedding dimension");
  app->add_option("--sessions-per-topic", g.p.sessions_per_topic, "distinct sessions per topic");
  app->add_option("--capacity-ref", g.p.capacity_ref, "reuse distance counted as long (0: len/10)");
  app->add_option("--sigma", g.p.sigma, "per-hop noise scale");
  app->add_option("--repeat-fraction", g.p.repeat_fraction, "share of episodes that replay a session");
}

struct RacFlags {
  RacConfig cfg;
  std::string alpha = "1/C";
  bool structural_rank = false;
};

void add_rac_flags(CLI::App* app, RacFlags& r) {
  app->add_option("--tau", r.cfg.tau, "hit threshold on cosine similarity");
  app->add_option("--tau-edge", r.cfg.tsi.tau_edge, "minimum similarity for a dependency link");
  app->add_option("--alpha", r.alpha, "TP decay, absolute or as <k>/C");
  app->add_option("--lambda", r.cfg.tsi.lambda, "weight of dependency mass in TSI");
  app->add_option("--route-tau", r.cfg.route_tau, "similarity a miss needs to join a topic");
  app->add_flag("--structural-rank", r.structural_rank, "multiply TSI by the topic DAG rank");
}

std::string echo_line(const std::string& seed, const std::string& config) {
  return std::string(" ractool ") + kToolVersion + " seed=" + seed + " config=" + config;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

// Writes to the file at path, or to out when path is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  auto f = open_out(path);
  fn(f);
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

int cmd_gen(const GenFlags& g, const std::string& out_path, std::ostream& out) {
  GenParams p = g.p;
  p.seed = g.seed;
  Trace trace = generate_trace(p);
  trace.comments.insert(trace.comments.begin(), echo_line(std::to_string(g.seed), "gen{" + p.describe() + "}"));
  emit(out_path, out, [&](std::ostream& o) { write_trace(trace, o); });
  return 0;
}

struct RunFlags {
  std::string trace_path;
  std::string policy = "rac";
  double capacity = 0.1;
  std::optional<std::size_t> capacity_abs;
  bool exact_keys = false;
  bool timing = false;
  std::string steps_path;
};

int cmd_run(const GenFlags& g, const RacFlags& rf, const RunFlags& f, const std::string& out_path,
            std::ostream& out) {
  const AlphaSpec alpha = AlphaSpec::parse(rf.alpha);
  const auto& names = policy_names();
  if (std::find(names.begin(), names.end(), f.policy) == names.end()) {
    make_policy(f.policy, PolicyParams{});  // throws the usage error listing names
  }
  if (!f.capacity_abs && !(f.capacity > 0.0)) throw UsageError("--capacity must be > 0");
  if (f.capacity_abs && *f.capacity_abs == 0) throw UsageError("--capacity-abs must be >= 1");

  Trace trace;
  std::string source;
  GenParams p = g.p;
  p.seed = g.seed;
  if (f.trace_path.empty()) {
    trace = generate_trace(p);
    source = "gen{" + p.describe() + "}";
  } else {
    trace = load_trace(f.trace_path);
    source = "trace=" + f.trace_path;
  }

  const std::size_t capacity =
      f.capacity_abs ? *f.capacity_abs : capacity_from_fraction(f.capacity, unique_footprint(trace, rf.cfg.tau));
  PolicyParams pp;
  pp.capacity = capacity;
  pp.seed = g.seed;
  pp.rac = rf.cfg;
  pp.rac.alpha = alpha.resolve(capacity);
  pp.rac.use_structural_rank = rf.structural_rank;
  auto policy = make_policy(f.policy, pp, &trace);

  SimOptions so;
  so.capacity = capacity;
  so.tau = rf.cfg.tau;
  so.exact_keys = f.exact_keys;
  so.record_steps = !f.steps_path.empty();
  SimResult r = run_sim(trace, *policy, so);
  r.hr_norm = normalize_hr(r.hr, hr_full(trace, so.tau, so.exact_keys));

  const bool rac_family = f.policy.rfind("rac", 0) == 0;
  SweepRow row;
  row.policy = f.policy;
  row.capacity_frac = f.capacity_abs ? "abs:" + std::to_string(*f.capacity_abs) : format_number(f.capacity);
  row.gamma = f.trace_path.empty() ? format_number(p.zipf_gamma) : "na";
  row.long_reuse = f.trace_path.empty() ? format_number(p.long_reuse_target) : "na";
  row.tau = format_number(so.tau);
  row.alpha = rac_family ? alpha.str() : "na";
  row.lambda = rac_family ? format_number(rf.cfg.tsi.lambda) : "na";
  row.seed = g.seed;
  row.hits = r.hits;
  row.misses = r.misses;
  row.hr = r.hr;
  row.hr_norm = r.hr_norm;
  row.runtime_ms = f.timing ? r.runtime_ms : 0.0;

  const std::string config = source + ";" + r.config_echo;
  emit(out_path, out, [&](std::ostream& o) {
    o << '#' << echo_line(std::to_string(g.seed), config) << '\n' << kResultColumns << '\n';
    write_result_row(row, o);
  });
  if (!f.steps_path.empty()) {
    auto s = open_out(f.steps_path);
    s << '#' << echo_line(std::to_string(g.seed), config) << '\n';
    for (const auto& line : r.steps) s << line << '\n';
  }
  return 0;
}

struct SweepFlags {
  std::string sweep_file;
  std::vector<std::pair<std::string, std::string*>> settings;
  std::string policy, capacity, gamma, long_reuse, tau, alpha, lambda, seed, topics, len, dim, tau_edge, route_tau,
      sessions;
  std::optional<std::size_t> capacity_abs;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  bool exact_keys = false;
  bool structural_rank = false;
  bool timing = false;
};

int cmd_sweep(SweepFlags& f, const std::string& out_path, std::ostream& out) {
  SweepGrid grid;
  if (!f.sweep_file.empty()) {
    std::ifstream in(f.sweep_file);
    if (!in) throw std::runtime_error("cannot open sweep file '" + f.sweep_file + "'");
    grid = read_sweep_file(in, grid);
  }
  for (const auto& [key, value] : f.settings) {
    if (!value->empty()) apply_sweep_setting(grid, key, *value);
  }
  if (f.capacity_abs) grid.capacity_abs = f.capacity_abs;
  if (f.exact_keys) grid.exact_keys = true;
  if (f.structural_rank) grid.rac.use_structural_rank = true;
  grid.validate();

  SweepOptions opts;
  opts.jobs = f.jobs;
  opts.timing = f.timing;
  const auto rows = run_sweep(grid, opts);
  std::string seeds;
  for (auto s : grid.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(s);
  emit(out_path, out, [&](std::ostream& o) {
    o << '#' << echo_line(seeds, "sweep{" + grid.describe() + "}") << '\n';
    write_results_csv(rows, o);
  });
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& prefix, std::ostream& out) {
  std::vector<SweepRow> rows;
  std::string joined;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file '" + path + "'");
    auto part = read_results_csv(in);
    rows.insert(rows.end(), part.begin(), part.end());
    joined += (joined.empty() ? "" : ",") + path;
  }
  const std::string head = '#' + echo_line("na", "report{inputs=" + joined + "}") + '\n';
  const auto cells = summarize(rows);
  emit(prefix.empty() ? "" : prefix + "_summary.csv", out, [&](std::ostream& o) {
    o << head;
    write_summary_csv(cells, o);
  });
  if (prefix.empty()) return 0;
  for (const auto& axis : varying_axes(rows)) {
    auto f = open_out(prefix + "_plot_" + axis + ".csv");
    f << head;
    write_plot_data(rows, axis, f);
  }
  return 0;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Config-file tokens go right after the subcommand name so that flags given
// on the command line, which come later, win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.empty()) return args;
  std::vector<std::string> out = {args.front()};
  for (auto& t : config_file_args(*path)) out.push_back(std::move(t));
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(n, "config: expected key=value");
    std::string key = trim(t.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    out.push_back("--" + key + "=" + trim(t.substr(eq + 1)));
  }
  return out;
}

int run_command(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic cache replacement simulator", "ractool"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string out_path;
  std::string config_path;

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "emit a synthetic trace");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--out", out_path, "output trace path (default stdout)");
  gen_cmd->add_option("--config", config_path, "flat key=value file; flags override it");
  add_gen_flags(gen_cmd, gen);

  GenFlags run_gen;
  RacFlags rac;
  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "simulate one policy on one trace");
  run_cmd->add_option("--seed", run_gen.seed, "generator and policy seed");
  run_cmd->add_option("--trace", run.trace_path, "trace file (default: generate one)");
  run_cmd->add_option("--out", out_path, "result CSV path (default stdout)");
  run_cmd->add_option("--config", config_path, "flat key=value file; flags override it");
  run_cmd->add_option("--policy", run.policy, "policy name");
  run_cmd->add_option("--capacity", run.capacity, "capacity as a fraction of the unique footprint");
  run_cmd->add_option("--capacity-abs", run.capacity_abs, "absolute capacity in entries");
  run_cmd->add_flag("--exact-keys", run.exact_keys, "hit on key equality instead of similarity");
  run_cmd->add_flag("--timing", run.timing, "record wall time (otherwise runtime_ms is 0)");
  run_cmd->add_option("--steps", run.steps_path, "write the per-step event log here");
  add_gen_flags(run_cmd, run_gen);
  add_rac_flags(run_cmd, rac);

  SweepFlags sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter grid");
  sweep_cmd->add_option("--sweep-file", sw.sweep_file, "grid file of key=value lines");
  sweep_cmd->add_option("--out", out_path, "result CSV path (default stdout)");
  sweep_cmd->add_option("--config", config_path, "flat key=value file; flags override it");
  sweep_cmd->add_option("--jobs", sw.jobs, "parallel simulations");
  sweep_cmd->add_option("--capacity-abs", sw.capacity_abs, "absolute capacity in entries");
  sweep_cmd->add_flag("--exact-keys", sw.exact_keys, "hit on key equality instead of similarity");
  sweep_cmd->add_flag("--structural-rank", sw.structural_rank, "multiply TSI by the topic DAG rank");
  sweep_cmd->add_flag("--timing", sw.timing, "record wall time (otherwise runtime_ms is 0)");
  const std::vector<std::tuple<std::string, std::string, std::string*, std::string>> list_flags = {
      {"--policy", "policies", &sw.policy, "comma-separated policies"},
      {"--capacity", "capacity", &sw.capacity, "capacity fractions"},
      {"--gamma", "gamma", &sw.gamma, "Zipf exponents"},
      {"--long-reuse", "long_reuse", &sw.long_reuse, "long-reuse targets"},
      {"--tau", "tau", &sw.tau, "hit thresholds"},
      {"--alpha", "alpha", &sw.alpha, "TP decays, absolute or <k>/C"},
      {"--lambda", "lambda", &sw.lambda, "TSI dependency weights"},
      {"--seed", "seeds", &sw.seed, "seeds, e.g. 1-10 or 1,3,5"},
      {"--topics", "topics", &sw.topics, "number of topics"},
      {"--len", "len", &sw.len, "trace length"},
      {"--dim", "dim", &sw.dim, "embedding dimension"},
      {"--sessions-per-topic", "sessions_per_topic", &sw.sessions, "distinct sessions per topic"},
      {"--tau-edge", "tau_edge", &sw.tau_edge, "dependency link threshold"},
      {"--route-tau", "route_tau", &sw.route_tau, "topic routing threshold"},
  };
  for (const auto& [flag, key, target, help] : list_flags) {
    sweep_cmd->add_option(flag, *target, help);
    sw.settings.emplace_back(key, target);
  }

  std::vector<std::string> inputs;
  auto* report_cmd = app.add_subcommand("report", "aggregate result CSVs");
  report_cmd->add_option("inputs", inputs, "result CSV files")->required();
  report_cmd->add_option("--out", out_path, "output prefix for <prefix>_summary.csv and plot data (default stdout)");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen, out_path, out);
    if (run_cmd->parsed()) return cmd_run(run_gen, rac, run, out_path, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sw, out_path, out);
    return cmd_report(inputs, out_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace rac
