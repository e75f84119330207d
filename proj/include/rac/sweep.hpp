// Parameter grids over generated traces, result tables and their aggregation.
//
// Axis values are kept as canonical strings so that a table written by one
// run groups identically when read back. Alpha accepts an absolute value or a
// multiple of 1/C written "<k>/C"; policies without an alpha or lambda report
// "na" in those columns and are run once per remaining cell.

#ifndef RAC_SWEEP_HPP
#define RAC_SWEEP_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rac/gen.hpp"
#include "rac/rac_policy.hpp"

namespace rac {

struct AlphaSpec {
  double value = 1.0;
  bool per_capacity = true;  // value is a multiple of 1/C

  static AlphaSpec parse(const std::string& text);  // throws UsageError
  double resolve(std::size_t capacity) const;
  std::string str() const;
};

/// Shortest decimal that reads back to the same double.
std::string format_number(double v);

struct SweepGrid {
  std::vector<std::string> policies = {"rac"};
  std::vector<double> capacity_fracs = {0.1};
  std::optional<std::size_t> capacity_abs;  // overrides capacity_fracs
  std::vector<double> gammas = {1.0};
  std::vector<double> long_reuses = {0.5};
  std::vector<double> taus = {0.85};
  std::vector<AlphaSpec> alphas = {AlphaSpec{}};
  std::vector<double> lambdas = {1.0};
  std::vector<std::uint64_t> seeds = {1};
  GenParams base;  // gamma, long_reuse_target and seed come from the axes
  RacConfig rac;   // capacity, tau, alpha and lambda come from the axes
  bool exact_keys = false;

  void validate() const;  // throws UsageError
  std::string describe() const;
};

/// Applies one key=value setting to a grid. Lists are comma separated; seeds
/// also accept "a-b" ranges. Throws UsageError for unknown keys or bad values.
void apply_sweep_setting(SweepGrid& grid, const std::string& key, const std::string& value);

/// Flat key=value file, '#' comments and blank lines ignored.
SweepGrid read_sweep_file(std::istream& in, SweepGrid grid = {});

struct SweepRow {
  std::string policy;
  std::string capacity_frac;
  std::string gamma;
  std::string long_reuse;
  std::string tau;
  std::string alpha;
  std::string lambda;
  std::uint64_t seed = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  double hr = 0.0;
  double hr_norm = 0.0;
  double runtime_ms = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepOptions {
  std::size_t jobs = 1;
  bool timing = false;  // otherwise runtime_ms is written as 0
};

/// One row per (cell, seed) in grid order. A cell that throws becomes a failed
/// row and the sweep continues. The result does not depend on jobs.
std::vector<SweepRow> run_sweep(const SweepGrid& grid, const SweepOptions& opts);

extern const char* const kResultColumns;

/// Header, rows, then one "# failed ..." comment per failed row.
void write_results_csv(const std::vector<SweepRow>& rows, std::ostream& out);
void write_result_row(const SweepRow& row, std::ostream& out);

/// Reads rows written by write_results_csv; comment lines are skipped and
/// rows holding nan counts come back as failed. Throws ValidationError.
std::vector<SweepRow> read_results_csv(std::istream& in);

struct CellSummary {
  std::string policy, capacity_frac, gamma, long_reuse, tau, alpha, lambda;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean_hr = 0.0;
  double mean_hr_norm = 0.0;
  double std_hr_norm = 0.0;  // sample standard deviation, 0 for a single run
};

/// Groups successful rows by every column except seed, in first-seen order.
std::vector<CellSummary> summarize(const std::vector<SweepRow>& rows);

void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& out);

/// Axes that take more than one value among the rows.
std::vector<std::string> varying_axes(const std::vector<SweepRow>& rows);

/// Mean hr_norm per (axis value, policy), averaged over all other columns;
/// one row per axis value, one column per policy.
void write_plot_data(const std::vector<SweepRow>& rows, const std::string& axis, std::ostream& out);

}  // namespace rac

#endif  // RAC_SWEEP_HPP
