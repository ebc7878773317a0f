#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "schwinger/hmc.hpp"

namespace schwinger {

/// Everything a command needs: the HMC parameters plus the sweep / tuning plan.
struct ExperimentConfig {
  HmcConfig hmc;
  std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  std::vector<Real> h_grid{0.0141, 0.02, 0.0283, 0.04};  // strictly increasing
  std::string gauge_file = "thermalized.gauge";
  Real target_acceptance = 0.9;
  Real acceptance_window = 0.02;
  Real tune_h_min = 0.005;
  Real tune_h_max = 0.2;
  int tune_max_iterations = 30;
  std::vector<Real> accuracy_targets{1e-2, 1e-3, 1e-4};

  /// Throws std::invalid_argument on an empty or non-increasing grid and similar.
  void validate() const;
};

/// 8x8, 50 samples: the scale used for tests and desk runs.
ExperimentConfig desk_defaults();
/// 32x32, 200 samples, beta = 1, m0 = -0.231367, tau = 2.
ExperimentConfig paper_defaults();

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text, '#' comments. Keys absent from the text keep their value in `base`
/// and are listed on `notices` if given. Unknown keys and malformed values throw ConfigError
/// naming the key and the line.
ExperimentConfig parse_config(std::istream& in, const ExperimentConfig& base, std::ostream* notices = nullptr,
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base, std::ostream* notices = nullptr);
/// Every key, one per line; parse_config(print_config(c)) == c.
std::string print_config(const ExperimentConfig& c);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// FNV-1a over print_config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

// --- result rows ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "scheme,h,M,mean_abs_dH,stderr_dH,inv_per_step,inv_per_traj,wall_s,acceptance";
inline constexpr int kCsvColumns = 9;

struct ResultRow {
  std::string scheme;
  Real h = 0;
  int M = 1;
  Real mean_abs_dH = 0;
  Real stderr_dH = 0;
  int inv_per_step = 0;
  std::int64_t inv_per_traj = 0;
  Real wall_s = 0;
  Real acceptance = 0;

  /// Solver failures are rows with NaN statistics.
  bool failed() const;
};

bool operator==(const ResultRow& a, const ResultRow& b);

std::string csv_line(const ResultRow& r);
void write_csv_header(std::ostream& out);
/// Header, rows, then the footer lines each prefixed with "# ".
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows, const std::vector<std::string>& footer = {});
/// Strict: exact header, 9 columns per row, '#' lines skipped. Throws std::runtime_error with the line number.
std::vector<ResultRow> read_csv(std::istream& in);

/// Least-squares slope of log y against log x over the finite positive points; NaN if fewer than two.
Real loglog_slope(const std::vector<Real>& x, const std::vector<Real>& y);

// --- commands ------------------------------------------------------------------------------

/// A measurement cell: mean |dH| etc. for one (scheme, h) on U0. Never throws on solver failure.
ResultRow measure_cell(const GaugeField& U0, const ExperimentConfig& c, Scheme s, Real h,
                       std::string* failure = nullptr);

struct ThermalizeOutput {
  GaugeField U;
  std::vector<Real> plaquette_history;
  Real final_h = 0;
  Real acceptance = 0;
};

/// Thermalizes from the cold start and writes the gauge file plus `<path>.json` provenance.
ThermalizeOutput cmd_thermalize(const ExperimentConfig& c, const std::string& path, std::ostream* log = nullptr);

using RowSink = std::function<void(const ResultRow&)>;

struct SweepResult {
  std::vector<ResultRow> rows;  // plan order: scheme-major, h ascending
  std::vector<std::string> footer;
  std::vector<std::string> failures;
};

/// One row per (scheme, h); the footer carries the fitted slope per scheme.
SweepResult cmd_sweep_dh(const GaugeField& U0, const ExperimentConfig& c, const RowSink& sink = {});

/// Sweep rows ordered by scheme and decreasing mean |dH|; the footer ranks the schemes by
/// interpolated inversions per trajectory at each accuracy target.
SweepResult cmd_bench_cost(const GaugeField& U0, const ExperimentConfig& c, const RowSink& sink = {});

/// Inversions per trajectory needed to reach mean |dH| = target, interpolated log-log between
/// the bracketing rows of one scheme. Empty if the target is outside the measured range.
std::optional<Real> cost_at_accuracy(const std::vector<ResultRow>& scheme_rows, Real target);

/// Per scheme, bisection in log h for acceptance within the window around the target.
/// Non-bracketing schemes give a NaN row and a footer note.
SweepResult cmd_tune_acceptance(const GaugeField& U0, const ExperimentConfig& c, const RowSink& sink = {});

}  // namespace schwinger
