#include "schwinger/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "schwinger/gauge.hpp"

namespace schwinger {

namespace {

constexpr Real kNaN = std::numeric_limits<Real>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last && first != last;
}

std::string micro_scaling_name(MicroScaling m) { return m == MicroScaling::ratio ? "ratio" : "inverse-h"; }

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += f(v[i]);
  }
  return out;
}

struct Key {
  const char* name;
  std::function<std::string(const ExperimentConfig&)> print;
  // returns false on a malformed value
  std::function<bool(ExperimentConfig&, const std::string&)> parse;
};

template <typename T>
Key number_key(const char* name, T ExperimentConfig::*member) {
  return {name, [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_real(c.*member);
            else return std::to_string(c.*member);
          },
          [member](ExperimentConfig& c, const std::string& v) { return parse_number(v, c.*member); }};
}

template <typename T>
Key hmc_key(const char* name, T HmcConfig::*member) {
  return {name, [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_real(c.hmc.*member);
            else return std::to_string(c.hmc.*member);
          },
          [member](ExperimentConfig& c, const std::string& v) { return parse_number(v, c.hmc.*member); }};
}

Key real_list_key(const char* name, std::vector<Real> ExperimentConfig::*member) {
  return {name,
          [member](const ExperimentConfig& c) {
            return join<Real>(c.*member, [](const Real& x) { return format_real(x); });
          },
          [member](ExperimentConfig& c, const std::string& v) {
            std::vector<Real> out;
            for (const auto& item : split(v, ',')) {
              Real x;
              if (!parse_number(item, x)) return false;
              out.push_back(x);
            }
            c.*member = std::move(out);
            return true;
          }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      hmc_key("L", &HmcConfig::L),
      hmc_key("T", &HmcConfig::T),
      hmc_key("beta", &HmcConfig::beta),
      hmc_key("m0", &HmcConfig::m0),
      hmc_key("tau", &HmcConfig::tau),
      hmc_key("h", &HmcConfig::h),
      {"scheme", [](const ExperimentConfig& c) { return std::string(scheme_name(c.hmc.scheme)); },
       [](ExperimentConfig& c, const std::string& v) {
         try {
           c.hmc.scheme = parse_scheme(v);
         } catch (const std::invalid_argument&) {
           return false;
         }
         return true;
       }},
      hmc_key("micro_steps", &HmcConfig::micro_steps),
      hmc_key("micro_ratio", &HmcConfig::micro_ratio),
      {"micro_scaling", [](const ExperimentConfig& c) { return micro_scaling_name(c.hmc.micro_scaling); },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "ratio") c.hmc.micro_scaling = MicroScaling::ratio;
         else if (v == "inverse-h") c.hmc.micro_scaling = MicroScaling::inverse_h;
         else return false;
         return true;
       }},
      hmc_key("micro_ref_h", &HmcConfig::micro_ref_h),
      hmc_key("cg_tolerance", &HmcConfig::cg_tolerance),
      hmc_key("cg_max_iterations", &HmcConfig::cg_max_iterations),
      hmc_key("seed", &HmcConfig::seed),
      hmc_key("n_thermalize", &HmcConfig::n_thermalize),
      hmc_key("n_samples", &HmcConfig::n_samples),
      hmc_key("therm_h", &HmcConfig::therm_h),
      hmc_key("therm_tau", &HmcConfig::therm_tau),
      hmc_key("therm_min_acceptance", &HmcConfig::therm_min_acceptance),
      hmc_key("threads", &HmcConfig::threads),
      {"schemes",
       [](const ExperimentConfig& c) {
         return join<Scheme>(c.schemes, [](const Scheme& s) { return std::string(scheme_name(s)); });
       },
       [](ExperimentConfig& c, const std::string& v) {
         std::vector<Scheme> out;
         try {
           for (const auto& item : split(v, ',')) out.push_back(parse_scheme(item));
         } catch (const std::invalid_argument&) {
           return false;
         }
         c.schemes = std::move(out);
         return true;
       }},
      real_list_key("h_grid", &ExperimentConfig::h_grid),
      {"gauge_file", [](const ExperimentConfig& c) { return c.gauge_file; },
       [](ExperimentConfig& c, const std::string& v) {
         if (v.empty()) return false;
         c.gauge_file = v;
         return true;
       }},
      number_key("target_acceptance", &ExperimentConfig::target_acceptance),
      number_key("acceptance_window", &ExperimentConfig::acceptance_window),
      number_key("tune_h_min", &ExperimentConfig::tune_h_min),
      number_key("tune_h_max", &ExperimentConfig::tune_h_max),
      number_key("tune_max_iterations", &ExperimentConfig::tune_max_iterations),
      real_list_key("accuracy_targets", &ExperimentConfig::accuracy_targets),
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (hmc.L < 2 || hmc.T < 2) fail("L and T must be >= 2");
  if (!(hmc.tau > 0)) fail("tau must be positive");
  if (hmc.n_samples < 1) fail("n_samples must be >= 1");
  if (schemes.empty()) fail("schemes is empty");
  if (h_grid.empty()) fail("h_grid is empty");
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (!(h_grid[i] > 0)) fail("h_grid entries must be positive");
    if (i > 0 && !(h_grid[i] > h_grid[i - 1])) fail("h_grid must be strictly increasing");
  }
  if (!(target_acceptance > 0 && target_acceptance < 1)) fail("target_acceptance must lie in (0, 1)");
  if (!(tune_h_min > 0 && tune_h_max > tune_h_min)) fail("need 0 < tune_h_min < tune_h_max");
}

ExperimentConfig desk_defaults() {
  ExperimentConfig c;
  c.hmc.L = c.hmc.T = 8;
  c.hmc.n_samples = 50;
  return c;
}

ExperimentConfig paper_defaults() {
  ExperimentConfig c;
  c.hmc.L = c.hmc.T = 32;
  c.hmc.n_samples = 200;
  c.h_grid = {0.02, 0.0283, 0.04, 0.0566, 0.08};
  return c;
}

ExperimentConfig parse_config(std::istream& in, const ExperimentConfig& base, std::ostream* notices,
                              const std::string& source) {
  ExperimentConfig c = base;
  std::map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) { return key == k.name; });
    if (it == keys().end()) throw ConfigError(where + ": unknown key '" + key + "'");
    if (seen.count(key)) {
      throw ConfigError(where + ": key '" + key + "' repeats line " + std::to_string(seen[key]));
    }
    seen[key] = line_no;
    if (!it->parse(c, value)) {
      throw ConfigError(where + ": malformed value '" + value + "' for key '" + key + "'");
    }
  }
  if (notices) {
    for (const Key& k : keys()) {
      if (!seen.count(k.name)) {
        *notices << source << ": '" << k.name << "' not set, using default " << k.print(c) << "\n";
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base, std::ostream* notices) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, base, notices, path);
}

std::string print_config(const ExperimentConfig& c) {
  std::string out;
  for (const Key& k : keys()) out += std::string(k.name) + " = " + k.print(c) + "\n";
  return out;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return print_config(a) == print_config(b); }

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : print_config(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

// --- CSV ---------------------------------------------------------------------------------------

bool ResultRow::failed() const { return std::isnan(mean_abs_dH); }

bool operator==(const ResultRow& a, const ResultRow& b) { return csv_line(a) == csv_line(b); }

namespace {

std::string csv_real(Real v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_real(v);
}

}  // namespace

std::string csv_line(const ResultRow& r) {
  return r.scheme + "," + csv_real(r.h) + "," + std::to_string(r.M) + "," + csv_real(r.mean_abs_dH) + "," +
         csv_real(r.stderr_dH) + "," + std::to_string(r.inv_per_step) + "," + std::to_string(r.inv_per_traj) + "," +
         csv_real(r.wall_s) + "," + csv_real(r.acceptance);
}

void write_csv_header(std::ostream& out) { out << kCsvHeader << "\n"; }

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows, const std::vector<std::string>& footer) {
  write_csv_header(out);
  for (const auto& r : rows) out << csv_line(r) << "\n";
  for (const auto& f : footer) out << "# " << f << "\n";
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  int line_no = 0;
  bool header = false;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kCsvHeader) fail("expected header '" + std::string(kCsvHeader) + "'");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::string item;
    std::istringstream s(line);
    while (std::getline(s, item, ',')) f.push_back(item);
    if (!line.empty() && line.back() == ',') f.push_back("");
    if (static_cast<int>(f.size()) != kCsvColumns) {
      fail("expected " + std::to_string(kCsvColumns) + " columns, got " + std::to_string(f.size()));
    }
    ResultRow r;
    r.scheme = f[0];
    bool ok = !r.scheme.empty() && parse_number(f[1], r.h) && parse_number(f[2], r.M) &&
              parse_number(f[3], r.mean_abs_dH) && parse_number(f[4], r.stderr_dH) &&
              parse_number(f[5], r.inv_per_step) && parse_number(f[6], r.inv_per_traj) &&
              parse_number(f[7], r.wall_s) && parse_number(f[8], r.acceptance);
    if (!ok) fail("malformed field");
    rows.push_back(r);
  }
  if (!header) throw std::runtime_error("csv: missing header");
  return rows;
}

Real loglog_slope(const std::vector<Real>& x, const std::vector<Real>& y) {
  Real sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    const Real lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  const Real den = n * sxx - sx * sx;
  if (n < 2 || den == 0) return kNaN;
  return (n * sxy - sx * sy) / den;
}

// --- commands -----------------------------------------------------------------------------------

ResultRow measure_cell(const GaugeField& U0, const ExperimentConfig& c, Scheme s, Real h, std::string* failure) {
  const IntegratorSpec spec = c.hmc.integrator(s, h);
  ResultRow r;
  r.scheme = std::string(scheme_name(s));
  r.h = h;
  r.M = spec.micro_steps;
  r.inv_per_step = inversions_per_step(s);
  r.inv_per_traj = static_cast<std::int64_t>(trajectory_steps(c.hmc.tau, h)) * r.inv_per_step;
  try {
    const DhDistribution d = measure_dh_distribution(U0, c.hmc, spec, c.hmc.n_samples, c.hmc.seed, c.hmc.threads);
    r.mean_abs_dH = d.mean_abs_dH;
    r.stderr_dH = d.stderr_abs_dH;
    r.wall_s = d.wall_seconds;
    r.acceptance = d.acceptance;
  } catch (const SolverError& e) {
    r.mean_abs_dH = r.stderr_dH = r.wall_s = r.acceptance = kNaN;
    if (failure) *failure = r.scheme + " h=" + format_real(h) + ": " + e.what();
  }
  return r;
}

ThermalizeOutput cmd_thermalize(const ExperimentConfig& c, const std::string& path, std::ostream* log) {
  c.validate();
  RngStream rng(c.hmc.seed, std::uint64_t{1} << 40);
  int accepted = 0;
  const ThermalizationResult t = thermalize(c.hmc, rng, [&](int i, Real plaq, bool acc) {
    accepted += acc ? 1 : 0;
    if (log && ((i + 1) % 50 == 0 || i + 1 == c.hmc.n_thermalize)) {
      *log << "thermalize " << (i + 1) << "/" << c.hmc.n_thermalize << " plaquette " << plaq << " acceptance "
           << static_cast<Real>(accepted) / (i + 1) << "\n";
    }
  });
  ThermalizeOutput out{t.U, t.plaquette_history, t.final_h,
                       c.hmc.n_thermalize > 0 ? static_cast<Real>(accepted) / c.hmc.n_thermalize : 0.0};

  write_gauge_file(path, t.U, GaugeFileHeader{c.hmc.L, c.hmc.T, c.hmc.beta, c.hmc.m0, c.hmc.seed});
  nlohmann::json j;
  j["gauge_file"] = path;
  j["header"] = gauge_file_header_line({c.hmc.L, c.hmc.T, c.hmc.beta, c.hmc.m0, c.hmc.seed});
  j["config_hash"] = config_hash(c);
  j["config"] = print_config(c);
  j["seed"] = c.hmc.seed;
  j["n_thermalize"] = c.hmc.n_thermalize;
  j["acceptance"] = out.acceptance;
  j["final_h"] = out.final_h;
  j["plaquette_history"] = out.plaquette_history;
  std::ofstream side(path + ".json");
  if (!side) throw std::runtime_error("cannot write '" + path + ".json'");
  side << j.dump(1) << "\n";
  return out;
}

namespace {

std::vector<std::string> slope_footer(const std::vector<ResultRow>& rows, const std::vector<Scheme>& schemes) {
  std::vector<std::string> footer;
  for (Scheme s : schemes) {
    std::vector<Real> x, y;
    for (const auto& r : rows) {
      if (r.scheme != scheme_name(s)) continue;
      x.push_back(r.h);
      y.push_back(r.mean_abs_dH);
    }
    footer.push_back("slope " + std::string(scheme_name(s)) + " " + csv_real(loglog_slope(x, y)));
  }
  return footer;
}

}  // namespace

SweepResult cmd_sweep_dh(const GaugeField& U0, const ExperimentConfig& c, const RowSink& sink) {
  c.validate();
  SweepResult out;
  for (Scheme s : c.schemes) {
    for (Real h : c.h_grid) {
      std::string failure;
      out.rows.push_back(measure_cell(U0, c, s, h, &failure));
      if (!failure.empty()) out.failures.push_back(failure);
      if (sink) sink(out.rows.back());
    }
  }
  out.footer = slope_footer(out.rows, c.schemes);
  for (const auto& f : out.failures) out.footer.push_back("failed " + f);
  return out;
}

std::optional<Real> cost_at_accuracy(const std::vector<ResultRow>& scheme_rows, Real target) {
  std::vector<ResultRow> rows;
  for (const auto& r : scheme_rows) {
    if (r.mean_abs_dH > 0 && std::isfinite(r.mean_abs_dH)) rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.mean_abs_dH < b.mean_abs_dH; });
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const Real e0 = rows[i].mean_abs_dH, e1 = rows[i + 1].mean_abs_dH;
    if (target < e0 || target > e1) continue;
    const Real c0 = std::log(static_cast<Real>(rows[i].inv_per_traj));
    const Real c1 = std::log(static_cast<Real>(rows[i + 1].inv_per_traj));
    const Real w = e1 == e0 ? 0 : (std::log(target) - std::log(e0)) / (std::log(e1) - std::log(e0));
    return std::exp(c0 + w * (c1 - c0));
  }
  if (rows.size() == 1 && rows[0].mean_abs_dH == target) return static_cast<Real>(rows[0].inv_per_traj);
  return std::nullopt;
}

SweepResult cmd_bench_cost(const GaugeField& U0, const ExperimentConfig& c, const RowSink& sink) {
  SweepResult sweep = cmd_sweep_dh(U0, c);
  SweepResult out;
  out.failures = sweep.failures;
  for (Scheme s : c.schemes) {
    std::vector<ResultRow> rows;
    for (const auto& r : sweep.rows) {
      if (r.scheme == scheme_name(s)) rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
      if (a.failed() != b.failed()) return b.failed();
      return a.mean_abs_dH > b.mean_abs_dH;
    });
    for (const auto& r : rows) {
      out.rows.push_back(r);
      if (sink) sink(r);
    }
  }
  for (Real target : c.accuracy_targets) {
    std::vector<std::pair<Real, std::string>> ranked;
    std::vector<std::string> unreached;
    for (Scheme s : c.schemes) {
      std::vector<ResultRow> rows;
      for (const auto& r : out.rows) {
        if (r.scheme == scheme_name(s)) rows.push_back(r);
      }
      if (const auto cost = cost_at_accuracy(rows, target)) {
        ranked.emplace_back(*cost, std::string(scheme_name(s)));
      } else {
        unreached.emplace_back(scheme_name(s));
      }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::string line = "rank target=" + format_real(target) + ":";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      std::ostringstream cost;
      cost << std::fixed << std::setprecision(0) << ranked[i].first;
      line += " " + std::to_string(i + 1) + "." + ranked[i].second + "=" + cost.str();
    }
    if (!unreached.empty()) {
      line += " | outside measured range:";
      for (const auto& u : unreached) line += " " + u;
    }
    out.footer.push_back(line);
  }
  for (const auto& f : out.failures) out.footer.push_back("failed " + f);
  return out;
}

SweepResult cmd_tune_acceptance(const GaugeField& U0, const ExperimentConfig& c, const RowSink& sink) {
  c.validate();
  SweepResult out;
  const Real target = c.target_acceptance;
  for (Scheme s : c.schemes) {
    const std::string name(scheme_name(s));
    std::string failure;
    auto measure = [&](Real h) {
      failure.clear();
      return measure_cell(U0, c, s, h, &failure);
    };
    auto within = [&](const ResultRow& r) { return std::abs(r.acceptance - target) <= c.acceptance_window; };

    ResultRow lo = measure(c.tune_h_min);
    std::optional<ResultRow> best;
    std::string note;
    if (!failure.empty()) {
      note = "failed " + failure;
    } else if (within(lo)) {
      best = lo;
    } else if (lo.acceptance < target) {
      note = "not bracketed " + name + ": acceptance " + csv_real(lo.acceptance) + " at tune_h_min";
    } else {
      ResultRow hi = measure(c.tune_h_max);
      if (within(hi)) {
        best = hi;
      } else if (hi.acceptance > target) {
        note = "not bracketed " + name + ": acceptance " + csv_real(hi.acceptance) + " at tune_h_max";
      } else {
        // a failed measurement counts as too large a step
        Real h_lo = lo.h, h_hi = hi.h;
        ResultRow closest = std::abs(lo.acceptance - target) < std::abs(hi.acceptance - target) ? lo : hi;
        for (int it = 0; it < c.tune_max_iterations; ++it) {
          const ResultRow mid = measure(std::sqrt(h_lo * h_hi));
          if (!mid.failed() && within(mid)) {
            best = mid;
            break;
          }
          if (!mid.failed() && std::abs(mid.acceptance - target) < std::abs(closest.acceptance - target)) {
            closest = mid;
          }
          if (!mid.failed() && mid.acceptance > target) h_lo = mid.h;
          else h_hi = mid.h;
        }
        if (!best) {
          note = "not converged " + name + ": closest acceptance " + csv_real(closest.acceptance) + " at h=" +
                 format_real(closest.h);
          best = closest;
        }
      }
    }
    ResultRow row;
    if (best) {
      row = *best;
    } else {
      row = lo;
      row.h = row.mean_abs_dH = row.stderr_dH = row.wall_s = row.acceptance = kNaN;
      row.inv_per_traj = 0;
    }
    if (!note.empty()) out.failures.push_back(note);
    out.rows.push_back(row);
    if (sink) sink(row);
  }
  out.footer.push_back("target acceptance " + format_real(target) + " +- " + format_real(c.acceptance_window));
  for (const auto& f : out.failures) out.footer.push_back(f);
  return out;
}

}  // namespace schwinger
