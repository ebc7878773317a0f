#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "schwinger/experiment.hpp"
#include "schwinger/gauge.hpp"

using namespace schwinger;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
  std::optional<Real> micro_ratio;
  std::optional<int> micro_per_call;
  std::string out;
  std::string gauge;
  std::optional<int> threads;
  std::optional<int> samples;
  std::optional<Real> target;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c = o.paper_scale ? paper_defaults() : desk_defaults();
  if (!o.config_path.empty()) c = load_config(o.config_path, c, &std::cerr);
  if (o.seed) c.hmc.seed = *o.seed;
  if (o.micro_ratio) {
    c.hmc.micro_ratio = *o.micro_ratio;
    c.hmc.micro_steps = 0;
  }
  if (o.micro_per_call) c.hmc.micro_steps = *o.micro_per_call;
  if (o.threads) c.hmc.threads = *o.threads;
  if (o.samples) c.hmc.n_samples = *o.samples;
  if (o.target) c.target_acceptance = *o.target;
  if (!o.gauge.empty()) c.gauge_file = o.gauge;
  c.validate();
  if (c.hmc.micro_steps > 0) {
    std::cerr << "nested schemes: M = " << c.hmc.micro_steps << " micro steps per inner call\n";
  } else {
    std::cerr << "nested schemes: micro step = h / " << c.hmc.micro_ratio
              << (c.hmc.micro_scaling == MicroScaling::inverse_h
                      ? " (growing like 1/h below h = " + format_real(c.hmc.micro_ref_h) + ")"
                      : std::string())
              << ", e.g. M = " << c.hmc.resolved_micro_steps(Scheme::nested_fg, c.h_grid.front())
              << " per inner call for nested-fg at h = " << c.h_grid.front() << "\n";
  }
  return c;
}

GaugeField load_start(const ExperimentConfig& c) {
  const GaugeFile f = read_gauge_file(c.gauge_file);
  if (f.header.L != c.hmc.L || f.header.T != c.hmc.T) {
    throw std::runtime_error("gauge file '" + c.gauge_file + "' is " + std::to_string(f.header.L) + "x" +
                             std::to_string(f.header.T) + ", config wants " + std::to_string(c.hmc.L) + "x" +
                             std::to_string(c.hmc.T));
  }
  if (f.header.beta != c.hmc.beta || f.header.m0 != c.hmc.m0) {
    std::cerr << "warning: gauge file was generated with beta " << f.header.beta << " m0 " << f.header.m0 << "\n";
  }
  std::cerr << "start configuration " << c.gauge_file << ", plaquette " << mean_plaquette(f.field) << "\n";
  return f.field;
}

// CSV rows go out as soon as they are measured, the footer at the end.
class CsvOut {
 public:
  explicit CsvOut(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot write '" + path + "'");
    }
    write_csv_header(stream());
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void row(const ResultRow& r) {
    stream() << csv_line(r) << "\n";
    stream().flush();
    std::cerr << r.scheme << " h=" << r.h << " M=" << r.M << " |dH|=" << r.mean_abs_dH << " acc=" << r.acceptance
              << " (" << r.wall_s << " s)\n";
  }
  void footer(const std::vector<std::string>& lines) {
    for (const auto& l : lines) stream() << "# " << l << "\n";
    stream().flush();
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int run_sweep_like(const Options& o, SweepResult (*cmd)(const GaugeField&, const ExperimentConfig&, const RowSink&)) {
  const ExperimentConfig c = resolve(o);
  const GaugeField U0 = load_start(c);
  CsvOut out(o.out);
  const SweepResult r = cmd(U0, c, [&](const ResultRow& row) { out.row(row); });
  out.footer(r.footer);
  for (const auto& f : r.failures) std::cerr << f << "\n";
  return r.failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HMC for the two-flavour lattice Schwinger model with force-gradient integrators"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "flat key = value config file");
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_flag("--paper-scale", o.paper_scale, "32x32 lattice, 200 samples");
    sub->add_option("--micro-ratio", o.micro_ratio, "macro step / micro step for nested schemes");
    sub->add_option("--micro-per-call", o.micro_per_call, "micro steps per inner call (overrides --micro-ratio)");
    sub->add_option("--out", o.out, "output path (CSV to stdout if omitted)");
    sub->add_option("--gauge", o.gauge, "gauge configuration file");
    sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
    sub->add_option("--samples", o.samples, "trajectories per measurement");
  };

  auto* therm = app.add_subcommand("thermalize", "thermalize from the cold start and write the gauge file");
  auto* sweep = app.add_subcommand("sweep-dh", "mean |dH| against h for each scheme");
  auto* bench = app.add_subcommand("bench-cost", "inversion and wall-time cost against achieved |dH|");
  auto* tune = app.add_subcommand("tune-acceptance", "step size for a target acceptance per scheme");
  for (auto* s : {therm, sweep, bench, tune}) add_common(s);
  tune->add_option("--target", o.target, "target acceptance (default 0.9)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (therm->parsed()) {
      const ExperimentConfig c = resolve(o);
      const std::string path = o.out.empty() ? c.gauge_file : o.out;
      const ThermalizeOutput t = cmd_thermalize(c, path, &std::cerr);
      std::cerr << "wrote " << path << " and " << path << ".json: plaquette " << mean_plaquette(t.U)
                << ", acceptance " << t.acceptance << ", final h " << t.final_h << "\n";
      return 0;
    }
    if (sweep->parsed()) return run_sweep_like(o, &cmd_sweep_dh);
    if (bench->parsed()) return run_sweep_like(o, &cmd_bench_cost);
    if (tune->parsed()) return run_sweep_like(o, &cmd_tune_acceptance);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
