#include "schwinger/hmc.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "schwinger/gauge.hpp"

namespace schwinger {

ActionParams HmcConfig::action() const {
  ActionParams p;
  p.beta = beta;
  p.m0 = m0;
  p.solver.tolerance = cg_tolerance;
  p.solver.max_iterations = cg_max_iterations;
  return p;
}

int HmcConfig::resolved_micro_steps(Scheme s, Real step) const {
  if (!is_nested(s)) return 1;
  if (micro_steps > 0) return micro_steps;
  return micro_steps_for(s, step, micro_ratio, micro_scaling, micro_ref_h);
}

IntegratorSpec HmcConfig::integrator(Scheme s, Real step) const {
  IntegratorSpec spec;
  spec.scheme = s;
  spec.h = step;
  spec.micro_steps = resolved_micro_steps(s, step);
  return spec;
}

Real hamiltonian(const MdState& s) {
  return kinetic_energy(s.P) + gauge_action(s.U, s.params.beta) +
         fermion_action(s.U, s.params.m0, s.eta, s.params.solver);
}

bool metropolis(Real dH, RngStream& rng) {
  if (dH <= 0) return true;
  return rng.uniform() < std::exp(-dH);
}

namespace {

using Clock = std::chrono::steady_clock;

struct TrajectoryOutcome {
  MdState end;
  TrajectoryStats stats;
};

TrajectoryOutcome run_trajectory(const GaugeField& U, const HmcConfig& config, const IntegratorSpec& spec,
                                 RngStream& rng) {
  MdState s{U, sample_momenta(rng, U.geom()), SpinorField{}, config.action(), {}};
  s.eta = pseudofermion_heatbath(U, config.m0, rng);
  const auto t0 = Clock::now();
  const Real H0 = hamiltonian(s);
  const TrajectoryResult r = integrate_trajectory(s, spec, config.tau);
  const Real H1 = hamiltonian(s);
  TrajectoryOutcome out{std::move(s), {}};
  out.stats.dH = H1 - H0;
  out.stats.inversions = r.inversions;
  out.stats.n_steps = r.n_steps;
  out.stats.wall_seconds = std::chrono::duration<Real>(Clock::now() - t0).count();
  return out;
}

}  // namespace

HmcUpdate hmc_update(const GaugeField& U, const HmcConfig& config, const IntegratorSpec& spec, RngStream& rng) {
  TrajectoryOutcome t = run_trajectory(U, config, spec, rng);
  t.stats.accepted = metropolis(t.stats.dH, rng);
  if (t.stats.accepted) return {std::move(t.end.U), t.stats};
  return {U, t.stats};
}

HmcUpdate hmc_update(const GaugeField& U, const HmcConfig& config, RngStream& rng) {
  return hmc_update(U, config, config.integrator(), rng);
}

TrajectoryStats measure_trajectory(const GaugeField& U, const HmcConfig& config, const IntegratorSpec& spec,
                                   RngStream& rng) {
  return run_trajectory(U, config, spec, rng).stats;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  threads = std::min(resolve_threads(threads), std::max(n, 1));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

DhDistribution measure_dh_distribution(const GaugeField& U0, const HmcConfig& config, const IntegratorSpec& spec,
                                       int n_samples, std::uint64_t seed, int threads) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  spec.validate();
  std::vector<TrajectoryStats> stats(n_samples);
  const auto t0 = Clock::now();
  parallel_for(n_samples, threads, [&](int i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    stats[i] = measure_trajectory(U0, config, spec, rng);
  });

  DhDistribution d;
  d.wall_seconds = std::chrono::duration<Real>(Clock::now() - t0).count();
  d.dH.resize(n_samples);
  Real s_abs = 0, s_abs2 = 0, s_exp = 0, s_exp2 = 0, s_acc = 0;
  for (int i = 0; i < n_samples; ++i) {
    const Real dH = stats[i].dH;
    d.dH[i] = dH;
    s_abs += std::abs(dH);
    s_abs2 += dH * dH;
    const Real e = std::exp(-dH);
    s_exp += e;
    s_exp2 += e * e;
    s_acc += std::isnan(dH) ? 0 : std::min(Real{1}, e);
  }
  const Real n = n_samples;
  d.mean_abs_dH = s_abs / n;
  d.mean_exp_minus_dH = s_exp / n;
  d.acceptance = s_acc / n;
  if (n_samples > 1) {
    const Real var_abs = std::max(Real{0}, (s_abs2 - n * d.mean_abs_dH * d.mean_abs_dH) / (n - 1));
    const Real var_exp = std::max(Real{0}, (s_exp2 - n * d.mean_exp_minus_dH * d.mean_exp_minus_dH) / (n - 1));
    d.stderr_abs_dH = std::sqrt(var_abs / n);
    d.stderr_exp_minus_dH = std::sqrt(var_exp / n);
  }
  d.inversions_per_trajectory = stats.front().inversions;
  d.n_steps = stats.front().n_steps;
  return d;
}

ThermalizationResult thermalize(const HmcConfig& config, RngStream& rng,
                                const std::function<void(int, Real, bool)>& progress) {
  const LatticeGeom geom = config.geom();
  ThermalizationResult out{GaugeField(geom), {}, {}, config.therm_h};
  HmcConfig tc = config;
  tc.tau = config.therm_tau;
  IntegratorSpec spec;
  spec.scheme = Scheme::leapfrog;
  spec.h = config.therm_h;

  constexpr int kWindow = 10;
  int window_accepted = 0;
  for (int i = 0; i < config.n_thermalize; ++i) {
    HmcUpdate up = hmc_update(out.U, tc, spec, rng);
    out.U = std::move(up.U);
    out.plaquette_history.push_back(mean_plaquette(out.U));
    out.accepted.push_back(up.stats.accepted);
    window_accepted += up.stats.accepted ? 1 : 0;
    if (progress) progress(i, out.plaquette_history.back(), up.stats.accepted);
    if ((i + 1) % kWindow == 0) {
      if (window_accepted < config.therm_min_acceptance * kWindow) {
        spec.h *= 0.8;
      }
      window_accepted = 0;
    }
  }
  out.final_h = spec.h;
  return out;
}

}  // namespace schwinger
