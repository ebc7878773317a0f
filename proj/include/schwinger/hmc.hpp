#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "schwinger/integrators.hpp"
#include "schwinger/lattice.hpp"

namespace schwinger {

struct HmcConfig {
  int L = 32;
  int T = 32;
  Real beta = 1.0;
  Real m0 = -0.231367;
  Real tau = 2.0;
  Real h = 0.05;
  Scheme scheme = Scheme::leapfrog;
  int micro_steps = 0;     // per inner call; 0 derives it from micro_ratio
  Real micro_ratio = 10;   // macro step / micro step
  MicroScaling micro_scaling = MicroScaling::ratio;
  Real micro_ref_h = 0.1;  // only for MicroScaling::inverse_h
  Real cg_tolerance = 1e-12;
  int cg_max_iterations = 0;
  std::uint64_t seed = 1;
  int n_thermalize = 500;
  int n_samples = 200;

  // Thermalization integrator (leapfrog); h shrinks while acceptance < therm_min_acceptance.
  Real therm_h = 0.1;
  Real therm_tau = 1.0;
  Real therm_min_acceptance = 0.8;

  int threads = 0;  // 0: hardware concurrency

  LatticeGeom geom() const { return {L, T}; }
  ActionParams action() const;
  int resolved_micro_steps() const { return resolved_micro_steps(scheme, h); }
  int resolved_micro_steps(Scheme s, Real step) const;
  IntegratorSpec integrator() const { return integrator(scheme, h); }
  IntegratorSpec integrator(Scheme s, Real step) const;
};

/// H = 1/2 sum p^2 + S_G + S_F. One normal solve, not charged to the state's counter.
Real hamiltonian(const MdState& s);

/// Accept with probability min(1, exp(-dH)); draws a uniform only when dH > 0.
bool metropolis(Real dH, RngStream& rng);

struct TrajectoryStats {
  Real dH = 0;
  bool accepted = false;
  std::int64_t inversions = 0;
  Real wall_seconds = 0;
  int n_steps = 0;
};

struct HmcUpdate {
  GaugeField U;
  TrajectoryStats stats;
};

/// Momentum and pseudofermion heatbath, trajectory, Metropolis. On reject returns U unchanged.
HmcUpdate hmc_update(const GaugeField& U, const HmcConfig& config, const IntegratorSpec& spec, RngStream& rng);
HmcUpdate hmc_update(const GaugeField& U, const HmcConfig& config, RngStream& rng);

/// One trajectory from U with fresh momenta and pseudofermions drawn from rng; no accept step.
TrajectoryStats measure_trajectory(const GaugeField& U, const HmcConfig& config, const IntegratorSpec& spec,
                                   RngStream& rng);

struct DhDistribution {
  Real mean_abs_dH = 0;
  Real stderr_abs_dH = 0;
  Real mean_exp_minus_dH = 0;
  Real stderr_exp_minus_dH = 0;
  Real acceptance = 0;  // mean of min(1, exp(-dH))
  std::int64_t inversions_per_trajectory = 0;
  int n_steps = 0;
  Real wall_seconds = 0;
  std::vector<Real> dH;  // by sample index
};

/// n_samples trajectories from the same U0; sample i uses RngStream(seed, i), so different
/// schemes and step sizes see identical momenta and pseudofermions.
DhDistribution measure_dh_distribution(const GaugeField& U0, const HmcConfig& config, const IntegratorSpec& spec,
                                       int n_samples, std::uint64_t seed, int threads = 1);

struct ThermalizationResult {
  GaugeField U;
  std::vector<Real> plaquette_history;
  std::vector<bool> accepted;
  Real final_h = 0;
};

/// n_thermalize leapfrog HMC updates from the cold start q = 0.
ThermalizationResult thermalize(const HmcConfig& config, RngStream& rng,
                                const std::function<void(int, Real, bool)>& progress = {});

/// Runs f(i) for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

int resolve_threads(int requested);

}  // namespace schwinger
