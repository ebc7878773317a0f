#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "schwinger/fermion.hpp"
#include "schwinger/lattice.hpp"

namespace schwinger {

enum class Scheme {
  leapfrog,
  fivestage,
  fivestage_fg,
  fg_approx,
  elevenstage,
  nested_leapfrog,
  nested_fivestage,
  nested_fg,
  adapted_nested_fg,
};

inline constexpr std::array<Scheme, 9> kAllSchemes = {
    Scheme::leapfrog,    Scheme::fivestage,       Scheme::fivestage_fg,
    Scheme::fg_approx,   Scheme::elevenstage,     Scheme::nested_leapfrog,
    Scheme::nested_fivestage, Scheme::nested_fg,  Scheme::adapted_nested_fg,
};

/// Stable identifiers: leapfrog, 5stage, 5stage-fg, fg-approx, 11stage, nested-leapfrog,
/// nested-5stage, nested-fg, adapted-nested-fg.
std::string_view scheme_name(Scheme s);
/// Throws std::invalid_argument for unknown names.
Scheme parse_scheme(std::string_view name);

bool is_nested(Scheme s);
/// Dirac inversions per macro step.
int inversions_per_step(Scheme s);
/// Inner-flow calls per macro step and the trajectory time covered by each, in units of h.
int inner_calls_per_step(Scheme s);
Real inner_span(Scheme s);

/// Palindromic 11-stage coefficients: sigma B, eta A, lambda B, theta A, ... (see step_11stage).
struct ElevenStageCoefficients {
  Real sigma = 0.08398315262876693;
  Real eta = 0.2539785108410595;
  Real lambda = 0.6822365335719091;
  Real theta = -0.03230286765269967;
};

/// Splitting weights as the alternating sequence b0 a0 b1 a1 ... b_k (B = kick, A = drift).
std::vector<Real> eleven_stage_weights(const ElevenStageCoefficients& c);

/// Max deviation of the composed flow from exp(A + B) on random nilpotent matrices of class 4:
/// zero (to rounding) iff all conditions through fourth order hold.
Real splitting_order_defect(const std::vector<Real>& weights, unsigned seed = 7);

/// Sign s in P <- P - b h F - s c h^3 C, with C = 2 sum F * Hess(S). Calibrated by the
/// convergence order: -1 gives fourth order, +1 leaves the schemes at second order.
inline constexpr Real kForceGradientSign = -1.0;

struct IntegratorSpec {
  Scheme scheme = Scheme::leapfrog;
  Real h = 0.1;
  int micro_steps = 1;  // per inner call, nested schemes only
  Real fg_coefficient = 1.0 / 72.0;
  Real fg_sign = kForceGradientSign;
  ElevenStageCoefficients eleven{};

  /// Throws std::invalid_argument on h <= 0, M < 1 or 11-stage coefficients
  /// violating the fourth-order conditions by more than 1e-12.
  void validate() const;
};

/// Micro steps per inner call such that the micro step is about h / ratio.
int micro_steps_for_ratio(Scheme s, Real ratio);

/// How the inner step count follows the macro step size.
enum class MicroScaling {
  ratio,      // micro step = h / ratio
  inverse_h,  // micro step = h / (ratio * max(1, h_ref / h)), i.e. M grows like 1/h below h_ref
};

int micro_steps_for(Scheme s, Real h, Real ratio, MicroScaling scaling, Real h_ref);

struct ActionParams {
  Real beta = 1.0;
  Real m0 = -0.231367;
  SolverParams solver{};
};

/// Phase-space point of a molecular-dynamics trajectory. eta is frozen.
struct MdState {
  GaugeField U;
  MomentumField P;
  SpinorField eta;
  ActionParams params;
  InversionCounter counter;
};

// Elementary momentum updates. Each subtracts dt times the named force.
void kick_full(MdState& s, Real dt);
void kick_gauge(MdState& s, Real dt);
void kick_fermion(MdState& s, Real dt);
void drift(MdState& s, Real dt);

/// P <- P - b_dt f - sign * c_dt3 * C_FF. Four inversions.
void kick_fg_fermion(MdState& s, Real b_dt, Real c_dt3, Real sign = kForceGradientSign);
/// P <- P - b_dt beta g - sign * c_dt3 * C_GG. No inversions.
void kick_fg_gauge(MdState& s, Real b_dt, Real c_dt3, Real sign = kForceGradientSign);
/// P <- P - b_dt F - sign * c_dt3 * (C_GG + C_FG + C_GF + C_FF). Six inversions.
void kick_fg_full(MdState& s, Real b_dt, Real c_dt3, Real sign = kForceGradientSign);
/// Force-gradient kick without second derivatives: kick with the full force evaluated at the
/// links displaced along F by 2 sign c_dt3 / b_dt. Four inversions.
void kick_fg_approx(MdState& s, Real b_dt, Real c_dt3, Real sign = kForceGradientSign);

/// Full force-gradient field C = C_GG + C_FG + C_GF + C_FF at the current links.
ForceField full_force_gradient(const GaugeField& U, const SpinorField& eta, const ActionParams& p,
                               InversionCounter* counter = nullptr);

void step_leapfrog(MdState& s, Real h);
void step_5stage(MdState& s, Real h);
void step_5stage_fg(MdState& s, Real h, Real c = 1.0 / 72.0, Real sign = kForceGradientSign);
void step_fg_approx(MdState& s, Real h, Real c = 1.0 / 72.0, Real sign = kForceGradientSign);
void step_11stage(MdState& s, Real h, const ElevenStageCoefficients& c = {});

/// Gauge-only leapfrog, M micro steps over total time H.
void inner_leapfrog(MdState& s, Real H, int M);
/// Gauge-only 5-stage force-gradient, M micro steps over total time H.
void inner_fg(MdState& s, Real H, int M, Real c = 1.0 / 72.0, Real sign = kForceGradientSign);

void step_nested_leapfrog(MdState& s, Real h, int M);
void step_nested_5stage(MdState& s, Real h, int M);
void step_nested_fg(MdState& s, Real h, int M, Real c = 1.0 / 72.0, Real sign = kForceGradientSign);
void step_adapted_nested_fg(MdState& s, Real h, int M, Real c = 1.0 / 72.0, Real sign = kForceGradientSign);

/// One macro step of the scheme named in spec.
void macro_step(MdState& s, const IntegratorSpec& spec);

struct TrajectoryResult {
  int n_steps = 0;
  Real realized_tau = 0;  // n_steps * h
  std::int64_t inversions = 0;
};

/// n_steps = round(tau / h) macro steps. The observer, if given, sees the state after every step.
TrajectoryResult integrate_trajectory(MdState& s, const IntegratorSpec& spec, Real tau,
                                      const std::function<void(const MdState&, int)>& observer = {});

int trajectory_steps(Real tau, Real h);

}  // namespace schwinger
