#include "schwinger/integrators.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "schwinger/gauge.hpp"

namespace schwinger {

std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::leapfrog: return "leapfrog";
    case Scheme::fivestage: return "5stage";
    case Scheme::fivestage_fg: return "5stage-fg";
    case Scheme::fg_approx: return "fg-approx";
    case Scheme::elevenstage: return "11stage";
    case Scheme::nested_leapfrog: return "nested-leapfrog";
    case Scheme::nested_fivestage: return "nested-5stage";
    case Scheme::nested_fg: return "nested-fg";
    case Scheme::adapted_nested_fg: return "adapted-nested-fg";
  }
  return "unknown";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : kAllSchemes) {
    if (scheme_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown integrator scheme '" + std::string(name) + "'");
}

bool is_nested(Scheme s) {
  return s == Scheme::nested_leapfrog || s == Scheme::nested_fivestage || s == Scheme::nested_fg ||
         s == Scheme::adapted_nested_fg;
}

int inversions_per_step(Scheme s) {
  switch (s) {
    case Scheme::leapfrog:
    case Scheme::nested_leapfrog: return 4;
    case Scheme::fivestage:
    case Scheme::nested_fivestage: return 6;
    case Scheme::fivestage_fg: return 10;
    case Scheme::fg_approx:
    case Scheme::nested_fg:
    case Scheme::adapted_nested_fg: return 8;
    case Scheme::elevenstage: return 12;
  }
  return 0;
}

int inner_calls_per_step(Scheme s) {
  if (s == Scheme::nested_leapfrog) return 1;
  return is_nested(s) ? 2 : 0;
}

Real inner_span(Scheme s) {
  if (s == Scheme::nested_leapfrog) return 1.0;
  return is_nested(s) ? 0.5 : 0.0;
}

int micro_steps_for_ratio(Scheme s, Real ratio) {
  if (!is_nested(s)) return 1;
  if (!(ratio > 0)) throw std::invalid_argument("micro ratio must be positive");
  return std::max(1, static_cast<int>(std::lround(inner_span(s) * ratio)));
}

int micro_steps_for(Scheme s, Real h, Real ratio, MicroScaling scaling, Real h_ref) {
  if (scaling == MicroScaling::inverse_h && h < h_ref) ratio *= h_ref / h;
  return micro_steps_for_ratio(s, ratio);
}

std::vector<Real> eleven_stage_weights(const ElevenStageCoefficients& c) {
  const Real mid_b = 0.5 * (1 - 2 * (c.lambda + c.sigma));
  const Real mid_a = 1 - 2 * (c.theta + c.eta);
  return {c.sigma, c.eta, c.lambda, c.theta, mid_b, mid_a, mid_b, c.theta, c.lambda, c.eta, c.sigma};
}

namespace {

using Mat5 = Eigen::Matrix<Real, 5, 5>;

// exp of a strictly upper-triangular 5x5 matrix: the series terminates after N^4.
Mat5 nilpotent_exp(const Mat5& N) {
  Mat5 result = Mat5::Identity();
  Mat5 term = Mat5::Identity();
  for (int k = 1; k <= 4; ++k) {
    term = term * N / static_cast<Real>(k);
    result += term;
  }
  return result;
}

}  // namespace

Real splitting_order_defect(const std::vector<Real>& weights, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<Real> dist(-1.0, 1.0);
  Real worst = 0;
  for (int trial = 0; trial < 4; ++trial) {
    Mat5 A = Mat5::Zero(), B = Mat5::Zero();
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) {
        A(i, j) = dist(gen);
        B(i, j) = dist(gen);
      }
    }
    Mat5 flow = Mat5::Identity();
    for (std::size_t k = 0; k < weights.size(); ++k) {
      flow = flow * nilpotent_exp(weights[k] * (k % 2 == 0 ? B : A));
    }
    worst = std::max(worst, (flow - nilpotent_exp(A + B)).cwiseAbs().maxCoeff());
  }
  return worst;
}

void IntegratorSpec::validate() const {
  if (!(h > 0) || !std::isfinite(h)) throw std::invalid_argument("integrator step size must be positive");
  if (is_nested(scheme) && micro_steps < 1) throw std::invalid_argument("nested schemes need M >= 1");
  if (scheme == Scheme::elevenstage) {
    const Real defect = splitting_order_defect(eleven_stage_weights(eleven));
    if (defect > 1e-12) {
      throw std::invalid_argument("11-stage coefficients violate the fourth-order conditions (defect " +
                                  std::to_string(defect) + ")");
    }
  }
}

// --- elementary updates ---------------------------------------------------------------------

void drift(MdState& s, Real dt) { exp_update_links_inplace(s.U, s.P, dt); }

void kick_gauge(MdState& s, Real dt) {
  if (dt == 0) return;
  shift_momenta_inplace(s.P, gauge_force(s.U, s.params.beta), dt);
}

void kick_fermion(MdState& s, Real dt) {
  const DiracOperator D(s.U, s.params.m0);
  const FermionAux aux = chi_xi(D, s.eta, s.params.solver, &s.counter);
  shift_momenta_inplace(s.P, fermion_force(D, aux), dt);
}

void kick_full(MdState& s, Real dt) {
  const DiracOperator D(s.U, s.params.m0);
  const FermionAux aux = chi_xi(D, s.eta, s.params.solver, &s.counter);
  ForceField F = fermion_force(D, aux);
  F += gauge_force(s.U, s.params.beta);
  shift_momenta_inplace(s.P, F, dt);
}

void kick_fg_fermion(MdState& s, Real b_dt, Real c_dt3, Real sign) {
  const DiracOperator D(s.U, s.params.m0);
  const FermionAux aux = chi_xi(D, s.eta, s.params.solver, &s.counter);
  const ForceField f = fermion_force(D, aux);
  const ForceField C = c_ff(D, aux, f, s.params.solver, &s.counter);
  s.P -= b_dt * f + (sign * c_dt3) * C;
}

void kick_fg_gauge(MdState& s, Real b_dt, Real c_dt3, Real sign) {
  s.P -= b_dt * gauge_force(s.U, s.params.beta) + (sign * c_dt3) * c_gg(s.U, s.params.beta);
}

ForceField full_force_gradient(const GaugeField& U, const SpinorField& eta, const ActionParams& p,
                               InversionCounter* counter) {
  const DiracOperator D(U, p.m0);
  const FermionAux aux = chi_xi(D, eta, p.solver, counter);
  const ForceField f = fermion_force(D, aux);
  const ForceField fg = gauge_force(U, p.beta);
  return c_gg(U, p.beta) + c_fg(U, p.beta, f) + c_gf(D, aux, fg, p.solver, counter) +
         c_ff(D, aux, f, p.solver, counter);
}

void kick_fg_full(MdState& s, Real b_dt, Real c_dt3, Real sign) {
  const DiracOperator D(s.U, s.params.m0);
  const FermionAux aux = chi_xi(D, s.eta, s.params.solver, &s.counter);
  const ForceField f = fermion_force(D, aux);
  const ForceField fg = gauge_force(s.U, s.params.beta);
  const ForceField C = c_gg(s.U, s.params.beta) + c_fg(s.U, s.params.beta, f) +
                       c_gf(D, aux, fg, s.params.solver, &s.counter) + c_ff(D, aux, f, s.params.solver, &s.counter);
  s.P -= b_dt * (f + fg) + (sign * c_dt3) * C;
}

void kick_fg_approx(MdState& s, Real b_dt, Real c_dt3, Real sign) {
  const ActionParams& p = s.params;
  ForceField F = gauge_force(s.U, p.beta);
  {
    const DiracOperator D(s.U, p.m0);
    F += fermion_force(D, chi_xi(D, s.eta, p.solver, &s.counter));
  }
  // F(q + d F) = F + d Hess F, and C = 2 Hess F.
  const GaugeField shifted = exp_update_links(s.U, F, 2 * sign * c_dt3 / b_dt);
  ForceField Fs = gauge_force(shifted, p.beta);
  {
    const DiracOperator D(shifted, p.m0);
    Fs += fermion_force(D, chi_xi(D, s.eta, p.solver, &s.counter));
  }
  shift_momenta_inplace(s.P, Fs, b_dt);
}

// --- composition schemes ---------------------------------------------------------------------

void step_leapfrog(MdState& s, Real h) {
  kick_full(s, h / 2);
  drift(s, h);
  kick_full(s, h / 2);
}

void step_5stage(MdState& s, Real h) {
  kick_full(s, h / 6);
  drift(s, h / 2);
  kick_full(s, 2 * h / 3);
  drift(s, h / 2);
  kick_full(s, h / 6);
}

void step_5stage_fg(MdState& s, Real h, Real c, Real sign) {
  kick_full(s, h / 6);
  drift(s, h / 2);
  kick_fg_full(s, 2 * h / 3, c * h * h * h, sign);
  drift(s, h / 2);
  kick_full(s, h / 6);
}

void step_fg_approx(MdState& s, Real h, Real c, Real sign) {
  kick_full(s, h / 6);
  drift(s, h / 2);
  kick_fg_approx(s, 2 * h / 3, c * h * h * h, sign);
  drift(s, h / 2);
  kick_full(s, h / 6);
}

void step_11stage(MdState& s, Real h, const ElevenStageCoefficients& c) {
  const std::vector<Real> w = eleven_stage_weights(c);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k % 2 == 0) {
      kick_full(s, w[k] * h);
    } else {
      drift(s, w[k] * h);
    }
  }
}

void inner_leapfrog(MdState& s, Real H, int M) {
  const Real dt = H / M;
  for (int i = 0; i < M; ++i) {
    kick_gauge(s, dt / 2);
    drift(s, dt);
    kick_gauge(s, dt / 2);
  }
}

void inner_fg(MdState& s, Real H, int M, Real c, Real sign) {
  const Real dt = H / M;
  for (int i = 0; i < M; ++i) {
    kick_gauge(s, dt / 6);
    drift(s, dt / 2);
    kick_fg_gauge(s, 2 * dt / 3, c * dt * dt * dt, sign);
    drift(s, dt / 2);
    kick_gauge(s, dt / 6);
  }
}

void step_nested_leapfrog(MdState& s, Real h, int M) {
  kick_fermion(s, h / 2);
  inner_leapfrog(s, h, M);
  kick_fermion(s, h / 2);
}

void step_nested_5stage(MdState& s, Real h, int M) {
  kick_fermion(s, h / 6);
  inner_leapfrog(s, h / 2, M);
  kick_fermion(s, 2 * h / 3);
  inner_leapfrog(s, h / 2, M);
  kick_fermion(s, h / 6);
}

void step_nested_fg(MdState& s, Real h, int M, Real c, Real sign) {
  kick_fermion(s, h / 6);
  inner_fg(s, h / 2, M, c, sign);
  kick_fg_fermion(s, 2 * h / 3, c * h * h * h, sign);
  inner_fg(s, h / 2, M, c, sign);
  kick_fermion(s, h / 6);
}

void step_adapted_nested_fg(MdState& s, Real h, int M, Real c, Real sign) {
  kick_fermion(s, h / 6);
  inner_leapfrog(s, h / 2, M);
  kick_fg_fermion(s, 2 * h / 3, c * h * h * h, sign);
  inner_leapfrog(s, h / 2, M);
  kick_fermion(s, h / 6);
}

void macro_step(MdState& s, const IntegratorSpec& spec) {
  const Real h = spec.h;
  const int M = spec.micro_steps;
  const Real c = spec.fg_coefficient;
  const Real sign = spec.fg_sign;
  switch (spec.scheme) {
    case Scheme::leapfrog: step_leapfrog(s, h); break;
    case Scheme::fivestage: step_5stage(s, h); break;
    case Scheme::fivestage_fg: step_5stage_fg(s, h, c, sign); break;
    case Scheme::fg_approx: step_fg_approx(s, h, c, sign); break;
    case Scheme::elevenstage: step_11stage(s, h, spec.eleven); break;
    case Scheme::nested_leapfrog: step_nested_leapfrog(s, h, M); break;
    case Scheme::nested_fivestage: step_nested_5stage(s, h, M); break;
    case Scheme::nested_fg: step_nested_fg(s, h, M, c, sign); break;
    case Scheme::adapted_nested_fg: step_adapted_nested_fg(s, h, M, c, sign); break;
  }
}

int trajectory_steps(Real tau, Real h) {
  if (!(tau > 0)) throw std::invalid_argument("trajectory length must be positive");
  if (!(h > 0)) throw std::invalid_argument("step size must be positive");
  const long n = std::lround(tau / h);
  if (n < 1) throw std::invalid_argument("tau / h rounds to zero steps");
  return static_cast<int>(n);
}

TrajectoryResult integrate_trajectory(MdState& s, const IntegratorSpec& spec, Real tau,
                                      const std::function<void(const MdState&, int)>& observer) {
  spec.validate();
  TrajectoryResult r;
  r.n_steps = trajectory_steps(tau, spec.h);
  r.realized_tau = r.n_steps * spec.h;
  const std::int64_t before = s.counter.value();
  for (int i = 0; i < r.n_steps; ++i) {
    macro_step(s, spec);
    if (observer) observer(s, i + 1);
  }
  r.inversions = s.counter.value() - before;
  return r;
}

}  // namespace schwinger
