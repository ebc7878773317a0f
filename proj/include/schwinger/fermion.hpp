#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "schwinger/lattice.hpp"

namespace schwinger {

/// Counts Dirac inversions: every application of D^{-1} or (D^+)^{-1} adds one,
/// so a normal-equation solve (D^+ D)^{-1} adds two. Safe to share between threads.
class InversionCounter {
 public:
  InversionCounter() = default;
  InversionCounter(const InversionCounter& o) : n_(o.value()) {}
  InversionCounter& operator=(const InversionCounter& o) {
    n_.store(o.value());
    return *this;
  }

  void add(std::int64_t k) { n_.fetch_add(k, std::memory_order_relaxed); }
  std::int64_t value() const { return n_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::int64_t> n_{0};
};

struct SolverParams {
  Real tolerance = 1e-12;  // relative residual of the normal equations
  int max_iterations = 0;  // 0: 10 * (system size) + 1000
  bool estimate_ritz = false;
};

struct SolveReport {
  int iterations = 0;
  Real relative_residual = 0;
  int inversion_count_delta = 0;
  Real min_ritz = std::numeric_limits<Real>::quiet_NaN();  // only with estimate_ritz
};

/// Iteration cap reached without convergence; usually a near-exceptional configuration.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Real best_residual, int iterations)
      : std::runtime_error(what), best_residual_(best_residual), iterations_(iterations) {}
  Real best_residual() const { return best_residual_; }
  int iterations() const { return iterations_; }

 private:
  Real best_residual_;
  int iterations_;
};

/// Wilson-Dirac operator
///   D = (2 + m0) - 1/2 sum_mu [ (1 - sigma_mu) U_mu(n) delta_{n+mu,m} + (1 + sigma_mu) U_mu^+(n-mu) delta_{n-mu,m} ]
/// with periodic boundaries. Link phases are materialized once at construction.
class DiracOperator {
 public:
  DiracOperator(const GaugeField& U, Real m0);

  const LatticeGeom& geom() const { return geom_; }
  Real m0() const { return m0_; }
  Complex link(int n, int mu) const { return u_[LatticeGeom::link(n, mu)]; }

  void apply(const SpinorField& in, SpinorField& out) const { hop(in, out, +1); }
  void apply_dagger(const SpinorField& in, SpinorField& out) const { hop(in, out, -1); }
  /// out = D^+ D in; tmp is scratch.
  void apply_normal(const SpinorField& in, SpinorField& out, SpinorField& tmp) const;

  SpinorField apply(const SpinorField& in) const;
  SpinorField apply_dagger(const SpinorField& in) const;

 private:
  void hop(const SpinorField& in, SpinorField& out, int dagger_sign) const;

  LatticeGeom geom_;
  Real m0_;
  Eigen::Matrix<Complex, Eigen::Dynamic, 1> u_;
};

SpinorField apply_dirac(const GaugeField& U, Real m0, const SpinorField& psi);
SpinorField apply_dirac_dagger(const GaugeField& U, Real m0, const SpinorField& psi);

/// sigma_3 applied sitewise.
SpinorField apply_sigma3(const SpinorField& psi);

struct NormalSolution {
  SpinorField x;
  SolveReport report;
};

/// Conjugate gradient on D^+ D x = b. Adds 2 to the counter. Throws SolverError at the cap.
NormalSolution solve_normal(const DiracOperator& D, const SpinorField& b, const SolverParams& params,
                            InversionCounter* counter = nullptr);
NormalSolution solve_normal(const GaugeField& U, Real m0, const SpinorField& b, const SolverParams& params,
                            InversionCounter* counter = nullptr);

/// D^{-1} b and (D^+)^{-1} b via the normal equations; each adds 1 to the counter.
SpinorField solve_dirac(const DiracOperator& D, const SpinorField& b, const SolverParams& params,
                        InversionCounter* counter = nullptr);
SpinorField solve_dirac_dagger(const DiracOperator& D, const SpinorField& b, const SolverParams& params,
                               InversionCounter* counter = nullptr);

/// Complex normal draws with E|z|^2 = 1 per component.
SpinorField gaussian_spinor(RngStream& rng, const LatticeGeom& geom);

/// eta = D^+ phi for Gaussian phi, so that S_F(eta) = |phi|^2.
SpinorField pseudofermion_heatbath(const GaugeField& U, Real m0, RngStream& rng);

/// S_F = eta^+ (D^+ D)^{-1} eta, evaluated with the residual-corrected form 2 Re(eta^+ x) - |D x|^2.
Real fermion_action(const DiracOperator& D, const SpinorField& eta, const SolverParams& params,
                    InversionCounter* counter = nullptr);
Real fermion_action(const GaugeField& U, Real m0, const SpinorField& eta, const SolverParams& params,
                    InversionCounter* counter = nullptr);

/// chi = (D^+)^{-1} eta, xi = D^{-1} chi.
struct FermionAux {
  SpinorField chi;
  SpinorField xi;
};

FermionAux chi_xi(const DiracOperator& D, const SpinorField& eta, const SolverParams& params,
                  InversionCounter* counter = nullptr);
FermionAux chi_xi(const GaugeField& U, Real m0, const SpinorField& eta, const SolverParams& params,
                  InversionCounter* counter = nullptr);

/// f(n,mu) = -Im[chi^+(n)(1-sigma_mu)U_mu(n)xi(n+mu) - chi^+(n+mu)(1+sigma_mu)U_mu^+(n)xi(n)] = dS_F/dq_mu(n).
ForceField fermion_force(const GaugeField& U, const SpinorField& chi, const SpinorField& xi);
ForceField fermion_force(const DiracOperator& D, const FermionAux& aux);

/// A spinor field supported on the two sites {m, m+nu}.
struct LinkLocalSpinor {
  std::array<int, 2> site{};
  std::array<Spinor, 2> value{};
};

/// w1 = (dD^+/dq_nu(m)) chi and w2 = (dD/dq_nu(m)) xi.
struct WVectors {
  LinkLocalSpinor w1;
  LinkLocalSpinor w2;
};

WVectors w_vectors(const GaugeField& U, int m, int nu, const SpinorField& chi, const SpinorField& xi);

SpinorField to_spinor_field(const LinkLocalSpinor& w, const LatticeGeom& geom);

/// Z1 = (D^+)^{-1} sum_l weight_l w1_l,  Z2 = D^{-1}(sum_l weight_l w2_l + Z1). Two inversions.
struct ZFields {
  SpinorField z1;
  SpinorField z2;
};

ZFields z_aggregate(const DiracOperator& D, const ForceField& weight, const FermionAux& aux,
                    const SolverParams& params, InversionCounter* counter = nullptr);

/// 2 sum_l weight_l d^2 S_F / dq_l dq_k, from chi, xi and the Z pair built with the same weight.
ForceField fermion_hessian_contraction(const DiracOperator& D, const FermionAux& aux, const ForceField& weight,
                                       const ZFields& z);

/// C_FF with the fermion force f already known; two inversions.
ForceField c_ff(const DiracOperator& D, const FermionAux& aux, const ForceField& f, const SolverParams& params,
                InversionCounter* counter = nullptr);
/// C_FF from scratch; four inversions.
ForceField c_ff(const GaugeField& U, Real m0, const SpinorField& eta, const SolverParams& params,
                InversionCounter* counter = nullptr);

/// C_GF: the fermion Hessian contracted with the gauge force beta*g; two inversions given aux.
ForceField c_gf(const DiracOperator& D, const FermionAux& aux, const ForceField& gauge_force,
                const SolverParams& params, InversionCounter* counter = nullptr);
ForceField c_gf(const GaugeField& U, Real m0, const SpinorField& eta, Real beta, const SolverParams& params,
                InversionCounter* counter = nullptr);

}  // namespace schwinger
