#include "schwinger/fermion.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include <Eigen/Eigenvalues>

#include "schwinger/gauge.hpp"

namespace schwinger {

namespace {

constexpr Complex kI{0, 1};

// (1 + s sigma_mu) v
inline Spinor project(int mu, Real s, const Spinor& v) {
  if (mu == 0) return {v[0] + s * v[1], v[1] + s * v[0]};
  return {v[0] - s * kI * v[1], v[1] + s * kI * v[0]};
}

// x^+ (1 + s sigma_mu) y
inline Complex bilinear(const Spinor& x, int mu, Real s, const Spinor& y) {
  return x.dot(project(mu, s, y));
}

inline Spinor at(const SpinorField& psi, int n) { return psi.segment<2>(2 * n); }

void check_size(const LatticeGeom& g, const SpinorField& psi, const char* what) {
  if (psi.size() != 2 * g.volume()) {
    throw std::invalid_argument(std::string(what) + ": spinor size does not match lattice");
  }
}

}  // namespace

DiracOperator::DiracOperator(const GaugeField& U, Real m0) : geom_(U.geom()), m0_(m0), u_(U.links()) {}

void DiracOperator::hop(const SpinorField& in, SpinorField& out, int dagger_sign) const {
  check_size(geom_, in, "DiracOperator");
  out.resize(in.size());
  const Real diag = 2 + m0_;
  const Real s = dagger_sign;
  const Complex* psi = in.data();
  Complex* res = out.data();
  const Complex* u = u_.data();
  const int V = geom_.volume();
  for (int n = 0; n < V; ++n) {
    Complex r0 = diag * psi[2 * n];
    Complex r1 = diag * psi[2 * n + 1];
    for (int mu = 0; mu < kDims; ++mu) {
      const int f = geom_.fwd(n, mu);
      const int b = geom_.bwd(n, mu);
      const Complex uf = u[2 * n + mu];
      const Complex ub = std::conj(u[2 * b + mu]);
      const Complex a0 = uf * psi[2 * f], a1 = uf * psi[2 * f + 1];
      const Complex b0 = ub * psi[2 * b], b1 = ub * psi[2 * b + 1];
      // (1 - s sigma) a + (1 + s sigma) b = (a + b) - s sigma (a - b)
      const Complex d0 = a0 - b0, d1 = a1 - b1;
      Complex sd0, sd1;
      if (mu == 0) {
        sd0 = d1;
        sd1 = d0;
      } else {
        sd0 = -kI * d1;
        sd1 = kI * d0;
      }
      r0 -= 0.5 * ((a0 + b0) - s * sd0);
      r1 -= 0.5 * ((a1 + b1) - s * sd1);
    }
    res[2 * n] = r0;
    res[2 * n + 1] = r1;
  }
}

void DiracOperator::apply_normal(const SpinorField& in, SpinorField& out, SpinorField& tmp) const {
  apply(in, tmp);
  apply_dagger(tmp, out);
}

SpinorField DiracOperator::apply(const SpinorField& in) const {
  SpinorField out;
  apply(in, out);
  return out;
}

SpinorField DiracOperator::apply_dagger(const SpinorField& in) const {
  SpinorField out;
  apply_dagger(in, out);
  return out;
}

SpinorField apply_dirac(const GaugeField& U, Real m0, const SpinorField& psi) {
  return DiracOperator(U, m0).apply(psi);
}

SpinorField apply_dirac_dagger(const GaugeField& U, Real m0, const SpinorField& psi) {
  return DiracOperator(U, m0).apply_dagger(psi);
}

SpinorField apply_sigma3(const SpinorField& psi) {
  SpinorField out = psi;
  for (Eigen::Index i = 1; i < out.size(); i += 2) out[i] = -out[i];
  return out;
}

NormalSolution solve_normal(const DiracOperator& D, const SpinorField& b, const SolverParams& params,
                            InversionCounter* counter) {
  check_size(D.geom(), b, "solve_normal");
  if (!(params.tolerance > 0)) throw std::invalid_argument("solve_normal: tolerance must be positive");
  if (counter) counter->add(2);

  const Eigen::Index N = b.size();
  NormalSolution sol{SpinorField::Zero(N), SolveReport{}};
  sol.report.inversion_count_delta = 2;
  const Real bnorm = b.norm();
  if (bnorm == 0) return sol;

  const int max_iter = params.max_iterations > 0 ? params.max_iterations : static_cast<int>(10 * N + 1000);
  const Real target = params.tolerance * bnorm;

  SpinorField& x = sol.x;
  SpinorField r = b, p, Ap(N), tmp(N);
  std::vector<Real> alphas, betas;
  int total = 0;
  Real true_res = bnorm;
  bool first_pass = true;

  // Restart from the current iterate until the true residual meets the target.
  for (int pass = 0; pass < 8; ++pass) {
    if (pass > 0) {
      D.apply_normal(x, Ap, tmp);
      r = b - Ap;
    }
    p = r;
    Real rr = r.squaredNorm();
    while (std::sqrt(rr) > target && total < max_iter) {
      D.apply_normal(p, Ap, tmp);
      const Real pAp = p.dot(Ap).real();
      const Real alpha = rr / pAp;
      x += alpha * p;
      r -= alpha * Ap;
      const Real rr_new = r.squaredNorm();
      const Real beta = rr_new / rr;
      if (first_pass && params.estimate_ritz) {
        alphas.push_back(alpha);
        betas.push_back(beta);
      }
      p = r + beta * p;
      rr = rr_new;
      ++total;
    }
    first_pass = false;
    D.apply_normal(x, Ap, tmp);
    true_res = (b - Ap).norm();
    if (true_res <= target) break;
    if (total >= max_iter) break;
  }

  sol.report.iterations = total;
  sol.report.relative_residual = true_res / bnorm;
  if (true_res > target) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "CG on D^+D did not reach relative residual %.3g within %d iterations (best %.3g)",
                  params.tolerance, max_iter, true_res / bnorm);
    throw SolverError(msg,
                      true_res / bnorm, total);
  }

  if (params.estimate_ritz && !alphas.empty()) {
    const Eigen::Index k = static_cast<Eigen::Index>(alphas.size());
    Eigen::VectorXd diag(k), sub(std::max<Eigen::Index>(k - 1, 0));
    for (Eigen::Index j = 0; j < k; ++j) {
      diag[j] = 1 / alphas[j] + (j > 0 ? betas[j - 1] / alphas[j - 1] : 0.0);
      if (j + 1 < k) sub[j] = std::sqrt(betas[j]) / alphas[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    sol.report.min_ritz = es.eigenvalues().minCoeff();
  }
  return sol;
}

NormalSolution solve_normal(const GaugeField& U, Real m0, const SpinorField& b, const SolverParams& params,
                            InversionCounter* counter) {
  return solve_normal(DiracOperator(U, m0), b, params, counter);
}

SpinorField solve_dirac(const DiracOperator& D, const SpinorField& b, const SolverParams& params,
                        InversionCounter* counter) {
  // D^{-1} = (D^+ D)^{-1} D^+
  SpinorField x = solve_normal(D, D.apply_dagger(b), params).x;
  if (counter) counter->add(1);
  return x;
}

SpinorField solve_dirac_dagger(const DiracOperator& D, const SpinorField& b, const SolverParams& params,
                               InversionCounter* counter) {
  // (D^+)^{-1} = D (D^+ D)^{-1}
  SpinorField x = D.apply(solve_normal(D, b, params).x);
  if (counter) counter->add(1);
  return x;
}

SpinorField gaussian_spinor(RngStream& rng, const LatticeGeom& geom) {
  SpinorField phi(2 * geom.volume());
  const Real s = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const Real re = rng.normal();
    const Real im = rng.normal();
    phi[i] = Complex(s * re, s * im);
  }
  return phi;
}

SpinorField pseudofermion_heatbath(const GaugeField& U, Real m0, RngStream& rng) {
  return apply_dirac_dagger(U, m0, gaussian_spinor(rng, U.geom()));
}

Real fermion_action(const DiracOperator& D, const SpinorField& eta, const SolverParams& params,
                    InversionCounter* counter) {
  if (eta.norm() == 0) return 0;
  const SpinorField x = solve_normal(D, eta, params, counter).x;
  return 2 * eta.dot(x).real() - D.apply(x).squaredNorm();
}

Real fermion_action(const GaugeField& U, Real m0, const SpinorField& eta, const SolverParams& params,
                    InversionCounter* counter) {
  return fermion_action(DiracOperator(U, m0), eta, params, counter);
}

FermionAux chi_xi(const DiracOperator& D, const SpinorField& eta, const SolverParams& params,
                  InversionCounter* counter) {
  FermionAux aux;
  aux.xi = solve_normal(D, eta, params, counter).x;
  aux.chi = D.apply(aux.xi);
  return aux;
}

FermionAux chi_xi(const GaugeField& U, Real m0, const SpinorField& eta, const SolverParams& params,
                  InversionCounter* counter) {
  return chi_xi(DiracOperator(U, m0), eta, params, counter);
}

ForceField fermion_force(const GaugeField& U, const SpinorField& chi, const SpinorField& xi) {
  const LatticeGeom& g = U.geom();
  check_size(g, chi, "fermion_force");
  check_size(g, xi, "fermion_force");
  ForceField f(g.n_links());
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < kDims; ++mu) {
      const int np = g.fwd(n, mu);
      const Complex u = U.link(n, mu);
      const Complex a = u * bilinear(at(chi, n), mu, -1, at(xi, np));
      const Complex b = std::conj(u) * bilinear(at(chi, np), mu, +1, at(xi, n));
      f[LatticeGeom::link(n, mu)] = -(a - b).imag();
    }
  }
  return f;
}

ForceField fermion_force(const DiracOperator& D, const FermionAux& aux) {
  const LatticeGeom& g = D.geom();
  ForceField f(g.n_links());
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < kDims; ++mu) {
      const int np = g.fwd(n, mu);
      const Complex u = D.link(n, mu);
      const Complex a = u * bilinear(at(aux.chi, n), mu, -1, at(aux.xi, np));
      const Complex b = std::conj(u) * bilinear(at(aux.chi, np), mu, +1, at(aux.xi, n));
      f[LatticeGeom::link(n, mu)] = -(a - b).imag();
    }
  }
  return f;
}

WVectors w_vectors(const GaugeField& U, int m, int nu, const SpinorField& chi, const SpinorField& xi) {
  const LatticeGeom& g = U.geom();
  const int mp = g.fwd(m, nu);
  const Complex u = U.link(m, nu);
  const Complex half_i = 0.5 * kI;
  WVectors w;
  w.w1.site = {m, mp};
  w.w1.value[0] = -half_i * u * project(nu, +1, at(chi, mp));
  w.w1.value[1] = half_i * std::conj(u) * project(nu, -1, at(chi, m));
  w.w2.site = {m, mp};
  w.w2.value[0] = -half_i * u * project(nu, -1, at(xi, mp));
  w.w2.value[1] = half_i * std::conj(u) * project(nu, +1, at(xi, m));
  return w;
}

SpinorField to_spinor_field(const LinkLocalSpinor& w, const LatticeGeom& geom) {
  SpinorField out = SpinorField::Zero(2 * geom.volume());
  for (int i = 0; i < 2; ++i) out.segment<2>(2 * w.site[i]) += w.value[i];
  return out;
}

ZFields z_aggregate(const DiracOperator& D, const ForceField& weight, const FermionAux& aux,
                    const SolverParams& params, InversionCounter* counter) {
  const LatticeGeom& g = D.geom();
  if (weight.size() != g.n_links()) throw std::invalid_argument("z_aggregate: weight size does not match lattice");
  const Complex half_i = 0.5 * kI;
  SpinorField X = SpinorField::Zero(2 * g.volume());
  SpinorField Y = SpinorField::Zero(2 * g.volume());
  for (int m = 0; m < g.volume(); ++m) {
    for (int nu = 0; nu < kDims; ++nu) {
      const Real wt = weight[LatticeGeom::link(m, nu)];
      if (wt == 0) continue;
      const int mp = g.fwd(m, nu);
      const Complex u = D.link(m, nu);
      X.segment<2>(2 * m) -= wt * half_i * u * project(nu, +1, at(aux.chi, mp));
      X.segment<2>(2 * mp) += wt * half_i * std::conj(u) * project(nu, -1, at(aux.chi, m));
      Y.segment<2>(2 * m) -= wt * half_i * u * project(nu, -1, at(aux.xi, mp));
      Y.segment<2>(2 * mp) += wt * half_i * std::conj(u) * project(nu, +1, at(aux.xi, m));
    }
  }
  ZFields z;
  if (X.norm() == 0 && Y.norm() == 0) {
    if (counter) counter->add(2);
    z.z1 = SpinorField::Zero(X.size());
    z.z2 = SpinorField::Zero(X.size());
    return z;
  }
  z.z1 = solve_dirac_dagger(D, X, params, counter);
  z.z2 = solve_dirac(D, Y + z.z1, params, counter);
  return z;
}

ForceField fermion_hessian_contraction(const DiracOperator& D, const FermionAux& aux, const ForceField& weight,
                                       const ZFields& z) {
  const LatticeGeom& g = D.geom();
  const Complex half_i = 0.5 * kI;
  ForceField c(g.n_links());
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < kDims; ++mu) {
      const int np = g.fwd(n, mu);
      const Complex u = D.link(n, mu);
      const Complex ub = std::conj(u);
      // Z1^+ w2_{n,mu}
      const Complex t1 = -half_i * u * bilinear(at(z.z1, n), mu, -1, at(aux.xi, np)) +
                         half_i * ub * bilinear(at(z.z1, np), mu, +1, at(aux.xi, n));
      // w1_{n,mu}^+ Z2
      const Complex t2 = -half_i * u * bilinear(at(aux.chi, n), mu, -1, at(z.z2, np)) +
                         half_i * ub * bilinear(at(aux.chi, np), mu, +1, at(z.z2, n));
      // chi^+ (d^2 D / dq_mu(n)^2) xi
      const Complex d2 = 0.5 * (u * bilinear(at(aux.chi, n), mu, -1, at(aux.xi, np)) +
                                ub * bilinear(at(aux.chi, np), mu, +1, at(aux.xi, n)));
      const int l = LatticeGeom::link(n, mu);
      c[l] = 4 * (t1 + t2 - d2 * weight[l]).real();
    }
  }
  return c;
}

ForceField c_ff(const DiracOperator& D, const FermionAux& aux, const ForceField& f, const SolverParams& params,
                InversionCounter* counter) {
  const ZFields z = z_aggregate(D, f, aux, params, counter);
  return fermion_hessian_contraction(D, aux, f, z);
}

ForceField c_ff(const GaugeField& U, Real m0, const SpinorField& eta, const SolverParams& params,
                InversionCounter* counter) {
  const DiracOperator D(U, m0);
  const FermionAux aux = chi_xi(D, eta, params, counter);
  return c_ff(D, aux, fermion_force(D, aux), params, counter);
}

ForceField c_gf(const DiracOperator& D, const FermionAux& aux, const ForceField& gauge_force,
                const SolverParams& params, InversionCounter* counter) {
  const ZFields z = z_aggregate(D, gauge_force, aux, params, counter);
  return fermion_hessian_contraction(D, aux, gauge_force, z);
}

ForceField c_gf(const GaugeField& U, Real m0, const SpinorField& eta, Real beta, const SolverParams& params,
                InversionCounter* counter) {
  const DiracOperator D(U, m0);
  const FermionAux aux = chi_xi(D, eta, params, counter);
  return c_gf(D, aux, gauge_force(U, beta), params, counter);
}

}  // namespace schwinger
