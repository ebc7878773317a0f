#include <doctest.h>

#include <cmath>

#include "dense_oracle.hpp"
#include "schwinger/gauge.hpp"

using namespace schwinger;

namespace {

Real max_abs(const LinkVector& v) { return v.cwiseAbs().maxCoeff(); }

// q_mu(n) -> q_mu(n) + a(n) - a(n + mu)
GaugeField gauge_transform(const GaugeField& U, const std::vector<Real>& a) {
  const LatticeGeom& g = U.geom();
  LinkVector q = U.angles();
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < 2; ++mu) q[LatticeGeom::link(n, mu)] += a[n] - a[g.fwd(n, mu)];
  }
  return GaugeField(g, q);
}

// field translated by one site in x: V(n) = U(n - x_hat)
GaugeField translate_x(const GaugeField& U) {
  const LatticeGeom& g = U.geom();
  LinkVector q(g.n_links());
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < 2; ++mu) q[LatticeGeom::link(n, mu)] = U.angle(g.bwd(n, 0), mu);
  }
  return GaugeField(g, q);
}

LinkVector translate_x(const LatticeGeom& g, const LinkVector& v) {
  LinkVector out(v.size());
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < 2; ++mu) out[LatticeGeom::link(n, mu)] = v[LatticeGeom::link(g.bwd(n, 0), mu)];
  }
  return out;
}

}  // namespace

TEST_CASE("cold configuration") {
  const LatticeGeom g(6, 4);
  const GaugeField U(g);
  CHECK(mean_plaquette(U) == 1.0);
  CHECK(gauge_action(U, 1.3) == 0.0);
  CHECK(max_abs(gauge_force(U, 1.3)) == 0.0);
  CHECK(max_abs(c_gg(U, 1.3)) == 0.0);
}

TEST_CASE("single rotated link touches two plaquettes") {
  const LatticeGeom g(4, 4);
  GaugeField U(g);
  const Real a = 0.7, beta = 2.0;
  const int n = g.site(1, 2);
  U.set_angle(n, 0, a);
  CHECK(gauge_action(U, beta) == doctest::Approx(2 * beta * (1 - std::cos(a))).epsilon(1e-14));
  CHECK(plaquette_angle(U, n) == doctest::Approx(a));
  CHECK(plaquette_angle(U, g.bwd(n, 1)) == doctest::Approx(-a));
  const ForceField F = gauge_force(U, beta);
  // dS/dq = 2 beta sin a on the rotated link
  CHECK(F[LatticeGeom::link(n, 0)] == doctest::Approx(2 * beta * std::sin(a)).epsilon(1e-14));
  CHECK(mean_plaquette(U) == doctest::Approx(1 - 2 * (1 - std::cos(a)) / g.volume()).epsilon(1e-14));
}

TEST_CASE("gauge action matches the complex-product oracle") {
  const LatticeGeom g(5, 7);
  const GaugeField U = oracle::thermal_like_field(g, 8, 1.5);
  CHECK(gauge_action(U, 1.7) == doctest::Approx(oracle::gauge_action(U, 1.7)).epsilon(1e-13));
}

TEST_CASE("gauge force is the gradient of the action") {
  const LatticeGeom g(8, 8);
  const GaugeField U = oracle::thermal_like_field(g, 21);
  const Real beta = 1.0;
  const LinkVector fd = oracle::fd_gradient(U, [&](const GaugeField& V) { return oracle::gauge_action(V, beta); }, 1e-5);
  CHECK(max_abs(gauge_force(U, beta) - fd) < 1e-8);
  CHECK(max_abs(gauge_force(U, beta) - beta * gauge_force_direction(U)) < 1e-15);
}

TEST_CASE("plaquette set holds the eight oriented plaquettes") {
  const LatticeGeom g(5, 4);
  const GaugeField U = oracle::thermal_like_field(g, 2);
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < 2; ++mu) {
      const int nu = other_direction(mu);
      const int m_nu = g.bwd(n, nu);
      const std::array<int, 8> corner = {n,
                                         m_nu,
                                         g.fwd(n, mu),
                                         g.fwd(n, nu),
                                         g.bwd(n, mu),
                                         g.bwd(m_nu, mu),
                                         g.bwd(m_nu, nu),
                                         g.fwd(m_nu, mu)};
      const PlaquetteSet p = plaquette_set(U, n, mu);
      for (int i = 0; i < 8; ++i) {
        const Complex expected = std::polar(1.0, oriented_plaquette_angle(U, corner[i], mu, nu));
        CHECK(std::abs(p[i] - expected) < 1e-14);
      }
    }
  }
  // (t, x) orientation is the conjugate of the standard plaquette
  CHECK(oriented_plaquette_angle(U, 3, 1, 0) == doctest::Approx(-plaquette_angle(U, 3)));
}

TEST_CASE("gauge force-gradient terms match the directional-derivative oracle") {
  const LatticeGeom g(4, 4);
  const GaugeField U = oracle::thermal_like_field(g, 3);
  const Real beta = 1.0;
  const auto grad = [&](const GaugeField& V) { return gauge_force(V, beta); };
  const ForceField F = gauge_force(U, beta);
  CHECK(max_abs(c_gg(U, beta) - oracle::hessian_contraction_richardson(U, grad, F, 1e-3)) < 1e-8);

  RngStream rng(6, 0);
  const ForceField f = sample_momenta(rng, g);
  CHECK(max_abs(c_fg(U, beta, f) - oracle::hessian_contraction_richardson(U, grad, f, 1e-3)) < 1e-8);
}

TEST_CASE("c_gg and c_fg algebra") {
  const LatticeGeom g(6, 6);
  const GaugeField U = oracle::thermal_like_field(g, 17);
  RngStream rng(1, 2);
  const ForceField v = sample_momenta(rng, g), w = sample_momenta(rng, g);

  CHECK(max_abs(c_gg(U, 1.0) - c_fg(U, 1.0, gauge_force(U, 1.0))) < 1e-13);
  CHECK(max_abs(c_gg(U, 2.0) - 4 * c_gg(U, 1.0)) < 1e-12);
  CHECK(max_abs(c_fg(U, 2.0, v) - 2 * c_fg(U, 1.0, v)) < 1e-12);
  CHECK(max_abs(c_fg(U, 1.0, 2 * v + w) - (2 * c_fg(U, 1.0, v) + c_fg(U, 1.0, w))) < 1e-12);
  // the Hessian is symmetric
  CHECK(v.dot(c_fg(U, 1.0, w)) == doctest::Approx(w.dot(c_fg(U, 1.0, v))).epsilon(1e-12));
}

TEST_CASE("gauge invariance") {
  const LatticeGeom g(6, 4);
  const GaugeField U = oracle::thermal_like_field(g, 9);
  RngStream rng(3, 3);
  std::vector<Real> a(g.volume());
  for (auto& x : a) x = 3 * rng.normal();
  const GaugeField V = gauge_transform(U, a);
  CHECK(gauge_action(V, 1.0) == doctest::Approx(gauge_action(U, 1.0)).epsilon(1e-12));
  CHECK(max_abs(gauge_force(V, 1.0) - gauge_force(U, 1.0)) < 1e-12);
  CHECK(max_abs(c_gg(V, 1.0) - c_gg(U, 1.0)) < 1e-12);
}

TEST_CASE("translation covariance") {
  const LatticeGeom g(6, 4);
  const GaugeField U = oracle::thermal_like_field(g, 10);
  const GaugeField V = translate_x(U);
  CHECK(gauge_action(V, 1.0) == doctest::Approx(gauge_action(U, 1.0)).epsilon(1e-13));
  CHECK(max_abs(gauge_force(V, 1.0) - translate_x(g, gauge_force(U, 1.0))) < 1e-14);
  CHECK(max_abs(c_gg(V, 1.0) - translate_x(g, c_gg(U, 1.0))) < 1e-13);
}
