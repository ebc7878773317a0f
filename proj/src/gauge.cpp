#include "schwinger/gauge.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace schwinger {

Real oriented_plaquette_angle(const GaugeField& U, int n, int mu, int nu) {
  const LatticeGeom& g = U.geom();
  return U.angle(n, mu) + U.angle(g.fwd(n, mu), nu) - U.angle(g.fwd(n, nu), mu) - U.angle(n, nu);
}

Real plaquette_angle(const GaugeField& U, int n) { return oriented_plaquette_angle(U, n, 0, 1); }

Complex plaquette(const GaugeField& U, int n) { return std::polar(Real{1}, plaquette_angle(U, n)); }

Real mean_plaquette(const GaugeField& U) {
  Real s = 0;
  for (int n = 0; n < U.geom().volume(); ++n) s += std::cos(plaquette_angle(U, n));
  return s / U.geom().volume();
}

Real gauge_action(const GaugeField& U, Real beta) {
  Real s = 0;
  for (int n = 0; n < U.geom().volume(); ++n) s += 1 - std::cos(plaquette_angle(U, n));
  return beta * s;
}

namespace {

// sin/cos of every (x, t) plaquette. The (t, x) orientation is the complex conjugate.
struct PlaquetteTable {
  std::vector<Real> re;
  std::vector<Real> im;

  explicit PlaquetteTable(const GaugeField& U) : re(U.geom().volume()), im(U.geom().volume()) {
    for (int n = 0; n < U.geom().volume(); ++n) {
      const Real a = plaquette_angle(U, n);
      re[n] = std::cos(a);
      im[n] = std::sin(a);
    }
  }
};

// +1 if (mu, nu) is the (x, t) orientation, -1 for (t, x).
constexpr Real orientation(int mu) { return mu == 0 ? 1.0 : -1.0; }

}  // namespace

ForceField gauge_force_direction(const GaugeField& U) {
  const LatticeGeom& g = U.geom();
  const PlaquetteTable P(U);
  ForceField f(g.n_links());
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < kDims; ++mu) {
      const int nu = other_direction(mu);
      f[LatticeGeom::link(n, mu)] = orientation(mu) * (P.im[n] - P.im[g.bwd(n, nu)]);
    }
  }
  return f;
}

ForceField gauge_force(const GaugeField& U, Real beta) { return beta * gauge_force_direction(U); }

PlaquetteSet plaquette_set(const GaugeField& U, int n, int mu) {
  const LatticeGeom& g = U.geom();
  const int nu = other_direction(mu);
  const int n_pmu = g.fwd(n, mu);
  const int n_mmu = g.bwd(n, mu);
  const int n_mnu = g.bwd(n, nu);
  const std::array<int, 8> corner = {
      n, n_mnu, n_pmu, g.fwd(n, nu), n_mmu, g.bwd(n_mmu, nu), g.bwd(n_mnu, nu), g.fwd(n_mnu, mu),
  };
  PlaquetteSet s;
  for (int i = 0; i < 8; ++i) s[i] = std::polar(Real{1}, oriented_plaquette_angle(U, corner[i], mu, nu));
  return s;
}

ForceField c_gg(const GaugeField& U, Real beta) {
  const LatticeGeom& g = U.geom();
  const PlaquetteTable P(U);
  ForceField c(g.n_links());
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < kDims; ++mu) {
      const int nu = other_direction(mu);
      const int n_pmu = g.fwd(n, mu);
      const int n_mmu = g.bwd(n, mu);
      const int n_mnu = g.bwd(n, nu);
      const int p1 = n, p2 = n_mnu, p3 = n_pmu, p4 = g.fwd(n, nu), p5 = n_mmu;
      const int p6 = g.bwd(n_mmu, nu), p7 = g.bwd(n_mnu, nu), p8 = g.fwd(n_mnu, mu);
      // Im flips with the orientation, Re does not.
      const Real s = orientation(mu);
      const Real a = s * (4 * P.im[p1] - P.im[p2] - P.im[p3] - P.im[p4] - P.im[p5]);
      const Real b = s * (4 * P.im[p2] - P.im[p1] - P.im[p6] - P.im[p7] - P.im[p8]);
      c[LatticeGeom::link(n, mu)] = 2 * beta * beta * (a * P.re[p1] - b * P.re[p2]);
    }
  }
  return c;
}

ForceField c_fg(const GaugeField& U, Real beta, const ForceField& f) {
  const LatticeGeom& g = U.geom();
  if (f.size() != g.n_links()) throw std::invalid_argument("c_fg: force field size does not match lattice");
  const PlaquetteTable P(U);
  auto F = [&](int n, int mu) { return f[LatticeGeom::link(n, mu)]; };
  ForceField c(g.n_links());
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < kDims; ++mu) {
      const int nu = other_direction(mu);
      const int n_pmu = g.fwd(n, mu);
      const int n_pnu = g.fwd(n, nu);
      const int n_mnu = g.bwd(n, nu);
      const int n_pmu_mnu = g.bwd(n_pmu, nu);
      const Real around1 = F(n, mu) + F(n_pmu, nu) - F(n_pnu, mu) - F(n, nu);
      const Real around2 = F(n, mu) - F(n_pmu_mnu, nu) - F(n_mnu, mu) + F(n_mnu, nu);
      c[LatticeGeom::link(n, mu)] = 2 * beta * (around1 * P.re[n] + around2 * P.re[n_mnu]);
    }
  }
  return c;
}

}  // namespace schwinger
