#pragma once

#include <array>

#include "schwinger/lattice.hpp"

namespace schwinger {

/// Plaquette angle U_1(n) U_2(n+1) U_1^+(n+2) U_2^+(n) in the (x, t) orientation.
Real plaquette_angle(const GaugeField& U, int n);
Complex plaquette(const GaugeField& U, int n);

/// Angle of the plaquette spanned by (mu, nu) with corner n:
/// q_mu(n) + q_nu(n+mu) - q_mu(n+nu) - q_nu(n).
Real oriented_plaquette_angle(const GaugeField& U, int n, int mu, int nu);

Real mean_plaquette(const GaugeField& U);

/// S_G = beta * sum_n (1 - Re P(n)).
Real gauge_action(const GaugeField& U, Real beta);

/// g(n, mu) = Im(P1(n,mu) - P2(n,mu)); the gauge force is beta * g.
ForceField gauge_force_direction(const GaugeField& U);

/// dS_G / dq_mu(n).
ForceField gauge_force(const GaugeField& U, Real beta);

/// The eight plaquettes entering the gauge Hessian at link (n, mu), each oriented in the
/// (mu, nu) plane with nu the other direction. Index i holds P_{i+1}:
///   P1 at n,        P2 at n-nu,      P3 at n+mu,      P4 at n+nu,
///   P5 at n-mu,     P6 at n-mu-nu,   P7 at n-2nu,     P8 at n-nu+mu.
using PlaquetteSet = std::array<Complex, 8>;

PlaquetteSet plaquette_set(const GaugeField& U, int n, int mu);

/// Gauge-gauge force-gradient piece 2 sum F_G * Hess(S_G).
ForceField c_gg(const GaugeField& U, Real beta);

/// 2 sum f * Hess(S_G) for an arbitrary link field f (the fermion force for C_FG).
ForceField c_fg(const GaugeField& U, Real beta, const ForceField& f);

}  // namespace schwinger
