#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "schwinger/lattice.hpp"

using namespace schwinger;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("schwinger_test_" + name)).string();
}

// Kahan-summed reference for 1/2 sum p^2
Real kahan_kinetic(const MomentumField& P) {
  Real sum = 0, c = 0;
  for (int i = 0; i < P.size(); ++i) {
    const Real y = 0.5 * P[i] * P[i] - c;
    const Real t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace

TEST_CASE("geometry: t-major sites and periodic neighbours") {
  const LatticeGeom g(4, 3);
  CHECK(g.volume() == 12);
  CHECK(g.n_links() == 24);
  CHECK(g.site(1, 2) == 2 * 4 + 1);
  CHECK(g.site(-1, 0) == 3);
  CHECK(g.site(4, 3) == 0);
  const int n = g.site(3, 2);
  CHECK(g.fwd(n, 0) == g.site(0, 2));
  CHECK(g.fwd(n, 1) == g.site(3, 0));
  CHECK(g.bwd(g.site(0, 0), 0) == g.site(3, 0));
  CHECK(g.bwd(g.site(0, 0), 1) == g.site(0, 2));
  for (int m = 0; m < g.volume(); ++m) {
    for (int mu = 0; mu < 2; ++mu) {
      CHECK(g.bwd(g.fwd(m, mu), mu) == m);
      CHECK(g.shift(m, mu, +1) == g.fwd(m, mu));
      CHECK(g.shift(m, mu, -1) == g.bwd(m, mu));
    }
  }
  CHECK(LatticeGeom::link(5, 1) == 11);
  CHECK_THROWS_AS(LatticeGeom(1, 4), std::invalid_argument);
  CHECK_THROWS_AS(LatticeGeom(4, 0), std::invalid_argument);
}

TEST_CASE("wrap_angle maps into [-pi, pi) and keeps the link") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi + 0.5) == doctest::Approx(-kPi + 0.5).epsilon(1e-14));
  CHECK(wrap_angle(-kPi - 0.5) == doctest::Approx(kPi - 0.5).epsilon(1e-14));
  RngStream rng(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const Real a = 40 * (rng.uniform() - 0.5);
    const Real w = wrap_angle(a);
    CHECK(w >= -kPi);
    CHECK(w <= kPi);
    CHECK(std::abs(std::polar(1.0, a) - std::polar(1.0, w)) < 1e-13);
  }
}

TEST_CASE("momenta: unit Gaussian per link") {
  const LatticeGeom g(32, 32);
  RngStream rng(12, 3);
  const MomentumField P = sample_momenta(rng, g);
  const int n = static_cast<int>(P.size());
  const Real mean = P.mean();
  const Real var = (P.array() - mean).square().sum() / (n - 1);
  // sigma of the sample mean is 1/sqrt(n), of the sample variance sqrt(2/n)
  CHECK(std::abs(mean) < 4 / std::sqrt(Real(n)));
  CHECK(std::abs(var - 1) < 4 * std::sqrt(2.0 / n));
}

TEST_CASE("rng streams are deterministic and distinct") {
  const LatticeGeom g(4, 4);
  RngStream a(9, 1), b(9, 1), c(9, 2), d(10, 1);
  const MomentumField pa = sample_momenta(a, g);
  CHECK(pa == sample_momenta(b, g));
  CHECK(pa != sample_momenta(c, g));
  CHECK(pa != sample_momenta(d, g));
}

TEST_CASE("exp update and momentum shift") {
  const LatticeGeom g(4, 4);
  RngStream rng(2, 0);
  const GaugeField U = random_gauge_field(rng, g);
  const MomentumField P = sample_momenta(rng, g);

  SUBCASE("zero step is the identity") {
    CHECK(exp_update_links(U, P, 0.0) == U);
  }
  SUBCASE("forward then backward returns within a few ulp") {
    const GaugeField back = exp_update_links(exp_update_links(U, P, 0.37), P, -0.37);
    for (int l = 0; l < g.n_links(); ++l) {
      const Real d = wrap_angle(back.angles()[l] - U.angles()[l]);
      CHECK(std::abs(d) <= 8 * std::numeric_limits<Real>::epsilon() * kPi);
    }
  }
  SUBCASE("the update multiplies links by exp(i p h)") {
    const GaugeField V = exp_update_links(U, P, 0.2);
    for (int n = 0; n < g.volume(); ++n) {
      for (int mu = 0; mu < 2; ++mu) {
        const Complex expected = std::polar(1.0, 0.2 * P[LatticeGeom::link(n, mu)]) * U.link(n, mu);
        CHECK(std::abs(V.link(n, mu) - expected) < 1e-14);
      }
    }
  }
  SUBCASE("in place agrees with the copy") {
    GaugeField V = U;
    exp_update_links_inplace(V, P, 0.3);
    CHECK(V == exp_update_links(U, P, 0.3));
  }
  SUBCASE("shift") {
    const MomentumField F = sample_momenta(rng, g);
    CHECK(shift_momenta(P, F, 0.0) == P);
    CHECK((shift_momenta(P, F, 0.5) - (P - 0.5 * F)).cwiseAbs().maxCoeff() == 0.0);
    MomentumField Q = P;
    shift_momenta_inplace(Q, F, 0.5);
    CHECK(Q == shift_momenta(P, F, 0.5));
    CHECK_THROWS_AS(shift_momenta(P, MomentumField::Zero(3), 0.1), std::invalid_argument);
  }
}

TEST_CASE("kinetic energy") {
  const LatticeGeom g(8, 8);
  CHECK(kinetic_energy(MomentumField::Zero(g.n_links())) == 0.0);
  CHECK(kinetic_energy(MomentumField::Ones(g.n_links())) == doctest::Approx(g.n_links() / 2.0).epsilon(1e-15));
  RngStream rng(1, 1);
  const MomentumField P = sample_momenta(rng, g);
  CHECK(kinetic_energy(P) == doctest::Approx(kahan_kinetic(P)).epsilon(1e-13));
}

TEST_CASE("gauge file round trip") {
  const LatticeGeom g(6, 4);
  RngStream rng(77, 0);
  const GaugeField U = random_gauge_field(rng, g);
  const GaugeFileHeader header{6, 4, 1.0, -0.231367, 77};
  CHECK(gauge_file_header_line(header) == "schwinger-u1 v1 6 4 1.0 -0.231367 77");
  CHECK(gauge_file_header_line({32, 32, 1.0, -0.231367, 5}) == "schwinger-u1 v1 32 32 1.0 -0.231367 5");

  const std::string path = temp_path("roundtrip.gauge");
  write_gauge_file(path, U, header);
  const GaugeFile f = read_gauge_file(path);
  CHECK(f.field == U);  // bit-exact
  CHECK(f.header.L == 6);
  CHECK(f.header.T == 4);
  CHECK(f.header.beta == 1.0);
  CHECK(f.header.m0 == -0.231367);
  CHECK(f.header.seed == 77u);

  SUBCASE("rewriting gives identical bytes") {
    const std::string path2 = temp_path("roundtrip2.gauge");
    write_gauge_file(path2, f.field, f.header);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    std::filesystem::remove(path2);
  }
  SUBCASE("truncated and padded files are rejected") {
    const auto size = std::filesystem::file_size(path);
    const std::string bad = temp_path("bad.gauge");
    std::filesystem::copy_file(path, bad, std::filesystem::copy_options::overwrite_existing);
    std::filesystem::resize_file(bad, size - 8);
    CHECK_THROWS(read_gauge_file(bad));
    std::filesystem::resize_file(bad, size + 8);
    CHECK_THROWS(read_gauge_file(bad));
    std::filesystem::remove(bad);
  }
  CHECK_THROWS(read_gauge_file(temp_path("does_not_exist.gauge")));
  std::filesystem::remove(path);
}
