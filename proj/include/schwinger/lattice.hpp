#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace schwinger {

using Real = double;
using Complex = std::complex<Real>;

/// Real value per directed link, indexed 2*site + mu.
using LinkVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MomentumField = LinkVector;
using ForceField = LinkVector;

/// Two complex components per site, indexed 2*site + spin.
using SpinorField = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using Spinor = Eigen::Matrix<Complex, 2, 1>;

inline constexpr Real kPi = std::numbers::pi_v<Real>;
inline constexpr Real kTwoPi = 2 * std::numbers::pi_v<Real>;

/// Direction 0 is the space direction (x), 1 the time direction (t).
inline constexpr int kDims = 2;

inline constexpr int other_direction(int mu) { return 1 - mu; }

/// Periodic L x T lattice. Sites are ordered t-major: n = t*L + x.
class LatticeGeom {
 public:
  LatticeGeom(int L, int T);

  int L() const { return L_; }
  int T() const { return T_; }
  int volume() const { return L_ * T_; }
  int n_links() const { return 2 * volume(); }

  int site(int x, int t) const;
  int x_of(int n) const { return n % L_; }
  int t_of(int n) const { return n / L_; }

  /// Neighbor n + s*mu_hat with periodic wraparound, s = +1 or -1.
  int shift(int n, int mu, int s) const {
    return s > 0 ? (*fwd_)[kDims * n + mu] : (*bwd_)[kDims * n + mu];
  }
  int fwd(int n, int mu) const { return (*fwd_)[kDims * n + mu]; }
  int bwd(int n, int mu) const { return (*bwd_)[kDims * n + mu]; }

  static int link(int n, int mu) { return kDims * n + mu; }

  friend bool operator==(const LatticeGeom& a, const LatticeGeom& b) {
    return a.L_ == b.L_ && a.T_ == b.T_;
  }

 private:
  int L_;
  int T_;
  std::shared_ptr<const std::vector<int>> fwd_;
  std::shared_ptr<const std::vector<int>> bwd_;
};

/// Maps any finite angle onto [-pi, pi). Exact: no rounding beyond the input.
Real wrap_angle(Real a);

/// Compact U(1) gauge field stored as link angles in [-pi, pi).
class GaugeField {
 public:
  explicit GaugeField(const LatticeGeom& geom);
  GaugeField(const LatticeGeom& geom, LinkVector angles);

  const LatticeGeom& geom() const { return geom_; }
  const LinkVector& angles() const { return q_; }

  Real angle(int n, int mu) const { return q_[LatticeGeom::link(n, mu)]; }
  Complex link(int n, int mu) const { return std::polar(Real{1}, angle(n, mu)); }

  /// Stores wrap_angle(a).
  void set_angle(int n, int mu, Real a) { q_[LatticeGeom::link(n, mu)] = wrap_angle(a); }

  /// exp(i q) for every link, in link order.
  Eigen::Matrix<Complex, Eigen::Dynamic, 1> links() const;

  friend bool operator==(const GaugeField& a, const GaugeField& b) {
    return a.geom_ == b.geom_ && a.q_ == b.q_;
  }

 private:
  LatticeGeom geom_;
  LinkVector q_;
};

/// Reproducible random stream identified by (seed, stream).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  Real normal() { return normal_(engine_); }
  Real uniform() { return uniform_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<Real> normal_{0.0, 1.0};
  std::uniform_real_distribution<Real> uniform_{0.0, 1.0};
};

/// i.i.d. standard normal momentum per link.
MomentumField sample_momenta(RngStream& rng, const LatticeGeom& geom);

/// Uniform angles in [-amplitude, amplitude) (wrapped), for hot starts and tests.
GaugeField random_gauge_field(RngStream& rng, const LatticeGeom& geom, Real amplitude = kPi);

/// q <- wrap(q + h p).
GaugeField exp_update_links(const GaugeField& U, const MomentumField& P, Real h);
void exp_update_links_inplace(GaugeField& U, const MomentumField& P, Real h);

/// p <- p - h F. Throws std::invalid_argument on shape mismatch.
MomentumField shift_momenta(const MomentumField& P, const ForceField& F, Real h);
void shift_momenta_inplace(MomentumField& P, const ForceField& F, Real h);

Real kinetic_energy(const MomentumField& P);

// Gauge-configuration files: a text header line
//   schwinger-u1 v1 L T beta m0 seed
// followed by 2V little-endian float64 angles in link order.

struct GaugeFileHeader {
  int L = 0;
  int T = 0;
  Real beta = 0;
  Real m0 = 0;
  std::uint64_t seed = 0;
};

/// Shortest round-trip decimal, always containing a '.' or exponent ("1.0").
std::string format_real(Real v);

std::string gauge_file_header_line(const GaugeFileHeader& h);

void write_gauge_file(const std::string& path, const GaugeField& U, const GaugeFileHeader& header);

struct GaugeFile {
  GaugeFileHeader header;
  GaugeField field;
};

GaugeFile read_gauge_file(const std::string& path);

}  // namespace schwinger
