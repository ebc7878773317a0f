#include "schwinger/lattice.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace schwinger {

LatticeGeom::LatticeGeom(int L, int T) : L_(L), T_(T) {
  if (L < 2 || T < 2) {
    throw std::invalid_argument("lattice extents must be >= 2, got " + std::to_string(L) + "x" +
                                std::to_string(T));
  }
  auto fwd = std::make_shared<std::vector<int>>(kDims * volume());
  auto bwd = std::make_shared<std::vector<int>>(kDims * volume());
  for (int t = 0; t < T; ++t) {
    for (int x = 0; x < L; ++x) {
      const int n = site(x, t);
      (*fwd)[kDims * n + 0] = site((x + 1) % L, t);
      (*bwd)[kDims * n + 0] = site((x + L - 1) % L, t);
      (*fwd)[kDims * n + 1] = site(x, (t + 1) % T);
      (*bwd)[kDims * n + 1] = site(x, (t + T - 1) % T);
    }
  }
  fwd_ = std::move(fwd);
  bwd_ = std::move(bwd);
}

int LatticeGeom::site(int x, int t) const {
  x %= L_;
  t %= T_;
  if (x < 0) x += L_;
  if (t < 0) t += T_;
  return t * L_ + x;
}

Real wrap_angle(Real a) {
  // std::remainder is exact, result lies in [-pi, pi].
  Real r = std::remainder(a, kTwoPi);
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

GaugeField::GaugeField(const LatticeGeom& geom) : geom_(geom), q_(LinkVector::Zero(geom.n_links())) {}

GaugeField::GaugeField(const LatticeGeom& geom, LinkVector angles) : geom_(geom), q_(std::move(angles)) {
  if (q_.size() != geom_.n_links()) {
    throw std::invalid_argument("gauge field size does not match lattice");
  }
  for (Eigen::Index i = 0; i < q_.size(); ++i) q_[i] = wrap_angle(q_[i]);
}

Eigen::Matrix<Complex, Eigen::Dynamic, 1> GaugeField::links() const {
  Eigen::Matrix<Complex, Eigen::Dynamic, 1> u(q_.size());
  for (Eigen::Index i = 0; i < q_.size(); ++i) u[i] = std::polar(Real{1}, q_[i]);
  return u;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5c4a1u};
  engine_.seed(seq);
}

MomentumField sample_momenta(RngStream& rng, const LatticeGeom& geom) {
  MomentumField p(geom.n_links());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = rng.normal();
  return p;
}

GaugeField random_gauge_field(RngStream& rng, const LatticeGeom& geom, Real amplitude) {
  LinkVector q(geom.n_links());
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = amplitude * (2 * rng.uniform() - 1);
  return GaugeField(geom, std::move(q));
}

void exp_update_links_inplace(GaugeField& U, const MomentumField& P, Real h) {
  const LatticeGeom& g = U.geom();
  if (P.size() != g.n_links()) throw std::invalid_argument("momentum field size does not match lattice");
  for (int n = 0; n < g.volume(); ++n) {
    for (int mu = 0; mu < kDims; ++mu) {
      U.set_angle(n, mu, U.angle(n, mu) + h * P[LatticeGeom::link(n, mu)]);
    }
  }
}

GaugeField exp_update_links(const GaugeField& U, const MomentumField& P, Real h) {
  GaugeField out = U;
  exp_update_links_inplace(out, P, h);
  return out;
}

void shift_momenta_inplace(MomentumField& P, const ForceField& F, Real h) {
  if (P.size() != F.size()) {
    throw std::invalid_argument("shift_momenta: momentum has " + std::to_string(P.size()) +
                                " links, force has " + std::to_string(F.size()));
  }
  P -= h * F;
}

MomentumField shift_momenta(const MomentumField& P, const ForceField& F, Real h) {
  MomentumField out = P;
  shift_momenta_inplace(out, F, h);
  return out;
}

Real kinetic_energy(const MomentumField& P) { return 0.5 * P.squaredNorm(); }

std::string format_real(Real v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string gauge_file_header_line(const GaugeFileHeader& h) {
  std::ostringstream os;
  os << "schwinger-u1 v1 " << h.L << ' ' << h.T << ' ' << format_real(h.beta) << ' ' << format_real(h.m0)
     << ' ' << h.seed;
  return os.str();
}

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

Real parse_real(const std::string& s, const std::string& what) {
  Real v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::runtime_error("gauge file: malformed " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

void write_gauge_file(const std::string& path, const GaugeField& U, const GaugeFileHeader& header) {
  if (header.L != U.geom().L() || header.T != U.geom().T()) {
    throw std::invalid_argument("gauge file header extents do not match the field");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << gauge_file_header_line(header) << '\n';
  for (Eigen::Index i = 0; i < U.angles().size(); ++i) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(U.angles()[i]));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

GaugeFile read_gauge_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open gauge file '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::string magic, version, beta, m0;
  GaugeFileHeader h;
  if (!(hs >> magic >> version >> h.L >> h.T >> beta >> m0 >> h.seed) || magic != "schwinger-u1" ||
      version != "v1") {
    throw std::runtime_error("gauge file '" + path + "': bad header '" + line + "'");
  }
  h.beta = parse_real(beta, "beta");
  h.m0 = parse_real(m0, "m0");
  LatticeGeom geom(h.L, h.T);
  LinkVector q(geom.n_links());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    char bytes[8];
    if (!in.read(bytes, 8)) throw std::runtime_error("gauge file '" + path + "': truncated payload");
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    q[i] = std::bit_cast<Real>(to_little_endian(bits));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("gauge file '" + path + "': trailing bytes after payload");
  }
  // Stored angles are already wrapped; wrapping is the identity on [-pi, pi).
  return GaugeFile{h, GaugeField(geom, std::move(q))};
}

}  // namespace schwinger
