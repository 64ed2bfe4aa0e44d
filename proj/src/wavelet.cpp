#include "adm3/wavelet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

#include "adm3/dual.hpp"
#include "fft.hpp"

namespace adm3 {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------- 1-D bump

// b^(k)(t) = p_k(t) u^(-2k) exp(-s/u) with u = 1 - t^2;
// p_{k+1} = p_k' u^2 + 4k t u p_k - 2 s t p_k.
class BumpDerivs {
 public:
  BumpDerivs(double s, int kmax) : s_(s) {
    p_.push_back({1.0});
    for (int k = 0; k < kmax; ++k) p_.push_back(next(p_.back(), k));
  }

  double operator()(int k, double t) const {
    if (std::abs(t) >= 1.0) return 0.0;
    const double u = 1.0 - t * t;
    const auto& q = p_[static_cast<std::size_t>(k)];
    double poly = 0.0;
    for (auto it = q.rbegin(); it != q.rend(); ++it) poly = poly * t + *it;
    return poly * std::exp(-s_ / u - 2.0 * k * std::log(u));
  }

 private:
  std::vector<double> next(const std::vector<double>& q, int k) const {
    std::vector<double> out(q.size() + 3, 0.0);
    for (std::size_t i = 1; i < q.size(); ++i) {
      const double d = static_cast<double>(i) * q[i];
      out[i - 1] += d;
      out[i + 1] -= 2.0 * d;
      out[i + 3] += d;
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
      out[i + 1] += (4.0 * k - 2.0 * s_) * q[i];
      out[i + 3] -= 4.0 * k * q[i];
    }
    return out;
  }

  double s_;
  std::vector<std::vector<double>> p_;
};

double bump1(double s, double t) { return std::abs(t) >= 1.0 ? 0.0 : std::exp(-s / (1.0 - t * t)); }

// b^ on [0, 256] with step 1/256 from a trapezoid sum (spectrally accurate for
// a compactly supported smooth integrand), Hermite-interpolated.
struct BumpTable {
  static constexpr int kPerUnit = 256;
  static constexpr double kEtaMax = 256.0;
  std::vector<double> v, d;

  explicit BumpTable(double s) {
    const int per_t = 1024;  // samples per unit t
    const double dt = 1.0 / per_t;
    const int L = kPerUnit * per_t;  // period 256 in t gives eta step 1/256
    std::vector<cplx> a(static_cast<std::size_t>(L)), b(static_cast<std::size_t>(L));
    for (int j = -per_t + 1; j < per_t; ++j) {
      const double t = j * dt;
      const double bv = bump1(s, t);
      const auto idx = static_cast<std::size_t>((j + L) % L);
      a[idx] = bv;
      b[idx] = t * bv;
    }
    detail::Fft fft({L});
    fft.forward(a.data());
    fft.forward(b.data());
    const int count = static_cast<int>(kEtaMax) * kPerUnit + 1;
    v.resize(static_cast<std::size_t>(count));
    d.resize(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      v[static_cast<std::size_t>(k)] = dt * a[static_cast<std::size_t>(k)].real();
      d[static_cast<std::size_t>(k)] = kTwoPi * dt * b[static_cast<std::size_t>(k)].imag();
    }
  }

  double eval(double eta) const {
    const double x = std::abs(eta) * kPerUnit;
    if (!(x < static_cast<double>(v.size() - 1))) return 0.0;
    const auto i = static_cast<std::size_t>(x);
    const double f = x - static_cast<double>(i), f2 = f * f, f3 = f2 * f;
    const double h = 1.0 / kPerUnit;
    return (2 * f3 - 3 * f2 + 1) * v[i] + (f3 - 2 * f2 + f) * h * d[i] + (-2 * f3 + 3 * f2) * v[i + 1] +
           (f3 - f2) * h * d[i + 1];
  }
};

std::shared_ptr<const BumpTable> bump_table(double s) {
  static std::mutex m;
  static std::map<double, std::shared_ptr<const BumpTable>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(s);
  if (it != cache.end()) return it->second;
  auto t = std::make_shared<const BumpTable>(s);
  cache.emplace(s, t);
  return t;
}

// ---------------------------------------------------------------- spectra

struct Term {
  double coef;
  std::array<int, 3> k;
};

std::vector<Term> pattern_terms(const VanishingPattern& p) {
  if (p.r == 0) return {{1.0, {0, 0, 0}}};
  if (p.kind == VanishingPattern::Kind::Axes) {
    Term t{1.0, {0, 0, 0}};
    for (int a : p.axes) t.k[static_cast<std::size_t>(a - 1)] = p.r;
    return {t};
  }
  const int m = (p.r + 1) / 2;
  std::vector<Term> out;
  auto fact = [](int n) { return std::tgamma(n + 1.0); };
  for (int k0 = 0; k0 <= m; ++k0)
    for (int k1 = 0; k0 + k1 <= m; ++k1) {
      const int k2 = m - k0 - k1;
      out.push_back({fact(m) / (fact(k0) * fact(k1) * fact(k2)), {2 * k0, 2 * k1, 2 * k2}});
    }
  return out;
}

cplx ipow(double x, int k) {
  // (i x)^k
  cplx r = 1.0;
  for (int j = 0; j < k; ++j) r *= cplx(0.0, x);
  return r;
}

class BumpSpectrum final : public SpectrumModel {
 public:
  BumpSpectrum(double A, Vec3 R, double s, std::vector<Term> terms)
      : A_(A), R_(R), table_(bump_table(s)), terms_(std::move(terms)), derivs_(s, max_order(terms_)) {}

  double value(const Vec3& x) const override {
    double v = 0.0;
    for (const Term& t : terms_) {
      double m = t.coef;
      for (int a = 0; a < 3; ++a) {
        const int k = t.k[static_cast<std::size_t>(a)];
        m *= std::pow(R_[a], -k) * derivs_(k, x[a] / R_[a]);
      }
      v += m;
    }
    return A_ * v;
  }

  cplx eval(const Vec3& xi) const override {
    double env = A_;
    for (int a = 0; a < 3; ++a) env *= R_[a] * table_->eval(R_[a] * xi[a]);
    if (env == 0.0) return 0.0;
    cplx poly = 0.0;
    for (const Term& t : terms_) {
      cplx m = t.coef;
      for (int a = 0; a < 3; ++a) m *= ipow(kTwoPi * xi[a], t.k[static_cast<std::size_t>(a)]);
      poly += m;
    }
    return env * poly;
  }

 private:
  double A_;
  Vec3 R_;
  std::shared_ptr<const BumpTable> table_;
  std::vector<Term> terms_;
  BumpDerivs derivs_;

  static int max_order(const std::vector<Term>& terms) {
    int k = 0;
    for (const Term& t : terms) k = std::max({k, t.k[0], t.k[1], t.k[2]});
    return k;
  }
};

class ShellSpectrum final : public SpectrumModel {
 public:
  ShellSpectrum(double A, double mid, double half, double s) : A_(A), mid_(mid), half_(half), s_(s) {}
  cplx eval(const Vec3& xi) const override { return A_ * bump1(s_, (norm(xi) - mid_) / half_); }

 private:
  double A_, mid_, half_, s_;
};

class ScaledSpectrum final : public SpectrumModel {
 public:
  ScaledSpectrum(std::shared_ptr<const SpectrumModel> inner, double alpha) : inner_(std::move(inner)), alpha_(alpha) {}
  cplx eval(const Vec3& xi) const override { return alpha_ * inner_->eval(xi); }
  double value(const Vec3& x) const override { return alpha_ * inner_->value(x); }

 private:
  std::shared_ptr<const SpectrumModel> inner_;
  double alpha_;
};

struct IndexBox {
  std::array<int, 3> lo, hi;
  int extent(int a) const { return hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)] + 1; }
};

IndexBox support_box(const Grid3& g, const std::vector<double>& s) {
  IndexBox b{{g.n[0], g.n[1], g.n[2]}, {-1, -1, -1}};
  for (int k = 0; k < g.n[2]; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        if (s[g.index(i, j, k)] == 0.0) continue;
        const int ix[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          b.lo[static_cast<std::size_t>(a)] = std::min(b.lo[static_cast<std::size_t>(a)], ix[a]);
          b.hi[static_cast<std::size_t>(a)] = std::max(b.hi[static_cast<std::size_t>(a)], ix[a]);
        }
      }
  if (b.hi[0] < 0) throw std::invalid_argument("wavelet samples are identically zero");
  return b;
}

Vec3 box_center(const Grid3& g, const IndexBox& b) {
  Vec3 c;
  for (int a = 0; a < 3; ++a)
    c[a] = g.origin[a] + 0.5 * (b.lo[static_cast<std::size_t>(a)] + b.hi[static_cast<std::size_t>(a)]) * g.spacing[a];
  return c;
}

// Spectrum from the DFT of the support box zero-padded 4x, with the phase
// referred to the center and Catmull-Rom tricubic interpolation.
class SampledSpectrum final : public SpectrumModel {
 public:
  SampledSpectrum(const Grid3& g, const std::vector<double>& s, const Vec3& center) : h_(g.spacing) {
    const IndexBox b = support_box(g, s);
    std::size_t total = 1;
    for (int a = 0; a < 3; ++a) {
      m_[static_cast<std::size_t>(a)] = 4 * b.extent(a);
      total *= static_cast<std::size_t>(m_[static_cast<std::size_t>(a)]);
    }
    if (total > (std::size_t(1) << 25)) throw std::length_error("wavelet support too large for the sampled spectrum");
    std::vector<cplx> x(total);
    for (int k = b.lo[2]; k <= b.hi[2]; ++k)
      for (int j = b.lo[1]; j <= b.hi[1]; ++j)
        for (int i = b.lo[0]; i <= b.hi[0]; ++i)
          x[lin(i - b.lo[0], j - b.lo[1], k - b.lo[2])] = s[g.index(i, j, k)];
    detail::Fft fft({m_[2], m_[1], m_[0]});
    fft.forward(x.data());
    const double cell = g.cell_volume();
    Vec3 shift;  // position of the first box sample relative to the center
    for (int a = 0; a < 3; ++a)
      shift[a] = g.origin[a] + b.lo[static_cast<std::size_t>(a)] * g.spacing[a] - center[a];
    v_.resize(total);
    for (int k = 0; k < m_[2]; ++k)
      for (int j = 0; j < m_[1]; ++j)
        for (int i = 0; i < m_[0]; ++i) {
          const int ix[3] = {i, j, k};
          double ph = 0.0;
          for (int a = 0; a < 3; ++a) ph += shift[a] * freq(a, ix[a]);
          v_[lin(i, j, k)] = cell * x[lin(i, j, k)] * std::polar(1.0, -kTwoPi * ph);
        }
  }

  cplx eval(const Vec3& xi) const override {
    std::array<int, 3> base{};
    std::array<std::array<double, 4>, 3> w{};
    for (int a = 0; a < 3; ++a) {
      if (std::abs(xi[a]) * h_[a] > 0.5) return 0.0;
      const double u = xi[a] * m_[static_cast<std::size_t>(a)] * h_[a];
      const double fl = std::floor(u);
      const double f = u - fl, f2 = f * f, f3 = f2 * f;
      base[static_cast<std::size_t>(a)] = static_cast<int>(fl) - 1;
      w[static_cast<std::size_t>(a)] = {0.5 * (-f3 + 2 * f2 - f), 0.5 * (3 * f3 - 5 * f2 + 2),
                                        0.5 * (-3 * f3 + 4 * f2 + f), 0.5 * (f3 - f2)};
    }
    cplx acc = 0.0;
    for (int c = 0; c < 4; ++c) {
      const int k = wrap(2, base[2] + c);
      for (int b = 0; b < 4; ++b) {
        const int j = wrap(1, base[1] + b);
        const double wbc = w[1][static_cast<std::size_t>(b)] * w[2][static_cast<std::size_t>(c)];
        for (int a = 0; a < 4; ++a) acc += wbc * w[0][static_cast<std::size_t>(a)] * v_[lin(wrap(0, base[0] + a), j, k)];
      }
    }
    return acc;
  }

 private:
  std::size_t lin(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(m_[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(m_[1]) * k);
  }
  int wrap(int a, int i) const {
    const int m = m_[static_cast<std::size_t>(a)];
    return ((i % m) + m) % m;
  }
  double freq(int a, int i) const {
    const int m = m_[static_cast<std::size_t>(a)];
    const int k = i < (m + 1) / 2 ? i : i - m;
    return k / (m * h_[a]);
  }

  Vec3 h_;
  std::array<int, 3> m_{};
  std::vector<cplx> v_;
};

// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5)), dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = z;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    x[static_cast<std::size_t>(i)] = mid - half * z;
    x[static_cast<std::size_t>(n - 1 - i)] = mid + half * z;
    w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(n - 1 - i)] = half * wt;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

double SpectrumModel::value(const Vec3&) const { return std::numeric_limits<double>::quiet_NaN(); }

// ---------------------------------------------------------------- patterns

void VanishingPattern::validate() const {
  if (r < 0) throw std::invalid_argument("vanishing order must be >= 0");
  if (kind == Kind::Origin) {
    if (!axes.empty()) throw std::invalid_argument("origin pattern takes no axes");
    return;
  }
  std::array<bool, 3> seen{};
  for (int a : axes) {
    if (a < 1 || a > 3) throw std::invalid_argument("pattern axis must be 1, 2 or 3");
    if (seen[static_cast<std::size_t>(a - 1)]) throw std::invalid_argument("duplicate pattern axis");
    seen[static_cast<std::size_t>(a - 1)] = true;
  }
  if (axes.empty() && r > 0) throw std::invalid_argument("axes pattern needs at least one axis");
}

std::string to_string(const VanishingPattern& p) {
  std::ostringstream os;
  if (p.kind == VanishingPattern::Kind::Origin) {
    os << "origin";
  } else {
    os << "axes:";
    for (std::size_t i = 0; i < p.axes.size(); ++i) os << (i ? "," : "") << p.axes[i];
  }
  os << "/r=" << p.r;
  return os.str();
}

VanishingPattern parse_pattern(const std::string& s) {
  const auto slash = s.find("/r=");
  if (slash == std::string::npos) throw std::invalid_argument("pattern needs '/r=<order>': " + s);
  VanishingPattern p;
  const std::string head = s.substr(0, slash), order = s.substr(slash + 3);
  std::size_t used = 0;
  try {
    p.r = std::stoi(order, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != order.size()) throw std::invalid_argument("bad pattern order: " + s);
  if (head == "origin") {
    p.kind = VanishingPattern::Kind::Origin;
  } else if (head.rfind("axes:", 0) == 0) {
    std::istringstream is(head.substr(5));
    std::string tok;
    while (std::getline(is, tok, ',')) {
      if (tok.size() != 1 || tok[0] < '1' || tok[0] > '3') throw std::invalid_argument("bad pattern axis: " + s);
      p.axes.push_back(tok[0] - '0');
    }
  } else {
    throw std::invalid_argument("pattern must start with 'axes:' or 'origin': " + s);
  }
  p.validate();
  return p;
}

VanishingPattern catalogue_pattern(Family f, int r) {
  VanishingPattern p;
  p.r = r;
  std::array<bool, 3> hit{};
  for (const auto& comp : orbit_chart(f).oc_components) {
    if (comp.size() == 3) {
      p.kind = VanishingPattern::Kind::Origin;
      p.axes.clear();
      return p;
    }
    // a plane through the component suffices: its first axis unless covered
    bool covered = false;
    for (int a : comp) covered = covered || hit[static_cast<std::size_t>(a)];
    if (!covered) hit[static_cast<std::size_t>(comp.front())] = true;
  }
  for (int a = 0; a < 3; ++a)
    if (hit[static_cast<std::size_t>(a)]) p.axes.push_back(a + 1);
  p.validate();
  return p;
}

// ---------------------------------------------------------------- wavelets

double Wavelet::norm() const {
  double s = 0.0;
  for (double v : samples) s += v * v;
  return std::sqrt(s * grid.cell_volume());
}

void Wavelet::validate() const {
  grid.validate();
  pattern.validate();
  if (samples.size() != grid.size()) throw std::invalid_argument("wavelet size does not match its grid");
  double s = 0.0;
  for (double v : samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("wavelet has non-finite samples");
    s += v * v;
  }
  if (!(s > 0)) throw std::invalid_argument("wavelet samples are identically zero");
  if (!model) throw std::invalid_argument("wavelet has no spectrum model");
}

BumpSpec default_bump(const Grid3& grid) {
  BumpSpec b;
  const Vec3 e = grid.extent();
  for (int a = 0; a < 3; ++a) {
    b.radius[a] = 0.3 * e[a];
    b.center[a] = grid.origin[a] + (grid.n[a] / 2) * grid.spacing[a];
  }
  b.smoothness = 12.0;
  return b;
}

Wavelet make_vanishing_wavelet(const VanishingPattern& pattern, const Grid3& grid, const BumpSpec& bump) {
  pattern.validate();
  grid.validate();
  if (!(bump.smoothness > 0) || !std::isfinite(bump.smoothness))
    throw std::invalid_argument("bump smoothness must be positive");
  for (int a = 0; a < 3; ++a) {
    if (!(bump.radius[a] > 0) || !std::isfinite(bump.radius[a])) throw std::invalid_argument("bump radius must be positive");
    const double lo = grid.origin[a], hi = grid.origin[a] + (grid.n[a] - 1) * grid.spacing[a];
    if (bump.center[a] - bump.radius[a] < lo || bump.center[a] + bump.radius[a] > hi)
      throw std::invalid_argument("bump support exceeds the grid extent");
  }
  const auto terms = pattern_terms(pattern);
  int kmax = 0;
  for (const Term& t : terms) kmax = std::max({kmax, t.k[0], t.k[1], t.k[2]});
  const BumpDerivs b(bump.smoothness, kmax);

  // D[a][k][i] = d^k/dx^k b((x_i - c_a) / R_a)
  std::array<std::vector<std::vector<double>>, 3> D;
  double gsq = grid.cell_volume();
  for (int a = 0; a < 3; ++a) {
    auto& Da = D[static_cast<std::size_t>(a)];
    Da.assign(static_cast<std::size_t>(kmax + 1), std::vector<double>(static_cast<std::size_t>(grid.n[a])));
    for (int k = 0; k <= kmax; ++k)
      for (int i = 0; i < grid.n[a]; ++i) {
        const double t = (grid.origin[a] + i * grid.spacing[a] - bump.center[a]) / bump.radius[a];
        Da[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = std::pow(bump.radius[a], -k) * b(k, t);
      }
    double s = 0.0;
    for (double v : Da[0]) s += v * v;
    gsq *= s;
  }
  const double A = 1.0 / std::sqrt(gsq);

  Wavelet w;
  w.grid = grid;
  w.pattern = pattern;
  w.center = bump.center;
  w.radius = bump.radius;
  w.closed_form_spectrum = true;
  w.samples.assign(grid.size(), 0.0);
  for (const Term& t : terms) {
    const auto& X = D[0][static_cast<std::size_t>(t.k[0])];
    const auto& Y = D[1][static_cast<std::size_t>(t.k[1])];
    const auto& Z = D[2][static_cast<std::size_t>(t.k[2])];
    for (int k = 0; k < grid.n[2]; ++k)
      for (int j = 0; j < grid.n[1]; ++j) {
        const double yz = A * t.coef * Y[static_cast<std::size_t>(j)] * Z[static_cast<std::size_t>(k)];
        if (yz == 0.0) continue;
        double* row = &w.samples[grid.index(0, j, k)];
        for (int i = 0; i < grid.n[0]; ++i) row[i] += yz * X[static_cast<std::size_t>(i)];
      }
  }
  double nsq = 0.0;
  for (double v : w.samples) nsq += v * v;
  const double unit = 1.0 / std::sqrt(nsq * grid.cell_volume());
  for (double& v : w.samples) v *= unit;
  std::ostringstream id;
  id << (pattern.r == 0 ? "bump" : "bump-deriv") << "(s=" << fmt(bump.smoothness) << ",R=" << fmt(bump.radius[0])
     << "," << fmt(bump.radius[1]) << "," << fmt(bump.radius[2]) << ")";
  w.generator_id = id.str();
  w.model = std::make_shared<BumpSpectrum>(A * unit, bump.radius, bump.smoothness, terms);
  return w;
}

Wavelet make_vanishing_wavelet(const VanishingPattern& pattern, const Grid3& grid) {
  return make_vanishing_wavelet(pattern, grid, default_bump(grid));
}

Volume make_bump(const Grid3& grid, const BumpSpec& spec) {
  Wavelet w = make_vanishing_wavelet(VanishingPattern{}, grid, spec);
  Volume v(grid);
  v.samples = std::move(w.samples);
  return v;
}

Wavelet make_shell_wavelet(const Grid3& grid, double lo, double hi, double smoothness) {
  grid.validate();
  if (!(lo > 0) || !(hi > lo) || !(smoothness > 0)) throw std::invalid_argument("shell needs 0 < lo < hi, smoothness > 0");
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  std::vector<double> x, wt;
  gauss_legendre(256, lo, hi, x, wt);
  std::vector<double> S(x.size());
  double I2 = 0.0;
  for (std::size_t q = 0; q < x.size(); ++q) {
    S[q] = bump1(smoothness, (x[q] - mid) / half);
    I2 += wt[q] * x[q] * x[q] * S[q] * S[q];
  }
  const double A = 1.0 / std::sqrt(4 * kPi * I2);

  Wavelet w;
  w.grid = grid;
  w.pattern = VanishingPattern{VanishingPattern::Kind::Origin, {}, 0};
  w.closed_form_spectrum = true;
  for (int a = 0; a < 3; ++a) {
    w.center[a] = grid.origin[a] + (grid.n[a] / 2) * grid.spacing[a];
    w.radius[a] = 0.5 * grid.extent()[a];
  }
  // radial inverse transform, cached per distance
  std::map<double, double> by_r;
  auto radial = [&](double r) {
    auto it = by_r.find(r);
    if (it != by_r.end()) return it->second;
    double v = 0.0;
    if (r < 1e-14) {
      for (std::size_t q = 0; q < x.size(); ++q) v += wt[q] * x[q] * x[q] * S[q];
      v *= 4 * kPi;
    } else {
      for (std::size_t q = 0; q < x.size(); ++q) v += wt[q] * x[q] * S[q] * std::sin(kTwoPi * x[q] * r);
      v *= 2.0 / r;
    }
    v *= A;
    by_r.emplace(r, v);
    return v;
  };
  w.samples.resize(grid.size());
  for (int k = 0; k < grid.n[2]; ++k)
    for (int j = 0; j < grid.n[1]; ++j)
      for (int i = 0; i < grid.n[0]; ++i)
        w.samples[grid.index(i, j, k)] = radial(norm(grid.point(i, j, k) - w.center));
  w.generator_id = "shell(lo=" + fmt(lo) + ",hi=" + fmt(hi) + ",s=" + fmt(smoothness) + ")";
  w.model = std::make_shared<ShellSpectrum>(A, mid, half, smoothness);
  return w;
}

Wavelet wavelet_from_samples(const Grid3& grid, std::vector<double> samples, const VanishingPattern& pattern,
                             std::string generator_id) {
  Wavelet w;
  w.grid = grid;
  w.samples = std::move(samples);
  w.pattern = pattern;
  w.generator_id = std::move(generator_id);
  w.closed_form_spectrum = false;
  grid.validate();
  if (w.samples.size() != grid.size()) throw std::invalid_argument("wavelet size does not match its grid");
  const IndexBox b = support_box(grid, w.samples);
  w.center = box_center(grid, b);
  for (int a = 0; a < 3; ++a) w.radius[a] = 0.5 * b.extent(a) * grid.spacing[a];
  w.model = std::make_shared<SampledSpectrum>(grid, w.samples, w.center);
  w.validate();
  return w;
}

Wavelet scaled(const Wavelet& w, double alpha) {
  Wavelet out = w;
  for (double& v : out.samples) v *= alpha;
  out.model = std::make_shared<ScaledSpectrum>(w.model, alpha);
  return out;
}

double bump_hat(double eta, double smoothness) { return bump_table(smoothness)->eval(eta); }

// ---------------------------------------------------------------- moments

MomentCheck verify_vanishing_moments(const Wavelet& psi, const VanishingPattern& pattern, double tol) {
  psi.validate();
  pattern.validate();
  const Grid3& g = psi.grid;
  const IndexBox b = support_box(g, psi.samples);
  const Vec3 c = box_center(g, b);
  const double cell = g.cell_volume();
  std::array<int, 3> m{};
  Vec3 L;
  for (int a = 0; a < 3; ++a) {
    m[static_cast<std::size_t>(a)] = b.extent(a);
    L[a] = std::max(0.5 * (b.extent(a) - 1) * g.spacing[a], g.spacing[a]);
  }
  auto sample = [&](int i, int j, int k) { return psi.samples[g.index(b.lo[0] + i, b.lo[1] + j, b.lo[2] + k)]; };
  // scaled coordinate of box index i on axis a
  auto xs = [&](int a, int i) {
    return (g.origin[a] + (b.lo[static_cast<std::size_t>(a)] + i) * g.spacing[a] - c[a]) / L[a];
  };

  MomentCheck out;
  {
    const int P0 = 2 * m[0], P1 = 2 * m[1], P2 = 2 * m[2];
    std::vector<cplx> x(static_cast<std::size_t>(P0) * P1 * P2);
    for (int k = 0; k < m[2]; ++k)
      for (int j = 0; j < m[1]; ++j)
        for (int i = 0; i < m[0]; ++i)
          x[static_cast<std::size_t>(i) + static_cast<std::size_t>(P0) * (j + static_cast<std::size_t>(P1) * k)] =
              sample(i, j, k);
    detail::Fft({P2, P1, P0}).forward(x.data());
    for (const cplx& v : x) out.spectrum_max = std::max(out.spectrum_max, std::abs(v));
    out.spectrum_max *= cell;
  }
  auto record = [&](double res, const std::string& where) {
    const double rel = res / out.spectrum_max;
    if (rel > out.worst || out.worst_at.empty()) {
      out.worst = rel;
      out.worst_at = where;
    }
  };

  if (pattern.kind == VanishingPattern::Kind::Axes) {
    for (int ax : pattern.axes) {
      const int a = ax - 1, p = (a + 1) % 3, q = (a + 2) % 3;
      const int Pp = 2 * m[static_cast<std::size_t>(p)], Pq = 2 * m[static_cast<std::size_t>(q)];
      detail::Fft fft({Pq, Pp});
      for (int order = 0; order < pattern.r; ++order) {
        std::vector<cplx> y(static_cast<std::size_t>(Pp) * Pq);
        std::array<int, 3> ix{};
        for (ix[2] = 0; ix[2] < m[2]; ++ix[2])
          for (ix[1] = 0; ix[1] < m[1]; ++ix[1])
            for (ix[0] = 0; ix[0] < m[0]; ++ix[0]) {
              const double v = sample(ix[0], ix[1], ix[2]);
              if (v == 0.0) continue;
              const double wgt = std::pow(xs(a, ix[static_cast<std::size_t>(a)]), order);
              y[static_cast<std::size_t>(ix[static_cast<std::size_t>(p)]) +
                static_cast<std::size_t>(Pp) * static_cast<std::size_t>(ix[static_cast<std::size_t>(q)])] += wgt * v;
            }
        fft.forward(y.data());
        double res = 0.0;
        for (const cplx& v : y) res = std::max(res, std::abs(v));
        record(res * cell, "axis " + std::to_string(ax) + " order " + std::to_string(order));
      }
    }
  } else {
    for (int a0 = 0; a0 < pattern.r; ++a0)
      for (int a1 = 0; a0 + a1 < pattern.r; ++a1)
        for (int a2 = 0; a0 + a1 + a2 < pattern.r; ++a2) {
          double s = 0.0;
          for (int k = 0; k < m[2]; ++k)
            for (int j = 0; j < m[1]; ++j)
              for (int i = 0; i < m[0]; ++i)
                s += std::pow(xs(0, i), a0) * std::pow(xs(1, j), a1) * std::pow(xs(2, k), a2) * sample(i, j, k);
          record(std::abs(s) * cell, "origin alpha (" + std::to_string(a0) + "," + std::to_string(a1) + "," +
                                         std::to_string(a2) + ")");
        }
  }
  out.pass = out.worst <= tol;
  if (out.worst_at.empty()) out.worst_at = "none";
  return out;
}

// ---------------------------------------------------------------- decay

DecayReport decay_slope(const Wavelet& psi, Family f, int n_rays, std::uint64_t seed) {
  if (n_rays < 1) throw std::invalid_argument("decay_slope needs n_rays >= 1");
  const auto& ch = orbit_chart(f);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  std::normal_distribution<double> N(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double fs = 0.1 / std::max({psi.radius[0], psi.radius[1], psi.radius[2]});
  const int n_pts = 8;
  DecayReport rep;
  rep.min_slope = INFINITY;
  int attempts = 0;
  while (static_cast<int>(rep.slopes.size()) < n_rays) {
    if (++attempts > 20 * n_rays) throw std::runtime_error("decay_slope: spectrum vanishes on every ray");
    const auto& comp = ch.oc_components[rep.slopes.size() % ch.oc_components.size()];
    Vec3 base, dir;
    std::array<bool, 3> in{};
    for (int a : comp) in[static_cast<std::size_t>(a)] = true;
    double dn = 0.0;
    for (int a = 0; a < 3; ++a) {
      if (in[static_cast<std::size_t>(a)]) {
        dir[a] = N(rng);
        dn += dir[a] * dir[a];
      } else {
        base[a] = (coin(rng) ? 1.0 : -1.0) * fs * std::pow(10.0, U(rng));
      }
    }
    dir = dir * (1.0 / std::sqrt(dn));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    bool ok = true;
    for (int j = 0; j < n_pts; ++j) {
      const double t = fs * std::pow(10.0, -1.0 - 3.0 * j / (n_pts - 1));
      const Vec3 xi = base + dir * t;
      const double v = std::abs(psi.spectrum(xi));
      const double A = envelope_A(f, xi);
      if (!(v > 0) || !(A > 0)) {
        ok = false;
        break;
      }
      const double X = std::log(A), Y = std::log(v);
      sx += X;
      sy += Y;
      sxx += X * X;
      sxy += X * Y;
    }
    if (!ok) continue;
    const double slope = (n_pts * sxy - sx * sy) / (n_pts * sxx - sx * sx);
    rep.slopes.push_back(slope);
    rep.min_slope = std::min(rep.min_slope, slope);
  }
  return rep;
}

// ---------------------------------------------------------------- admissibility

namespace {

// Genz-Malik degree 7 rule with embedded degree 5 error estimate, n = 3.
struct GMResult {
  double value, error;
  int split;
};

constexpr double kL2 = 0.35856858280031809;  // sqrt(9/70)
constexpr double kL4 = 0.94868329805051377;  // sqrt(9/10)
constexpr double kL5 = 0.68824720161168529;  // sqrt(9/19)

template <class F>
GMResult genz_malik(const F& f, const std::array<double, 3>& lo, const std::array<double, 3>& hi) {
  Vec3 c, h;
  double vol = 1.0;
  for (int a = 0; a < 3; ++a) {
    c[a] = 0.5 * (lo[static_cast<std::size_t>(a)] + hi[static_cast<std::size_t>(a)]);
    h[a] = 0.5 * (hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)]);
    vol *= 2 * h[a];
  }
  const double f0 = f(c);
  double s2 = 0, s3 = 0, s4 = 0, s5 = 0, best = -1;
  int split = 0;
  const double ratio = (kL2 * kL2) / (kL4 * kL4);
  for (int a = 0; a < 3; ++a) {
    Vec3 p = c, q = c;
    p[a] += kL2 * h[a];
    q[a] -= kL2 * h[a];
    const double a2 = f(p) + f(q);
    p = c;
    q = c;
    p[a] += kL4 * h[a];
    q[a] -= kL4 * h[a];
    const double a3 = f(p) + f(q);
    s2 += a2;
    s3 += a3;
    const double diff = std::abs(a2 - 2 * f0 - ratio * (a3 - 2 * f0));
    // ties (typically all zero off the support) go to the widest axis
    const bool tie = std::abs(diff - best) <= 1e-12 * best;
    if ((diff > best && !tie) || (tie && h[a] > h[split])) {
      best = std::max(best, diff);
      split = a;
    }
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      for (int sa = -1; sa <= 1; sa += 2)
        for (int sb = -1; sb <= 1; sb += 2) {
          Vec3 p = c;
          p[a] += sa * kL4 * h[a];
          p[b] += sb * kL4 * h[b];
          s4 += f(p);
        }
  for (int s = 0; s < 8; ++s) {
    Vec3 p = c;
    for (int a = 0; a < 3; ++a) p[a] += ((s >> a) & 1 ? 1 : -1) * kL5 * h[a];
    s5 += f(p);
  }
  const double n = 3.0;
  const double r7 = (12824 - 9120 * n + 400 * n * n) / 19683 * f0 + 980.0 / 6561 * s2 + (1820 - 400 * n) / 19683 * s3 +
                    200.0 / 19683 * s4 + 6859.0 / 19683 / 8 * s5;
  const double r5 = (729 - 950 * n + 50 * n * n) / 729 * f0 + 245.0 / 486 * s2 + (265 - 100 * n) / 1458 * s3 +
                    25.0 / 729 * s4;
  return {vol * r7, vol * std::abs(r7 - r5), split};
}

using CellKey = std::array<double, 6>;

struct Interval {
  double lo, hi;
  bool core() const { return lo < 0 && hi > 0; }
};

// (-B, -B/2), ..., (-2e, -e), (-e, e), (e, 2e), ..., (B/2, B)
std::vector<Interval> dyadic(double B, double e) {
  std::vector<Interval> pos;
  for (double x = e; x < B; x *= 2) pos.push_back({x, 2 * x});
  std::vector<Interval> out;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back({-it->hi, -it->lo});
  out.push_back({-e, e});
  out.insert(out.end(), pos.begin(), pos.end());
  return out;
}

}  // namespace

std::string to_string(AdmissibilityStatus s) {
  switch (s) {
    case AdmissibilityStatus::Converged: return "converged";
    case AdmissibilityStatus::Divergent: return "divergent";
    case AdmissibilityStatus::Unresolved: return "unresolved";
  }
  return "?";
}

AdmissibilityResult admissibility_constant(const Wavelet& psi, const FamilySpec& fam, QuadSpec spec) {
  psi.validate();
  if (!(spec.rel_tol > 0) || !(spec.divergence_factor > 1) || spec.max_levels < 2 || !(spec.cell_tol > 0))
    throw std::invalid_argument("bad quadrature spec");
  const auto& ch = orbit_chart(fam.id());
  std::array<bool, 3> refine{};
  for (const auto& comp : ch.oc_components)
    for (int a : comp) refine[static_cast<std::size_t>(a)] = true;

  auto integrand = [&](const Vec3& xi) {
    const double a = std::norm(psi.spectrum(xi));
    if (a == 0.0) return 0.0;
    try {
      return a * phi(fam, xi);
    } catch (const NotInOpenOrbit&) {
      return 0.0;
    }
  };

  const double hmin = std::min({psi.grid.spacing[0], psi.grid.spacing[1], psi.grid.spacing[2]});
  const double rmax = std::max({psi.radius[0], psi.radius[1], psi.radius[2]});
  // core width: dyadic fraction of the box below 0.05 / R, so refinement starts
  // once the spectrum is resolved
  double B = 4.0 / hmin;
  double e0 = B;
  while (e0 > 0.05 / rmax) e0 *= 0.5;

  std::map<CellKey, double> cache;
  std::size_t evals = 0;
  bool budget_hit = false;

  // Integral over all cells of the current partition; new cells are integrated
  // adaptively until their summed error estimate is below cell_tol of the total.
  auto level_sum = [&](double e_ref, double* outer, double* err_out) {
    std::array<std::vector<Interval>, 3> iv;
    for (int a = 0; a < 3; ++a) iv[static_cast<std::size_t>(a)] = dyadic(B, refine[static_cast<std::size_t>(a)] ? e_ref : e0);
    struct Region {
      std::array<double, 3> lo, hi;
      GMResult r;
      std::size_t cell;
      bool operator<(const Region& o) const { return r.error < o.r.error; }
    };
    std::vector<CellKey> fresh;
    std::vector<double> fresh_val;
    std::priority_queue<Region> queue;
    double known = 0.0, fresh_sum = 0.0, fresh_err = 0.0, outer_sum = 0.0;
    std::vector<std::pair<CellKey, bool>> cells;
    for (const auto& x : iv[0])
      for (const auto& y : iv[1])
        for (const auto& z : iv[2]) {
          const Interval* ivs[3] = {&x, &y, &z};
          bool excluded = false;
          for (const auto& comp : ch.oc_components) {
            bool all = true;
            for (int a : comp) all = all && ivs[a]->core();
            excluded = excluded || all;
          }
          if (excluded) continue;
          const CellKey key{x.lo, x.hi, y.lo, y.hi, z.lo, z.hi};
          bool is_outer = false;
          for (int a = 0; a < 3; ++a) is_outer = is_outer || std::abs(ivs[a]->lo) == B || std::abs(ivs[a]->hi) == B;
          cells.emplace_back(key, is_outer);
          if (cache.count(key)) {
            known += cache[key];
            continue;
          }
          Region rg{{x.lo, y.lo, z.lo}, {x.hi, y.hi, z.hi}, {}, fresh.size()};
          rg.r = genz_malik(integrand, rg.lo, rg.hi);
          evals += 33;
          fresh.push_back(key);
          fresh_val.push_back(rg.r.value);
          fresh_sum += rg.r.value;
          fresh_err += rg.r.error;
          queue.push(rg);
        }
    while (!queue.empty() && fresh_err > spec.cell_tol * std::abs(known + fresh_sum)) {
      if (evals >= spec.max_evals) {
        budget_hit = true;
        break;
      }
      const Region top = queue.top();
      queue.pop();
      const auto s = static_cast<std::size_t>(top.r.split);
      const double mid = 0.5 * (top.lo[s] + top.hi[s]);
      Region a = top, b = top;
      a.hi[s] = mid;
      b.lo[s] = mid;
      a.r = genz_malik(integrand, a.lo, a.hi);
      b.r = genz_malik(integrand, b.lo, b.hi);
      evals += 66;
      const double dv = a.r.value + b.r.value - top.r.value;
      fresh_val[top.cell] += dv;
      fresh_sum += dv;
      fresh_err += a.r.error + b.r.error - top.r.error;
      queue.push(a);
      queue.push(b);
    }
    for (std::size_t i = 0; i < fresh.size(); ++i) cache[fresh[i]] = fresh_val[i];
    double total = 0.0;
    for (const auto& [key, is_outer] : cells) {
      const double v = cache[key];
      total += v;
      if (is_outer) outer_sum += v;
    }
    if (outer) *outer = outer_sum;
    if (err_out) *err_out = std::max(fresh_err, 0.0);
    return total;
  };

  AdmissibilityResult res;
  double I = 0.0, err = 0.0;
  for (int expand = 0;; ++expand) {
    double outer = 0.0;
    I = level_sum(e0, &outer, &err);
    if (outer <= 1e-4 * std::abs(I) || expand >= 6) break;
    B *= 2;
  }
  res.box = B;
  res.history.push_back({0, e0, I, err, evals});
  double prev_inc = 0.0;
  int growth_run = 0;
  for (int level = 1; level <= spec.max_levels; ++level) {
    const double e = e0 * std::ldexp(1.0, -level);
    const double J = level_sum(e, nullptr, &err);
    const double inc = J - I;
    res.history.push_back({level, e, J, err, evals});
    res.c_psi = J;
    res.rel_change = J != 0.0 ? std::abs(inc) / std::abs(J) : 0.0;
    if (level >= 2) {
      if (std::abs(inc) * spec.divergence_factor > std::abs(prev_inc) && std::abs(inc) > 0.0)
        ++growth_run;
      else
        growth_run = 0;
    }
    I = J;
    prev_inc = inc;
    if (growth_run >= 3) {
      res.status = AdmissibilityStatus::Divergent;
      return res;
    }
    if (level >= 2 && res.rel_change < spec.rel_tol) {
      res.status = budget_hit ? AdmissibilityStatus::Unresolved : AdmissibilityStatus::Converged;
      return res;
    }
  }
  res.status = AdmissibilityStatus::Unresolved;
  return res;
}

double orbit_measure_constant(const FamilySpec& fam) {
  const auto& coords = fam.coords();
  const std::size_t d = coords.size();
  const Vec3 xi0 = orbit_chart(fam.id()).base_points.front();
  ChartPoint u0;
  for (const auto& c : coords) {
    switch (c.kind) {
      case CoordKind::Log: u0.x.push_back(0.3); break;
      case CoordKind::Additive: u0.x.push_back(0.2); break;
      case CoordKind::Angle: u0.x.push_back(0.7); break;
      case CoordKind::Polar: u0.x.push_back(1.1); break;
    }
  }
  auto eta = [&](const ChartPoint& u) { return fam.chart_to_matrix(u).transpose() * xi0; };
  // columns of the Jacobian of u -> chart(u)^T xi0
  auto jac = [&](const ChartPoint& u) {
    std::vector<Vec3> cols;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(u.x[j]));
      ChartPoint lo = u, hi = u;
      lo.x[j] -= h;
      hi.x[j] += h;
      cols.push_back((eta(hi) - eta(lo)) * (1.0 / (2 * h)));
    }
    return cols;
  };
  auto det3 = [](const Vec3& a, const Vec3& b, const Vec3& c) { return std::abs(dot(a, cross(b, c))); };
  const Vec3 e0 = eta(u0);
  const auto cols = jac(u0);
  double rho = 0.0;
  if (d == 3) {
    rho = fam.haar_density(u0) / det3(cols[0], cols[1], cols[2]);
  } else {
    // one coordinate moves along the stabilizer and leaves h^T xi0 fixed
    std::size_t fiber = 0;
    double cmax = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      cmax = std::max(cmax, norm(cols[j]));
      if (norm(cols[j]) < norm(cols[fiber])) fiber = j;
    }
    if (norm(cols[fiber]) > 1e-6 * cmax || coords[fiber].kind != CoordKind::Angle)
      throw std::logic_error("orbit_measure_constant: no angular stabilizer coordinate");
    const int n = 64;
    for (int q = 0; q < n; ++q) {
      ChartPoint u = u0;
      u.x[fiber] = kTwoPi * q / n;
      const auto c = jac(u);
      std::vector<Vec3> rest;
      for (std::size_t j = 0; j < d; ++j)
        if (j != fiber) rest.push_back(c[j]);
      rho += fam.haar_density(u) / det3(rest[0], rest[1], rest[2]);
    }
    rho *= kTwoPi / n;
  }
  return rho / phi(fam, e0);
}

double control_weight(const FamilySpec& fam, const GroupElement& g) {
  return std::max(1.0, fam.delta_G_chart(g.point));
}

}  // namespace adm3
