#include "adm3/cwt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fft.hpp"

namespace adm3 {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_compatible(const Grid3& a, const Grid3& b) {
  for (int i = 0; i < 3; ++i)
    if (std::abs(a.spacing[i] - b.spacing[i]) > 1e-12 * a.spacing[i])
      throw IncompatibleGrid("volume and wavelet spacings differ");
}

// Frequencies of the DFT bins along one axis.
std::vector<double> bin_freqs(int n, double h) {
  std::vector<double> f(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) f[static_cast<std::size_t>(k)] = (k < (n + 1) / 2 ? k : k - n) / (n * h);
  return f;
}

struct FreqGrid {
  std::array<std::vector<double>, 3> f;
  explicit FreqGrid(const Grid3& g) {
    for (int a = 0; a < 3; ++a) f[static_cast<std::size_t>(a)] = bin_freqs(g.n[a], g.spacing[a]);
  }
};

// m_k = psi^(h^T xi_k) at the listed bins (all bins when idx is empty).
void node_multiplier(const Wavelet& psi, const Mat3& h, const Grid3& g, const FreqGrid& fg,
                     const std::vector<std::size_t>& idx, std::vector<cplx>& out) {
  const Mat3 ht = h.transpose();
  auto at = [&](std::size_t lin) {
    const auto i = lin % static_cast<std::size_t>(g.n[0]);
    const auto rest = lin / static_cast<std::size_t>(g.n[0]);
    const auto j = rest % static_cast<std::size_t>(g.n[1]);
    const auto k = rest / static_cast<std::size_t>(g.n[1]);
    return psi.spectrum(ht * Vec3(fg.f[0][i], fg.f[1][j], fg.f[2][k]));
  };
  if (idx.empty()) {
    out.resize(g.size());
    for (std::size_t q = 0; q < out.size(); ++q) out[q] = at(q);
  } else {
    out.resize(idx.size());
    for (std::size_t q = 0; q < idx.size(); ++q) out[q] = at(idx[q]);
  }
}

std::vector<int> fft_dims(const Grid3& g) { return {g.n[2], g.n[1], g.n[0]}; }

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 64) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

}  // namespace

double DilationGrid::total_weight() const {
  std::vector<double> w;
  for (const auto& n : nodes) w.push_back(n.weight);
  return pairwise_sum(w);
}

DilationGrid build_dilation_grid(const FamilySpec& fam, double spread, const std::vector<int>& steps, double shear,
                                 bool identity_component_only) {
  const auto& coords = fam.coords();
  if (steps.size() != coords.size()) throw std::invalid_argument("one step count per chart coordinate is required");
  for (int s : steps)
    if (s < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(spread > 0) || !std::isfinite(spread) || !(shear > 0) || !std::isfinite(shear))
    throw std::invalid_argument("spread and shear must be positive");

  DilationGrid g;
  g.family = fam.id();
  g.params = fam.params();
  g.spread = spread;
  g.shear = shear;
  g.steps = steps;
  g.kappa = orbit_measure_constant(fam);

  const std::size_t d = coords.size();
  std::vector<std::vector<double>> axis(d);
  g.cell = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    const int n = steps[a];
    double width = 0.0;
    for (int k = 0; k < n; ++k) {
      switch (coords[a].kind) {
        case CoordKind::Log:
          width = 2 * spread / n;
          axis[a].push_back(-spread + (k + 0.5) * width);
          break;
        case CoordKind::Additive:
          width = 2 * shear / n;
          axis[a].push_back(-shear + (k + 0.5) * width);
          break;
        case CoordKind::Angle:
          width = kTwoPi / n;
          axis[a].push_back(k * width);
          break;
        case CoordKind::Polar:
          width = std::numbers::pi / n;
          axis[a].push_back((k + 0.5) * width);
          break;
      }
    }
    g.cell *= width;
  }

  const auto ext = fam.finite_extension();
  const std::size_t n_ext = identity_component_only ? 1 : ext.size();
  std::vector<std::size_t> ix(d, 0);
  for (;;) {
    ChartPoint p;
    for (std::size_t a = 0; a < d; ++a) p.x.push_back(axis[a][ix[a]]);
    const Mat3 h0 = fam.chart_to_matrix(p);
    const double w = fam.haar_density(p) * g.cell / std::abs(h0.det());
    for (std::size_t e = 0; e < n_ext; ++e) g.nodes.push_back({p, static_cast<int>(e), ext[e] * h0, w});
    std::size_t a = 0;
    while (a < d && ++ix[a] == axis[a].size()) ix[a++] = 0;
    if (a == d) break;
  }
  return g;
}

DilationGrid build_dilation_grid(const FamilySpec& fam, double spread, int steps) {
  return build_dilation_grid(fam, spread, std::vector<int>(fam.dim(), steps), spread);
}

std::vector<int> default_steps(const FamilySpec& fam, int refine) {
  if (refine < 1) throw std::invalid_argument("refine must be >= 1");
  std::vector<int> steps;
  for (const auto& c : fam.coords())
    steps.push_back(refine * (c.kind == CoordKind::Log || c.kind == CoordKind::Additive ? 12 : 8));
  return steps;
}

DilationGrid default_dilation_grid(const FamilySpec& fam, int refine) {
  return build_dilation_grid(fam, kDefaultSpread, default_steps(fam, refine), kDefaultShear);
}

DilationGrid dilation_grid_from_points(const FamilySpec& fam, const std::vector<ChartPoint>& points, double cell) {
  if (!(cell > 0)) throw std::invalid_argument("cell volume must be positive");
  DilationGrid g;
  g.family = fam.id();
  g.params = fam.params();
  g.cell = cell;
  g.kappa = orbit_measure_constant(fam);
  for (const auto& p : points) {
    const Mat3 h = fam.chart_to_matrix(p);
    g.nodes.push_back({p, 0, h, fam.haar_density(p) * cell / std::abs(h.det())});
  }
  return g;
}

Volume band_volume(const Grid3& grid, double k0, double sigma) {
  grid.validate();
  if (!(sigma > 0) || !std::isfinite(k0) || !std::isfinite(sigma))
    throw std::invalid_argument("band_volume needs finite k0 and positive sigma");
  for (int a = 0; a < 3; ++a)
    if (std::abs(k0) + 3 * sigma >= 0.5 / grid.spacing[a]) throw std::invalid_argument("band reaches Nyquist");
  const FreqGrid fg(grid);
  std::vector<cplx> F(grid.size());
  for (int k = 0; k < grid.n[2]; ++k)
    for (int j = 0; j < grid.n[1]; ++j)
      for (int i = 0; i < grid.n[0]; ++i) {
        const Vec3 q(fg.f[0][static_cast<std::size_t>(i)], fg.f[1][static_cast<std::size_t>(j)],
                     fg.f[2][static_cast<std::size_t>(k)]);
        double v = 0.0;
        for (int corner = 0; corner < 8; ++corner) {
          const Vec3 c((corner & 1 ? -k0 : k0), (corner & 2 ? -k0 : k0), (corner & 4 ? -k0 : k0));
          const Vec3 d = q - c;
          const double d2 = dot(d, d);
          if (d2 <= 9 * sigma * sigma) v += std::exp(-d2 / (2 * sigma * sigma));
        }
        F[grid.index(i, j, k)] = v;
      }
  detail::Fft(fft_dims(grid)).backward(F.data());
  Volume out(grid);
  for (std::size_t q = 0; q < F.size(); ++q) out.samples[q] = F[q].real();
  const double nrm = out.norm();
  for (double& v : out.samples) v /= nrm;
  return out;
}

DilationGrid grid_of(const Coefficients& c) {
  DilationGrid g;
  g.family = c.family;
  g.params = c.params;
  g.kappa = orbit_measure_constant(FamilySpec(c.family, c.params));
  g.nodes = c.nodes;
  return g;
}

Coefficients analyze(const Volume& f, const Wavelet& psi, const DilationGrid& grid) {
  f.validate();
  psi.validate();
  check_compatible(f.grid, psi.grid);
  const Grid3& g = f.grid;
  const std::size_t N = g.size();
  std::vector<cplx> F(f.samples.begin(), f.samples.end());
  detail::Fft fft(fft_dims(g));
  fft.forward(F.data());
  const FreqGrid fg(g);

  Coefficients c;
  c.grid = g;
  c.family = grid.family;
  c.params = grid.params;
  c.wavelet_id = psi.generator_id;
  c.nodes = grid.nodes;
  c.data.reserve(grid.nodes.size());
  std::vector<cplx> m;
  for (const auto& node : grid.nodes) {
    node_multiplier(psi, node.h, g, fg, {}, m);
    std::vector<cplx> buf(N);
    for (std::size_t k = 0; k < N; ++k) buf[k] = F[k] * std::conj(m[k]);
    fft.backward(buf.data());
    const double scale = std::sqrt(std::abs(node.h.det())) / static_cast<double>(N);
    for (auto& v : buf) v *= scale;
    c.data.push_back(std::move(buf));
  }
  return c;
}

Volume synthesize(const Coefficients& c, const Wavelet& psi, const DilationGrid& grid, double c_psi) {
  psi.validate();
  check_compatible(c.grid, psi.grid);
  if (!(c_psi > 0) || !std::isfinite(c_psi)) throw std::domain_error("synthesize needs a finite positive c_psi");
  if (c.data.size() != grid.nodes.size()) throw std::invalid_argument("coefficients do not match the dilation grid");
  const Grid3& g = c.grid;
  const std::size_t N = g.size();
  detail::Fft fft(fft_dims(g));
  const FreqGrid fg(g);
  std::vector<cplx> acc(N), buf(N), m;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const auto& node = grid.nodes[i];
    if (c.data[i].size() != N) throw std::invalid_argument("coefficient array has the wrong size");
    bool zero = true;
    for (const cplx& v : c.data[i]) zero = zero && v == cplx(0.0);
    if (zero) continue;
    std::copy(c.data[i].begin(), c.data[i].end(), buf.begin());
    fft.forward(buf.data());
    node_multiplier(psi, node.h, g, fg, {}, m);
    const double s = node.weight * std::sqrt(std::abs(node.h.det()));
    for (std::size_t k = 0; k < N; ++k) acc[k] += s * m[k] * buf[k];
  }
  fft.backward(acc.data());
  Volume out(g);
  const double scale = 1.0 / (static_cast<double>(N) * grid.kappa * c_psi);
  for (std::size_t k = 0; k < N; ++k) out.samples[k] = acc[k].real() * scale;
  return out;
}

double isometry_check(const Volume& f, const Wavelet& psi, const DilationGrid& grid, double c_psi) {
  f.validate();
  psi.validate();
  check_compatible(f.grid, psi.grid);
  if (!(c_psi > 0) || !std::isfinite(c_psi)) throw std::domain_error("isometry_check needs a finite positive c_psi");
  const Grid3& g = f.grid;
  const std::size_t N = g.size();
  std::vector<double> sq(N);
  for (std::size_t k = 0; k < N; ++k) sq[k] = f.samples[k] * f.samples[k];
  const double energy = pairwise_sum(sq) * g.cell_volume();
  if (!(energy > 0)) throw std::domain_error("isometry ratio is undefined for f = 0");

  std::vector<cplx> F(f.samples.begin(), f.samples.end());
  detail::Fft(fft_dims(g)).forward(F.data());
  // drop the weakest bins while their combined power stays below 1e-13 of the total
  std::vector<double> pw(N);
  for (std::size_t k = 0; k < N; ++k) pw[k] = std::norm(F[k]);
  std::vector<double> sorted = pw;
  std::sort(sorted.begin(), sorted.end());
  const double budget = 1e-13 * pairwise_sum(sorted);
  double dropped = 0.0, cut = 0.0;
  for (double p : sorted) {
    if (dropped + p > budget) break;
    dropped += p;
    cut = p;
  }
  std::vector<std::size_t> idx;
  std::vector<double> P;
  for (std::size_t k = 0; k < N; ++k)
    if (pw[k] > cut) {
      idx.push_back(k);
      P.push_back(pw[k]);
    }
  const FreqGrid fg(g);
  std::vector<cplx> m;
  std::vector<double> node_e(grid.nodes.size()), term(idx.size());
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const auto& node = grid.nodes[i];
    node_multiplier(psi, node.h, g, fg, idx, m);
    for (std::size_t q = 0; q < idx.size(); ++q) term[q] = P[q] * std::norm(m[q]);
    node_e[i] = node.weight * std::abs(node.h.det()) * pairwise_sum(term) * g.cell_volume() / static_cast<double>(N);
  }
  return pairwise_sum(node_e) / (grid.kappa * c_psi * energy);
}

NTermResult nterm_error(const Volume& f, const Coefficients& c, const Wavelet& psi, const DilationGrid& grid,
                        double c_psi, std::vector<std::size_t> n_list) {
  f.validate();
  if (!(c.grid == f.grid)) throw IncompatibleGrid("coefficients and volume grids differ");
  if (c.data.size() != grid.nodes.size()) throw std::invalid_argument("coefficients do not match the dilation grid");
  const std::size_t N = f.grid.size();
  NTermResult res;
  res.total = N * c.data.size();

  // rank by synthesis energy; ties broken by position for determinism
  std::vector<double> score(res.total);
  for (std::size_t i = 0; i < c.data.size(); ++i)
    for (std::size_t k = 0; k < N; ++k)
      score[i * N + k] = std::norm(c.data[i][k]) * grid.nodes[i].weight * c.dx_cell();
  std::vector<std::size_t> order(res.total);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

  std::sort(n_list.begin(), n_list.end());
  Coefficients part = c;
  for (auto& d : part.data) std::fill(d.begin(), d.end(), cplx(0.0));
  std::size_t taken = 0;
  for (std::size_t n : n_list) {
    n = std::min(n, res.total);
    for (; taken < n; ++taken) {
      const std::size_t q = order[taken];
      part.data[q / N][q % N] = c.data[q / N][q % N];
    }
    double e = 0.0;
    if (n == 0) {
      e = f.norm();
    } else {
      const Volume s = synthesize(part, psi, grid, c_psi);
      std::vector<double> d(N);
      for (std::size_t k = 0; k < N; ++k) d[k] = (f.samples[k] - s.samples[k]) * (f.samples[k] - s.samples[k]);
      e = std::sqrt(pairwise_sum(d) * f.grid.cell_volume());
    }
    res.n.push_back(n);
    res.error.push_back(e);
  }
  return res;
}

}  // namespace adm3
