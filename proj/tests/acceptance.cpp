// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "adm3/classify.hpp"
#include "adm3/cwt.hpp"
#include "adm3/dual.hpp"
#include "adm3/io.hpp"
#include "adm3/report.hpp"
#include "adm3/wavelet.hpp"
#include "family_draws.hpp"
#include "test_util.hpp"

using namespace adm3;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "failed: " << what << "; ";
    pass = pass && ok;
  }
};

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

LieAlgebraBasis conjugated(const LieAlgebraBasis& b, const Mat3& g) {
  const Mat3 gi = inv3(g);
  LieAlgebraBasis out;
  for (const auto& m : b.mats) out.mats.push_back(g * m * gi);
  return out;
}

// SL(2) x exp(R D), D = diag(lam, lam, beta).
LieAlgebraBasis sl2_ext(double lam, double beta) {
  return {{Mat3{{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}}, Mat3::diag(1, -1, 0), Mat3::E(1, 2), Mat3::diag(lam, lam, beta)}};
}

LieAlgebraBasis so21_ext() {
  return {{Mat3{{0, -1, 0}, {1, 0, 0}, {0, 0, 0}}, Mat3::E(1, 3) + Mat3::E(3, 1), -(Mat3::E(2, 3) + Mat3::E(3, 2)),
           Mat3::identity()}};
}

LieAlgebraBasis so3_plus_scalars() {
  return {{Mat3::E(2, 1) - Mat3::E(1, 2), Mat3::E(3, 2) - Mat3::E(2, 3), Mat3::E(1, 3) - Mat3::E(3, 1),
           Mat3::identity()}};
}

double l2(const Volume& a, const Volume& b) {
  double s = 0.0;
  for (std::size_t q = 0; q < a.samples.size(); ++q) s += (a.samples[q] - b.samples[q]) * (a.samples[q] - b.samples[q]);
  return std::sqrt(s * a.grid.cell_volume());
}

void ac1(Outcome& o) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  double worst = 0;
  for (Family f : all_families()) {
    for (int k = 0; k < 100; ++k) {
      const FamilySpec fam(f, draw_params(f, rng));
      Mat3 X;
      for (const auto& B : fam.lie_basis().mats) X += B * U(rng);
      const Mat3 E = mat_exp(X);
      const Mat3 C = fam.chart_to_matrix(fam.matrix_to_chart(E));
      const double r = (E - C).frob() / C.frob();
      worst = std::max(worst, r);
      o.require(r <= 1e-9, family_tag(f) + " residual " + fmt(r));
    }
  }
  o.detail << "20 families x 100 draws, worst relative residual " << fmt(worst);
}

void ac2(Outcome& o) {
  double wh = 0, wg = 0, wp = 0;
  for (double nu1 : {1.0, -0.7}) {
    const FamilySpec fam(Family::F2l, FamilyParams{{{"nu1", nu1}, {"nu2", 1.3}}});
    for (const auto& g : fam.sample_elements(100, 31, 2.0)) {
      const double a = std::exp(g.point.x[0]), b = std::exp(g.point.x[1]);
      const double eh = std::abs(delta_H(fam, g) - a) / a, eg = std::abs(delta_G(fam, g) - std::pow(b, -3)) / std::pow(b, -3);
      wh = std::max(wh, eh);
      wg = std::max(wg, eg);
      o.require(eh <= 1e-9 && eg <= 1e-9, "modular values");
    }
    for (const auto& xi : sample_orbit_points(Family::F2l, 100, 32)) {
      const double want = std::pow(std::abs(xi[0]), -3.0), e = std::abs(phi(fam, xi) - want) / want;
      wp = std::max(wp, e);
      o.require(e <= 1e-8, "Phi");
    }
  }
  o.detail << "worst relative errors: Delta_H " << fmt(wh) << ", Delta_G " << fmt(wg) << ", Phi " << fmt(wp);
}

void ac3(Outcome& o) {
  double worst = 0;
  for (Family f : all_families()) {
    const FamilySpec fam(f);
    const auto& ch = orbit_chart(f);
    for (const auto& xi : sample_orbit_points(f, 1000, 303)) {
      const Vec3 xi0 = ch.base_points[static_cast<std::size_t>(ch.orbit_index(xi))];
      const double e = norm(cross_section(fam, xi).matrix.transpose() * xi0 - xi) / norm(xi);
      worst = std::max(worst, e);
      o.require(e <= 1e-10, family_tag(f));
    }
  }
  o.detail << "20000 points, worst relative error " << fmt(worst);
}

void ac4(Outcome& o) {
  int bad = 0;
  for (Family f : all_families()) {
    const FamilySpec fam(f);
    for (const auto& xi : sample_orbit_points(f, 500, 404)) bad += orbit_map_rank(fam.lie_basis(), xi) != 3;
    for (const auto& xi : sample_complement_points(f, 500, 405)) bad += orbit_map_rank(fam.lie_basis(), xi) > 2;
  }
  o.require(bad == 0, std::to_string(bad) + " wrong ranks");
  o.detail << "20000 samples, " << bad << " wrong ranks";
}

void ac5(Outcome& o) {
  int noncompact = 0;
  for (Family f : all_families()) {
    const FamilySpec fam(f);
    for (const auto& xi : sample_orbit_points(f, 100, 505)) noncompact += !stabilizer_algebra(fam.lie_basis(), xi).compact;
  }
  o.require(noncompact == 0, std::to_string(noncompact) + " catalogue stabilizers not compact");

  const auto sl2 = stabilizer_algebra(sl2_ext(1.0, 0.5), Vec3(1, 0, 1));
  o.require(sl2.dimension == 1 && !sl2.compact, "SL(2) exp(RD) stabilizer at (1,0,1) reported compact");

  const auto so21 = stabilizer_algebra(so21_ext(), Vec3(0, 1, 0));
  const Mat3 A = (Mat3::E(1, 3) + Mat3::E(3, 1)) * (1 / std::sqrt(2.0));
  o.require(so21.dimension == 1 && std::abs(std::abs(dot(so21.algebra_generators[0], A)) - 1.0) < 1e-12,
            "SO0(2,1) stabilizer at (0,1,0) is not exp(RA)");
  o.require(!so21.compact && so21.max_norm_observed > 1e6, "SO0(2,1) exp(RE3) stabilizer stays bounded");
  o.detail << "2000 catalogue points compact; SL(2) at (1,0,1) compact=" << sl2.compact
           << "; SO0(2,1) at (0,1,0) max norm " << fmt(so21.max_norm_observed);
}

void ac6(Outcome& o) {
  double worst = 0;
  std::string worst_tag;
  for (Family f : all_families()) {
    if (f == Family::F2l) continue;
    const FamilySpec fam(f);
    const auto r = atom_criterion_scan(fam, default_atom_exponent(fam), 10000, 606);
    if (r.ratio_b > worst) worst = r.ratio_b, worst_tag = fam.tag();
    o.require(r.ratio_b <= 1.1, fam.tag() + " part (b) ratio " + fmt(r.ratio_b));
  }
  const FamilySpec f2l(Family::F2l);
  const auto r = atom_criterion_scan(f2l, default_atom_exponent(f2l), 10000, 606);
  const double nu1 = f2l.params().get("nu1");
  bool along = r.probe.size() == 5;
  for (const auto& p : r.probe) along = along && p.xi[0] == 1.0 && p.xi[1] == 0.0 && nu1 * p.xi[2] < 0;
  for (std::size_t i = 1; i < r.probe.size(); ++i) along = along && r.probe[i].value >= r.probe[i - 1].value;
  const double growth = r.probe.empty() ? 0.0 : r.probe.back().value / r.probe.front().value;
  o.require(along && growth >= 10.0, "2l probe growth " + fmt(growth));
  o.require(r.sup_a_10x <= 1.0 + 1e-6, "2l part (a) sup " + fmt(r.sup_a_10x));
  o.detail << "worst part (b) ratio " << fmt(worst) << " (" << worst_tag << "); 2l probe growth x" << fmt(growth)
           << ", part (a) sup " << fmt(r.sup_a_10x);
}

void ac7(Outcome& o) {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> U(0, 3);
  int wrong = 0, params_off = 0;
  for (Family f : all_families())
    for (int k = 0; k < 25; ++k) {
      const FamilyParams p = draw_params(f, rng);
      const Mat3 g = random_conditioned(rng, std::pow(10.0, U(rng)));
      const auto r = classify(conjugated(lie_basis(f, p), g));
      if (r.verdict != Verdict::Family || r.family != f) {
        ++wrong;
        continue;
      }
      params_off += !params_match(canonical_params(f, p), r.params, 1e-5);
    }
  o.require(wrong == 0, std::to_string(wrong) + " of 500 labels wrong");
  o.require(params_off == 0, std::to_string(params_off) + " parameter sets off");

  int sl2_ok = 0, so3_ok = 0;
  for (int k = 0; k < 10; ++k) {
    const Mat3 g = random_conditioned(rng, std::pow(10.0, U(rng)));
    sl2_ok += classify(conjugated(sl2_ext(1.0, 1.0), g)).verdict == Verdict::Rejected;
    const auto r = classify(conjugated(so3_plus_scalars(), g));
    so3_ok += r.verdict == Verdict::Family && r.family == Family::F3a;
  }
  o.require(sl2_ok == 10, "sl(2)+R accepted");
  o.require(so3_ok == 10, "so(3)+R not classified as 3a");
  o.detail << "500 draws: " << wrong << " wrong labels, " << params_off << " parameter mismatches; sl(2)+R rejected "
           << sl2_ok << "/10, so(3)+R -> 3a " << so3_ok << "/10";
}

void ac8(Outcome& o) {
  const Grid3 g = centered_grid(64, 1.0 / 64);
  double worst_moment = 0, worst_margin = 1e300;
  int checked = 0;
  for (int r = 1; r <= 3; ++r) {
    std::set<std::string> seen;
    for (Family f : all_families()) {
      const VanishingPattern p = catalogue_pattern(f, r);
      const Wavelet w = make_vanishing_wavelet(p, g);
      if (seen.insert(to_string(p)).second) {
        const auto m = verify_vanishing_moments(w, p, 1e-6);
        worst_moment = std::max(worst_moment, m.worst);
        o.require(m.pass, to_string(p) + " moments " + fmt(m.worst));
      }
      const double slope = decay_slope(w, f, 8, 808).min_slope;
      worst_margin = std::min(worst_margin, slope - r);
      o.require(slope >= r - 0.1, family_tag(f) + " r=" + std::to_string(r) + " slope " + fmt(slope));
      ++checked;
    }
  }
  o.detail << checked << " family/order pairs; worst moment residual " << fmt(worst_moment)
           << ", smallest slope - r " << fmt(worst_margin);
}

double bump1(double t) { return std::abs(t) >= 1 ? 0.0 : std::exp(-1 / (1 - t * t)); }

void ac9(Outcome& o) {
  const Wavelet shell = make_shell_wavelet(centered_grid(32, 0.2));
  const auto rs = admissibility_constant(shell, FamilySpec(Family::F3a));
  // radial integral of |psi^|^2 / |xi|^3 over R^3, A fixed by the unit norm
  const int n = 100000;
  double i2 = 0, im = 0;
  for (int k = 0; k < n; ++k) {
    const double rho = 1 + (k + 0.5) / n, b = bump1((rho - 1.5) / 0.5);
    i2 += rho * rho * b * b / n;
    im += b * b / rho / n;
  }
  const double oracle = im / i2;
  const double rel = std::abs(rs.c_psi - oracle) / oracle;
  o.require(rs.finite() && rel <= 1e-3, "shell c_psi off by " + fmt(rel));

  const Grid3 g = centered_grid(64, 1.0 / 64);
  const auto rb = admissibility_constant(make_vanishing_wavelet(VanishingPattern{}, g), FamilySpec(Family::F3a));
  o.require(rb.status == AdmissibilityStatus::Divergent, "plain bump on 3a: " + to_string(rb.status));

  const auto rl = admissibility_constant(make_vanishing_wavelet({VanishingPattern::Kind::Axes, {1}, 2}, g),
                                         FamilySpec(Family::F2l));
  o.require(rl.finite(), "2l r=2 axis 1: " + to_string(rl.status));
  o.detail << "3a shell c_psi " << fmt(rs.c_psi) << " vs oracle " << fmt(oracle) << " (rel " << fmt(rel)
           << "); bump on 3a " << to_string(rb.status) << "; 2l r=2 " << to_string(rl.status) << " c_psi "
           << fmt(rl.c_psi);
}

void ac10(Outcome& o) {
  for (Family f : {Family::F1a, Family::F2e, Family::F3a}) {
    const FamilySpec fam(f);
    double ratio[2];
    for (int refine = 1; refine <= 2; ++refine) {
      const int n = 64 * refine;
      const Grid3 g = centered_grid(n, 1.0 / n);
      const Wavelet psi = make_vanishing_wavelet(catalogue_pattern(f, 3), g);
      const double c_psi = admissibility_constant(psi, fam).c_psi;
      ratio[refine - 1] = isometry_check(band_volume(g, 6.0, 1.0), psi, default_dilation_grid(fam, refine), c_psi);
    }
    const double shrink = std::abs(ratio[0] - 1) / std::abs(ratio[1] - 1);
    o.require(ratio[0] >= 0.9 && ratio[0] <= 1.1, fam.tag() + " ratio " + fmt(ratio[0]));
    o.require(shrink >= 1.5, fam.tag() + " shrink " + fmt(shrink));
    o.detail << fam.tag() << " " << fmt(ratio[0]) << " -> " << fmt(ratio[1]) << " (x" << fmt(shrink) << ") ";
  }
}

void ac11(Outcome& o) {
  const FamilySpec fam(Family::F2e);
  const Grid3 g = centered_grid(12, 1.0 / 12);
  const Wavelet psi = make_vanishing_wavelet(catalogue_pattern(Family::F2e, 3), g);
  const auto dg = build_dilation_grid(fam, 2.0, {4, 3, 3}, 2.0);
  const double c_psi = admissibility_constant(psi, fam).c_psi;
  const Volume f = band_volume(g, 2.0, 0.7);
  const auto W = analyze(f, psi, dg);
  const std::size_t total = W.data.size() * g.size();
  const auto r = nterm_error(f, W, psi, dg, c_psi, {0, 1, 3, 10, 30, 100, 300, 1000, 3000, 10000, 30000, total});
  o.require(r.error[0] == f.norm(), "E_0 != ||f||");
  for (std::size_t i = 1; i < r.error.size(); ++i)
    o.require(r.error[i] <= r.error[i - 1], "E_n increases at n = " + std::to_string(r.n[i]));
  const double full = l2(f, synthesize(W, psi, dg, c_psi));
  const double gap = std::abs(r.error.back() - full) / f.norm();
  o.require(gap <= 1e-10, "E_all differs from the full residual by " + fmt(gap));
  o.detail << total << " coefficients; E_0 " << fmt(r.error[0]) << ", E_all " << fmt(r.error.back())
           << ", |E_all - residual|/||f|| " << fmt(gap);
}

void ac12(Outcome& o) {
  std::mt19937_64 rng(1212);
  std::normal_distribution<double> N;
  std::uniform_int_distribution<int> dim(2, 9);
  int trials = 0;
  for (int t = 0; t < 20; ++t, ++trials) {
    Grid3 g;
    g.n = {dim(rng), dim(rng), dim(rng)};
    g.spacing = {std::exp(N(rng)), std::exp(N(rng)), std::exp(N(rng))};
    g.origin = {N(rng), N(rng), N(rng)};
    Volume v(g);
    for (double& s : v.samples) s = N(rng) * std::pow(10.0, N(rng));
    const io::Bytes b = io::encode_volume(v);
    const io::Bytes b2 = io::encode_volume(io::decode_volume(b));
    o.require(b == b2 && io::encode_volume(io::decode_volume(b2)) == b2, "V3D1");

    io::AlgebraFile a;
    for (int m = 0; m < 3 + t % 2; ++m) {
      Mat3 x;
      for (double& e : x.a) e = N(rng) * std::pow(10.0, static_cast<int>(rng() % 30) - 15);
      a.mats.push_back(x);
      a.labels.push_back(m % 2 ? "" : "X" + std::to_string(m));
    }
    const std::string at = io::write_algebra(a);
    const auto ab = io::parse_algebra(at);
    o.require(ab.mats == a.mats && io::write_algebra(ab) == at, "algebra text");

    io::Report rep;
    rep.command = "analyze";
    rep.inputs = {{"family", family_tag(all_families()[static_cast<std::size_t>(t)])}, {"seed", t}, {"x", N(rng)}};
    rep.results = {{"v", {N(rng), N(rng) * 1e-200, std::nan("")}}, {"ok", t % 2 == 0}, {"s", "a\"b\n"}};
    const std::string rt = io::write_report(rep);
    const std::string rt2 = io::write_report(io::parse_report(rt));
    o.require(rt == rt2 && io::write_report(io::parse_report(rt2)) == rt2, "report");
  }

  const FamilySpec fam(Family::F2e);
  const Grid3 g = centered_grid(8, 0.125);
  const Wavelet psi = make_vanishing_wavelet(catalogue_pattern(Family::F2e, 1), g);
  Volume f(g);
  for (double& s : f.samples) s = N(rng);
  const io::Bytes c = io::encode_coefficients(analyze(f, psi, build_dilation_grid(fam, 1.0, {2, 1, 2}, 1.0)));
  const io::Bytes c2 = io::encode_coefficients(io::decode_coefficients(c));
  o.require(c == c2 && io::encode_coefficients(io::decode_coefficients(c2)) == c2, "C3W1");
  o.detail << trials << " random volumes, algebra files and reports; one coefficient file (" << c.size()
           << " bytes)";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const Criterion all[] = {
      {"AC1 exponential consistency", 5, ac1},    {"AC2 2l modular values", 1, ac2},
      {"AC3 cross-section identity", 10, ac3},    {"AC4 orbit rank dichotomy", 10, ac4},
      {"AC5 stabilizer compactness", 30, ac5},    {"AC6 atom-criterion scans", 120, ac6},
      {"AC7 classifier round trip", 60, ac7},     {"AC8 vanishing moments", 30, ac8},
      {"AC9 admissibility integral", 60, ac9},    {"AC10 isometry", 300, ac10},
      {"AC11 n-term diagnostics", 60, ac11},      {"AC12 file formats", 60, ac12},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= c.budget_s, "runtime over " + fmt(c.budget_s) + " s");
    failed += !o.pass;
    std::printf("%s %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
