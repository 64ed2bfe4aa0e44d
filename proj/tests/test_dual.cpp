#include "doctest.h"

#include <cmath>
#include <random>

#include "adm3/dual.hpp"
#include "test_util.hpp"

using namespace adm3;

namespace {

double rel_vec_err(const Vec3& a, const Vec3& b) { return norm(a - b) / std::max(norm(b), 1e-300); }

// SL(2) x exp(R D) acting on R^3, with D = diag(lam, lam, beta).
LieAlgebraBasis sl2_ext(double lam, double beta) {
  return {{Mat3{{0, 1, 0}, {-1, 0, 0}, {0, 0, 0}}, Mat3::diag(1, -1, 0), Mat3::E(1, 2), Mat3::diag(lam, lam, beta)}};
}

// SO0(2,1) x R+ I.
LieAlgebraBasis so21_ext() {
  return {{Mat3{{0, -1, 0}, {1, 0, 0}, {0, 0, 0}}, Mat3::E(1, 3) + Mat3::E(3, 1), -(Mat3::E(2, 3) + Mat3::E(3, 2)),
           Mat3::identity()}};
}

}  // namespace

TEST_CASE("dual_act") {
  CHECK(dual_act(Mat3::identity(), Vec3(1, -2, 3)) == Vec3(1, -2, 3));
  CHECK(rel_vec_err(dual_act(Mat3::diag(2, 1, 1), Vec3(2, 0, 0)), Vec3(1, 0, 0)) < 1e-16);
  CHECK_THROWS_AS(dual_act(Mat3{}, Vec3(1, 0, 0)), SingularMatrix);

  std::mt19937_64 rng(31);
  std::normal_distribution<double> N;
  for (int k = 0; k < 200; ++k) {
    Mat3 a = random_conditioned(rng, 10.0), b = random_conditioned(rng, 10.0);
    Vec3 xi(N(rng), N(rng), N(rng));
    const Vec3 lhs = dual_act(a * b, xi), rhs = dual_act(a, dual_act(b, xi));
    CHECK(rel_vec_err(lhs, rhs) <= 1e-11);
  }
}

TEST_CASE("orbit_map_rank examples") {
  const FamilySpec f1a(Family::F1a), f2a(Family::F2a);
  CHECK(orbit_map_rank(f1a.lie_basis(), Vec3()) == 0);
  CHECK(orbit_map_rank(f1a.lie_basis(), Vec3(1, 1, 1)) == 3);
  CHECK(orbit_map_rank(f2a.lie_basis(), Vec3(1, 0, 0)) == 3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  for (int k = 0; k < 100; ++k) CHECK(orbit_map_rank(f2a.lie_basis(), Vec3(0, N(rng), N(rng))) < 3);
}

TEST_CASE("rank dichotomy on every family") {
  for (Family f : all_families()) {
    const FamilySpec fam(f);
    for (const auto& xi : sample_orbit_points(f, 200, 5)) CHECK(orbit_map_rank(fam.lie_basis(), xi) == 3);
    for (const auto& xi : sample_complement_points(f, 200, 6)) CHECK(orbit_map_rank(fam.lie_basis(), xi) < 3);
  }
}

TEST_CASE("orbit charts are consistent with the group") {
  for (Family f : all_families()) {
    const FamilySpec fam(f);
    const auto& ch = orbit_chart(f);
    REQUIRE(ch.base_points.size() == ch.open_orbits.size());
    for (std::size_t i = 0; i < ch.base_points.size(); ++i) {
      CHECK(ch.orbit_index(ch.base_points[i]) == static_cast<int>(i));
      CHECK(orbit_map_rank(fam.lie_basis(), ch.base_points[i]) == 3);
      // H0 preserves each open orbit
      for (const auto& h : fam.sample_elements(50, 3, 1.5)) {
        const Vec3 y = h.matrix.transpose() * ch.base_points[i];
        CHECK_MESSAGE(ch.orbit_index(y) == static_cast<int>(i), fam.tag());
      }
    }
  }
}

TEST_CASE("stabilizer_algebra") {
  const FamilySpec f3a(Family::F3a), f1a(Family::F1a);
  auto rep = stabilizer_algebra(f3a.lie_basis(), Vec3(0, 0, 1));
  REQUIRE(rep.dimension == 1);
  // rotation about e3: proportional to E21 - E12
  const Mat3 J = (Mat3::E(2, 1) - Mat3::E(1, 2)) * (1 / std::sqrt(2.0));
  CHECK(std::abs(std::abs(dot(rep.algebra_generators[0], J)) - 1.0) < 1e-12);
  CHECK(rep.compact);

  rep = stabilizer_algebra(f1a.lie_basis(), Vec3(0.3, -2, 1.7));
  CHECK(rep.dimension == 0);
  CHECK(rep.compact);

  for (Family f : all_families()) {
    const FamilySpec fam(f);
    rep = stabilizer_algebra(fam.lie_basis(), Vec3());
    CHECK(rep.dimension == static_cast<int>(fam.dim()));
  }
}

TEST_CASE("stabilizers of catalogue families are compact") {
  for (Family f : all_families()) {
    const FamilySpec fam(f);
    for (const auto& xi : sample_orbit_points(f, 20, 9)) {
      const auto rep = stabilizer_algebra(fam.lie_basis(), xi);
      CHECK(rep.dimension == static_cast<int>(fam.dim()) - 3);
      CHECK_MESSAGE(rep.compact, fam.tag());
      for (const auto& X : rep.algebra_generators) CHECK(norm(X.transpose() * xi) <= 1e-9 * norm(xi));
    }
  }
}

TEST_CASE("is_precompact_oneparam") {
  const Mat3 K{{0, 1, -2}, {-1, 0, 0.5}, {2, -0.5, 0}};
  auto r = is_precompact_oneparam(K);
  CHECK(r.precompact);
  CHECK(r.max_norm_observed == doctest::Approx(1.0).epsilon(1e-10));

  r = is_precompact_oneparam(Mat3::diag(1, -1, 0));
  CHECK_FALSE(r.precompact);
  CHECK(r.max_norm_observed == doctest::Approx(std::exp(50.0)).epsilon(1e-10));

  r = is_precompact_oneparam(Mat3{});
  CHECK(r.precompact);

  // a nilpotent generator grows only linearly and stays below the norm bound
  r = is_precompact_oneparam(Mat3::E(1, 2));
  CHECK(r.max_norm_observed < 1e6);
  CHECK_FALSE(r.spectral_ok);
  CHECK_FALSE(r.precompact);

  // thresholds are configuration
  r = is_precompact_oneparam(Mat3::diag(0.1, -0.1, 0), PrecompactConfig{5.0, 10.0});
  CHECK(r.max_norm_observed == doctest::Approx(std::exp(0.5)).epsilon(1e-12));
  CHECK_FALSE(r.precompact);
  CHECK_THROWS_AS(is_precompact_oneparam(K, PrecompactConfig{0.0, 1e6}), std::invalid_argument);
}

TEST_CASE("stabilizers of the rejected quasiregular examples are not compact") {
  // SO0(2,1) x R+: the stabilizer of (0,1,0) is exp(R A), A = E13 + E31
  auto rep = stabilizer_algebra(so21_ext(), Vec3(0, 1, 0));
  REQUIRE(rep.dimension == 1);
  const Mat3 A = (Mat3::E(1, 3) + Mat3::E(3, 1)) * (1 / std::sqrt(2.0));
  CHECK(std::abs(std::abs(dot(rep.algebra_generators[0], A)) - 1.0) < 1e-12);
  CHECK_FALSE(rep.compact);
  CHECK(rep.max_norm_observed > 1e6);
  CHECK_FALSE(is_precompact_oneparam(Mat3::E(1, 3) + Mat3::E(3, 1)).precompact);

  // SL(2) x exp(R D): unipotent stabilizer at (1,0,1)
  rep = stabilizer_algebra(sl2_ext(1.0, 0.5), Vec3(1, 0, 1));
  REQUIRE(rep.dimension == 1);
  CHECK(std::abs(std::abs(dot(rep.algebra_generators[0], Mat3::E(2, 1))) - 1.0) < 1e-12);
  CHECK_FALSE(rep.compact);
  CHECK(orbit_map_rank(sl2_ext(1.0, 0.5), Vec3(1, 0, 1)) == 3);
  // without the extra dilation in the third coordinate no orbit is open
  std::mt19937_64 rng(4);
  std::normal_distribution<double> N;
  for (int k = 0; k < 50; ++k) CHECK(orbit_map_rank(sl2_ext(1.0, 0.0), Vec3(N(rng), N(rng), N(rng))) < 3);
}

TEST_CASE("envelope_A") {
  CHECK(envelope_A(Family::F2a, Vec3(1, 0, 0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(envelope_A(Family::F2j, Vec3(2, 0, 1)) == doctest::Approx(1 / (1 + std::sqrt(5.0))).epsilon(1e-15));
  // 3a: dist to the origin is |xi|, no parallel part
  CHECK(envelope_A(Family::F3a, Vec3(0, 0.2, 0)) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(envelope_A(Family::F3a, Vec3(0, 3, 4)) == doctest::Approx(1.0 / 6).epsilon(1e-15));
  // 1b: complement {xi1 = 0} u {xi2 = xi3 = 0}
  CHECK(envelope_A(Family::F1b, Vec3(5, 0.3, 0.4)) == doctest::Approx(0.5 / (1 + 5)).epsilon(1e-15));

  for (Family f : all_families()) {
    for (const auto& xi : sample_complement_points(f, 50, 1)) CHECK(envelope_A(f, xi) == 0.0);
    for (const auto& xi : sample_orbit_points(f, 500, 2)) {
      const double a = envelope_A(f, xi);
      CHECK(a > 0.0);
      CHECK(a <= 1.0);
      CHECK(a * (1 + norm(xi)) <= 1.0 + 1e-15);
    }
  }
}

TEST_CASE("cross_section identity on every family") {
  for (Family f : all_families()) {
    const FamilySpec fam(f);
    const auto& ch = orbit_chart(f);
    for (const auto& xi : sample_orbit_points(f, 1000, 17)) {
      const auto s = cross_section(fam, xi);
      const Vec3 xi0 = ch.base_points[static_cast<std::size_t>(ch.orbit_index(xi))];
      CHECK_MESSAGE(norm(s.matrix.transpose() * xi0 - xi) <= 1e-10 * norm(xi), fam.tag());
    }
    for (std::size_t i = 0; i < ch.base_points.size(); ++i) {
      const auto s = cross_section(fam, ch.base_points[i]);
      CHECK(max_abs_diff(s.matrix, Mat3::identity()) < 1e-15);
    }
    for (const auto& xi : sample_complement_points(f, 5, 3)) CHECK_THROWS_AS(cross_section(fam, xi), NotInOpenOrbit);
  }
}

TEST_CASE("cross_section closed forms") {
  for (double d1 : {0.0, 1.0, -2.5})
    for (double d2 : {0.5, 0.0, 3.0}) {
      if (d1 == 0.0 && d2 == 0.0) continue;
      const FamilySpec fam(Family::F2n, FamilyParams{{{"delta1", d1}, {"delta2", d2}}});
      CHECK(max_abs_diff(cross_section(fam, Vec3(1, 1, 0)).matrix, Mat3::identity()) < 1e-15);
    }

  // 2l at |xi1| = 1: [[1, xi2, xi3], [0, exp(-xi3/nu1), 0], [0, 0, 1]]
  for (double nu1 : {1.0, -0.7, 2.0}) {
    const FamilySpec fam(Family::F2l, FamilyParams{{{"nu1", nu1}, {"nu2", 1.3}}});
    for (double x2 : {-1.0, 0.4})
      for (double x3 : {-2.0, 0.0, 1.5}) {
        const Mat3 want{{1, x2, x3}, {0, std::exp(-x3 / nu1), 0}, {0, 0, 1}};
        CHECK(max_abs_diff(cross_section(fam, Vec3(1, x2, x3)).matrix, want) < 1e-14);
      }
  }

  const FamilySpec f3a(Family::F3a);
  CHECK(max_abs_diff(cross_section(f3a, Vec3(0, 0, 2)).matrix, Mat3::identity() * 2.0) < 1e-14);
  // antipodal branch is a rotation by pi about e1
  CHECK(max_abs_diff(cross_section(f3a, Vec3(0, 0, -1)).matrix, Mat3::diag(1, -1, -1)) < 1e-14);
}

TEST_CASE("phi") {
  const FamilySpec f2l(Family::F2l, FamilyParams{{{"nu1", -0.7}, {"nu2", 1.3}}});
  const FamilySpec f3a(Family::F3a);
  for (const auto& xi : sample_orbit_points(Family::F2l, 200, 4))
    CHECK(phi(f2l, xi) == doctest::Approx(std::pow(std::abs(xi[0]), -3.0)).epsilon(1e-10));
  for (const auto& xi : sample_orbit_points(Family::F3a, 200, 4))
    CHECK(phi(f3a, xi) == doctest::Approx(std::pow(norm(xi), -3.0)).epsilon(1e-10));

  for (Family f : all_families()) {
    const FamilySpec fam(f);
    const auto& ch = orbit_chart(f);
    CHECK(phi(fam, ch.base_points[0]) == doctest::Approx(1.0).epsilon(1e-14));
    for (const auto& h : fam.sample_elements(200, 8, 1.5)) {
      const Vec3 xi = h.matrix.transpose() * ch.base_points[0];
      CHECK_MESSAGE(phi(fam, xi) == doctest::Approx(fam.delta_G(h.matrix)).epsilon(1e-8), fam.tag());
    }
  }
}

TEST_CASE("atom criterion scans") {
  const FamilySpec f2d(Family::F2d);
  auto r = atom_criterion_scan(f2d, 4.0, 10000, 1);
  CHECK(r.bounded_b);
  CHECK(r.ratio_b >= 1.0);
  CHECK_FALSE(r.probe_diverges);

  for (double nu1 : {1.0, -0.7}) {
    const FamilySpec f2l(Family::F2l, FamilyParams{{{"nu1", nu1}, {"nu2", 0.5}}});
    for (double e : {2.0, 3.0, 6.0}) {
      r = atom_criterion_scan(f2l, e, 1000, 2);
      CHECK(r.probe_diverges);
      REQUIRE(r.probe.size() == 5);
      for (const auto& p : r.probe) CHECK(nu1 * p.xi[2] < 0);
    }
    r = atom_criterion_scan(f2l, 3.0, 10000, 3);
    CHECK(r.sup_a_10x <= 1.0 + 1e-6);
  }

  CHECK_THROWS_AS(atom_criterion_scan(f2d, 1.0, 1000, 1), std::invalid_argument);
  CHECK_THROWS_AS(atom_criterion_scan(f2d, 3.0, 10, 1), std::invalid_argument);

  // the scan is reproducible
  const auto a = atom_criterion_scan(f2d, 3.0, 400, 9), b = atom_criterion_scan(f2d, 3.0, 400, 9);
  CHECK(a.sup_b == b.sup_b);
  CHECK(a.sup_a_10x == b.sup_a_10x);
}
