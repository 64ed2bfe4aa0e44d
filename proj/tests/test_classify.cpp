#include "doctest.h"

#include <random>
#include <sstream>

#include "adm3/classify.hpp"
#include "family_draws.hpp"
#include "test_util.hpp"

using namespace adm3;

namespace {

LieAlgebraBasis conjugated(const LieAlgebraBasis& b, const Mat3& g) {
  const Mat3 gi = inv3(g);
  LieAlgebraBasis out;
  for (const auto& m : b.mats) out.mats.push_back(g * m * gi);
  return out;
}

std::string describe(const ClassificationReport& r) {
  std::ostringstream os;
  os << to_string(r.verdict);
  if (r.verdict == Verdict::Family) os << " " << family_tag(r.family);
  if (!r.reason.empty()) os << " (" << r.reason << ")";
  for (const auto& d : r.diagnostics) os << " [" << d << "]";
  return os.str();
}

LieAlgebraBasis so3_plus_scalars() {
  return {{Mat3::E(2, 1) - Mat3::E(1, 2), Mat3::E(3, 2) - Mat3::E(2, 3), Mat3::E(1, 3) - Mat3::E(3, 1),
           Mat3::identity()}};
}

// sl(2) acting on the first two coordinates, plus diag(lambda, lambda, beta).
LieAlgebraBasis sl2_ext(double lambda, double beta) {
  return {{Mat3::E(1, 1) - Mat3::E(2, 2), Mat3::E(1, 2), Mat3::E(2, 1), Mat3::diag(lambda, lambda, beta)}};
}

}  // namespace

TEST_CASE("derived series") {
  CHECK(derived_series_dims(lie_basis(Family::F1a, {})) == std::vector<int>{3, 0});
  CHECK(derived_series_dims(lie_basis(Family::F2e, default_params(Family::F2e))) == std::vector<int>{3, 2, 0});
  // [A, E12] vanishes in 2d
  CHECK(derived_series_dims(lie_basis(Family::F2d, default_params(Family::F2d))) == std::vector<int>{3, 1, 0});
  CHECK(derived_series_dims(lie_basis(Family::F2g, default_params(Family::F2g))) == std::vector<int>{3, 1, 0});
  CHECK(derived_series_dims(lie_basis(Family::F2b, {})) == std::vector<int>{4, 2, 0});
  CHECK(derived_series_dims(so3_plus_scalars()) == std::vector<int>{4, 3});
  LieAlgebraBasis open{{Mat3::E(1, 2), Mat3::E(2, 1)}};
  CHECK_THROWS_AS(derived_series_dims(open), InvalidAlgebra);
}

TEST_CASE("weights of worked examples") {
  // 2e with lambda = 1, c = 1/2: weights (1, 1/2, 0) on A and zero on the nilpotent part
  auto t = weights(lie_basis(Family::F2e, {{{"lambda", 1.0}, {"c", 0.5}}}));
  REQUIRE(t.weights.size() == 3);
  std::vector<double> onA;
  for (const auto& w : t.weights) {
    CHECK(std::abs(w[1]) < 1e-12);
    CHECK(std::abs(w[2]) < 1e-12);
    CHECK(std::abs(w[0].imag()) < 1e-12);
    onA.push_back(w[0].real());
  }
  std::sort(onA.begin(), onA.end());
  CHECK(onA[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(onA[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(onA[2] == doctest::Approx(1.0).epsilon(1e-12));

  // 1b: complex pair u +- i t
  t = weights(lie_basis(Family::F1b, {}));
  CHECK(t.weights.size() == 3);
  int nonreal = 0;
  for (const auto& w : t.weights) nonreal += std::abs(w[2].imag()) > 0.5;
  CHECK(nonreal == 2);

  // 2g: one weight lambda on A with multiplicity 3
  t = weights(lie_basis(Family::F2g, {{{"lambda", 2.0}}}));
  REQUIRE(t.weights.size() == 1);
  CHECK(t.multiplicity[0] == 3);
  CHECK(std::abs(t.weights[0][0] - cplx(2.0, 0)) < 1e-12);

  CHECK_THROWS_AS(weights(so3_plus_scalars()), InvalidAlgebra);
}

TEST_CASE("characteristic space examples") {
  CHECK(characteristic_space_dim(lie_basis(Family::F1e, {})) == 2);
  CHECK(characteristic_space_dim(lie_basis(Family::F1d, {})) == 1);
  CHECK(characteristic_space_dim(lie_basis(Family::F2d, default_params(Family::F2d))) == 2);
  CHECK(characteristic_space_dim(lie_basis(Family::F2h, default_params(Family::F2h))) == 1);
  CHECK(characteristic_space_dim(lie_basis(Family::F2l, default_params(Family::F2l))) == 2);
  CHECK(characteristic_space_dim(lie_basis(Family::F2n, default_params(Family::F2n))) == 1);
}

TEST_CASE("catalogue bases classify to themselves") {
  for (Family f : all_families()) {
    const FamilyParams p = default_params(f);
    const auto r = classify(lie_basis(f, p));
    INFO(family_tag(f), ": ", describe(r));
    REQUIRE(r.verdict == Verdict::Family);
    CHECK(r.family == f);
    CHECK(params_match(canonical_params(f, p), r.params, 1e-12));
  }
}

TEST_CASE("round trip under random conjugation") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0, 3);
  for (Family f : all_families()) {
    for (int k = 0; k < 10; ++k) {
      const FamilyParams p = draw_params(f, rng);
      const Mat3 g = random_conditioned(rng, std::pow(10.0, U(rng)));
      const auto r = classify(conjugated(lie_basis(f, p), g));
      INFO(family_tag(f), " draw ", k, ": ", describe(r));
      REQUIRE(r.verdict == Verdict::Family);
      CHECK(r.family == f);
      CHECK(params_match(canonical_params(f, p), r.params, 1e-5));
    }
  }
}

TEST_CASE("mixing the basis does not change the verdict") {
  std::mt19937_64 rng(99);
  for (Family f : all_families()) {
    const FamilyParams p = draw_params(f, rng);
    const auto b = lie_basis(f, p);
    const Mat3 mix = random_conditioned(rng, 10.0);
    LieAlgebraBasis m;
    const std::size_t n = b.size();
    std::normal_distribution<double> N;
    std::vector<double> M(n * n);
    for (auto& x : M) x = N(rng);
    for (std::size_t i = 0; i < n; ++i) M[i * n + i] += 3.0;
    for (std::size_t i = 0; i < n; ++i) {
      Mat3 s;
      for (std::size_t j = 0; j < n; ++j) s += b.mats[j] * M[i * n + j];
      m.mats.push_back(s);
    }
    const auto r = classify(conjugated(m, mix));
    INFO(family_tag(f), ": ", describe(r));
    REQUIRE(r.verdict == Verdict::Family);
    CHECK(r.family == f);
    CHECK(params_match(canonical_params(f, p), r.params, 1e-5));
  }
}

TEST_CASE("weights are conjugation invariant") {
  std::mt19937_64 rng(7);
  for (Family f : all_families()) {
    if (!is_solvable(f)) continue;
    const auto b = lie_basis(f, draw_params(f, rng));
    const auto t0 = weights(b);
    const auto t1 = weights(conjugated(b, random_conditioned(rng, 1e3)));
    REQUIRE(t0.weights.size() == t1.weights.size());
    for (std::size_t g = 0; g < t0.weights.size(); ++g) {
      double best = 1e300;
      int mult = -1;
      for (std::size_t h = 0; h < t1.weights.size(); ++h) {
        double d = 0;
        for (std::size_t j = 0; j < b.size(); ++j) d = std::max(d, std::abs(t0.weights[g][j] - t1.weights[h][j]));
        if (d < best) {
          best = d;
          mult = t1.multiplicity[h];
        }
      }
      INFO(family_tag(f));
      CHECK(best < 1e-7);
      CHECK(mult == t0.multiplicity[g]);
    }
  }
}

TEST_CASE("weight structure properties") {
  std::mt19937_64 rng(17);
  for (Family f : all_families()) {
    if (!is_solvable(f)) continue;
    for (int k = 0; k < 5; ++k) {
      const auto b = conjugated(lie_basis(f, draw_params(f, rng)), random_conditioned(rng, 100.0));
      const auto t = weights(b);
      INFO(family_tag(f));
      CHECK(t.total_multiplicity() == 3);
      // the nilpotent ideal and the weight span are complementary
      const auto r = classify(b);
      REQUIRE(r.verdict == Verdict::Family);
      CHECK(nilpotent_ideal_dim(b, t) == r.features.dim_nilpotent_ideal);
      // weights vanish on brackets
      BasisCoords bc(b.mats);
      for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = i + 1; j < b.size(); ++j) {
          const auto c = bc.coords(bracket(b.mats[i], b.mats[j]));
          double scale = 0;
          for (double x : c) scale += std::abs(x);
          for (const auto& w : t.weights) {
            cplx v = 0;
            double wn = 0;
            for (std::size_t l = 0; l < b.size(); ++l) {
              v += w[l] * c[l];
              wn = std::max(wn, std::abs(w[l]));
            }
            CHECK(std::abs(v) <= 1e-8 * std::max(1.0, scale * wn));
          }
        }
    }
  }
}

TEST_CASE("recovered parameters reproduce the features") {
  std::mt19937_64 rng(5);
  for (Family f : all_families()) {
    const auto b = conjugated(lie_basis(f, draw_params(f, rng)), random_conditioned(rng, 30.0));
    const auto r = classify(b);
    REQUIRE(r.verdict == Verdict::Family);
    const auto back = classify(lie_basis(r.family, r.params));
    INFO(family_tag(f));
    CHECK(back.features == r.features);
  }
}

TEST_CASE("non-catalogue algebras are rejected") {
  // so(3) + R is 3a
  auto r = classify(so3_plus_scalars());
  REQUIRE(r.verdict == Verdict::Family);
  CHECK(r.family == Family::F3a);

  r = classify(sl2_ext(1.0, 0.5));
  INFO(describe(r));
  CHECK(r.verdict == Verdict::Rejected);
  CHECK(r.reason.find("compact-stabilizer") == 0);

  r = classify(sl2_ext(1.0, 0.0));
  CHECK(r.verdict == Verdict::Rejected);
  CHECK(r.reason.find("open-orbit") == 0);

  // so(2,1) + R: hyperbolic stabilizers at spacelike points
  LieAlgebraBasis so21{{Mat3::E(1, 2) - Mat3::E(2, 1), Mat3::E(1, 3) + Mat3::E(3, 1), Mat3::E(2, 3) + Mat3::E(3, 2),
                        Mat3::identity()}};
  r = classify(so21);
  CHECK(r.verdict == Verdict::Rejected);

  // transpose of 1e: abelian, one weight, but every orbit is thin
  r = classify(LieAlgebraBasis{{Mat3::identity(), Mat3::E(1, 2), Mat3::E(3, 2)}});
  CHECK(r.verdict == Verdict::Rejected);
  CHECK(r.reason.find("open-orbit") == 0);

  // 2e at lambda = 0: every orbit lies in the plane xi_1 = 0
  r = classify(lie_basis(Family::F2e, {{{"lambda", 0.0}, {"c", 0.5}}}));
  CHECK(r.verdict == Verdict::Rejected);
  CHECK(r.reason.find("open-orbit") == 0);

  CHECK_THROWS_AS(classify(LieAlgebraBasis{{Mat3::E(1, 1), Mat3::E(2, 2)}}), InvalidAlgebra);
  CHECK_THROWS_AS(classify(LieAlgebraBasis{{Mat3::E(1, 2), Mat3::E(2, 1), Mat3::E(1, 1)}}), InvalidAlgebra);
}

TEST_CASE("2h at delta = 0 is reported as 2e with c = 1") {
  const auto r = classify(lie_basis(Family::F2h, {{{"lambda", 2.0}, {"delta", 0.0}}}));
  REQUIRE(r.verdict == Verdict::Family);
  CHECK(r.family == Family::F2e);
  CHECK(r.params.get("c") == doctest::Approx(1.0));
  CHECK(r.params.get("lambda") == doctest::Approx(2.0));
  CHECK_FALSE(r.notes.empty());
}

TEST_CASE("boundary inputs are indeterminate, not misclassified") {
  // 2e with c within 1e-5 of 1: two weights almost coincide
  const auto b = lie_basis(Family::F2e, {{{"lambda", 1.5}, {"c", 1.0 - 1e-5}}});
  const auto r = classify(b);
  INFO(describe(r));
  CHECK(r.verdict == Verdict::Indeterminate);
}

TEST_CASE("admissibility gates") {
  for (Family f : all_families()) {
    const auto v = check_admissible(lie_basis(f, default_params(f)));
    INFO(family_tag(f), " ", v.detail);
    CHECK(v.candidate);
  }
  CHECK(check_admissible(sl2_ext(1, 0)).failed == Gate::OpenOrbit);
  CHECK(check_admissible(sl2_ext(1, 0.5)).failed == Gate::CompactStabilizer);
  CHECK(check_admissible(lie_basis(Family::F2e, {{{"lambda", 0.0}, {"c", 0.5}}})).failed == Gate::OpenOrbit);
  CHECK_THROWS_AS(check_admissible(so3_plus_scalars(), 0), std::invalid_argument);
}
