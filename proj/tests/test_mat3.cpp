#include "doctest.h"

#include <algorithm>
#include <random>

#include "adm3/mat3.hpp"
#include "test_util.hpp"

namespace {
#include "expm_cases.inc"

// Hadamard bound: the natural scale of floating point error in det.
double det_scale(const adm3::Mat3& m) {
  double p = 1;
  for (int j = 0; j < 3; ++j) p *= std::hypot(m(0, j), m(1, j), m(2, j));
  return p;
}
}  // namespace

using namespace adm3;

TEST_CASE("mat_exp closed cases") {
  CHECK(mat_exp(Mat3{}) == Mat3::identity());

  Mat3 N = Mat3::E(1, 2);
  CHECK(max_abs_diff(mat_exp(N), Mat3::identity() + N) == 0.0);

  Mat3 D = Mat3::diag(std::log(2.0), 0.0, -std::log(2.0));
  CHECK(max_abs_diff(mat_exp(D), Mat3::diag(2, 1, 0.5)) < 1e-15);

  bool overflow = false;
  mat_exp(Mat3::diag(800, 0, 0), &overflow);
  CHECK(overflow);
  mat_exp(Mat3::diag(1, 0, 0), &overflow);
  CHECK_FALSE(overflow);
}

TEST_CASE("mat_exp matches a rotation and a Jordan block") {
  // exp of t*J is the rotation by t; exp of a Jordan block has closed form
  for (double t : {0.1, 1.0, 3.0, 20.0}) {
    Mat3 J = (Mat3::E(3, 2) - Mat3::E(2, 3)) * t;
    Mat3 R{{1, 0, 0}, {0, std::cos(t), -std::sin(t)}, {0, std::sin(t), std::cos(t)}};
    CHECK(max_abs_diff(mat_exp(J), R) < 1e-13);
  }
  for (double l : {-3.0, 0.5, 7.0}) {
    Mat3 X = Mat3::identity() * l + Mat3::E(1, 2) + Mat3::E(2, 3);
    const double e = std::exp(l);
    Mat3 ex{{e, e, e / 2}, {0, e, e}, {0, 0, e}};
    CHECK(max_abs_diff(mat_exp(X), ex) <= 1e-13 * ex.frob());
  }
}

TEST_CASE("mat_exp against a high precision reference") {
  for (const auto& c : kExpCases) {
    Mat3 X, E;
    std::copy(std::begin(c.x), std::end(c.x), X.a.begin());
    std::copy(std::begin(c.e), std::end(c.e), E.a.begin());
    Mat3 got = mat_exp(X);
    CHECK_MESSAGE((got - E).frob() <= 1e-13 * E.frob(), "norm ", X.norm2());
  }
}

TEST_CASE("mat_exp properties on random input") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    Mat3 X = random_mat(rng, 2.0);
    // commuting pair X and p(X)
    Mat3 Y = X * 0.3 + X * X * 0.1 + Mat3::identity() * 0.7;
    Mat3 lhs = mat_exp(X + Y), rhs = mat_exp(X) * mat_exp(Y);
    CHECK((lhs - rhs).frob() <= 1e-11 * lhs.frob());
    const Mat3 E = mat_exp(X);
    const double d = E.det(), e = std::exp(X.trace());
    CHECK(std::abs(d - e) <= 1e-11 * std::max(e, det_scale(E)));
  }
  for (int k = 0; k < 50; ++k) {
    Mat3 X = random_mat(rng, 10.0);
    X = X * (std::min(10.0, X.norm2()) / X.norm2());
    const Mat3 E = mat_exp(X);
    const double d = E.det(), e = std::exp(X.trace());
    CHECK(std::abs(d - e) <= 1e-11 * std::max(e, det_scale(E)));
  }
}

TEST_CASE("bracket") {
  Mat3 X = Mat3::E(1, 2) + Mat3::E(3, 1) * 2.0;
  CHECK(bracket(X, X) == Mat3{});
  CHECK(bracket(Mat3::diag(1, 2, 3), Mat3::diag(-1, 5, 0)) == Mat3{});
  // lambda = 1, c = 1/2: [A, X] = c X, [A, Y] = Y
  Mat3 A = Mat3::diag(1, 0.5, 0), Xn = Mat3::E(1, 2), Yn = Mat3::E(1, 3);
  CHECK(bracket(A, Xn) == Xn * 0.5);
  CHECK(bracket(A, Yn) == Yn);
}

TEST_CASE("eig3 closed cases") {
  auto e = eig3(Mat3::identity());
  for (auto z : e) CHECK(std::abs(z - cplx(1, 0)) < 1e-14);

  const double t = 0.7;
  Mat3 R{{1, 0, 0}, {0, std::cos(t), -std::sin(t)}, {0, std::sin(t), std::cos(t)}};
  e = eig3(R);
  // sorted by (re, im): cos t < 1
  CHECK(std::abs(e[0] - std::polar(1.0, -t)) < 1e-12);
  CHECK(std::abs(e[1] - std::polar(1.0, t)) < 1e-12);
  CHECK(std::abs(e[2] - cplx(1, 0)) < 1e-12);
}

TEST_CASE("eig3 against prescribed roots") {
  // Companion matrix of a cubic with chosen roots, conjugated; roots are the oracle.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int k = 0; k < 500; ++k) {
    std::array<cplx, 3> roots;
    if (k % 2 == 0) {
      roots = {cplx(U(rng), 0), cplx(U(rng), 0), cplx(U(rng), 0)};
    } else {
      const double re = U(rng), im = std::abs(U(rng)) + 0.05;
      roots = {cplx(U(rng), 0), cplx(re, im), cplx(re, -im)};
    }
    const cplx c2 = -(roots[0] + roots[1] + roots[2]);
    const cplx c1 = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2];
    const cplx c0 = -roots[0] * roots[1] * roots[2];
    Mat3 C{{0, 0, -c0.real()}, {1, 0, -c1.real()}, {0, 1, -c2.real()}};
    auto got = eig3(C);
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
      return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    const double scale = C.norm2();
    // close roots can swap order at rounding level; match greedily
    for (const auto& r : roots) {
      double best = 1e300;
      for (const auto& g : got) best = std::min(best, std::abs(g - r));
      const double sep = std::min({std::abs(roots[0] - roots[1]), std::abs(roots[1] - roots[2]),
                                   std::abs(roots[0] - roots[2])});
      // a cluster of width sep loses accuracy like eps/sep
      const double tol = sep > 1e-3 ? 1e-10 * scale : 1e-6 * scale;
      CHECK(best <= tol);
    }
  }
}

TEST_CASE("eig3 is conjugation invariant") {
  std::mt19937_64 rng(8);
  int checked = 0;
  while (checked < 300) {
    Mat3 M = random_mat(rng, 2.0);
    Mat3 g = random_conditioned(rng, 1e3);
    auto a = eig3(M), b = eig3(g * M * inv3(g));
    for (const auto& z : a) {
      double best = 1e300;
      for (const auto& w : b) best = std::min(best, std::abs(z - w));
      CHECK(best <= 1e-8 * std::max(1.0, M.norm2()));
    }
    ++checked;
  }
}

TEST_CASE("rank3") {
  CHECK(rank3(Mat3{}) == 0);
  CHECK(rank3(Mat3::identity()) == 3);
  Mat3 outer;
  const double u[3] = {1, -2, 0.5}, v[3] = {3, 1, 4};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) outer(i, j) = u[i] * v[j];
  CHECK(rank3(outer) == 1);
  CHECK(rank3(Mat3::diag(1, 1e-12, 0)) == 1);
  CHECK(rank3(Mat3::diag(1, 1e-8, 0)) == 2);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    Mat3 Q = random_orthogonal(rng);
    Mat3 M = random_mat(rng, 1.0);
    if (k % 3 == 0) M.a[6] = M.a[7] = M.a[8] = 0;
    if (k % 3 == 1) {
      for (int j = 0; j < 3; ++j) M(2, j) = M(0, j) * 2 - M(1, j);
    }
    CHECK(rank3(Q * M) == rank3(M));
    CHECK(rank3(M * Q) == rank3(M));
  }
}

TEST_CASE("singular values of tiny and rank deficient input") {
  auto s = singular_values(Mat3::diag(3, -1e-9, 2));
  CHECK(s[0] == doctest::Approx(3).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(2).epsilon(1e-14));
  CHECK(s[2] == doctest::Approx(1e-9).epsilon(1e-6));

  // clustered singular values: orthogonal matrices and scaled copies
  std::mt19937_64 rng(12);
  for (int k = 0; k < 200; ++k) {
    const Mat3 Q = random_orthogonal(rng);
    // Q is orthogonal only to rounding; |s_max^2 - 1| <= ||Q^T Q - I||
    const double dev = (Q.transpose() * Q - Mat3::identity()).frob();
    CHECK(std::abs(Q.norm2() - 1.0) <= dev + 8 * 2.2e-16);
    const Mat3 D = Q * Mat3::diag(3, 3, 3 * (1 - 1e-9));
    CHECK(std::abs(D.norm2() - 3.0) <= 3 * (dev + 8 * 2.2e-16));
  }
}

TEST_CASE("inv3") {
  CHECK(inv3(Mat3::identity()) == Mat3::identity());
  CHECK(max_abs_diff(inv3(Mat3::diag(2, 4, 5)), Mat3::diag(0.5, 0.25, 0.2)) < 1e-16);
  CHECK_THROWS_AS(inv3(Mat3{}), SingularMatrix);
  CHECK_THROWS_AS(inv3(Mat3::diag(1e-110, 1e-110, 1e-110)), SingularMatrix);

  std::mt19937_64 rng(21);
  for (int k = 0; k < 200; ++k) {
    Mat3 M = random_conditioned(rng, 10.0);
    CHECK((M * inv3(M) - Mat3::identity()).frob() <= 1e-12);
  }
  // normwise relative residual up to condition 1e8
  for (double cond : {1e2, 1e4, 1e6, 1e8}) {
    for (int k = 0; k < 100; ++k) {
      Mat3 M = random_conditioned(rng, cond);
      Mat3 Mi = inv3(M);
      CHECK((M * Mi - Mat3::identity()).frob() <= 1e-12 * M.norm2() * Mi.norm2());
    }
  }
}

TEST_CASE("Mat3 rejects non-finite entries") {
  CHECK_THROWS_AS((Mat3{{1, 0, 0}, {0, std::nan(""), 0}, {0, 0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS((Mat3{{1, 0}, {0, 1, 0}, {0, 0, 1}}), std::invalid_argument);
}

TEST_CASE("sym_eig3 reconstructs") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    Mat3 A = random_mat(rng, 1.0);
    Mat3 S = A + A.transpose();
    std::array<double, 3> w;
    Mat3 V;
    sym_eig3(S, w, V);
    CHECK(w[0] <= w[1]);
    CHECK(w[1] <= w[2]);
    Mat3 back = V * Mat3::diag(w[0], w[1], w[2]) * V.transpose();
    CHECK((back - S).frob() <= 1e-12 * std::max(1.0, S.frob()));
  }
}
