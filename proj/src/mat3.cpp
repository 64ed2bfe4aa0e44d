#include "adm3/mat3.hpp"

#include <algorithm>
#include <limits>

namespace adm3 {

Mat3::Mat3(std::initializer_list<std::initializer_list<double>> rows) {
  if (rows.size() != 3) throw std::invalid_argument("Mat3 needs 3 rows");
  int i = 0;
  for (const auto& r : rows) {
    if (r.size() != 3) throw std::invalid_argument("Mat3 rows need 3 entries");
    int j = 0;
    for (double x : r) a[3 * i + j++] = x;
    ++i;
  }
  if (!finite()) throw std::invalid_argument("Mat3 entries must be finite");
}

Mat3 Mat3::identity() { return diag(1, 1, 1); }

Mat3 Mat3::diag(double d0, double d1, double d2) {
  Mat3 m;
  m.a[0] = d0;
  m.a[4] = d1;
  m.a[8] = d2;
  return m;
}

Mat3 Mat3::E(int i, int j) {
  Mat3 m;
  m(i - 1, j - 1) = 1.0;
  return m;
}

Mat3 Mat3::operator+(const Mat3& o) const {
  Mat3 r;
  for (int k = 0; k < 9; ++k) r.a[k] = a[k] + o.a[k];
  return r;
}

Mat3 Mat3::operator-(const Mat3& o) const {
  Mat3 r;
  for (int k = 0; k < 9; ++k) r.a[k] = a[k] - o.a[k];
  return r;
}

Mat3 Mat3::operator-() const {
  Mat3 r;
  for (int k = 0; k < 9; ++k) r.a[k] = -a[k];
  return r;
}

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
  return r;
}

Mat3 Mat3::operator*(double s) const {
  Mat3 r;
  for (int k = 0; k < 9; ++k) r.a[k] = a[k] * s;
  return r;
}

Vec3 Mat3::operator*(const Vec3& x) const {
  Vec3 r;
  for (int i = 0; i < 3; ++i) r[i] = (*this)(i, 0) * x[0] + (*this)(i, 1) * x[1] + (*this)(i, 2) * x[2];
  return r;
}

Mat3& Mat3::operator+=(const Mat3& o) {
  for (int k = 0; k < 9; ++k) a[k] += o.a[k];
  return *this;
}

Mat3& Mat3::operator-=(const Mat3& o) {
  for (int k = 0; k < 9; ++k) a[k] -= o.a[k];
  return *this;
}

Mat3 Mat3::transpose() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

double Mat3::det() const {
  const Mat3& m = *this;
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
         m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

double Mat3::frob() const {
  double s = 0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double Mat3::norm2() const { return singular_values(*this)[0]; }

bool Mat3::finite() const {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

double dot(const Mat3& x, const Mat3& y) {
  double s = 0;
  for (int k = 0; k < 9; ++k) s += x.a[k] * y.a[k];
  return s;
}

CMat3::CMat3(const Mat3& m) {
  for (int k = 0; k < 9; ++k) a[k] = m.a[k];
}

CMat3 CMat3::operator*(const CMat3& o) const {
  CMat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
  return r;
}

CVec3 CMat3::operator*(const CVec3& x) const {
  CVec3 r;
  for (int i = 0; i < 3; ++i) r[i] = (*this)(i, 0) * x[0] + (*this)(i, 1) * x[1] + (*this)(i, 2) * x[2];
  return r;
}

namespace {

double norm1(const Mat3& m) {
  double best = 0;
  for (int j = 0; j < 3; ++j)
    best = std::max(best, std::abs(m(0, j)) + std::abs(m(1, j)) + std::abs(m(2, j)));
  return best;
}

double principal_minor_sum(const Mat3& m) {
  return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
         m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
}

// Roots of t^3 + p t + q, refined by Newton and deflation.
std::array<cplx, 3> depressed_cubic(double p, double q) {
  auto f = [&](double t) { return (t * t + p) * t + q; };
  auto newton = [&](double t) {
    for (int it = 0; it < 4; ++it) {
      double d = 3 * t * t + p;
      double ft = f(t);
      if (d == 0.0) break;
      double tn = t - ft / d;
      if (!(std::abs(f(tn)) < std::abs(ft))) break;
      t = tn;
    }
    return t;
  };
  double disc = 0.25 * q * q + (p / 3) * (p / 3) * (p / 3);
  double t1;
  if (p == 0.0 && q == 0.0) return {cplx(0), cplx(0), cplx(0)};
  if (disc > 0) {
    double A = -std::copysign(std::cbrt(std::abs(q) / 2 + std::sqrt(disc)), q);
    double B = (A != 0.0) ? -p / (3 * A) : 0.0;
    t1 = A + B;
  } else {
    // Three real roots; take the one of largest magnitude for deflation.
    double r = 2 * std::sqrt(std::max(0.0, -p / 3));
    double arg = (r == 0.0) ? 0.0 : std::clamp(3 * q / (p * r), -1.0, 1.0);
    double th = std::acos(arg) / 3;
    double c0 = r * std::cos(th);
    double c1 = r * std::cos(th - 2 * M_PI / 3);
    double c2 = r * std::cos(th - 4 * M_PI / 3);
    t1 = c0;
    if (std::abs(c1) > std::abs(t1)) t1 = c1;
    if (std::abs(c2) > std::abs(t1)) t1 = c2;
  }
  t1 = newton(t1);
  // Quotient t^2 + t1 t + (p + t1^2).
  double b = t1, c = p + t1 * t1;
  double d = b * b - 4 * c;
  cplx r2, r3;
  if (d >= 0) {
    double s = std::sqrt(d);
    double qq = -0.5 * (b + std::copysign(s, b));
    if (qq != 0.0) {
      r2 = qq;
      r3 = c / qq;
    } else {
      r2 = 0.0;
      r3 = 0.0;
    }
  } else {
    double s = std::sqrt(-d);
    r2 = cplx(-b / 2, s / 2);
    r3 = cplx(-b / 2, -s / 2);
  }
  return {cplx(t1), r2, r3};
}

}  // namespace

Mat3 mat_exp(const Mat3& X, bool* overflow) {
  double nrm = norm1(X);
  int s = 0;
  if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  Mat3 A = X * std::ldexp(1.0, -s);
  // Horner form of the degree-18 Taylor polynomial.
  Mat3 I = Mat3::identity();
  Mat3 E = I;
  for (int k = 18; k >= 1; --k) E = I + (A * E) * (1.0 / k);
  for (int i = 0; i < s; ++i) E = E * E;
  if (overflow) *overflow = !E.finite();
  return E;
}

Mat3 bracket(const Mat3& X, const Mat3& Y) { return X * Y - Y * X; }

std::array<cplx, 3> eig3(const Mat3& M) {
  double shift = M.trace() / 3;
  Mat3 B = M - Mat3::identity() * shift;
  double p = principal_minor_sum(B);
  double q = -B.det();
  auto r = depressed_cubic(p, q);
  for (auto& z : r) z += shift;
  std::sort(r.begin(), r.end(), [](const cplx& x, const cplx& y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  return r;
}

std::array<double, 3> singular_values(const Mat3& M) {
  // Invariants of M^T M computed directly from M.
  double I1 = 0;
  for (double x : M.a) I1 += x * x;
  if (I1 == 0.0) return {0, 0, 0};
  double I2 = 0;
  for (int i0 = 0; i0 < 3; ++i0)
    for (int i1 = i0 + 1; i1 < 3; ++i1)
      for (int j0 = 0; j0 < 3; ++j0)
        for (int j1 = j0 + 1; j1 < 3; ++j1) {
          double mnr = M(i0, j0) * M(i1, j1) - M(i0, j1) * M(i1, j0);
          I2 += mnr * mnr;
        }
  double dt = M.det();
  double I3 = dt * dt;
  // Largest eigenvalue of M^T M by Jacobi: the closed-form cubic loses
  // half the digits at clustered roots.
  std::array<double, 3> w;
  Mat3 V;
  sym_eig3(M.transpose() * M, w, V);
  double l1 = w[2];
  l1 = std::max(l1, 0.0);
  if (l1 == 0.0) return {0, 0, 0};
  double prod = I3 / l1;
  double sum = std::max(0.0, (I2 - prod) / l1);
  double disc = std::max(0.0, sum * sum - 4 * prod);
  double l2 = 0.5 * (sum + std::sqrt(disc));
  double l3 = (l2 > 0) ? prod / l2 : 0.0;
  l2 = std::min(l2, l1);
  return {std::sqrt(l1), std::sqrt(std::max(l2, 0.0)), std::sqrt(std::max(l3, 0.0))};
}

int rank3(const Mat3& M, double tol) {
  auto s = singular_values(M);
  if (s[0] == 0.0) return 0;
  int r = 0;
  for (double x : s)
    if (x > tol * s[0]) ++r;
  return r;
}

Mat3 inv3(const Mat3& M) {
  double d = M.det();
  if (!(std::abs(d) >= 1e-300)) throw SingularMatrix("inv3: singular matrix");
  Mat3 r;
  r(0, 0) = M(1, 1) * M(2, 2) - M(1, 2) * M(2, 1);
  r(0, 1) = M(0, 2) * M(2, 1) - M(0, 1) * M(2, 2);
  r(0, 2) = M(0, 1) * M(1, 2) - M(0, 2) * M(1, 1);
  r(1, 0) = M(1, 2) * M(2, 0) - M(1, 0) * M(2, 2);
  r(1, 1) = M(0, 0) * M(2, 2) - M(0, 2) * M(2, 0);
  r(1, 2) = M(0, 2) * M(1, 0) - M(0, 0) * M(1, 2);
  r(2, 0) = M(1, 0) * M(2, 1) - M(1, 1) * M(2, 0);
  r(2, 1) = M(0, 1) * M(2, 0) - M(0, 0) * M(2, 1);
  r(2, 2) = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  r = r * (1.0 / d);
  // Cramer's rule is not backward stable; two refinement steps bring the
  // residual down to the conditioning floor.
  for (int it = 0; it < 2; ++it) {
    const Mat3 res = Mat3::identity() - M * r;
    r += r * res;
  }
  return r;
}

void sym_eig3(const Mat3& S, std::array<double, 3>& w, Mat3& V) {
  // Cyclic Jacobi sweeps.
  Mat3 A = S;
  V = Mat3::identity();
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = A(0, 1) * A(0, 1) + A(0, 2) * A(0, 2) + A(1, 2) * A(1, 2);
    if (off <= 1e-300 || off < 1e-32 * (A.frob() * A.frob())) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (A(p, q) == 0.0) continue;
        double theta = (A(q, q) - A(p, p)) / (2 * A(p, q));
        double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < 3; ++k) {
          double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::array<int, 3> idx{0, 1, 2};
  std::sort(idx.begin(), idx.end(), [&](int x, int y) { return A(x, x) < A(y, y); });
  Mat3 Vs;
  for (int j = 0; j < 3; ++j) {
    w[j] = A(idx[j], idx[j]);
    for (int k = 0; k < 3; ++k) Vs(k, j) = V(k, idx[j]);
  }
  V = Vs;
}

}  // namespace adm3
