#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace adm3 {

using cplx = std::complex<double>;

// Default relative zero tolerance shared by rank and classification code.
inline constexpr double kZeroTol = 1e-9;

struct Vec3 {
  std::array<double, 3> v{0.0, 0.0, 0.0};

  Vec3() = default;
  Vec3(double x, double y, double z) : v{x, y, z} {}

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  Vec3 operator+(const Vec3& o) const { return {v[0] + o[0], v[1] + o[1], v[2] + o[2]}; }
  Vec3 operator-(const Vec3& o) const { return {v[0] - o[0], v[1] - o[1], v[2] - o[2]}; }
  Vec3 operator-() const { return {-v[0], -v[1], -v[2]}; }
  Vec3 operator*(double s) const { return {v[0] * s, v[1] * s, v[2] * s}; }
  Vec3& operator+=(const Vec3& o) {
    for (int i = 0; i < 3; ++i) v[i] += o[i];
    return *this;
  }
  bool operator==(const Vec3&) const = default;
};

inline Vec3 operator*(double s, const Vec3& a) { return a * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::hypot(a[0], a[1], a[2]); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Row-major 3x3 real matrix.
struct Mat3 {
  std::array<double, 9> a{};

  Mat3() = default;
  Mat3(std::initializer_list<std::initializer_list<double>> rows);

  static Mat3 identity();
  static Mat3 diag(double d0, double d1, double d2);
  // Elementary matrix E_ij with 1-based indices, matching the usual notation.
  static Mat3 E(int i, int j);

  double& operator()(int i, int j) { return a[3 * i + j]; }
  double operator()(int i, int j) const { return a[3 * i + j]; }

  Mat3 operator+(const Mat3& o) const;
  Mat3 operator-(const Mat3& o) const;
  Mat3 operator-() const;
  Mat3 operator*(const Mat3& o) const;
  Mat3 operator*(double s) const;
  Vec3 operator*(const Vec3& x) const;
  Mat3& operator+=(const Mat3& o);
  Mat3& operator-=(const Mat3& o);
  bool operator==(const Mat3&) const = default;

  Mat3 transpose() const;
  double trace() const { return a[0] + a[4] + a[8]; }
  double det() const;
  double frob() const;
  // Operator 2-norm (largest singular value).
  double norm2() const;
  bool finite() const;
};

inline Mat3 operator*(double s, const Mat3& m) { return m * s; }
double dot(const Mat3& x, const Mat3& y);  // Frobenius inner product

using CVec3 = std::array<cplx, 3>;

struct CMat3 {
  std::array<cplx, 9> a{};
  CMat3() = default;
  explicit CMat3(const Mat3& m);
  cplx& operator()(int i, int j) { return a[3 * i + j]; }
  cplx operator()(int i, int j) const { return a[3 * i + j]; }
  CMat3 operator*(const CMat3& o) const;
  CVec3 operator*(const CVec3& x) const;
};

struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix exponential, scaling and squaring with a Taylor kernel.
// Sets *overflow when a non-finite entry appears in the result.
Mat3 mat_exp(const Mat3& X, bool* overflow = nullptr);

Mat3 bracket(const Mat3& X, const Mat3& Y);

// Eigenvalues from the characteristic cubic, sorted by (re, im).
std::array<cplx, 3> eig3(const Mat3& M);

// Singular values in descending order.
std::array<double, 3> singular_values(const Mat3& M);

int rank3(const Mat3& M, double tol = kZeroTol);

// Inverse via the adjugate; throws SingularMatrix when |det| < 1e-300.
Mat3 inv3(const Mat3& M);

// Eigen decomposition of a symmetric matrix: eigenvalues ascending,
// eigenvectors as matrix columns.
void sym_eig3(const Mat3& S, std::array<double, 3>& w, Mat3& V);

}  // namespace adm3
