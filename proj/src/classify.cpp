#include "adm3/classify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "adm3/dual.hpp"

namespace adm3 {

namespace {

using CM = Eigen::MatrixXcd;
using CV = Eigen::VectorXcd;
using RM = Eigen::MatrixXd;
using RV = Eigen::VectorXd;

// Weight forms closer than kEqTol (relative) are equal, farther than kGapTol
// distinct; anything between is a boundary case.
constexpr double kEqTol = 1e-6;
constexpr double kGapTol = 1e-4;
// Rank decisions: singular values below kRankTol * s_max vanish, above
// kRankGap * s_max count.
constexpr double kRankTol = 1e-8;
constexpr double kRankGap = 1e-7;
constexpr std::uint64_t kSeed = 0x5eed5eedULL;

struct Ambiguous : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank with singular values measured against ref (s_max when ref <= 0).
int decide_rank(const RV& s, double lo, double hi, const std::string& what, double ref = 0) {
  if (ref <= 0) ref = s.size() > 0 ? s(0) : 0.0;
  if (!(ref > 0)) return 0;
  int r = 0;
  for (int k = 0; k < s.size(); ++k) {
    const double rel = s(k) / ref;
    if (rel > lo && rel < hi) {
      std::ostringstream os;
      os << what << ": singular value ratio " << rel;
      throw Ambiguous(os.str());
    }
    if (rel >= hi) ++r;
  }
  return r;
}

// Orthonormal basis of the right null space of S.
CM null_space(const CM& S, int ncols, const std::string& what, double ref = 0) {
  if (S.rows() == 0) return CM::Identity(ncols, ncols);
  Eigen::JacobiSVD<CM> svd(S, Eigen::ComputeFullV);
  const int r = decide_rank(svd.singularValues(), kRankTol, kRankGap, what, ref);
  return svd.matrixV().rightCols(ncols - r);
}

RM null_space_real(const RM& S, int ncols, const std::string& what) {
  if (S.rows() == 0) return RM::Identity(ncols, ncols);
  Eigen::JacobiSVD<RM> svd(S, Eigen::ComputeFullV);
  const int r = decide_rank(svd.singularValues(), kRankTol, kRankGap, what);
  return svd.matrixV().rightCols(ncols - r);
}

CM to_cm(const Mat3& m) {
  CM c(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = m(i, j);
  return c;
}

RM to_rm(const Mat3& m) {
  RM c(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = m(i, j);
  return c;
}

// Nilpotent elements of a solvable family. In a triangular basis the diagonal
// is multiplicative and the unital algebra generated by the diagonals of the
// family is spanned by products of at most two of them, so X is nilpotent iff
// tr(XP) = 0 for P in {I, X_i, X_i X_j}.
template <class M>
std::vector<M> nilpotent_elements(const std::vector<M>& ops, const std::string& what) {
  using Scalar = typename M::Scalar;
  const int k = static_cast<int>(ops[0].rows());
  double nmax = 0;
  for (const auto& op : ops) nmax = std::max(nmax, op.norm());
  // ops at rounding level (a quotient on which they vanish) count as zero
  std::vector<M> unit;
  for (const auto& op : ops) {
    const double n = op.norm();
    unit.push_back(n > 1e-12 * nmax ? M(op / n) : M(M::Zero(k, k)));
  }
  std::vector<M> P{M::Identity(k, k) / std::sqrt(double(k))};
  for (std::size_t i = 0; i < unit.size(); ++i) {
    P.push_back(unit[i]);
    // left unscaled: a product that vanishes must not be blown up from rounding
    for (std::size_t j = i; j < unit.size(); ++j) P.push_back(unit[i] * unit[j]);
  }
  const int n = static_cast<int>(ops.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> T(P.size(), n);
  for (std::size_t i = 0; i < P.size(); ++i)
    for (int j = 0; j < n; ++j) T(i, j) = (unit[j] * P[i]).trace();
  Eigen::JacobiSVD<decltype(T)> svd(T, Eigen::ComputeFullV);
  // traces of unit-norm products: rounding error is absolute
  const int r = decide_rank(svd.singularValues(), kRankTol, kRankGap, what, 1.0);
  auto V = svd.matrixV().rightCols(n - r);
  std::vector<M> out;
  for (int c = 0; c < V.cols(); ++c) {
    M N = M::Zero(k, k);
    for (int j = 0; j < n; ++j) N += unit[j] * V(j, c);
    // combinations that vanish identically (dependent ops) carry no information
    if (N.norm() > 1e-9) out.push_back(N);
  }
  return out;
}

struct EigCand {
  CV v;            // unit common eigenvector
  CV w;            // eigenvalue of each op
  CM space;        // orthonormal basis of the joint eigenspace
};

// Common eigenvectors of a solvable family, one candidate per distinct weight.
// They all lie in the joint kernel of the nilpotent elements, where the family
// acts commutatively.
std::vector<EigCand> common_eigvecs(const std::vector<CM>& ops, std::mt19937_64& rng) {
  const int k = static_cast<int>(ops[0].rows());
  CM K = CM::Identity(k, k);
  {
    auto Ns = nilpotent_elements(ops, "nilpotent radical");
    CM S(0, k);
    for (const auto& N : Ns) {
      const double n = N.norm();
      CM S2(S.rows() + k, k);
      S2 << S, N / n;
      S = S2;
    }
    K = null_space(S, k, "joint kernel", 1.0);
  }
  const int m = static_cast<int>(K.cols());
  if (m == 0) throw TriangularizationFailure("nilpotent elements have no common kernel");
  std::vector<CM> R;
  for (const auto& op : ops) {
    R.push_back(K.adjoint() * op * K);
    // an op vanishing on the kernel leaves rounding residue only
    if (R.back().norm() <= 1e-9 * op.norm()) R.back().setZero();
  }

  double rmax = 0;
  for (const auto& r : R) rmax = std::max(rmax, r.norm());
  if (!(rmax > 0)) rmax = 1;
  std::normal_distribution<double> N01;
  for (int attempt = 0; attempt < 8; ++attempt) {
    CM Z = CM::Zero(m, m);
    for (const auto& r : R) {
      const double n = r.norm();
      const double coef = N01(rng);
      if (n > 1e-12 * rmax) Z += r * (coef / n);
    }
    Eigen::ComplexEigenSolver<CM> es(Z, true);
    const CV ev = es.eigenvalues();
    // eigenvalue condition numbers from left and right eigenvectors
    RV cond = RV::Constant(m, 1e300);
    {
      Eigen::FullPivLU<CM> lu(es.eigenvectors());
      if (lu.isInvertible()) {
        const CM Y = lu.inverse();
        for (int i = 0; i < m; ++i) cond(i) = es.eigenvectors().col(i).norm() * Y.row(i).norm();
      }
    }
    double emax = 0;
    for (int i = 0; i < m; ++i) emax = std::max(emax, std::abs(ev(i)));
    const double tau = std::max(1e-6 * Z.norm(), 1e-4 * emax);
    // a nearly defective pair splits like the square root of the rounding
    // error instead
    auto pair_tol = [&](int a, int b) {
      return std::min(cond(a), cond(b)) > 1e3 ? std::max(tau, 3e-5 * Z.norm()) : tau;
    };
    std::vector<int> label(m);
    std::iota(label.begin(), label.end(), 0);
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (std::abs(ev(a) - ev(b)) <= pair_tol(a, b)) {
          const int from = label[b], to = label[a];
          for (auto& l : label)
            if (l == from) l = to;
        }
    bool ambiguous = false;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (label[a] != label[b] && std::abs(ev(a) - ev(b)) <= 10 * pair_tol(a, b)) ambiguous = true;
    if (ambiguous) continue;

    std::vector<EigCand> out;
    std::vector<int> seen;
    for (int a = 0; a < m; ++a) {
      if (std::find(seen.begin(), seen.end(), label[a]) != seen.end()) continue;
      seen.push_back(label[a]);
      int mc = 0;
      cplx zeta = 0;
      for (int b = 0; b < m; ++b)
        if (label[b] == label[a]) {
          ++mc;
          zeta += ev(b);
        }
      zeta /= double(mc);
      CM Y = Z - zeta * CM::Identity(m, m), Yp = CM::Identity(m, m);
      for (int p = 0; p < mc; ++p) Yp = Yp * Y;
      Eigen::JacobiSVD<CM> svd(Yp, Eigen::ComputeFullV);
      const CM W = svd.matrixV().rightCols(mc);
      CM S(mc * static_cast<int>(R.size()), mc);
      for (std::size_t j = 0; j < R.size(); ++j) {
        CM B = W.adjoint() * R[j] * W;
        const cplx mu = B.trace() / double(mc);
        S.block(mc * j, 0, mc, mc) = B - mu * CM::Identity(mc, mc);
      }
      const CM J = null_space(S, mc, "joint eigenspace", rmax);
      if (J.cols() == 0) throw TriangularizationFailure("no common eigenvector in a weight space");
      EigCand c;
      c.space = K * W * J;
      c.v = c.space.col(0).normalized();
      c.w = CV(ops.size());
      for (std::size_t j = 0; j < ops.size(); ++j) c.w(j) = c.v.dot(ops[j] * c.v);
      out.push_back(std::move(c));
    }
    return out;
  }
  throw Ambiguous("generic element keeps nearly colliding eigenvalues");
}

// All complete flags of common invariant subspaces, as unitary matrices whose
// leading columns span the flag.
// ref holds the norms of the original ops: a compression left with rounding
// residue only is set to zero.
void build_flags(const std::vector<CM>& ops, std::mt19937_64& rng, std::vector<CM>& out,
                 std::vector<double> ref = {}) {
  const int k = static_cast<int>(ops[0].rows());
  if (ref.empty())
    for (const auto& op : ops) ref.push_back(op.norm());
  if (k == 1) {
    out.push_back(CM::Identity(1, 1));
    return;
  }
  for (const auto& c : common_eigvecs(ops, rng)) {
    Eigen::HouseholderQR<CM> qr(CM(c.v));
    const CM Qf = qr.householderQ() * CM::Identity(k, k);
    const CM Q = Qf.rightCols(k - 1);
    std::vector<CM> sub;
    for (std::size_t j = 0; j < ops.size(); ++j) {
      sub.push_back(Q.adjoint() * ops[j] * Q);
      if (sub.back().norm() <= 1e-9 * ref[j]) sub.back().setZero();
    }
    std::vector<CM> subflags;
    build_flags(sub, rng, subflags, ref);
    for (const auto& S : subflags) {
      CM U(k, k);
      U.col(0) = Qf.col(0);
      U.rightCols(k - 1) = Q * S;
      out.push_back(U);
    }
  }
}

double form_dist(const CV& a, const CV& b, double scale) { return scale > 0 ? (a - b).norm() / scale : 0.0; }

bool forms_equal(const CV& a, const CV& b, double scale, const char* what) {
  const double d = form_dist(a, b, scale);
  if (d <= kEqTol) return true;
  if (d >= kGapTol) return false;
  throw Ambiguous(std::string(what) + ": weight distance " + std::to_string(d));
}

struct Analysis {
  int dim = 0;
  std::vector<CM> T;          // U^* X_j U, upper triangular
  std::vector<CV> pos;        // weight at each flag position
  std::vector<int> group;     // distinct-weight index of each position
  WeightTable table;
  double scale = 0;           // largest weight norm
  std::vector<Mat3> nil;      // basis of the nilpotent ideal
  int dim_E = 0;
  int char_rank = 0;
  bool nsq = false;
  ClassificationFeatures f;
};

// Orthonormal basis of span(mats); directions below tol * ref are noise.
std::vector<Mat3> span_basis(const std::vector<Mat3>& mats, double tol, double ref) {
  const int n = static_cast<int>(mats.size());
  if (n == 0) return {};
  RM A(9, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < 9; ++k) A(k, j) = mats[j].a[k];
  Eigen::JacobiSVD<RM> svd(A, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int r = 0;
  for (int k = 0; k < s.size(); ++k)
    if (s(k) > tol * ref) ++r;
  std::vector<Mat3> out;
  for (int c = 0; c < r; ++c) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m.a[k] = svd.matrixU()(k, c);
    out.push_back(m);
  }
  return out;
}

std::vector<Mat3> bracket_span(const std::vector<Mat3>& cur, double tol) {
  std::vector<Mat3> br;
  for (std::size_t a = 0; a < cur.size(); ++a)
    for (std::size_t b = a + 1; b < cur.size(); ++b) br.push_back(bracket(cur[a], cur[b]));
  return span_basis(br, tol, 1.0);
}

std::vector<int> derived_dims(const std::vector<Mat3>& mats, double tol) {
  double ref = 0;
  for (const auto& m : mats) ref = std::max(ref, m.frob());
  std::vector<Mat3> cur = span_basis(mats, tol, ref);
  std::vector<int> dims{static_cast<int>(cur.size())};
  while (!cur.empty()) {
    std::vector<Mat3> next = bracket_span(cur, tol);
    if (next.size() == cur.size()) break;
    dims.push_back(static_cast<int>(next.size()));
    cur = std::move(next);
  }
  return dims;
}

void require_valid(const LieAlgebraBasis& basis, double tol) {
  if (basis.size() < 1 || basis.size() > 9) throw InvalidAlgebra("basis must have 1 to 9 elements");
  for (const auto& m : basis.mats)
    if (!m.finite()) throw InvalidAlgebra("basis entries must be finite");
  const BasisCheck bc = check_basis(basis, tol);
  if (!bc.independent) throw InvalidAlgebra("basis elements are linearly dependent");
  if (!bc.closed)
    throw InvalidAlgebra("basis is not closed under brackets (residual " + std::to_string(bc.closure_residual) + ")");
}

Analysis analyze(const LieAlgebraBasis& basis) {
  Analysis a;
  a.dim = static_cast<int>(basis.size());
  std::vector<CM> ops;
  for (const auto& m : basis.mats) ops.push_back(to_cm(m));
  std::mt19937_64 rng(kSeed);

  std::vector<CM> flags;
  build_flags(ops, rng, flags);
  if (flags.empty()) throw TriangularizationFailure("no complete flag");

  // Prefer a flag in which equal weights sit next to each other.
  bool chosen = false;
  for (const auto& U : flags) {
    std::vector<CM> T;
    for (const auto& op : ops) T.push_back(U.adjoint() * op * U);
    for (std::size_t j = 0; j < T.size(); ++j) {
      double low = 0;
      for (int r = 1; r < 3; ++r)
        for (int c = 0; c < r; ++c) low = std::max(low, std::abs(T[j](r, c)));
      if (low > 1e-7 * std::max(1.0, ops[j].norm()) * ops[j].norm())
        throw TriangularizationFailure("flag does not triangularize the basis");
    }
    std::vector<CV> pos(3, CV(a.dim));
    for (int p = 0; p < 3; ++p)
      for (int j = 0; j < a.dim; ++j) pos[p](j) = T[j](p, p);
    double scale = 0;
    for (const auto& w : pos) scale = std::max(scale, w.norm());
    std::vector<int> group(3, -1);
    int ng = 0;
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < p && group[p] < 0; ++q)
        if (forms_equal(pos[p], pos[q], scale, "weights")) group[p] = group[q];
      if (group[p] < 0) group[p] = ng++;
    }
    const bool adjacent = !(group[0] == group[2] && group[1] != group[0]);
    if (!chosen || adjacent) {
      a.T = T;
      a.pos = pos;
      a.group = group;
      a.scale = scale;
      chosen = true;
      if (adjacent) break;
    }
  }

  const int ng = *std::max_element(a.group.begin(), a.group.end()) + 1;
  a.table.weights.assign(ng, std::vector<cplx>(a.dim, 0.0));
  a.table.multiplicity.assign(ng, 0);
  a.table.is_characteristic.assign(ng, false);
  for (int p = 0; p < 3; ++p) {
    const int g = a.group[p];
    ++a.table.multiplicity[g];
    for (int j = 0; j < a.dim; ++j) a.table.weights[g][j] += a.pos[p](j);
  }
  for (int g = 0; g < ng; ++g)
    for (auto& z : a.table.weights[g]) z /= double(a.table.multiplicity[g]);

  // common eigenvectors of the transposes
  std::vector<CM> opsT;
  for (const auto& op : ops) opsT.push_back(op.transpose());
  std::vector<int> char_groups;
  for (const auto& c : common_eigvecs(opsT, rng)) {
    a.dim_E += static_cast<int>(c.space.cols());
    int match = -1;
    for (int g = 0; g < ng && match < 0; ++g) {
      CV wg(a.dim);
      for (int j = 0; j < a.dim; ++j) wg(j) = a.table.weights[g][j];
      if (forms_equal(c.w, wg, a.scale, "characteristic weight")) match = g;
    }
    if (match < 0) {
      double d = 1e300;
      for (int g = 0; g < ng; ++g) {
        CV wg(a.dim);
        for (int j = 0; j < a.dim; ++j) wg(j) = a.table.weights[g][j];
        d = std::min(d, form_dist(c.w, wg, a.scale));
      }
      throw TriangularizationFailure("characteristic weight is not a weight (distance " + std::to_string(d) + ")");
    }
    a.table.is_characteristic[match] = true;
    char_groups.push_back(match);
  }
  std::sort(char_groups.begin(), char_groups.end());
  char_groups.erase(std::unique(char_groups.begin(), char_groups.end()), char_groups.end());
  if (!char_groups.empty()) {
    CM C(char_groups.size(), a.dim);
    for (std::size_t r = 0; r < char_groups.size(); ++r)
      for (int j = 0; j < a.dim; ++j) C(r, j) = a.table.weights[char_groups[r]][j];
    Eigen::JacobiSVD<CM> svd(C);
    a.char_rank = decide_rank(svd.singularValues(), kEqTol, kGapTol, "characteristic functions");
  }

  // nilpotent ideal from the trace radical of the real basis
  std::vector<RM> rops;
  for (const auto& m : basis.mats) rops.push_back(to_rm(m));
  for (const auto& N : nilpotent_elements(rops, "nilpotent ideal")) {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = N(i, j);
    if (m.frob() > 0) a.nil.push_back(m * (1.0 / m.frob()));
  }
  std::normal_distribution<double> N01;
  if (!a.nil.empty()) {
    // a single draw can land near the rank 1 locus; keep the best of a few
    RV best = RV::Zero(3);
    for (int t = 0; t < 4; ++t) {
      Mat3 N;
      for (const auto& m : a.nil) N += m * N01(rng);
      Eigen::JacobiSVD<RM> svd(to_rm(N));
      const RV sv = svd.singularValues() / svd.singularValues()(0);
      if (sv(1) > best(1)) best = sv;
    }
    a.nsq = decide_rank(best, kRankTol, kRankGap, "nilpotent rank") >= 2;
  }

  bool nonreal = false;
  for (const auto& w : a.pos) {
    const double im = a.scale > 0 ? w.imag().norm() / a.scale : 0.0;
    if (im > kEqTol && im < kGapTol) throw Ambiguous("weight is nearly real");
    nonreal = nonreal || im >= kGapTol;
  }

  a.f.solvable = true;
  a.f.weight_count = ng;
  a.f.has_nonreal_weight = nonreal;
  a.f.dim_nilpotent_ideal = static_cast<int>(a.nil.size());
  a.f.dim_characteristic_space = a.dim_E;
  a.f.nilpotent_square_nonzero = a.nsq;
  a.f.characteristic_rank = a.char_rank;
  return a;
}

ClassificationFeatures features_of(const LieAlgebraBasis& basis, double tol, Analysis* out = nullptr) {
  const auto dims = derived_dims(basis.mats, tol);
  Analysis a;
  if (dims.back() == 0) a = analyze(basis);
  a.f.derived_series_dims = dims;
  a.f.solvable = dims.back() == 0;
  a.f.abelian = dims.size() > 1 && dims[1] == 0;
  if (out) *out = a;
  return a.f;
}

// Least-squares r with x ~ r y; throws Ambiguous when x is not proportional to y.
double ratio(const CV& x, const CV& y, double scale, const char* what) {
  const double yy = y.squaredNorm();
  if (!(yy > 0)) throw Ambiguous(std::string(what) + ": zero reference form");
  const double r = std::real(y.dot(x)) / yy;
  const double res = scale > 0 ? (x - r * y).norm() / scale : 0.0;
  if (res > kEqTol) {
    if (res < kGapTol) throw Ambiguous(std::string(what) + ": nearly proportional forms");
    throw std::runtime_error(std::string(what) + ": forms are not proportional");
  }
  return r;
}

struct Found {
  Family family;
  FamilyParams params;
  std::vector<std::string> notes;
};

CV group_weight(const Analysis& a, int g) {
  CV w(a.dim);
  for (int j = 0; j < a.dim; ++j) w(j) = a.table.weights[g][j];
  return w;
}

int other_group(const Analysis& a, int g) {
  for (int h = 0; h < static_cast<int>(a.table.weights.size()); ++h)
    if (h != g) return h;
  return -1;
}

// Root of the one-dimensional nilpotent ideal: [X_j, N] = rho_j N.
CV root_form(const LieAlgebraBasis& basis, const Mat3& N) {
  CV rho(basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) rho(j) = dot(bracket(basis.mats[j], N), N) / dot(N, N);
  return rho;
}

// Superdiagonal coupling between adjacent equal weights, fitted as a rho + b w.
std::pair<double, double> jordan_fit(const Analysis& a, const CV& rho, const CV& w) {
  int p = -1;
  for (int q = 0; q < 2; ++q)
    if (a.group[q] == a.group[q + 1]) p = q;
  if (p < 0) throw std::runtime_error("equal weights are not adjacent in any flag");
  CV J(a.dim);
  for (int j = 0; j < a.dim; ++j) J(j) = a.T[j](p, p + 1);
  CM B(a.dim, 2);
  B.col(0) = rho;
  B.col(1) = w;
  const CV ab = B.colPivHouseholderQr().solve(J);
  const double res = (B * ab - J).norm() / J.norm();
  if (res > kEqTol) throw std::runtime_error("Jordan coupling is not a combination of root and weight");
  // J carries an arbitrary common phase; rotate it out
  const cplx ph = std::abs(ab(0)) >= std::abs(ab(1)) ? ab(0) : ab(1);
  const cplx u = std::conj(ph) / std::abs(ph);
  return {std::real(ab(0) * u), std::real(ab(1) * u)};
}

std::optional<Found> solvable_tree(const LieAlgebraBasis& basis, const Analysis& a, std::string& why) {
  const auto& f = a.f;
  const int wc = f.weight_count;
  auto mult = [&](int g) { return a.table.multiplicity[g]; };
  FamilyParams p;
  auto found = [&](Family fam) { return Found{fam, p, {}}; };

  if (f.abelian) {
    if (a.dim != 3) {
      why = "abelian of dimension " + std::to_string(a.dim);
      return std::nullopt;
    }
    if (f.has_nonreal_weight) return found(Family::F1b);
    if (wc == 3) return found(Family::F1a);
    if (wc == 2) return found(Family::F1c);
    return found(f.nilpotent_square_nonzero ? Family::F1d : Family::F1e);
  }

  if (f.has_nonreal_weight) {
    int greal = -1, gcx = -1;
    for (int g = 0; g < wc; ++g) {
      const CV w = group_weight(a, g);
      if (w.imag().norm() / a.scale < kEqTol) greal = g;
      else if (gcx < 0) gcx = g;
    }
    if (greal < 0 || gcx < 0 || f.dim_nilpotent_ideal != 2) {
      why = "complex weights without the expected real weight";
      return std::nullopt;
    }
    const CV gamma = group_weight(a, greal).real().cast<cplx>();
    const CV lam = group_weight(a, gcx);
    const CV re = lam.real().cast<cplx>(), im = lam.imag().cast<cplx>();
    if (a.dim == 3) {
      p.values = {{"a", ratio(re, gamma, a.scale, "2a")}, {"b", std::abs(ratio(im, gamma, a.scale, "2a"))}};
      return found(Family::F2a);
    }
    const double rel = re.norm() / lam.norm();
    if (rel > kEqTol && rel < kGapTol) throw Ambiguous("real part of the complex weight nearly vanishes");
    if (rel <= kEqTol) return found(Family::F2b);
    p.values = {{"a", ratio(gamma, re, a.scale, "2c")}};
    return found(Family::F2c);
  }

  if (a.dim != 3) {
    why = "non-abelian real-weight algebra of dimension " + std::to_string(a.dim);
    return std::nullopt;
  }
  const CV w1 = a.pos[0];
  const int g1 = a.group[0];

  if (f.dim_nilpotent_ideal == 2) {
    if (wc == 1) {
      p.values = {{"lambda", 1.0}};
      return found(f.nilpotent_square_nonzero ? Family::F2g : Family::F2f);
    }
    if (wc == 2) {
      const CV d = w1 - group_weight(a, other_group(a, g1));
      const double lambda = ratio(w1, d, a.scale, "lambda");
      if (f.dim_characteristic_space == 1) {
        if (mult(g1) != 1) {
          why = "double weight on the invariant line with one characteristic direction";
          return std::nullopt;
        }
        p.values = {{"lambda", lambda}, {"delta", 1.0}};
        return found(Family::F2h);
      }
      if (mult(g1) == 2) {
        p.values = {{"lambda", lambda}};
        return found(Family::F2d);
      }
      p.values = {{"lambda", lambda}, {"c", 1.0}};
      Found r = found(Family::F2e);
      r.notes.push_back("weights (lambda, lambda-1, lambda-1) with two characteristic directions: "
                        "the delta = 0 member of 2h, reported as 2e with c = 1");
      return r;
    }
    // three distinct weights
    CV d2 = w1 - a.pos[1], d3 = w1 - a.pos[2];
    if (f.nilpotent_square_nonzero) {
      if (d2.norm() > d3.norm()) std::swap(d2, d3);
      const double two = ratio(d3, d2, a.scale, "2i spacing");
      if (std::abs(two - 2.0) > 1e-6 * 2) {
        why = "nilpotent ideal of rank 2 but weights not equally spaced";
        return std::nullopt;
      }
      p.values = {{"lambda", ratio(w1, d2, a.scale, "lambda")}};
      return found(Family::F2i);
    }
    double c = ratio(d2, d3, a.scale, "c");
    std::vector<std::string> notes;
    if (std::abs(c) > 1) {
      c = 1.0 / c;
      std::swap(d2, d3);
      notes.push_back("c normalized to [-1, 1] by swapping the two nilpotent directions");
    }
    p.values = {{"lambda", ratio(w1, d3, a.scale, "lambda")}, {"c", c}};
    Found r = found(Family::F2e);
    r.notes = notes;
    return r;
  }

  if (f.dim_nilpotent_ideal == 1) {
    const Mat3 N = a.nil[0];
    const CV rho = root_form(basis, N);
    // center
    std::vector<Mat3> unit;
    for (const auto& m : basis.mats) unit.push_back(m * (1.0 / m.frob()));
    RM ad(9 * 3, 3);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const Mat3 b = bracket(unit[j], unit[k]);
        for (int e = 0; e < 9; ++e) ad(9 * k + e, j) = b.a[e];
      }
    const RM zc = null_space_real(ad, 3, "center");

    if (f.dim_characteristic_space == 1) {
      const CV w = group_weight(a, a.group[1] == a.group[2] ? a.group[1] : a.group[0]);
      auto [x, y] = jordan_fit(a, rho, w);
      const double sc = std::hypot(x, y);
      if (std::abs(x) / sc > kEqTol && std::abs(x) / sc < kGapTol) throw Ambiguous("delta1 nearly vanishes");
      if (std::abs(x) / sc <= kEqTol) p.values = {{"delta1", 0.0}, {"delta2", 1.0}};
      else p.values = {{"delta1", 1.0}, {"delta2", y / x}};
      return found(Family::F2n);
    }
    if (f.dim_characteristic_space != 2) {
      why = "characteristic space of dimension " + std::to_string(f.dim_characteristic_space);
      return std::nullopt;
    }
    if (f.characteristic_rank == 2 && wc == 2) {
      int geq = -1;
      for (int g = 0; g < wc; ++g)
        if (mult(g) == 2) geq = g;
      auto [x, y] = jordan_fit(a, rho, group_weight(a, geq));
      if (std::abs(x) <= kGapTol * std::hypot(x, y)) throw Ambiguous("nu1 nearly vanishes");
      p.values = {{"nu1", 1.0}, {"nu2", y / x}};
      return found(Family::F2l);
    }
    // pair (top, p) of positions with w_top - w_p = rho; q is the third position
    double best = 1e300, second = 1e300;
    int bi = -1, bk = -1;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        if (i == k || a.group[i] == a.group[k]) continue;
        const double d = form_dist(a.pos[i] - a.pos[k], rho, a.scale);
        if (d < best - kEqTol) {
          if (bi < 0 || a.group[i] != a.group[bi] || a.group[k] != a.group[bk]) second = best;
          best = d;
          bi = i;
          bk = k;
        } else if ((a.group[i] != a.group[bi] || a.group[k] != a.group[bk]) && d < second) {
          second = d;
        }
      }
    if (bi < 0 || best > kEqTol) {
      why = "no pair of weights differs by the root";
      return std::nullopt;
    }
    if (second < kGapTol) throw Ambiguous("two weight pairs differ by the root");
    const int q = 3 - bi - bk;
    const CV wp = a.pos[bk], wq = a.pos[q];
    if (f.characteristic_rank == 1) {
      p.values = {{"lambda", ratio(wq, wp, a.scale, "2m lambda")}};
      return found(Family::F2m);
    }
    if (wc != 3) {
      why = "independent characteristic functions with " + std::to_string(wc) + " weights";
      return std::nullopt;
    }
    if (zc.cols() != 1) {
      why = "center of dimension " + std::to_string(zc.cols());
      return std::nullopt;
    }
    Mat3 C;
    for (int j = 0; j < 3; ++j) C += unit[j] * zc(j, 0);
    Eigen::JacobiSVD<RM> svd(to_rm(C));
    const int crank = decide_rank(svd.singularValues(), kRankTol, kRankGap, "central element rank");
    if (crank == 2) {
      p.values = {{"lambda", ratio(wq, rho, a.scale, "2k lambda")}};
      return found(Family::F2k);
    }
    // w_p = lambda rho + c w_q
    RM B(a.dim, 2);
    B.col(0) = rho.real();
    B.col(1) = wq.real();
    const RV lc = B.colPivHouseholderQr().solve(RV(wp.real()));
    if ((B * lc - wp.real()).norm() > kEqTol * a.scale) {
      why = "weights do not fit the 2j pattern";
      return std::nullopt;
    }
    p.values = {{"lambda", lc(0)}, {"c", lc(1)}};
    return found(Family::F2j);
  }
  why = "nilpotent ideal of dimension " + std::to_string(f.dim_nilpotent_ideal);
  return std::nullopt;
}

// Killing form of the derived algebra: definite negative iff compact.
std::optional<Found> semisimple_branch(const LieAlgebraBasis& basis, double tol, std::string& why) {
  double ref = 0;
  for (const auto& m : basis.mats) ref = std::max(ref, m.frob());
  const auto d = bracket_span(span_basis(basis.mats, tol, ref), tol);
  if (d.size() != 3) {
    why = "derived algebra of dimension " + std::to_string(d.size());
    return std::nullopt;
  }
  BasisCoords bc(d);
  std::vector<RM> ad(3, RM(3, 3));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const auto c = bc.coords(bracket(d[a], d[b]));
      for (int k = 0; k < 3; ++k) ad[a](k, b) = c[k];
    }
  Mat3 K;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) K(a, b) = (ad[a] * ad[b]).trace();
  std::array<double, 3> w;
  Mat3 V;
  sym_eig3(K, w, V);
  // a conjugated basis spreads the eigenvalues; only the signs matter
  const double s = std::max(std::abs(w[0]), std::abs(w[2]));
  if (w[2] < -1e-10 * s) return Found{Family::F3a, {}, {}};
  if (w[2] > 1e-10 * s) {
    why = "semisimple part is not compact";
    return std::nullopt;
  }
  throw Ambiguous("Killing form nearly degenerate");
}

bool params_close(const FamilyParams& a, const FamilyParams& b) {
  for (const auto& [k, v] : a.values) {
    if (!b.has(k)) return false;
    if (std::abs(v - b.get(k)) > 1e-6 * std::max(1.0, std::abs(v))) return false;
  }
  return a.values.size() == b.values.size();
}

}  // namespace

int WeightTable::total_multiplicity() const { return std::accumulate(multiplicity.begin(), multiplicity.end(), 0); }

std::vector<int> derived_series_dims(const LieAlgebraBasis& basis, double tol) {
  require_valid(basis, tol);
  return derived_dims(basis.mats, tol);
}

WeightTable weights(const LieAlgebraBasis& basis) {
  require_valid(basis, kZeroTol);
  if (derived_dims(basis.mats, kZeroTol).back() != 0) throw InvalidAlgebra("weights need a solvable algebra");
  try {
    return analyze(basis).table;
  } catch (const Ambiguous& e) {
    throw TriangularizationFailure(e.what());
  }
}

int nilpotent_ideal_dim(const LieAlgebraBasis& basis, const WeightTable& table) {
  const int n = static_cast<int>(basis.size());
  RM W(2 * table.weights.size(), n);
  for (std::size_t g = 0; g < table.weights.size(); ++g)
    for (int j = 0; j < n; ++j) {
      W(2 * g, j) = table.weights[g][j].real();
      W(2 * g + 1, j) = table.weights[g][j].imag();
    }
  if (W.rows() == 0) return n;
  Eigen::JacobiSVD<RM> svd(W);
  const auto& s = svd.singularValues();
  int r = 0;
  for (int k = 0; k < s.size(); ++k)
    if (s(0) > 0 && s(k) > kEqTol * s(0)) ++r;
  return n - r;
}

int characteristic_space_dim(const LieAlgebraBasis& basis) {
  require_valid(basis, kZeroTol);
  if (derived_dims(basis.mats, kZeroTol).back() != 0)
    throw InvalidAlgebra("characteristic space needs a solvable algebra");
  try {
    return analyze(basis).dim_E;
  } catch (const Ambiguous& e) {
    throw TriangularizationFailure(e.what());
  }
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Family: return "family";
    case Verdict::Rejected: return "rejected";
    case Verdict::Indeterminate: return "indeterminate";
  }
  return "?";
}

std::string to_string(Gate g) {
  switch (g) {
    case Gate::None: return "none";
    case Gate::OpenOrbit: return "open-orbit";
    case Gate::CompactStabilizer: return "compact-stabilizer";
    case Gate::UnimodularG: return "unimodular";
  }
  return "?";
}

AdmissibilityVerdict check_admissible(const LieAlgebraBasis& basis, int n_probe, std::uint64_t seed) {
  if (n_probe < 1) throw std::invalid_argument("n_probe must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  std::vector<Vec3> pts;
  std::vector<double> quality;  // s_3 / s_1 of the orbit map
  for (int i = 0; i < n_probe; ++i) {
    Vec3 v(N01(rng), N01(rng), N01(rng));
    if (orbit_map_rank(basis, v) != 3) continue;
    RM M(3, basis.size());
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const Vec3 c = basis.mats[j].transpose() * v;
      for (int r = 0; r < 3; ++r) M(r, static_cast<Eigen::Index>(j)) = c[r];
    }
    Eigen::JacobiSVD<RM> svd(M);
    pts.push_back(v);
    quality.push_back(svd.singularValues()(2) / svd.singularValues()(0));
  }
  if (pts.empty()) return {false, Gate::OpenOrbit, "orbit map has rank below 3 at every probe"};
  // stabilizers along one orbit are conjugate; probes near the orbit boundary
  // only add rounding error
  const double best = *std::max_element(quality.begin(), quality.end());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (quality[i] < 0.1 * best) continue;
    const Vec3& v = pts[i];
    const auto st = stabilizer_algebra(basis, v);
    if (!st.compact) {
      std::ostringstream os;
      os.precision(6);
      os << "stabilizer of (" << v[0] << ", " << v[1] << ", " << v[2] << ") is not compact";
      return {false, Gate::CompactStabilizer, os.str()};
    }
  }
  // log Delta_G(exp X) = -(tr ad X + tr X)
  BasisCoords bc(basis.mats);
  bool nonzero = false;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    double tr_ad = 0;
    for (std::size_t k = 0; k < basis.size(); ++k) tr_ad += bc.coords(bracket(basis.mats[j], basis.mats[k]))[k];
    const double chi = tr_ad + basis.mats[j].trace();
    const double scale = (2.0 * basis.size() + 3.0) * basis.mats[j].frob();
    if (std::abs(chi) > 1e-9 * scale) nonzero = true;
  }
  if (!nonzero) return {false, Gate::UnimodularG, "modular function of G is identically 1"};
  return {true, Gate::None, ""};
}

ClassificationReport classify(const LieAlgebraBasis& basis, double tol) {
  if (basis.size() != 3 && basis.size() != 4) throw InvalidAlgebra("classification needs dimension 3 or 4");
  require_valid(basis, tol);
  ClassificationReport rep;
  std::optional<Found> cand;
  std::string why;
  try {
    Analysis a;
    rep.features = features_of(basis, tol, &a);
    if (rep.features.solvable) {
      try {
        cand = solvable_tree(basis, a, why);
      } catch (const Ambiguous&) {
        throw;
      } catch (const std::runtime_error& e) {
        why = e.what();
      }
    } else {
      cand = semisimple_branch(basis, tol, why);
    }
  } catch (const Ambiguous& e) {
    rep.verdict = Verdict::Indeterminate;
    rep.diagnostics.push_back(e.what());
    return rep;
  } catch (const TriangularizationFailure& e) {
    rep.verdict = Verdict::Indeterminate;
    rep.diagnostics.push_back(e.what());
    return rep;
  }

  const auto gate = check_admissible(basis);
  if (!gate.candidate) {
    rep.verdict = Verdict::Rejected;
    rep.reason = to_string(gate.failed) + ": " + gate.detail;
    return rep;
  }
  if (!cand) {
    rep.verdict = Verdict::Rejected;
    rep.reason = "not conjugate to a catalogue family: " + why;
    return rep;
  }
  const FamilyParams raw = with_defaults(cand->family, cand->params);
  const auto bad = validate_params(cand->family, raw);
  if (!bad.empty()) {
    rep.verdict = Verdict::Rejected;
    rep.reason = "recovered parameters violate " + bad.front();
    return rep;
  }
  const FamilyParams canon = canonical_params(cand->family, raw);

  // the canonical representative must reproduce the observed features
  try {
    const auto back = features_of(lie_basis(cand->family, canon), tol);
    if (!(back == rep.features)) {
      rep.verdict = Verdict::Indeterminate;
      rep.diagnostics.push_back("features of " + family_tag(cand->family) + " differ from the input");
      return rep;
    }
    if (!params_close(canon, canonical_params(cand->family, canon))) {
      rep.verdict = Verdict::Indeterminate;
      rep.diagnostics.push_back("canonical parameters are not stable");
      return rep;
    }
  } catch (const std::runtime_error& e) {
    rep.verdict = Verdict::Indeterminate;
    rep.diagnostics.push_back(std::string("feature check failed: ") + e.what());
    return rep;
  }

  rep.verdict = Verdict::Family;
  rep.family = cand->family;
  rep.params = canon;
  rep.notes = cand->notes;
  for (const auto& n : degeneracy_notes(cand->family, canon)) rep.notes.push_back(n);
  return rep;
}

}  // namespace adm3
