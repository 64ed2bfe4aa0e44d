#include "adm3/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace adm3 {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using F = Family;

Mat3 rot23(double t) {
  const double c = std::cos(t), s = std::sin(t);
  return Mat3{{1, 0, 0}, {0, c, -s}, {0, s, c}};
}

Mat3 rot_z(double t) {
  const double c = std::cos(t), s = std::sin(t);
  return Mat3{{c, -s, 0}, {s, c, 0}, {0, 0, 1}};
}

Mat3 j23() { return Mat3::E(3, 2) - Mat3::E(2, 3); }

double wrap_angle(double t) {
  double r = std::fmod(t, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

struct Row {
  Family f;
  const char* tag;
};

constexpr Row kTags[] = {
    {F::F1a, "1a"}, {F::F1b, "1b"}, {F::F1c, "1c"}, {F::F1d, "1d"}, {F::F1e, "1e"},
    {F::F2a, "2a"}, {F::F2b, "2b"}, {F::F2c, "2c"}, {F::F2d, "2d"}, {F::F2e, "2e"},
    {F::F2f, "2f"}, {F::F2g, "2g"}, {F::F2h, "2h"}, {F::F2i, "2i"}, {F::F2j, "2j"},
    {F::F2k, "2k"}, {F::F2l, "2l"}, {F::F2m, "2m"}, {F::F2n, "2n"}, {F::F3a, "3a"},
};

double p_or(const FamilyParams& p, const char* name, double fallback) {
  auto it = p.values.find(name);
  return it == p.values.end() ? fallback : it->second;
}

}  // namespace

const std::vector<Family>& all_families() {
  static const std::vector<Family> fams = [] {
    std::vector<Family> v;
    for (const auto& r : kTags) v.push_back(r.f);
    return v;
  }();
  return fams;
}

std::string family_tag(Family f) {
  for (const auto& r : kTags)
    if (r.f == f) return r.tag;
  return "?";
}

Family family_from_tag(std::string_view tag) {
  for (const auto& r : kTags)
    if (tag == r.tag) return r.f;
  throw std::invalid_argument("unknown family tag '" + std::string(tag) + "'");
}

bool is_solvable(Family f) { return f != F::F3a; }

double FamilyParams::get(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw std::out_of_range("missing parameter '" + name + "'");
  return it->second;
}

std::vector<ParamInfo> param_info(Family f) {
  switch (f) {
    case F::F2a: return {{"a", 0.5, "a real"}, {"b", 1.0, "b != 0"}};
    case F::F2c: return {{"a", 2.0, "a != 0"}};
    case F::F2d:
    case F::F2f:
    case F::F2g:
    case F::F2i:
    case F::F2k: return {{"lambda", 1.0, "lambda != 0"}};
    case F::F2e: return {{"lambda", 1.0, "lambda real"}, {"c", 0.5, "0 < |c| <= 1"}};
    case F::F2h: return {{"lambda", 1.0, "lambda != 0"}, {"delta", 1.0, "delta real"}};
    case F::F2j: return {{"lambda", 1.0, "lambda != 0"}, {"c", 0.5, "c != 1"}};
    case F::F2l: return {{"nu1", 1.0, "nu1 != 0"}, {"nu2", 0.5, "nu2 real"}};
    case F::F2m: return {{"lambda", 2.0, "lambda != 0"}};
    case F::F2n:
      return {{"delta1", 1.0, "(delta1, delta2) != (0, 0)"},
              {"delta2", 0.5, "(delta1, delta2) != (0, 0)"}};
    default: return {};
  }
}

FamilyParams default_params(Family f) {
  FamilyParams p;
  for (const auto& info : param_info(f)) p.values[info.name] = info.default_value;
  return p;
}

FamilyParams with_defaults(Family f, const FamilyParams& p) {
  FamilyParams out = p;
  for (const auto& info : param_info(f))
    if (!out.has(info.name)) out.values[info.name] = info.default_value;
  return out;
}

std::vector<std::string> validate_params(Family f, const FamilyParams& p) {
  std::vector<std::string> bad;
  const auto infos = param_info(f);
  for (const auto& [name, value] : p.values) {
    const bool known = std::any_of(infos.begin(), infos.end(), [&](const ParamInfo& i) { return i.name == name; });
    if (!known) bad.push_back("unknown parameter '" + name + "'");
    else if (!std::isfinite(value)) bad.push_back(name + " finite");
  }
  for (const auto& info : infos)
    if (!p.has(info.name)) bad.push_back("missing parameter '" + info.name + "'");
  if (!bad.empty()) return bad;

  auto nonzero = [&](const char* name) {
    if (p.get(name) == 0.0) bad.push_back(std::string(name) + " != 0");
  };
  switch (f) {
    case F::F2a: nonzero("b"); break;
    case F::F2c: nonzero("a"); break;
    case F::F2d:
    case F::F2f:
    case F::F2g:
    case F::F2h:
    case F::F2i:
    case F::F2k:
    case F::F2m: nonzero("lambda"); break;
    case F::F2e:
      nonzero("c");
      if (std::abs(p.get("c")) > 1.0) bad.push_back("|c| <= 1");
      break;
    case F::F2j:
      nonzero("lambda");
      if (p.get("c") == 1.0) bad.push_back("c != 1");
      break;
    case F::F2l: nonzero("nu1"); break;
    case F::F2n:
      if (p.get("delta1") == 0.0 && p.get("delta2") == 0.0) bad.push_back("(delta1, delta2) != (0, 0)");
      break;
    default: break;
  }
  return bad;
}

std::vector<std::string> degeneracy_notes(Family f, const FamilyParams& p) {
  std::vector<std::string> notes;
  if (f == F::F2e && p_or(p, "lambda", 1.0) == 0.0)
    notes.push_back("lambda = 0: the semidirect product is unimodular");
  if (f == F::F2j && p_or(p, "lambda", 1.0) == -1.0)
    notes.push_back("lambda = -1: the dual action has no open orbit");
  if (f == F::F2h && p_or(p, "delta", 1.0) == 0.0)
    notes.push_back("delta = 0: algebra is diagonalizable and coincides with 2e at c = 1");
  return notes;
}

FamilyParams canonical_params(Family f, const FamilyParams& in) {
  FamilyParams p = with_defaults(f, in);
  switch (f) {
    case F::F2a: p.values["b"] = std::abs(p.get("b")); break;
    case F::F2f:
    case F::F2g: p.values["lambda"] = 1.0; break;
    case F::F2h:
      if (p.get("delta") != 0.0) p.values["delta"] = 1.0;
      break;
    case F::F2e:
      if (p.get("c") == -1.0) p.values["lambda"] = std::abs(p.get("lambda"));
      break;
    case F::F2l:
      p.values["nu2"] = p.get("nu2") / p.get("nu1");
      p.values["nu1"] = 1.0;
      break;
    case F::F2n: {
      const double d1 = p.get("delta1"), d2 = p.get("delta2");
      if (d1 != 0.0) {
        p.values["delta1"] = 1.0;
        p.values["delta2"] = d2 / d1;
      } else {
        p.values["delta1"] = 0.0;
        p.values["delta2"] = 1.0;
      }
      break;
    }
    default: break;
  }
  return p;
}

std::vector<CoordInfo> chart_coords(Family f) {
  using K = CoordKind;
  switch (f) {
    case F::F1a: return {{"s1", K::Log}, {"s2", K::Log}, {"s3", K::Log}};
    case F::F1b: return {{"s", K::Log}, {"u", K::Log}, {"t", K::Angle}};
    case F::F1c: return {{"s", K::Log}, {"u", K::Log}, {"b", K::Additive}};
    case F::F1d:
    case F::F1e: return {{"s", K::Log}, {"b", K::Additive}, {"c", K::Additive}};
    case F::F2b:
    case F::F2c: return {{"r", K::Angle}, {"s", K::Log}, {"t1", K::Additive}, {"t2", K::Additive}};
    case F::F2j:
    case F::F2k:
    case F::F2l:
    case F::F2m:
    case F::F2n: return {{"s", K::Log}, {"u", K::Log}, {"t", K::Additive}};
    case F::F3a: return {{"theta", K::Angle}, {"phi", K::Polar}, {"omega", K::Angle}, {"t", K::Log}};
    default: return {{"s", K::Log}, {"t1", K::Additive}, {"t2", K::Additive}};
  }
}

Mat3 chart_to_matrix(Family f, const FamilyParams& p, const ChartPoint& pt) {
  const auto& x = pt.x;
  if (x.size() != chart_coords(f).size()) throw std::invalid_argument("chart point has wrong dimension");
  const double s = x[0];
  switch (f) {
    case F::F1a: return Mat3::diag(std::exp(x[0]), std::exp(x[1]), std::exp(x[2]));
    case F::F1b: {
      Mat3 m = rot23(x[2]) * std::exp(x[1]);
      m(0, 0) = std::exp(s);
      return m;
    }
    case F::F1c: {
      const double a = std::exp(s);
      return Mat3{{a, x[2], 0}, {0, a, 0}, {0, 0, std::exp(x[1])}};
    }
    case F::F1d: {
      const double a = std::exp(s);
      return Mat3{{a, x[1], x[2]}, {0, a, x[1]}, {0, 0, a}};
    }
    case F::F1e: {
      const double a = std::exp(s);
      return Mat3{{a, x[1], x[2]}, {0, a, 0}, {0, 0, a}};
    }
    case F::F2a: {
      Mat3 m = rot23(p.get("b") * s) * std::exp(p.get("a") * s);
      m(0, 0) = std::exp(s);
      m(0, 1) = x[1];
      m(0, 2) = x[2];
      return m;
    }
    case F::F2b:
    case F::F2c: {
      const double r = x[0], sc = x[1];
      const bool c = f == F::F2c;
      Mat3 m = rot23(r) * (c ? std::exp(sc) : 1.0);
      m(0, 0) = std::exp(c ? p.get("a") * sc : sc);
      m(0, 1) = x[2];
      m(0, 2) = x[3];
      return m;
    }
    case F::F2d: {
      const double l = p.get("lambda");
      return Mat3{{std::exp(l * s), x[1], x[2]}, {0, std::exp(l * s), 0}, {0, 0, std::exp((l - 1) * s)}};
    }
    case F::F2e: {
      const double l = p.get("lambda"), c = p.get("c");
      return Mat3{{std::exp(l * s), x[1], x[2]}, {0, std::exp((l - c) * s), 0}, {0, 0, std::exp((l - 1) * s)}};
    }
    case F::F2f: {
      const double a = std::exp(p.get("lambda") * s);
      return Mat3{{a, x[1], x[2]}, {0, a, a * s}, {0, 0, a}};
    }
    case F::F2g: {
      const double a = std::exp(p.get("lambda") * s);
      return Mat3{{a, x[1], x[2]}, {0, a, x[1] + a * s}, {0, 0, a}};
    }
    case F::F2h: {
      const double l = p.get("lambda"), d = p.get("delta");
      const double b = std::exp((l - 1) * s);
      return Mat3{{std::exp(l * s), x[1], x[2]}, {0, b, d * b * s}, {0, 0, b}};
    }
    case F::F2i: {
      const double l = p.get("lambda");
      return Mat3{{std::exp(l * s), x[1], x[2]},
                  {0, std::exp((l - 1) * s), x[1] * std::exp(-s)},
                  {0, 0, std::exp((l - 2) * s)}};
    }
    case F::F2j: {
      const double l = p.get("lambda"), c = p.get("c"), u = x[1];
      return Mat3{{std::exp((l + 1) * s + c * u), x[2], 0}, {0, std::exp(l * s + c * u), 0}, {0, 0, std::exp(u)}};
    }
    case F::F2k: {
      const double l = p.get("lambda"), u = x[1];
      return Mat3{{std::exp(s + u), x[2], 0}, {0, std::exp(u), 0}, {0, 0, std::exp(l * s)}};
    }
    case F::F2l: {
      const double u = x[1], b = std::exp(u);
      return Mat3{{b, x[2], b * (-p.get("nu1") * s + p.get("nu2") * u)}, {0, std::exp(s + u), 0}, {0, 0, b}};
    }
    case F::F2m: {
      const double u = x[1];
      return Mat3{{std::exp(s + u), x[2], 0}, {0, std::exp(u), 0}, {0, 0, std::exp(p.get("lambda") * u)}};
    }
    case F::F2n: {
      const double u = x[1], b = std::exp(u);
      return Mat3{{std::exp(s + u), 0, x[2]}, {0, b, b * (p.get("delta1") * s + p.get("delta2") * u)}, {0, 0, b}};
    }
    case F::F3a: return rot_z(x[0]) * rot23(x[1]) * rot_z(x[2]) * std::exp(x[3]);
  }
  throw std::logic_error("unhandled family");
}

LieAlgebraBasis lie_basis(Family f, const FamilyParams& p) {
  const Mat3 I = Mat3::identity();
  auto E = [](int i, int j) { return Mat3::E(i, j); };
  switch (f) {
    case F::F1a: return {{E(1, 1), E(2, 2), E(3, 3)}};
    case F::F1b: return {{E(1, 1), E(2, 2) + E(3, 3), j23()}};
    case F::F1c: return {{E(1, 1) + E(2, 2), E(3, 3), E(1, 2)}};
    case F::F1d: return {{I, E(1, 2) + E(2, 3), E(1, 3)}};
    case F::F1e: return {{I, E(1, 2), E(1, 3)}};
    case F::F2a: {
      const double a = p.get("a"), b = p.get("b");
      return {{E(1, 1) + (E(2, 2) + E(3, 3)) * a + j23() * b, E(1, 2), E(1, 3)}};
    }
    case F::F2b: return {{j23(), E(1, 1), E(1, 2), E(1, 3)}};
    case F::F2c: return {{j23(), E(1, 1) * p.get("a") + E(2, 2) + E(3, 3), E(1, 2), E(1, 3)}};
    case F::F2d: {
      const double l = p.get("lambda");
      return {{Mat3::diag(l, l, l - 1), E(1, 2), E(1, 3)}};
    }
    case F::F2e: {
      const double l = p.get("lambda"), c = p.get("c");
      return {{Mat3::diag(l, l - c, l - 1), E(1, 2), E(1, 3)}};
    }
    case F::F2f: return {{I * p.get("lambda") + E(2, 3), E(1, 2), E(1, 3)}};
    case F::F2g: return {{I * p.get("lambda") + E(2, 3), E(1, 2) + E(2, 3), E(1, 3)}};
    case F::F2h: {
      const double l = p.get("lambda");
      return {{Mat3::diag(l, l - 1, l - 1) + E(2, 3) * p.get("delta"), E(1, 2), E(1, 3)}};
    }
    case F::F2i: {
      const double l = p.get("lambda");
      return {{Mat3::diag(l, l - 1, l - 2), E(1, 2) + E(2, 3), E(1, 3)}};
    }
    case F::F2j: {
      const double l = p.get("lambda"), c = p.get("c");
      return {{Mat3::diag(l + 1, l, 0), Mat3::diag(c, c, 1), E(1, 2)}};
    }
    case F::F2k: return {{Mat3::diag(1, 0, p.get("lambda")), Mat3::diag(1, 1, 0), E(1, 2)}};
    case F::F2l: return {{E(2, 2) - E(1, 3) * p.get("nu1"), I + E(1, 3) * p.get("nu2"), E(1, 2)}};
    case F::F2m: return {{E(1, 1), Mat3::diag(1, 1, p.get("lambda")), E(1, 2)}};
    case F::F2n: return {{E(1, 1) + E(2, 3) * p.get("delta1"), I + E(2, 3) * p.get("delta2"), E(1, 3)}};
    case F::F3a: return {{E(2, 1) - E(1, 2), E(3, 2) - E(2, 3), E(3, 1) - E(1, 3), I}};
  }
  throw std::logic_error("unhandled family");
}

std::vector<Mat3> finite_extension(Family f) {
  std::vector<Mat3> out;
  auto signs = [&](bool e1, bool e2, bool e3) {
    for (int a = 0; a < (e1 ? 2 : 1); ++a)
      for (int b = 0; b < (e2 ? 2 : 1); ++b)
        for (int c = 0; c < (e3 ? 2 : 1); ++c) out.push_back(Mat3::diag(a ? -1 : 1, b ? -1 : 1, c ? -1 : 1));
  };
  switch (f) {
    case F::F1a: signs(true, true, true); break;
    case F::F1b: signs(true, false, false); break;
    case F::F1c:
      for (int a : {1, -1})
        for (int c : {1, -1}) out.push_back(Mat3::diag(a, a, c));
      break;
    case F::F2j:
    case F::F2k:
    case F::F2m: signs(true, false, true); break;
    case F::F2l: signs(true, false, false); break;
    case F::F2n: signs(true, true, false); break;
    case F::F3a: out.push_back(Mat3::identity()); break;
    default:
      out.push_back(Mat3::identity());
      out.push_back(-Mat3::identity());
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------

BasisCoords::BasisCoords(const std::vector<Mat3>& basis) : n_(basis.size()) {
  q_.resize(n_);
  r_.assign(n_ * n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    Mat3 v = basis[j];
    // two passes of modified Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < j; ++i) {
        const double c = dot(q_[i], v);
        r_[i * n_ + j] += c;
        v -= q_[i] * c;
      }
    const double nv = v.frob();
    r_[j * n_ + j] = nv;
    const double scale = basis[j].frob();
    q_[j] = (nv > 1e-14 * scale && nv > 0) ? v * (1.0 / nv) : Mat3{};
    if (!(nv > 1e-14 * scale)) r_[j * n_ + j] = 0.0;
  }
}

std::vector<double> BasisCoords::coords(const Mat3& X) const {
  std::vector<double> y(n_), c(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) y[i] = dot(q_[i], X);
  for (std::size_t ii = n_; ii-- > 0;) {
    const double d = r_[ii * n_ + ii];
    if (d == 0.0) continue;
    double acc = y[ii];
    for (std::size_t k = ii + 1; k < n_; ++k) acc -= r_[ii * n_ + k] * c[k];
    c[ii] = acc / d;
  }
  return c;
}

double BasisCoords::residual(const Mat3& X) const {
  const double nx = X.frob();
  if (nx == 0.0) return 0.0;
  Mat3 v = X;
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t i = 0; i < n_; ++i) v -= q_[i] * dot(q_[i], v);
  return v.frob() / nx;
}

BasisCheck check_basis(const LieAlgebraBasis& b, double tol) {
  BasisCheck out;
  const std::size_t n = b.size();
  std::vector<Mat3> qs;
  out.independent = n > 0;
  for (const auto& X : b.mats) {
    const double nx = X.frob();
    Mat3 v = X;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : qs) v -= q * dot(q, v);
    const double nv = v.frob();
    if (!(nx > 0) || nv <= tol * nx) {
      out.independent = false;
      break;
    }
    qs.push_back(v * (1.0 / nv));
  }
  if (!out.independent) return out;
  BasisCoords bc(b.mats);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Mat3 br = bracket(b.mats[i], b.mats[j]);
      const double scale = b.mats[i].frob() * b.mats[j].frob();
      worst = std::max(worst, bc.residual(br) * br.frob() / scale);
    }
  out.closure_residual = worst;
  out.closed = worst <= tol;
  return out;
}

double small_det(std::vector<double> a, std::size_t n) {
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
    if (a[piv * n + k] == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      det = -det;
    }
    det *= a[k * n + k];
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a[i * n + k] / a[k * n + k];
      for (std::size_t j = k; j < n; ++j) a[i * n + j] -= m * a[k * n + j];
    }
  }
  return det;
}

std::vector<double> adjoint_matrix(const LieAlgebraBasis& b, const BasisCoords& bc, const Mat3& g) {
  const std::size_t n = b.size();
  const Mat3 gi = inv3(g);
  std::vector<double> ad(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto c = bc.coords(g * b.mats[j] * gi);
    for (std::size_t i = 0; i < n; ++i) ad[i * n + j] = c[i];
  }
  return ad;
}

// ---------------------------------------------------------------------------

FamilySpec::FamilySpec(Family f, FamilyParams p) : id_(f), params_(with_defaults(f, p)) {
  const auto bad = validate_params(f, params_);
  if (!bad.empty()) {
    std::string msg = "invalid parameters for family " + family_tag(f) + ":";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw InvalidParams(msg);
  }
  coords_ = chart_coords(f);
  basis_ = adm3::lie_basis(f, params_);
  coords_solver_ = std::make_shared<BasisCoords>(basis_.mats);
  chi_.assign(coords_.size(), 0.0);
  for (std::size_t j = 0; j < coords_.size(); ++j) {
    if (coords_[j].kind != CoordKind::Log) continue;
    ChartPoint e{std::vector<double>(coords_.size(), 0.0)};
    e.x[j] = 1.0;
    chi_[j] = std::log(delta_G(chart_to_matrix(e)));
  }
}

Mat3 FamilySpec::chart_to_matrix(const ChartPoint& p) const { return adm3::chart_to_matrix(id_, params_, p); }

ChartPoint FamilySpec::matrix_to_chart(const Mat3& M) const {
  auto L = [](double v) { return std::log(std::abs(v)); };
  std::vector<double> x;
  switch (id_) {
    case F::F1a: x = {L(M(0, 0)), L(M(1, 1)), L(M(2, 2))}; break;
    case F::F1b: {
      const double d = M(1, 1) * M(2, 2) - M(1, 2) * M(2, 1);
      x = {L(M(0, 0)), 0.5 * L(d), std::atan2(M(2, 1), M(1, 1))};
      break;
    }
    case F::F1c: x = {L(M(0, 0)), L(M(2, 2)), M(0, 1)}; break;
    case F::F1d:
    case F::F1e: x = {L(M(0, 0)), M(0, 1), M(0, 2)}; break;
    case F::F2a: x = {L(M(0, 0)), M(0, 1), M(0, 2)}; break;
    case F::F2b: x = {std::atan2(M(2, 1), M(1, 1)), L(M(0, 0)), M(0, 1), M(0, 2)}; break;
    case F::F2c: {
      const double d = M(1, 1) * M(2, 2) - M(1, 2) * M(2, 1);
      x = {std::atan2(M(2, 1), M(1, 1)), 0.5 * L(d), M(0, 1), M(0, 2)};
      break;
    }
    case F::F2d:
    case F::F2e: x = {L(M(0, 0) / M(2, 2)), M(0, 1), M(0, 2)}; break;
    case F::F2f:
    case F::F2g: x = {L(M(0, 0)) / params_.get("lambda"), M(0, 1), M(0, 2)}; break;
    case F::F2h:
    case F::F2i: x = {L(M(0, 0) / M(1, 1)), M(0, 1), M(0, 2)}; break;
    case F::F2j: x = {L(M(0, 0) / M(1, 1)), L(M(2, 2)), M(0, 1)}; break;
    case F::F2k:
    case F::F2m: x = {L(M(0, 0) / M(1, 1)), L(M(1, 1)), M(0, 1)}; break;
    case F::F2l: x = {L(M(1, 1) / M(0, 0)), L(M(0, 0)), M(0, 1)}; break;
    case F::F2n: x = {L(M(0, 0) / M(1, 1)), L(M(1, 1)), M(0, 2)}; break;
    case F::F3a: {
      const double d = M.det();
      const double t = std::log(std::abs(d)) / 3.0;
      const Mat3 R = M * std::exp(-t);
      const double phi = std::acos(std::clamp(R(2, 2), -1.0, 1.0));
      double theta = 0, omega = 0;
      if (std::sin(phi) > 1e-12) {
        theta = std::atan2(R(0, 2), -R(1, 2));
        omega = std::atan2(R(2, 0), R(2, 1));
      } else {
        theta = std::atan2(R(1, 0), R(0, 0));
      }
      x = {theta, phi, omega, t};
      break;
    }
  }
  return canonicalize(ChartPoint{x});
}

double FamilySpec::chart_residual(const Mat3& M) const {
  const double n = M.frob();
  const Mat3 back = chart_to_matrix(matrix_to_chart(M));
  return (back - M).frob() / (n > 0 ? n : 1.0);
}

ChartPoint FamilySpec::canonicalize(ChartPoint p) const {
  for (std::size_t j = 0; j < coords_.size() && j < p.x.size(); ++j)
    if (coords_[j].kind == CoordKind::Angle) p.x[j] = wrap_angle(p.x[j]);
  return p;
}

GroupElement FamilySpec::element(const ChartPoint& p) const {
  ChartPoint c = canonicalize(p);
  return GroupElement{id_, params_, c, chart_to_matrix(c)};
}

GroupElement FamilySpec::element_from_matrix(const Mat3& M) const {
  if (chart_residual(M) > 1e-8) throw std::domain_error("matrix is not in the chart image of family " + tag());
  return element(matrix_to_chart(M));
}

GroupElement FamilySpec::identity() const { return element(ChartPoint{std::vector<double>(coords_.size(), 0.0)}); }

std::vector<Mat3> FamilySpec::finite_extension() const { return adm3::finite_extension(id_); }

double FamilySpec::delta_H(const Mat3& g) const {
  const auto ad = adjoint_matrix(basis_, *coords_solver_, g);
  return 1.0 / std::abs(small_det(ad, basis_.size()));
}

double FamilySpec::delta_G(const Mat3& g) const { return delta_H(g) / std::abs(g.det()); }

double FamilySpec::delta_G_chart(const ChartPoint& p) const {
  double e = 0.0;
  for (std::size_t j = 0; j < chi_.size(); ++j) e += chi_[j] * p.x[j];
  return std::exp(e);
}

double FamilySpec::haar_density(const ChartPoint& p) const {
  // |det| of the left Maurer-Cartan form g^-1 dg in basis coordinates
  const std::size_t n = coords_.size();
  const Mat3 gi = inv3(chart_to_matrix(p));
  std::vector<double> J(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(p.x[j]));
    ChartPoint lo = p, hi = p;
    lo.x[j] -= h;
    hi.x[j] += h;
    const Mat3 d = (chart_to_matrix(hi) - chart_to_matrix(lo)) * (1.0 / (2 * h));
    const auto c = coords_solver_->coords(gi * d);
    for (std::size_t i = 0; i < n; ++i) J[i * n + j] = c[i];
  }
  return std::abs(small_det(J, n));
}

ChartPoint FamilySpec::sample_point(std::mt19937_64& rng, double spread) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChartPoint p;
  const double add = spread * std::exp(spread);
  for (const auto& c : coords_) {
    const double u = unit(rng);
    switch (c.kind) {
      case CoordKind::Log: p.x.push_back(spread * (2 * u - 1)); break;
      case CoordKind::Additive: p.x.push_back(add * (2 * u - 1)); break;
      case CoordKind::Angle: p.x.push_back(kTwoPi * u); break;
      case CoordKind::Polar: p.x.push_back(std::acos(1 - 2 * u)); break;
    }
  }
  return canonicalize(p);
}

std::vector<GroupElement> FamilySpec::sample_elements(std::size_t n, std::uint64_t seed, double spread) const {
  if (n < 1 || !(spread > 0)) throw std::invalid_argument("sample_elements needs n >= 1 and spread > 0");
  std::mt19937_64 rng(seed);
  std::vector<GroupElement> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(element(sample_point(rng, spread)));
  return out;
}

double delta_H(const FamilySpec& fam, const GroupElement& g) { return fam.delta_H(g.matrix); }
double delta_G(const FamilySpec& fam, const GroupElement& g) { return fam.delta_G(g.matrix); }
double haar_density(const FamilySpec& fam, const ChartPoint& x) { return fam.haar_density(x); }
std::vector<GroupElement> sample_elements(const FamilySpec& fam, std::size_t n, std::uint64_t seed, double spread) {
  return fam.sample_elements(n, seed, spread);
}

}  // namespace adm3
