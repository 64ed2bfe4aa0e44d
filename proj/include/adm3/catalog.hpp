#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "adm3/mat3.hpp"

namespace adm3 {

enum class Family {
  F1a, F1b, F1c, F1d, F1e,
  F2a, F2b, F2c, F2d, F2e, F2f, F2g, F2h, F2i, F2j, F2k, F2l, F2m, F2n,
  F3a
};

const std::vector<Family>& all_families();
std::string family_tag(Family f);
// Throws std::invalid_argument for unknown tags.
Family family_from_tag(std::string_view tag);
bool is_solvable(Family f);

struct FamilyParams {
  std::map<std::string, double> values;

  double get(const std::string& name) const;
  bool has(const std::string& name) const { return values.count(name) != 0; }
  bool operator==(const FamilyParams&) const = default;
};

struct ParamInfo {
  std::string name;
  double default_value;
  std::string constraint;  // human-readable domain, e.g. "lambda != 0"
};

std::vector<ParamInfo> param_info(Family f);
FamilyParams default_params(Family f);
// Fills parameters missing from p with defaults.
FamilyParams with_defaults(Family f, const FamilyParams& p);
// Empty when the family's constraint set holds, else the violated constraint names.
std::vector<std::string> validate_params(Family f, const FamilyParams& p);
// Parameter values that pass validation but yield a degenerate group
// (for example a unimodular G); reported as diagnostics only.
std::vector<std::string> degeneracy_notes(Family f, const FamilyParams& p);
// Representative of the conjugacy class of lie_basis(f, p). Parameters that a
// conjugation can rescale are normalized (see README, "Parameter invariants").
FamilyParams canonical_params(Family f, const FamilyParams& p);

enum class CoordKind { Log, Additive, Angle, Polar };

struct CoordInfo {
  std::string name;
  CoordKind kind;
};

std::vector<CoordInfo> chart_coords(Family f);

struct ChartPoint {
  std::vector<double> x;
  bool operator==(const ChartPoint&) const = default;
};

struct InvalidParams : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct LieAlgebraBasis {
  std::vector<Mat3> mats;
  std::size_t size() const { return mats.size(); }
};

// Least-squares coordinates of matrices with respect to a basis.
class BasisCoords {
 public:
  explicit BasisCoords(const std::vector<Mat3>& basis);
  std::vector<double> coords(const Mat3& X) const;
  // Relative distance of X from the span.
  double residual(const Mat3& X) const;
  std::size_t size() const { return n_; }

 private:
  // Modified Gram-Schmidt factors: basis = Q R with orthonormal Q.
  std::vector<Mat3> q_;
  std::vector<double> r_;
  std::size_t n_ = 0;
};

struct BasisCheck {
  bool independent = false;
  bool closed = false;
  double closure_residual = 0;
};

BasisCheck check_basis(const LieAlgebraBasis& b, double tol = kZeroTol);

class FamilySpec;

struct GroupElement {
  Family family;
  FamilyParams params;
  ChartPoint point;
  Mat3 matrix;
};

// A validated catalogue family with cached Lie algebra data.
class FamilySpec {
 public:
  // Throws InvalidParams when validate_params reports violations.
  FamilySpec(Family f, FamilyParams p);
  explicit FamilySpec(Family f) : FamilySpec(f, default_params(f)) {}

  Family id() const { return id_; }
  const FamilyParams& params() const { return params_; }
  std::string tag() const { return family_tag(id_); }
  std::size_t dim() const { return basis_.size(); }
  const std::vector<CoordInfo>& coords() const { return coords_; }

  Mat3 chart_to_matrix(const ChartPoint& p) const;
  // Closed-form readback; angles canonicalized.
  ChartPoint matrix_to_chart(const Mat3& M) const;
  // Relative residual ||chart(readback(M)) - M|| / ||M||.
  double chart_residual(const Mat3& M) const;
  ChartPoint canonicalize(ChartPoint p) const;
  GroupElement element(const ChartPoint& p) const;
  GroupElement element_from_matrix(const Mat3& M) const;
  GroupElement identity() const;

  const LieAlgebraBasis& lie_basis() const { return basis_; }
  const BasisCoords& basis_coords() const { return *coords_solver_; }
  std::vector<Mat3> finite_extension() const;

  double delta_H(const Mat3& g) const;
  double delta_G(const Mat3& g) const;
  // exp of a linear form in the log coordinates; equals delta_G(chart(p)).
  double delta_G_chart(const ChartPoint& p) const;
  const std::vector<double>& modular_character() const { return chi_; }
  double haar_density(const ChartPoint& p) const;

  std::vector<GroupElement> sample_elements(std::size_t n, std::uint64_t seed, double spread) const;
  ChartPoint sample_point(std::mt19937_64& rng, double spread) const;

 private:
  Family id_;
  FamilyParams params_;
  std::vector<CoordInfo> coords_;
  LieAlgebraBasis basis_;
  std::shared_ptr<BasisCoords> coords_solver_;
  std::vector<double> chi_;
};

// Free-function forms mirroring the catalogue operations.
Mat3 chart_to_matrix(Family f, const FamilyParams& p, const ChartPoint& x);
LieAlgebraBasis lie_basis(Family f, const FamilyParams& p);
std::vector<Mat3> finite_extension(Family f);
double delta_H(const FamilySpec& fam, const GroupElement& g);
double delta_G(const FamilySpec& fam, const GroupElement& g);
double haar_density(const FamilySpec& fam, const ChartPoint& x);
std::vector<GroupElement> sample_elements(const FamilySpec& fam, std::size_t n, std::uint64_t seed,
                                          double spread);

// Coordinates of Ad_g on the basis: column j holds coords(g X_j g^-1).
std::vector<double> adjoint_matrix(const LieAlgebraBasis& b, const BasisCoords& bc, const Mat3& g);
double small_det(std::vector<double> a, std::size_t n);

}  // namespace adm3
