#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "adm3/catalog.hpp"

namespace adm3 {

struct InvalidAlgebra : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// No common eigenvector found within tolerance: the input is not solvable or
// is too ill-conditioned to triangularize.
struct TriangularizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Distinct weights of a solvable algebra. Each weight is stored as its values
// on the input basis, so weights[k][j] = lambda_k(X_j).
struct WeightTable {
  std::vector<std::vector<cplx>> weights;
  std::vector<int> multiplicity;
  std::vector<bool> is_characteristic;

  int total_multiplicity() const;
};

// Dimensions of h, [h,h], [[h,h],[h,h]], ... until the series stabilizes.
// Throws InvalidAlgebra when the basis is not closed under brackets.
std::vector<int> derived_series_dims(const LieAlgebraBasis& basis, double tol = kZeroTol);

// Throws InvalidAlgebra for non-solvable input, TriangularizationFailure when
// triangularization breaks down.
WeightTable weights(const LieAlgebraBasis& basis);
int nilpotent_ideal_dim(const LieAlgebraBasis& basis, const WeightTable& table);
// Complex dimension of the span of common eigenvectors of the transposes.
int characteristic_space_dim(const LieAlgebraBasis& basis);

struct ClassificationFeatures {
  bool solvable = false;
  bool abelian = false;
  int weight_count = 0;  // distinct weights
  bool has_nonreal_weight = false;
  int dim_nilpotent_ideal = 0;
  int dim_characteristic_space = 0;
  std::vector<int> derived_series_dims;
  bool nilpotent_square_nonzero = false;  // some X in the nilpotent ideal has X^2 != 0
  int characteristic_rank = 0;             // rank of the distinct characteristic functions

  bool operator==(const ClassificationFeatures&) const = default;
};

enum class Verdict { Family, Rejected, Indeterminate };

struct ClassificationReport {
  Verdict verdict = Verdict::Indeterminate;
  Family family = Family::F1a;  // meaningful for Verdict::Family
  FamilyParams params;          // canonical representative
  std::string reason;           // rejection reason
  std::vector<std::string> diagnostics;
  std::vector<std::string> notes;
  ClassificationFeatures features;
};

std::string to_string(Verdict v);

// Throws InvalidAlgebra unless the basis is independent, closed, of dimension 3 or 4.
ClassificationReport classify(const LieAlgebraBasis& basis, double tol = kZeroTol);

enum class Gate { None, OpenOrbit, CompactStabilizer, UnimodularG };

struct AdmissibilityVerdict {
  bool candidate = false;
  Gate failed = Gate::None;
  std::string detail;
};

std::string to_string(Gate g);

// Open orbit (rank scan), compact stabilizers and nonunimodular G, probed at
// n_probe random points.
AdmissibilityVerdict check_admissible(const LieAlgebraBasis& basis, int n_probe = 16, std::uint64_t seed = 1);

}  // namespace adm3
