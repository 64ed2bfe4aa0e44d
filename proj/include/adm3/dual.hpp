#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "adm3/catalog.hpp"

namespace adm3 {

// h^-T xi. Throws SingularMatrix for singular h.
Vec3 dual_act(const Mat3& h, const Vec3& xi);

// Rank of the 3 x n matrix whose j-th column is X_j^T v.
int orbit_map_rank(const LieAlgebraBasis& basis, const Vec3& v, double tol = kZeroTol);

struct PrecompactConfig {
  double t_max = 50.0;
  double norm_bound = 1e6;
};

struct PrecompactResult {
  bool precompact = false;
  double max_norm_observed = 0.0;
  // Spectrum purely imaginary and X not a nonzero nilpotent.
  bool spectral_ok = false;
};

// Sweeps ||exp(tX)|| over t in +-[2^-4, t_max] geometrically. Unipotent
// generators grow only polynomially, so the spectral test is applied as well.
PrecompactResult is_precompact_oneparam(const Mat3& X, PrecompactConfig cfg = {});

struct StabilizerReport {
  Vec3 point;
  std::vector<Mat3> algebra_generators;  // Frobenius-orthonormal
  int dimension = 0;
  bool compact = true;
  double max_norm_observed = 0.0;
};

StabilizerReport stabilizer_algebra(const LieAlgebraBasis& basis, const Vec3& v, double tol = kZeroTol,
                                    PrecompactConfig cfg = {});

enum class CellSign { Pos, Neg, Free, PairNonzero };

// Sign pattern of one open orbit. PairNonzero coordinates must not vanish together.
struct OrbitCell {
  std::array<CellSign, 3> c;
  bool contains(const Vec3& xi) const;
};

struct OrbitChart {
  Family family;
  std::vector<OrbitCell> open_orbits;
  // Complement of the open orbits as a union of coordinate subspaces; each
  // entry lists the (0-based) coordinates that vanish on that subspace.
  std::vector<std::vector<int>> oc_components;
  std::vector<Vec3> base_points;  // base_points[i] lies in open_orbits[i]

  double dist_to_complement(const Vec3& xi) const;
  // Index of the open orbit containing xi, or -1.
  int orbit_index(const Vec3& xi) const;
};

const OrbitChart& orbit_chart(Family f);

double envelope_A(Family f, const Vec3& xi);

struct NotInOpenOrbit : std::domain_error {
  using std::domain_error::domain_error;
};

// sigma(xi) in H0 with sigma(xi)^T xi0 = xi, xi0 the base point of xi's orbit.
// Throws std::overflow_error when sigma has entries outside double range
// (2l far from the axis xi1 = 0 relative to xi3).
GroupElement cross_section(const FamilySpec& fam, const Vec3& xi);
double phi(const FamilySpec& fam, const Vec3& xi);

// Random open-orbit points: random signs, log-uniform magnitudes in [0.1, 10].
std::vector<Vec3> sample_orbit_points(Family f, std::size_t n, std::uint64_t seed);
// Random points of the orbit complement.
std::vector<Vec3> sample_complement_points(Family f, std::size_t n, std::uint64_t seed);

struct ProbePoint {
  Vec3 xi;
  double value;  // A(xi)^e * max(||sigma||, ||sigma^-1||)
};

struct AtomScanReport {
  double e = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  double sup_b = 0, sup_b_10x = 0, ratio_b = 0;
  bool bounded_b = false;
  double sup_a = 0, sup_a_10x = 0, ratio_a = 0;
  bool bounded_a = false;
  std::string probe_kind;
  std::vector<ProbePoint> probe;
  // Probe value grew by at least 10x from first to last step, monotonically.
  bool probe_diverges = false;
};

// Exponent used by default for the part (b) scan of each family.
double default_atom_exponent(const FamilySpec& fam);

AtomScanReport atom_criterion_scan(const FamilySpec& fam, double e, std::size_t n_samples, std::uint64_t seed);

}  // namespace adm3
