#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adm3/catalog.hpp"
#include "adm3/grid.hpp"

namespace adm3 {

// Where the spectrum must vanish: on the coordinate planes xi_a = 0 for the
// listed axes, or at the origin. r is the order per axis (total order for the
// origin kind).
struct VanishingPattern {
  enum class Kind { Axes, Origin };
  Kind kind = Kind::Axes;
  std::vector<int> axes;  // 1-based
  int r = 0;

  // Throws std::invalid_argument for axes outside {1,2,3}, duplicates or r < 0.
  void validate() const;
  bool operator==(const VanishingPattern&) const = default;
};

std::string to_string(const VanishingPattern& p);
// Inverse of to_string: "axes:1,3/r=2" or "origin/r=3".
VanishingPattern parse_pattern(const std::string& s);

// Pattern whose planes cover every component of the family's orbit complement.
VanishingPattern catalogue_pattern(Family f, int r);

// Fourier transform of a wavelet translated so that its center sits at 0.
class SpectrumModel {
 public:
  virtual ~SpectrumModel() = default;
  virtual cplx eval(const Vec3& xi) const = 0;
  // psi(center + x) where a closed form exists, else NaN.
  virtual double value(const Vec3& x) const;
};

struct Wavelet {
  Grid3 grid;
  std::vector<double> samples;
  VanishingPattern pattern;
  std::string generator_id;
  bool closed_form_spectrum = false;
  Vec3 center;
  Vec3 radius;  // half-widths of the support box around center
  std::shared_ptr<const SpectrumModel> model;

  // psi^(xi) up to the phase exp(-2 pi i center.xi).
  cplx spectrum(const Vec3& xi) const { return model->eval(xi); }
  // psi(center + x), NaN without a closed form.
  double value(const Vec3& x) const { return model->value(x); }
  double norm() const;
  // Throws std::invalid_argument on inconsistent or non-finite data.
  void validate() const;
};

struct BumpSpec {
  Vec3 radius{0.25, 0.25, 0.25};
  double smoothness = 1.0;  // s in exp(-s / (1 - t^2))
  Vec3 center;
};

// Radius 0.3 of the grid extent, smoothness 12, centered at the grid middle.
// The large exponent keeps aliasing of high derivatives below 1e-7 at 64^3.
BumpSpec default_bump(const Grid3& grid);

// Tensor bump prod_a exp(-s / (1 - ((x_a - c_a) / R_a)^2)), normalized to unit
// L2 norm on the grid quadrature.
Volume make_bump(const Grid3& grid, const BumpSpec& spec);

// Exact derivatives of the bump: prod over pattern axes of d^r/dx_a^r, or the
// Laplacian iterated ceil(r/2) times for the origin kind, scaled to unit L2
// norm on the grid. r = 0 returns the normalized bump.
Wavelet make_vanishing_wavelet(const VanishingPattern& pattern, const Grid3& grid, const BumpSpec& bump);
Wavelet make_vanishing_wavelet(const VanishingPattern& pattern, const Grid3& grid);

// Radial wavelet with psi^(xi) = A b((|xi| - (lo+hi)/2) / ((hi-lo)/2)), supported
// in lo <= |xi| <= hi, A chosen for unit L2 norm in the continuum.
Wavelet make_shell_wavelet(const Grid3& grid, double lo = 1.0, double hi = 2.0, double smoothness = 1.0);

// Samples with no closed form; the spectrum is interpolated from a 4x
// oversampled DFT.
Wavelet wavelet_from_samples(const Grid3& grid, std::vector<double> samples, const VanishingPattern& pattern,
                             std::string generator_id = "samples");

// Same wavelet scaled by alpha.
Wavelet scaled(const Wavelet& w, double alpha);

// Fourier transform of the 1-D bump exp(-s / (1 - t^2)) on (-1, 1).
double bump_hat(double eta, double smoothness = 1.0);

struct MomentCheck {
  bool pass = false;
  double worst = 0.0;  // worst residual relative to max |psi^|
  std::string worst_at;
  double spectrum_max = 0.0;
};

// Derivatives of psi^ of order < pattern.r transverse to each vanishing set,
// taken exactly from moment-weighted DFTs of the zero-padded samples.
MomentCheck verify_vanishing_moments(const Wavelet& psi, const VanishingPattern& pattern, double tol = 1e-6);

struct DecayReport {
  double min_slope = 0.0;
  std::vector<double> slopes;
};

// Log-log slope of |psi^| against the envelope A on random rays ending on the
// family's orbit complement.
DecayReport decay_slope(const Wavelet& psi, Family f, int n_rays = 12, std::uint64_t seed = 1);

struct QuadSpec {
  double rel_tol = 1e-3;
  double divergence_factor = 2.0;
  int max_levels = 40;
  // Per-level adaptive cubature target, relative to the running total.
  double cell_tol = 1e-5;
  std::size_t max_evals = 20'000'000;
};

struct QuadLevel {
  int level = 0;
  double core = 0.0;  // half-width of the unrefined region around the complement
  double value = 0.0;
  double error = 0.0;
  std::size_t evals = 0;
};

enum class AdmissibilityStatus { Converged, Divergent, Unresolved };

std::string to_string(AdmissibilityStatus s);

struct AdmissibilityResult {
  AdmissibilityStatus status = AdmissibilityStatus::Unresolved;
  double c_psi = 0.0;  // last estimate; meaningful for Converged
  double rel_change = 0.0;
  double box = 0.0;  // truncation half-width per axis
  std::vector<QuadLevel> history;

  bool finite() const { return status == AdmissibilityStatus::Converged; }
};

// Integral of |psi^|^2 Phi over the open orbits.
AdmissibilityResult admissibility_constant(const Wavelet& psi, const FamilySpec& fam, QuadSpec spec = {});

// Ratio of the pushforward of Haar measure under h -> h^T xi0 to Phi d xi.
// With it, the integral over H0 of F(h^T xi0) dh equals
// kappa * integral over the base orbit of F Phi d xi.
double orbit_measure_constant(const FamilySpec& fam);

// max(1, Delta_G(g)).
double control_weight(const FamilySpec& fam, const GroupElement& g);

}  // namespace adm3
