#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "adm3/catalog.hpp"
#include "adm3/grid.hpp"
#include "adm3/wavelet.hpp"

namespace adm3 {

struct IncompatibleGrid : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DilationNode {
  ChartPoint point;
  int ext = 0;  // index into finite_extension(); the node is F[ext] * chart(point)
  Mat3 h;
  double weight = 0.0;  // haar_density(point) * chart cell / |det h|
};

struct DilationGrid {
  Family family = Family::F1a;
  FamilyParams params;
  double spread = 0.0;
  double shear = 0.0;  // half-width of additive coordinates
  std::vector<int> steps;
  double cell = 0.0;   // chart cell volume
  double kappa = 1.0;  // orbit_measure_constant of the family
  std::vector<DilationNode> nodes;

  double total_weight() const;
};

// Tensor grid over the chart: log coordinates uniform in [-spread, spread],
// additive ones in [-shear, shear] (cell midpoints), angles at 2 pi k / n,
// polar angles at cell midpoints of [0, pi]. Every node is repeated for each
// element of the finite extension unless identity_component_only is set.
DilationGrid build_dilation_grid(const FamilySpec& fam, double spread, const std::vector<int>& steps, double shear,
                                 bool identity_component_only = false);
DilationGrid build_dilation_grid(const FamilySpec& fam, double spread, int steps);

// Default grid: spread 3, shear 4, 12 steps on every log or additive
// coordinate and 8 on every angle. refine multiplies each step count.
std::vector<int> default_steps(const FamilySpec& fam, int refine = 1);
DilationGrid default_dilation_grid(const FamilySpec& fam, int refine = 1);
inline constexpr double kDefaultSpread = 3.0;
inline constexpr double kDefaultShear = 4.0;

// Grid with caller-chosen nodes in the identity component, all with the same
// chart cell volume.
DilationGrid dilation_grid_from_points(const FamilySpec& fam, const std::vector<ChartPoint>& points, double cell);

// Real test volume, unit norm, whose DFT is a Gaussian of width sigma around
// each of (+-k0, +-k0, +-k0), cut off at 3 sigma. Frequencies in cycles per
// length unit; the cut-off must stay below Nyquist.
Volume band_volume(const Grid3& grid, double k0, double sigma);

struct Coefficients {
  Grid3 grid;
  Family family = Family::F1a;
  FamilyParams params;
  std::string wavelet_id;
  std::vector<DilationNode> nodes;
  std::vector<std::vector<cplx>> data;  // one array per node, Volume index order

  double dx_cell() const { return grid.cell_volume(); }
};

// Dilation grid carried by a coefficient set (nodes and weights as stored).
DilationGrid grid_of(const Coefficients& c);

// W(x, h) = <f, pi(x, h) psi> on the translation grid for every node, psi taken
// centered at its center. Throws IncompatibleGrid when the spacings differ.
Coefficients analyze(const Volume& f, const Wavelet& psi, const DilationGrid& grid);

// Adjoint of analyze with the node weights, scaled by 1 / (kappa c_psi).
Volume synthesize(const Coefficients& c, const Wavelet& psi, const DilationGrid& grid, double c_psi);

// (1 / (kappa c_psi)) sum_nodes weight sum_x |W(x,h)|^2 dx / ||f||^2, by
// Parseval on the frequencies carrying the energy of f. Throws
// std::domain_error for f = 0 or a non-finite c_psi.
double isometry_check(const Volume& f, const Wavelet& psi, const DilationGrid& grid, double c_psi);

struct NTermResult {
  std::vector<std::size_t> n;
  std::vector<double> error;  // ||f - partial synthesis|| for each n
  std::size_t total = 0;      // number of coefficients
};

// Greedy n-term errors. Coefficients are ranked by |W|^2 * weight * dx.
NTermResult nterm_error(const Volume& f, const Coefficients& c, const Wavelet& psi, const DilationGrid& grid,
                        double c_psi, std::vector<std::size_t> n_list);

}  // namespace adm3
