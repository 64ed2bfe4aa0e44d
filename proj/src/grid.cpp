#include "adm3/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace adm3 {

void Grid3::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (n[a] < 2) throw std::invalid_argument("grid needs at least 2 samples per axis");
    if (!(spacing[a] > 0) || !std::isfinite(spacing[a])) throw std::invalid_argument("grid spacing must be positive");
    if (!std::isfinite(origin[a])) throw std::invalid_argument("grid origin must be finite");
  }
}

Grid3 centered_grid(int n, double h) {
  Grid3 g;
  g.n = {n, n, n};
  g.spacing = {h, h, h};
  const double o = -(n / 2) * h;
  g.origin = {o, o, o};
  g.validate();
  return g;
}

double Volume::norm() const {
  double s = 0.0;
  for (double v : samples) s += v * v;
  return std::sqrt(s * grid.cell_volume());
}

void Volume::validate() const {
  grid.validate();
  if (samples.size() != grid.size()) throw std::invalid_argument("volume size does not match its grid");
  for (double v : samples)
    if (!std::isfinite(v)) throw std::invalid_argument("volume has non-finite samples");
}

}  // namespace adm3
