#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "adm3/mat3.hpp"

namespace adm3 {

// Regular sampling grid. Sample (i, j, k) sits at origin + (i h0, j h1, k h2);
// linear index runs x fastest, then y, then z.
struct Grid3 {
  std::array<int, 3> n{2, 2, 2};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin;

  std::size_t size() const { return std::size_t(n[0]) * std::size_t(n[1]) * std::size_t(n[2]); }
  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(n[0]) * (std::size_t(j) + std::size_t(n[1]) * std::size_t(k));
  }
  Vec3 point(int i, int j, int k) const {
    return {origin[0] + i * spacing[0], origin[1] + j * spacing[1], origin[2] + k * spacing[2]};
  }
  double cell_volume() const { return spacing[0] * spacing[1] * spacing[2]; }
  Vec3 extent() const { return {n[0] * spacing[0], n[1] * spacing[1], n[2] * spacing[2]}; }
  // Throws std::invalid_argument unless n >= 2 and spacings are positive and finite.
  void validate() const;
  bool operator==(const Grid3&) const = default;
};

// n^3 samples with spacing h; sample n/2 on each axis sits at the origin of R^3.
Grid3 centered_grid(int n, double h);

struct Volume {
  Grid3 grid;
  std::vector<double> samples;

  Volume() = default;
  explicit Volume(const Grid3& g) : grid(g), samples(g.size(), 0.0) {}
  double& at(int i, int j, int k) { return samples[grid.index(i, j, k)]; }
  double at(int i, int j, int k) const { return samples[grid.index(i, j, k)]; }
  // L2 norm with the grid quadrature.
  double norm() const;
  // Throws std::invalid_argument on size mismatch or non-finite samples.
  void validate() const;
};

}  // namespace adm3
