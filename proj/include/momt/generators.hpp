#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "momt/problem.hpp"

namespace momt {

/// Synthetic marginals.
///
/// "disk-quarters": a centered disk (ball in 3D) moving to regions at every
/// corner of the unit cube. Matrix blocks start isotropic and end with a
/// per-corner dominant direction; vector densities start white and end with a
/// per-corner color. Fields are Gaussian-smoothed, lifted by a uniform floor so
/// the density contrast equals the request, and scaled to unit mass.
/// "static": the disk for both marginals. "random": seeded random positive data.
struct GeneratorOptions {
  ProblemKind kind = ProblemKind::kMatrix;
  std::string name = "disk-quarters";
  int dim = 2;
  std::array<int, 3> extent{16, 16, 1};
  int nt = 10;
  int n = 3;
  double gamma = 0.01;
  double contrast = 10.0;
  std::uint64_t seed = 0;
  double disk_radius = 0.3;
  double corner_radius = 0.4;
  double sigma_cells = 2.0;
};

ProblemFile generate(const GeneratorOptions& options);

/// Largest eigenvalue anywhere over smallest eigenvalue anywhere.
double matrix_contrast(const std::vector<double>& packed, int n);
/// max_k (max_x rho_k / min_x rho_k).
double vector_contrast(const std::vector<double>& values, int n);
/// Contrast of a marginal payload of the given problem kind.
double measured_contrast(const ProblemFile& problem, const std::vector<double>& values);

/// Separable Gaussian filter with truncation at 3 sigma; near the boundary the
/// weights are renormalized over the taps inside the grid.
std::vector<double> gaussian_smooth(const std::vector<double>& field, const Grid& grid, double sigma_cells);

}  // namespace momt
