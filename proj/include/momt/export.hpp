#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "momt/problem.hpp"

namespace momt {

/// Density fields at the time samples t = j / nt, j = 0..nt, marginals included.
struct FrameSet {
  ProblemKind kind = ProblemKind::kMatrix;
  Grid grid;
  int n = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> fields;  // per frame: spatial cells x block (packed or vector)

  int block_size() const { return kind == ProblemKind::kMatrix ? packed_size(n) : n; }
  /// Total (trace) mass of frame f.
  double mass(std::size_t f) const;
};

FrameSet make_frames(const ProblemFile& problem, const Eigen::VectorXd& w);

/// Matrix frames: i, j[, k], t, eigenvalues descending, theta, phi of the principal
/// axis (theta = atan2(v1, v0), phi = asin(v2)). Vector frames: i, j[, k], t, rho_0..rho_{n-1}.
void write_glyph_csv(std::ostream& out, const FrameSet& frames);

struct PpmImage {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<unsigned char> pixels;  // row-major RGB
};

/// Frame f as an image: RGB for three-channel vector data, gray (trace or
/// channel sum) otherwise, scaled by `global_max`. Rows follow y, columns x;
/// 3D grids show the middle z slice.
PpmImage render_frame(const FrameSet& frames, std::size_t f, double global_max);
/// Largest intensity over all frames, used as the common 255 level.
double frame_intensity_max(const FrameSet& frames);

void write_ppm(std::ostream& out, const PpmImage& image);
/// Reads binary P6 with maxval 255.
PpmImage read_ppm(std::istream& in);

/// Writes `<prefix>_NNN.ppm` for every frame; returns the paths.
std::vector<std::string> export_ppm_frames(const FrameSet& frames, const std::string& prefix);
void export_glyph_csv(const FrameSet& frames, const std::string& path);

}  // namespace momt
