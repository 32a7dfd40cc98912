#include "momt/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "momt/error.hpp"

namespace momt {

namespace {

double block_intensity(const FrameSet& frames, const double* b) {
  double s = 0.0;
  if (frames.kind == ProblemKind::kMatrix) {
    for (int d = 0; d < frames.n; ++d) s += b[packed_index(frames.n, d, d)];
  } else {
    for (int k = 0; k < frames.n; ++k) s += b[k];
  }
  return s;
}

bool rgb(const FrameSet& frames) { return frames.kind == ProblemKind::kVector && frames.n == 3; }

}  // namespace

double FrameSet::mass(std::size_t f) const {
  double m = 0.0;
  const int block = block_size();
  for (std::size_t sp = 0; sp < grid.spatial_cells(); ++sp) m += block_intensity(*this, fields[f].data() + sp * block);
  return m * grid.cell_volume();
}

FrameSet make_frames(const ProblemFile& problem, const Eigen::VectorXd& w) {
  FrameSet frames;
  frames.kind = problem.kind;
  frames.grid = problem.grid;
  frames.n = problem.n;
  const std::size_t spatial = problem.grid.spatial_cells();
  const int block = frames.block_size();
  const int nt = problem.grid.nt;
  const auto model = make_model(problem);
  const std::size_t begin = model->density_range().first;
  if (static_cast<std::size_t>(w.size()) != model->primal_size()) {
    throw Error(ErrorCode::kShapeMismatch, "solution does not match the problem layout");
  }
  for (int j = 0; j <= nt; ++j) {
    frames.times.push_back(static_cast<double>(j) / nt);
    if (j == 0) {
      frames.fields.push_back(problem.rho0);
    } else if (j == nt) {
      frames.fields.push_back(problem.rho1);
    } else {
      std::vector<double> f(spatial * block);
      const std::size_t off = begin + static_cast<std::size_t>(j - 1) * spatial * block;
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = w[off + i];
      if (problem.kind == ProblemKind::kMatrix) {
        // Stored as orthonormal coordinates; convert to packed entries.
        for (std::size_t sp = 0; sp < spatial; ++sp) {
          const SymBlock b = SymBlock::from_coords(problem.n, {f.data() + sp * block, static_cast<std::size_t>(block)});
          std::copy(b.packed().begin(), b.packed().end(), f.begin() + sp * block);
        }
      }
      frames.fields.push_back(std::move(f));
    }
  }
  return frames;
}

void write_glyph_csv(std::ostream& out, const FrameSet& frames) {
  const Grid& g = frames.grid;
  const char* axes[3] = {"i", "j", "k"};
  for (int a = 0; a < g.dim; ++a) out << axes[a] << ',';
  out << 't';
  const int n = frames.n;
  if (frames.kind == ProblemKind::kMatrix) {
    for (int d = 0; d < n; ++d) out << ",eig" << d;
    out << ",theta,phi\n";
  } else {
    for (int k = 0; k < n; ++k) out << ",rho" << k;
    out << '\n';
  }
  const int block = frames.block_size();
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out << ',' << buf;
  };
  for (std::size_t f = 0; f < frames.fields.size(); ++f) {
    for (std::size_t sp = 0; sp < g.spatial_cells(); ++sp) {
      const auto pos = g.cell_position(sp);
      for (int a = 0; a < g.dim; ++a) out << pos.x[a] << ',';
      std::snprintf(buf, sizeof buf, "%.10g", frames.times[f]);
      out << buf;
      const double* b = frames.fields[f].data() + sp * block;
      if (frames.kind == ProblemKind::kMatrix) {
        const SymEigen eig = sym_eigen(SymBlock::from_packed(n, {b, static_cast<std::size_t>(block)}));
        for (int d = 0; d < n; ++d) num(eig.values(d));
        const double v0 = eig.vectors(0, 0);
        const double v1 = n > 1 ? eig.vectors(1, 0) : 0.0;
        const double v2 = n > 2 ? eig.vectors(2, 0) : 0.0;
        num(std::atan2(v1, v0));
        num(std::asin(std::clamp(v2, -1.0, 1.0)));
      } else {
        for (int k = 0; k < n; ++k) num(b[k]);
      }
      out << '\n';
    }
  }
}

double frame_intensity_max(const FrameSet& frames) {
  double m = 0.0;
  const int block = frames.block_size();
  for (const auto& field : frames.fields) {
    for (std::size_t sp = 0; sp < frames.grid.spatial_cells(); ++sp) {
      const double* b = field.data() + sp * block;
      if (rgb(frames)) {
        for (int k = 0; k < 3; ++k) m = std::max(m, b[k]);
      } else {
        m = std::max(m, block_intensity(frames, b));
      }
    }
  }
  return m;
}

PpmImage render_frame(const FrameSet& frames, std::size_t f, double global_max) {
  const Grid& g = frames.grid;
  PpmImage img;
  img.width = g.extent[0];
  img.height = g.dim >= 2 ? g.extent[1] : 1;
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  const int z = g.dim == 3 ? g.extent[2] / 2 : 0;
  const int block = frames.block_size();
  auto level = [&](double v) {
    const double s = global_max > 0.0 ? v / global_max : 0.0;
    return static_cast<unsigned char>(std::lround(std::clamp(s, 0.0, 1.0) * 255.0));
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double* b = frames.fields[f].data() + g.spatial_index(x, y, z) * block;
      unsigned char* px = img.pixels.data() + (static_cast<std::size_t>(y) * img.width + x) * 3;
      if (rgb(frames)) {
        for (int k = 0; k < 3; ++k) px[k] = level(b[k]);
      } else {
        px[0] = px[1] = px[2] = level(block_intensity(frames, b));
      }
    }
  }
  return img;
}

void write_ppm(std::ostream& out, const PpmImage& image) {
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw Error(ErrorCode::kIoError, "failed to write PPM image");
}

PpmImage read_ppm(std::istream& in) {
  std::string magic;
  PpmImage img;
  int maxval = 0;
  in >> magic >> img.width >> img.height >> maxval;
  if (!in || magic != "P6" || maxval != 255 || img.width <= 0 || img.height <= 0) {
    throw Error(ErrorCode::kFormatError, "not a binary P6 image with maxval 255");
  }
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  if (!in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()))) {
    throw Error(ErrorCode::kFormatError, "truncated PPM pixel data");
  }
  return img;
}

std::vector<std::string> export_ppm_frames(const FrameSet& frames, const std::string& prefix) {
  const double top = frame_intensity_max(frames);
  std::vector<std::string> paths;
  for (std::size_t f = 0; f < frames.fields.size(); ++f) {
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%03zu.ppm", f);
    const std::string path = prefix + suffix;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
    write_ppm(out, render_frame(frames, f, top));
    paths.push_back(path);
  }
  return paths;
}

void export_glyph_csv(const FrameSet& frames, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path + " for writing");
  write_glyph_csv(out, frames);
  if (!out) throw Error(ErrorCode::kIoError, "failed to write " + path);
}

}  // namespace momt
