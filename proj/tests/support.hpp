#pragma once

#include <random>

#include <Eigen/Core>

#include "momt/generators.hpp"
#include "momt/problem.hpp"

namespace momt::test {

inline ProblemFile random_problem(ProblemKind kind, int dim, std::array<int, 3> extent, int nt, int n,
                                  double gamma, std::uint64_t seed) {
  GeneratorOptions o;
  o.kind = kind;
  o.name = "random";
  o.dim = dim;
  o.extent = extent;
  o.nt = nt;
  o.n = n;
  o.gamma = gamma;
  o.seed = seed;
  return generate(o);
}

inline Eigen::VectorXd random_vector(std::size_t size, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(static_cast<Eigen::Index>(size));
  for (auto& x : v) x = normal(rng);
  return v;
}

/// Interpolated density with a small random perturbation, random momentum and flux.
inline Eigen::VectorXd random_state(const TransportModel& model, std::mt19937_64& rng) {
  Eigen::VectorXd w = model.initial_primal();
  const auto [rb, re] = model.density_range();
  const double scale = w.segment(rb, re - rb).cwiseAbs().maxCoeff();
  Eigen::VectorXd noise = random_vector(w.size(), rng);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const bool density = static_cast<std::size_t>(i) >= rb && static_cast<std::size_t>(i) < re;
    w[i] += density ? 0.02 * scale * noise[i] : 0.3 * noise[i];
  }
  return w;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace momt::test
