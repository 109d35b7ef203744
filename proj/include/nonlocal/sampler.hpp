#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

#include "nonlocal/bernstein.hpp"

namespace nonlocal {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream for path `index` under `master_seed`.
Rng path_rng(std::uint64_t master_seed, std::uint64_t index);

// One-sided stable draw with E[e^{-lambda S}] = exp(-t lambda^alpha)
// (Kanter's representation from one uniform and one exponential).
double sample_one_sided_stable(double alpha, double t, Rng& rng);

// S_dt for the subordinator of `spec`; Stable and StableMixture only.
double sample_subordinator_increment(const BernsteinSpec& spec, double dt, Rng& rng);

// Subordinate Brownian step: sqrt(2 s) times a standard Gaussian vector,
// s = S_dt. The factor 2 makes the generator -phi(-Laplacian).
template <typename Vec>
void brownian_step(const BernsteinSpec& spec, double dt, Rng& rng, Vec& x) {
  std::normal_distribution<double> g;
  const double scale = std::sqrt(2.0 * sample_subordinator_increment(spec, dt, rng));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += scale * g(rng);
}

}  // namespace nonlocal
