#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nonlocal/domain.hpp"
#include "nonlocal/field.hpp"
#include "nonlocal/renewal.hpp"
#include "nonlocal/solver.hpp"

namespace nonlocal {

using Modulus = std::function<double(double)>;

// Least squares line y = a + b x with its coefficient of determination.
struct LineFit {
  double intercept = 0;
  double slope = 0;
  double r2 = 0;
  int points = 0;
};

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct SeminormOptions {
  int pairs_per_decade = 10000;
  double min_distance = 0;  // default: the grid spacing
  std::uint64_t seed = 31;
};

// max |u(x) - u(y)| / modulus(|x - y|) over grid nodes of the closure of D,
// on pairs stratified by decade of |x - y|. Pair i of a decade depends only
// on (seed, decade, i), so a larger budget samples a superset.
double gen_holder_seminorm(const Field& u, const Domain& domain, const Modulus& modulus,
                           const SeminormOptions& opt = {});

struct QuotientFit {
  double alpha = 0;
  double C = 0;
  double r2 = 0;
  bool inconclusive = true;  // r2 < 0.9 or fewer than 3 usable radii
  Eigen::VectorXd rho, sup_diff;
};

struct QuotientOptions {
  double rho_max = 0.5;
  double rho_min = 0;  // smallest rho, at least min_cells h
  int min_cells = 4;
  double min_depth = 0;     // quotient nodes need d_D >= max(h, min_depth, depth_factor rho)
  double depth_factor = 0;  // scale-relative cutoff; see boundary_quotient_alpha
};

// q = u / V(d_D) on nodes with d_D >= h and the fit
// sup_{|x-y| = rho} |q(x) - q(y)| = C rho^alpha over dyadic rho. Grid
// solutions carry a boundary layer q_h / q - 1 ~ -c h / d_D; depth_factor > 0
// keeps only pairs at depth >= depth_factor rho so it does not swamp the
// differences at scale rho.
QuotientFit boundary_quotient_alpha(const Field& u, const RenewalTable& renewal,
                                    const Domain& domain, const QuotientOptions& opt = {});

// q at every node of D with d_D >= h (0 elsewhere).
Eigen::VectorXd boundary_quotient(const Field& u, const RenewalTable& renewal, const Domain& domain);

struct OscillationFit {
  Point x0;
  double gamma = 0;
  double C = 0;
  double r2 = 0;
  bool inconclusive = true;
  Eigen::VectorXd r, osc;
};

struct OscillationOptions {
  double r_max = 0.5;
  int levels = 4;     // r_k = r_max 2^{-k}, k = 0 .. levels - 1
  int min_nodes = 4;  // quotient nodes required in each D_{r_k}
  double depth_factor = 0;  // nodes of D_{r_k} need d_D >= depth_factor r_k
};

// For each x0 on the boundary: osc_k of q over D cap B(x0, r_k) and the fit
// osc_k = C V(r_k)^gamma. Throws DomainError when some D_{r_k} holds fewer
// than min_nodes quotient nodes.
std::vector<OscillationFit> oscillation_decay(const Field& u, const RenewalTable& renewal,
                                              const Domain& domain,
                                              const std::vector<Point>& boundary_points,
                                              const OscillationOptions& opt = {});

// n equally spaced points on the boundary of a ball or both ends of an interval.
std::vector<Point> boundary_points(const Domain& domain, int n);

// Nonnegative sum of 1 to 3 bumps centred outside B(x0, r) within x0 + reach.
Function random_exterior_data(const Point& x0, double r, double reach, std::uint64_t seed,
                              std::uint64_t index);

struct HarnackReport {
  std::vector<double> ratios;  // sup / inf of u on B(x0, r / 2), per data set
  int degenerate = 0;          // inf below 1e-12 sup, excluded
  double max_ratio = 0;
};

// L_h u = 0 on the solver's ball with data g outside it; sup / inf over the
// concentric half ball. g_far is the data beyond the grid box.
HarnackReport harnack_ratio(const DirichletSolver& solver, const std::vector<Function>& data,
                            double g_far = 0);

struct RegularityReport {
  double cv_seminorm = 0;
  QuotientFit quotient;
  std::vector<OscillationFit> oscillation;
  std::vector<double> harnack_ratios;
  std::vector<double> grids_used;
};

}  // namespace nonlocal
