#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nonlocal/domain.hpp"
#include "nonlocal/field.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/renewal.hpp"

namespace nonlocal {

using Function = std::function<double(const Point&)>;

// int_{|y| > R} u(x + y) j(|y|) dy, supplied by the caller for functions
// that do not vanish far away.
using FarField = std::function<double(const Point& x, double R)>;

// Split of the singular integral into |y| < delta (Taylor), delta..R_out
// (radial x angular product rule) and |y| > R_out (far field and tail mass).
struct QuadratureScheme {
  double delta = 1e-3;
  double R_out = 10;
  int radial_nodes = 60;    // per decade of log |y|; GK15 panels = radial_nodes / 15
  int angular_nodes = 128;  // trapezoid nodes on [0, pi) in 2-d
  double rel_tol = 1e-10;   // adaptive radial quadrature, per panel
  int max_intervals = 400;  // adaptive budget per panel
  double tol = 1e-6;        // allowed refinement disagreement in apply_L_checked

  // delta / 2, twice the radial and angular nodes.
  QuadratureScheme refined() const;
};

// L u(x) = 1/2 int (u(x+y) + u(x-y) - 2u(x)) j(|y|) dy for bounded u on R^n
// (n = 1, 2). The inner part uses tr(D^2 u(x)) from central differences of
// step delta / 2. Without `far` the function is taken to vanish beyond R_out.
double apply_L_smooth(const Function& u, const Point& x, const KernelTable& kernel,
                      const QuadratureScheme& scheme, const FarField& far = nullptr);

struct CheckedValue {
  double value = 0;
  double refined = 0;
  double disagreement = 0;
};

// apply_L_smooth at `scheme` and scheme.refined(); throws QuadratureError
// when they differ by more than scheme.tol * max(1, |refined|).
CheckedValue apply_L_checked(const Function& u, const Point& x, const KernelTable& kernel,
                             const QuadratureScheme& scheme, const FarField& far = nullptr);

// L applied to a grid field at node `node`: grid second differences inside
// delta (default 2h when scheme.delta <= 0), multilinear interpolation beyond,
// zero outside the grid box. Throws DomainError for nodes on the box edge.
double apply_L_field(const Field& u, Eigen::Index node, const KernelTable& kernel,
                     QuadratureScheme scheme = {.delta = 0, .rel_tol = 1e-7, .max_intervals = 4000});

struct HalfSpaceRow {
  double x = 0;
  Eigen::VectorXd residual;    // |L V((x)_+)| per refinement level
  Eigen::VectorXd normalized;  // residual varphi(x) / V(x)
  double min_factor = 0;       // smallest residual_k / residual_{k+1}
};

struct HalfSpaceReport {
  std::vector<HalfSpaceRow> rows;
  bool pass = false;  // every factor >= 2 and final normalized <= 1e-2
};

// V((x)_+) in 1-d at the given x over `levels` refinements: inner radius
// x 2^{-2-k}, 30 2^k radial nodes per decade, R_out = 1e3 x plus the exact far
// field of the half line.
HalfSpaceReport half_space_residual(const KernelTable& kernel, const RenewalTable& renewal,
                                    const std::vector<double>& x_list = {0.1, 0.3, 1.0},
                                    int levels = 4);

struct BarrierOptions {
  int points_per_stratum = 2;
  int strata_per_decade = 2;
  double min_depth = 1e-3;       // smallest d_D as a fraction of diam(D)
  double delta_factor = 1e-3;    // inner radius = delta_factor * d_D(x)
  int radial_nodes = 60;
  int angular_nodes = 256;
  double rel_tol = 1e-7;
  int max_intervals = 100;
  std::vector<double> ball_radii{0.25, 0.5, 1.0};
  std::function<double(double)> profile;  // replaces V when set
  std::uint64_t seed = 11;
};

struct BarrierReport {
  std::string domain;
  std::vector<Point> x;
  Eigen::VectorXd d, value;   // d_D(x) and L(V(psi))(x)
  double sup_abs = 0;
  std::vector<double> radii;            // balls only
  std::vector<double> scale_products;   // sup |L V(Psi_r)| V(r)
  double scale_spread = 0;              // max / min of scale_products
};

// L(V(psi)) on points stratified by d_D from the inradius down to
// min_depth * diam. For balls also the products sup |L V(Psi_r)| V(r) on the
// concentric balls of radii ball_radii.
BarrierReport barrier_residual(const Domain& domain, const RenewalTable& renewal,
                               const KernelTable& kernel, const BarrierOptions& opt = {});

// eta = 1 on |x| <= 1/2, 0 on |x| >= 1, C^infty radial transition.
double bump(double t);

struct SubsolutionOptions {
  int annulus_points = 24;
  int inner_points = 8;
  double min_depth = 1e-3;  // deepest annulus sample below the outer sphere, relative to 4r
  double grid_h = 0;        // w field spacing, default r / 16
  BarrierOptions barrier;
  std::uint64_t seed = 21;
};

struct SubsolutionReport {
  double r = 0;
  int dim = 1;
  double c2 = 0;      // inf over the annulus of L eta_r * V(r)
  double C3 = 0;      // sup |L V(Psi_4r)| * V(4r)
  double C4 = 0;      // min of w / V(4r - |x|) on the annulus
  double c4 = 0;      // max of w / V(r) on B_r
  double min_Lw = 0;  // over the annulus sample, in units of 1 / V(r)
  double max_outside = 0;
  bool Lw_nonnegative = false;
  bool bounded_inside = false;
  bool lower_bound = false;
  bool vanishes_outside = false;
  bool pass() const { return Lw_nonnegative && bounded_inside && lower_bound && vanishes_outside; }
  std::string worst;  // first violated clause with its point
};

struct Subsolution {
  Function w;
  Field field;
  SubsolutionReport report;
};

// w = (c2 / C3) V(Psi_4r) + V(r) eta(x / r) on B_4r centred at the origin.
// The returned callable refers to `renewal`, which must outlive it.
// Throws VerificationFailure naming the violated clause.
Subsolution build_subsolution(int dim, double r, const RenewalTable& renewal,
                              const KernelTable& kernel, const SubsolutionOptions& opt = {});

struct TestFunctionReport {
  double r = 0;
  double delta_r = 0;  // second_moment(r) / r^3
  double min_Lw = 0;
  Eigen::VectorXd x, Lw;
  bool pass = false;
};

// w(x) = 1 ^ |x|^2 / r^3 and the lower bound L w >= delta_r on B_r, r >= 4.
TestFunctionReport cp_testfunction_check(double r, const KernelTable& kernel, int points = 9,
                                         const QuadratureScheme& scheme = {.delta = 1e-2});

}  // namespace nonlocal
