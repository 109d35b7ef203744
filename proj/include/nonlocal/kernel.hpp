#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nonlocal/bernstein.hpp"
#include "nonlocal/interp.hpp"

namespace nonlocal {

// Surface area of the unit sphere in R^n.
double sphere_area(int n);
// Volume of the unit ball in R^n.
double ball_volume(int n);

// c(n, alpha) with j(r) = c r^{-n-2 alpha} for phi = lambda^alpha.
double stable_kernel_constant(int n, double alpha);

struct KernelConstants {
  double b2 = 0;          // max j(r+1)/j(r), r >= 1
  double b2_reverse = 0;  // max j(r)/j(r+1), r >= 1
  double a3 = 0;          // varphi weak scaling on (0, 1]
  double comparability = 0;  // P(r) varphi(r) in [1/c, c] on (0, 1]
  double ej_violation = 0;   // largest relative increase of -j'(r)/r along the grid
};

struct KernelGrid {
  double r_min = 1e-4;
  double r_max = 1e3;
  int per_decade = 64;
};

// Jump density j_n(r) of the subordinate Brownian motion with derived
// profiles on a geometric grid. Immutable after construction.
class KernelTable {
 public:
  using Evaluator = std::function<double(double)>;

  // Closed forms for the tail mass and truncated second moment, when the
  // kernel has them; otherwise both are integrated from j.
  struct Moments {
    Evaluator tail;
    Evaluator second_moment;
  };

  KernelTable() = default;
  KernelTable(int dim, const ScalingProfile& scaling, Eigen::VectorXd r, Eigen::VectorXd j,
              Evaluator exact, std::string route, Moments moments = {});

  int dim() const { return dim_; }
  const std::string& route() const { return route_; }
  const Eigen::VectorXd& r() const { return r_; }
  const Eigen::VectorXd& j_values() const { return j_; }
  const Eigen::VectorXd& varphi_profile() const { return varphi_; }
  const Eigen::VectorXd& pruitt_P() const { return P_; }
  const Eigen::VectorXd& pruitt_P1() const { return P1_; }
  const Eigen::VectorXd& tail_mass() const { return T_; }
  const KernelConstants& constants() const { return constants_; }
  double r_min() const { return r_(0); }
  double r_max() const { return r_(r_.size() - 1); }

  // j(r) for any r > 0; outside the grid the exact evaluator is used when the
  // table has one, otherwise the end power law.
  double density(double r) const;
  // d log j / d log r
  double log_slope(double r) const;
  double j_at_one() const { return j1_; }

  // int_{|y| > r} j(|y|) dy
  double tail(double r) const;
  // int_{|y| < r} |y|^2 j(|y|) dy
  double second_moment(double r) const;
  // J(1) / (J(r) r^n)
  double varphi(double r) const;
  double P(double r) const;
  double P1(double r) const;

  std::optional<double> stable_constant;  // set for Stable specs

 private:
  void fill_derived();
  void fit_constants(const ScalingProfile& scaling);

  int dim_ = 1;
  std::string route_;
  Eigen::VectorXd r_, j_, varphi_, P_, P1_, T_, M2_;
  LogLogTable j_tab_, T_tab_, M2_tab_, P1_tab_;
  Evaluator exact_;
  Moments moments_;
  double j1_ = 0;
  KernelConstants constants_;
};

// Quadrature route: (4 pi t)^{-n/2} e^{-r^2/4t} mu(dt) after t = r^2 / (4 s).
// Requires an analytic Levy density; throws UnsupportedVariant otherwise.
KernelTable build_kernel(const BernsteinSpec& spec, int dim, const KernelGrid& grid = {});

// j_n(r) at a single r by the same quadrature.
double kernel_density_quadrature(const BernsteinSpec& spec, int dim, double r);

// Kernel for specs without an analytic Levy density: the subordinator density
// is fitted as a log-t mixture so that int (1 - e^{-lambda t}) mu(dt) matches
// phi (Tikhonov least squares, positivity by active-set projection), then
// pushed through the heat kernel. Throws ConvergenceError when the
// characteristic identity misses 1e-2.
KernelTable build_kernel_from_exponent(const BernsteinSpec& spec, int dim,
                                       const KernelGrid& grid = {});

// build_kernel when possible, otherwise build_kernel_from_exponent.
KernelTable build_kernel_any(const BernsteinSpec& spec, int dim, const KernelGrid& grid = {});

struct CharExponentRow {
  double z;
  double integral;
  double phi;
  double rel_dev;
};

struct CharExponentReport {
  std::vector<CharExponentRow> rows;
  double max_rel_dev() const;
};

// int_{R^n} (1 - cos(z.y)) j(|y|) dy against phi(|z|^2).
CharExponentReport check_char_exponent(const KernelTable& table, const BernsteinSpec& spec,
                                       const std::vector<double>& z_list);

struct RecursionReport {
  int dim = 1;
  double max_rel_err = 0;
  double worst_r = 0;
  Eigen::VectorXd r, lhs, rhs;  // -j_n'(r)/r and 2 pi j_{n+2}(r)
};

// -j_n'(r)/r = 2 pi j_{n+2}(r) on r in [0.01, 10].
RecursionReport dimension_recursion_check(const BernsteinSpec& spec, int dim = 1,
                                          const KernelGrid& grid = {});

struct PruittReport {
  Eigen::VectorXd r, P, P1;
  double comparability = 0;     // P(r) varphi(r) in [1/c, c] on (0, 1]
  double p1_bound_ratio = 0;    // max P1(r) omega_n J(1) / P(r)
  bool P_decreasing = false;
  bool P1_decreasing = false;
};

PruittReport pruitt_functions(const KernelTable& table);

}  // namespace nonlocal
