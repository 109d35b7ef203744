#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "nonlocal/bernstein.hpp"
#include "nonlocal/interp.hpp"
#include "nonlocal/kernel.hpp"

namespace nonlocal {

enum class RenewalMode { ExactStable, Surrogate, ExperimentalMc };

std::string to_string(RenewalMode m);
RenewalMode parse_renewal_mode(const std::string& s);

struct RenewalConstants {
  double C1 = 0;      // V^2 vs varphi on (0, 1]
  double C2 = 0;      // weak scaling of V on (0, 1]
  double C3 = 0;      // weak scaling of V^{-1} below V(1)
  double lemma22 = 0;  // |V''| (r^1) / V' and V' (r^1) / V
};

struct McRenewalOptions {
  std::vector<double> x{0.05, 0.1, 0.2, 0.25, 0.4, 0.6, 0.8, 1.0, 1.5, 2.0};
  int paths = 2000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  long max_steps_per_ladder = 100000;
  int threads = 0;  // 0: default_threads()
};

struct McRenewalEstimate {
  Eigen::VectorXd x, V, stderr_;
  long censored_draws = 0;
  long steps = 0;
};

// Renewal function estimated from ladder heights of the discretised 1-d
// process: V(x) is proportional to the expected number of strict ascending
// ladder epochs before the running maximum passes x. Normalised so V(1) = 1.
// Ladder waits longer than max_steps_per_ladder are redrawn and counted.
McRenewalEstimate mc_renewal_estimate(const BernsteinSpec& spec, const McRenewalOptions& opt = {});

struct RenewalOptions {
  double r_min = 1e-5;
  double r_max = 10;
  int per_decade = 64;
  int dim = 1;                        // dimension of varphi in C1
  const KernelTable* kernel = nullptr;  // built from spec when null
  McRenewalOptions mc;
};

// Renewal function V with V', V'' and V^{-1}.
//   exact-stable: V = r^alpha (normalisation N = 1, matching the MC oracle's V(1) = 1)
//   surrogate:    V = phi(r^{-2})^{-1/2}
//   experimental-mc: quadratic log-log fit of mc_renewal_estimate, continued
//                 by its end power laws.
class RenewalTable {
 public:
  RenewalTable() = default;

  RenewalMode mode() const { return mode_; }
  const Eigen::VectorXd& r() const { return r_; }
  const Eigen::VectorXd& V_values() const { return V_; }
  const Eigen::VectorXd& Vp_values() const { return Vp_; }
  const Eigen::VectorXd& Vpp_values() const { return Vpp_; }
  const RenewalConstants& constants() const { return constants_; }
  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }

  // V(r) = 0 for r <= 0.
  double V(double r) const;
  double Vp(double r) const;
  double Vpp(double r) const;
  double inverse(double v) const;

  friend RenewalTable build_renewal(const BernsteinSpec&, RenewalMode, const RenewalOptions&);

 private:
  struct Derivs {
    double v, d1, d2;
  };
  Derivs eval(double r) const;

  RenewalMode mode_ = RenewalMode::Surrogate;
  BernsteinSpec spec_;
  double alpha1_ = 0, alpha2_ = 0;
  Eigen::VectorXd r_, V_, Vp_, Vpp_;
  LogLogTable inv_;
  Eigen::Vector3d fit_ = Eigen::Vector3d::Zero();  // mc: log V = c0 + c1 l + c2 l^2
  double fit_lo_ = 0, fit_hi_ = 0;                  // mc: log r range of the data
  RenewalConstants constants_;
};

RenewalTable build_renewal(const BernsteinSpec& spec, RenewalMode mode,
                           const RenewalOptions& opt = {});

// exact-stable for Stable specs, surrogate otherwise.
RenewalMode default_renewal_mode(const BernsteinSpec& spec);

struct InequalityRow {
  std::string name;
  Eigen::VectorXd r;          // 2^{-k}, k = 1..12
  Eigen::VectorXd constant;   // implied constant at each r
  double max = 0;
  double max_refined = 0;     // with the quadrature grid doubled
  double rel_change = 0;
  bool finite = false;
};

struct InequalityReport {
  std::vector<InequalityRow> rows;
  bool pass = false;
};

// The five integral bounds on varphi and V at r = 2^{-k}:
//   varphi-0:  int_0^r s/varphi          <= C r^2/varphi(r)
//   varphi-inf: int_r^inf 1/(s varphi)   <= C/varphi(r)
//   V-0a:      int_0^r 1/V               <= C r/V(r)
//   V-0b:      int_0^r V/s               <= C V(r)
//   V-inf:     int_r^inf V/(s varphi)    <= C/V(r)
// Log-grid composite Simpson with power-law end corrections; PASS iff every
// maximum is finite and moves by at most 5% when the grid doubles.
InequalityReport inequality_suite(const RenewalTable& table, const KernelTable& kernel,
                                  int per_decade = 16, int k_max = 12);

}  // namespace nonlocal
