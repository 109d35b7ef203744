#pragma once

#include <Eigen/Core>

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nonlocal/interp.hpp"

namespace nonlocal {

// phi(lambda) = lambda^alpha
struct Stable {
  double alpha;
};

// phi(lambda) = sum_i w_i lambda^{alpha_i}
struct StableMixture {
  struct Term {
    double alpha;
    double weight;
  };
  std::vector<Term> terms;
};

// phi(lambda) = lambda^alpha log(1 + lambda)^beta
struct StableLog {
  double alpha;
  double beta;
};

// phi given by (lambda, phi) samples on a log grid, interpolated log-log.
struct Tabulated {
  Eigen::VectorXd lambda;
  Eigen::VectorXd phi;
};

using BernsteinVariant = std::variant<Stable, StableMixture, StableLog, Tabulated>;

// Weak scaling profile at infinity:
//   b1^{-1} (R/r)^{alpha1} <= phi(R)/phi(r) <= b1 (R/r)^{alpha2},  1 <= r <= R <= window_max.
struct ScalingProfile {
  double alpha1 = 0;
  double alpha2 = 0;
  double b1 = 1;
  double window_max = 1e6;
};

// A Bernstein function phi with zero drift and its subordinator Levy measure.
// Construct through BernsteinSpec::make, which certifies the scaling profile
// and rejects specs outside 0 < alpha1 <= alpha2 < 1.
class BernsteinSpec {
 public:
  static constexpr double kDefaultWindow = 1e6;
  static constexpr int kScalingSamples = 200;

  static BernsteinSpec make(BernsteinVariant variant, double window_max = kDefaultWindow);

  const BernsteinVariant& variant() const { return variant_; }
  double drift() const { return 0.0; }
  const ScalingProfile& scaling() const { return scaling_; }

  bool is_stable() const { return std::holds_alternative<Stable>(variant_); }
  bool has_levy_density() const {
    return std::holds_alternative<Stable>(variant_) ||
           std::holds_alternative<StableMixture>(variant_);
  }
  bool is_analytic() const { return !std::holds_alternative<Tabulated>(variant_); }

  // Tabulated variant only.
  const LogLogTable& table() const { return table_; }

  std::string name() const;

 private:
  BernsteinVariant variant_;
  ScalingProfile scaling_;
  LogLogTable table_;
};

BernsteinSpec make_stable(double alpha);
BernsteinSpec make_mixture(std::vector<StableMixture::Term> terms);
BernsteinSpec make_stable_log(double alpha, double beta);
BernsteinSpec make_tabulated(Eigen::VectorXd lambda, Eigen::VectorXd phi);

double eval_phi(const BernsteinSpec& spec, double lambda);

// k-th derivative of phi. Analytic for every analytic variant (k <= 3 for
// StableLog); Tabulated supports k = 1 through the interpolant.
double phi_derivative(const BernsteinSpec& spec, double lambda, int k);

// d log phi / d log lambda
double phi_log_slope(const BernsteinSpec& spec, double lambda);

// Normalising constant of the stable Levy density, alpha / Gamma(1 - alpha).
double stable_mu_constant(double alpha);

// Density of the subordinator Levy measure mu(dt) = m(t) dt.
double levy_density_mu(const BernsteinSpec& spec, double t);

// phi(lambda) reconstructed as int (1 - e^{-lambda t}) mu(t) dt by adaptive
// quadrature; the round-trip that validates levy_density_mu.
double phi_from_levy_measure(const BernsteinSpec& spec, double lambda);

ScalingProfile scaling_indices(const BernsteinSpec& spec, double window_max,
                               int samples = BernsteinSpec::kScalingSamples);

struct BernsteinViolation {
  int order;
  double lambda;
  double signed_value;  // (-1)^{k+1} phi^{(k)}(lambda)
};

struct BernsteinReport {
  int k_max = 3;
  int samples = 0;
  std::vector<BernsteinViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Sign pattern (-1)^{k+1} phi^{(k)} >= 0 for k = 1..k_max on a geometric
// sample of [lambda_lo, lambda_hi]. StableLog is differentiated numerically
// (central differences, three steps, Richardson).
BernsteinReport bernstein_check(const BernsteinSpec& spec, int k_max = 3, double lambda_lo = 1e-2,
                                double lambda_hi = 1e4, int samples = 121);

// Central-difference derivative with Richardson extrapolation over steps
// h, h/2, h/4 (h = rel_step * lambda).
double richardson_derivative(const BernsteinSpec& spec, double lambda, int k,
                             double rel_step = 0.05);

}  // namespace nonlocal
