#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nonlocal/bernstein.hpp"
#include "nonlocal/domain.hpp"
#include "nonlocal/operator.hpp"
#include "nonlocal/renewal.hpp"
#include "nonlocal/sampler.hpp"

namespace nonlocal {

// Paths X_{k dt} = X_{(k-1) dt} + sqrt(2 S_dt) N(0, I), exit read at grid times.
struct PathConfig {
  double dt = 1e-3;
  std::int64_t max_steps = 1000000;
  std::int64_t n_paths = 10000;
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0: default_threads()
};

struct McEstimate {
  double mean = 0;
  double std_error = 0;
  std::int64_t n_effective = 0;
  std::int64_t censored = 0;
  double censor_fraction = 0;
  bool censor_flag = false;  // censor_fraction > 1%
  std::string bias_note;
};

struct ExitDraw {
  double time = 0;      // k dt at the first grid time outside D
  Point position;
  std::int64_t steps = 0;
  bool censored = false;  // max_steps reached inside D
};

// Path `index` of the stream config.master_seed.
ExitDraw first_exit(const Domain& domain, const Point& x0, const BernsteinSpec& spec,
                    const PathConfig& config, std::uint64_t index = 0);

// R^D f(x0) = E[int_0^tau f(X_t) dt] by sum_{k < K} f(X_{k dt}) dt, K the exit step.
// Censored paths contribute their truncated sums.
McEstimate rd_estimate(const Function& f, const Point& x0, const Domain& domain,
                       const BernsteinSpec& spec, const PathConfig& config);

// E[tau_D] at dt and dt / 2 on the same paths (the coarse path is the fine
// path read at even steps) and the extrapolation
// fine + (fine - coarse) / (2^order - 1), with per-path stderr.
struct RichardsonEstimate {
  McEstimate coarse, fine, extrapolated;
  double order = 0.5;
};

RichardsonEstimate exit_time_richardson(const Domain& domain, const Point& x0,
                                        const BernsteinSpec& spec, const PathConfig& config,
                                        double order = 0.5);

struct SurvivalOptions {
  std::vector<double> times{0.05, 0.1, 0.2};
  std::vector<double> depths{1e-2, 3e-2, 1e-1, 3e-1};
  double factor = 20;           // allowed max / min of the ratio
  double max_rel_stderr = 0.25;  // strata above this are excluded
};

struct SurvivalReport {
  std::vector<double> times, depths;
  Eigen::MatrixXd survival, std_error, ratio;  // depth x time
  Eigen::MatrixXi excluded;
  double spread = 0;
  bool pass = false;
};

// P^x(tau_D > t) with x at the given depths and the ratio to
// 1 ^ V(d_D(x)) / sqrt(t). Each path starts from its own point at that depth.
SurvivalReport survival_profile(const Domain& domain, const BernsteinSpec& spec,
                                const RenewalTable& renewal, const PathConfig& config,
                                const SurvivalOptions& opt = {});

struct DecayReport {
  std::vector<double> times;
  Eigen::VectorXd survival, std_error;
  double slope = 0;  // least squares slope of log survival against t
  double r2 = 0;
  bool pass = false;  // slope < 0
};

DecayReport survival_decay(const Domain& domain, const Point& x0, const BernsteinSpec& spec,
                           const PathConfig& config, const std::vector<double>& times);

}  // namespace nonlocal
