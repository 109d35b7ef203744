#include "nonlocal/montecarlo.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

#include "nonlocal/error.hpp"
#include "nonlocal/parallel.hpp"

namespace nonlocal {

namespace {

void check_config(const PathConfig& c) {
  if (!(c.dt > 0)) throw DomainError("path config: dt must be positive");
  if (c.n_paths < 1) throw DomainError("path config: n_paths must be >= 1");
  if (c.max_steps < 1) throw DomainError("path config: max_steps must be >= 1");
}

int threads_of(const PathConfig& c) { return c.threads > 0 ? c.threads : default_threads(); }

// Mean and stderr of per-path values, summed in path order so the result
// does not depend on the thread partition.
McEstimate summarize(const Eigen::VectorXd& v, std::int64_t censored) {
  McEstimate out;
  const double n = double(v.size());
  out.n_effective = v.size();
  out.mean = v.mean();
  if (v.size() > 1)
    out.std_error = std::sqrt((v.array() - out.mean).square().sum() / (n - 1) / n);
  out.censored = censored;
  out.censor_fraction = double(censored) / n;
  out.censor_flag = out.censor_fraction > 0.01;
  if (v.size() < 1000) out.bias_note = "fewer than 1000 paths. ";
  return out;
}

void step(const BernsteinSpec& spec, double dt, Rng& rng, Point& x) {
  brownian_step(spec, dt, rng, x);
}

}  // namespace

ExitDraw first_exit(const Domain& domain, const Point& x0, const BernsteinSpec& spec,
                    const PathConfig& config, std::uint64_t index) {
  check_config(config);
  if (!domain.contains(x0)) throw DomainError("first_exit: start point outside D");
  Rng rng = path_rng(config.master_seed, index);
  ExitDraw out;
  Point x = x0;
  std::int64_t k = 0;
  while (k < config.max_steps) {
    step(spec, config.dt, rng, x);
    ++k;
    if (!domain.contains(x)) break;
  }
  out.steps = k;
  out.time = double(k) * config.dt;
  out.position = x;
  out.censored = domain.contains(x);
  return out;
}

McEstimate rd_estimate(const Function& f, const Point& x0, const Domain& domain,
                       const BernsteinSpec& spec, const PathConfig& config) {
  check_config(config);
  if (!domain.contains(x0)) throw DomainError("rd_estimate: start point outside D");
  Eigen::VectorXd value(config.n_paths);
  std::vector<char> cens(config.n_paths, 0);
  parallel_for(
      config.n_paths,
      [&](std::int64_t p) {
        Rng rng = path_rng(config.master_seed, std::uint64_t(p));
        Point x = x0;
        double sum = 0;
        std::int64_t k = 0;
        bool inside = true;
        while (k < config.max_steps) {
          sum += f(x);
          step(spec, config.dt, rng, x);
          ++k;
          if (!domain.contains(x)) {
            inside = false;
            break;
          }
        }
        value(p) = sum * config.dt;
        cens[p] = inside;
      },
      threads_of(config));
  std::int64_t censored = 0;
  for (char c : cens) censored += c;
  McEstimate out = summarize(value, censored);
  out.bias_note += "exit read at grid times dt = " + std::to_string(config.dt) +
                   "; biased high by the missed excursions.";
  return out;
}

RichardsonEstimate exit_time_richardson(const Domain& domain, const Point& x0,
                                        const BernsteinSpec& spec, const PathConfig& config,
                                        double order) {
  check_config(config);
  if (!domain.contains(x0)) throw DomainError("exit_time_richardson: start point outside D");
  const double h = config.dt / 2;
  Eigen::VectorXd fine(config.n_paths), coarse(config.n_paths);
  std::vector<char> cens(config.n_paths, 0);
  parallel_for(
      config.n_paths,
      [&](std::int64_t p) {
        Rng rng = path_rng(config.master_seed, std::uint64_t(p));
        Point x = x0;
        std::int64_t k = 0, kf = -1, kc = -1;
        const std::int64_t limit = 2 * config.max_steps;
        while (k < limit) {
          step(spec, h, rng, x);
          ++k;
          if (!domain.contains(x)) {
            if (kf < 0) kf = k;
            if (k % 2 == 0) {
              kc = k;
              break;
            }
          }
        }
        cens[p] = kc < 0;
        if (kf < 0) kf = k;
        if (kc < 0) kc = k;
        fine(p) = double(kf) * h;
        coarse(p) = double(kc) * h;
      },
      threads_of(config));
  std::int64_t censored = 0;
  for (char c : cens) censored += c;
  RichardsonEstimate out;
  out.order = order;
  out.coarse = summarize(coarse, censored);
  out.fine = summarize(fine, censored);
  const double c = 1 / (std::pow(2.0, order) - 1);
  out.extrapolated = summarize(fine + c * (fine - coarse), censored);
  out.coarse.bias_note += "grid-time exit at dt.";
  out.fine.bias_note += "grid-time exit at dt / 2.";
  out.extrapolated.bias_note +=
      "Richardson with assumed bias order dt^" + std::to_string(order) + ".";
  return out;
}

SurvivalReport survival_profile(const Domain& domain, const BernsteinSpec& spec,
                                const RenewalTable& renewal, const PathConfig& config,
                                const SurvivalOptions& opt) {
  check_config(config);
  if (opt.times.empty() || opt.depths.empty()) throw DomainError("survival_profile: empty strata");
  SurvivalReport out;
  out.times = opt.times;
  out.depths = opt.depths;
  const int nd = int(opt.depths.size()), nt = int(opt.times.size());
  out.survival.resize(nd, nt);
  out.std_error.resize(nd, nt);
  out.ratio.resize(nd, nt);
  out.excluded = Eigen::MatrixXi::Zero(nd, nt);
  const double t_max = *std::max_element(opt.times.begin(), opt.times.end());
  const auto horizon = std::int64_t(std::ceil(t_max / config.dt - 1e-9));

  for (int s = 0; s < nd; ++s) {
    // Exit step per path; paths alive at the horizon get horizon + 1.
    Eigen::VectorXd exit_time(config.n_paths);
    PathConfig c = config;
    c.master_seed = splitmix64(config.master_seed + std::uint64_t(s));
    parallel_for(
        config.n_paths,
        [&](std::int64_t p) {
          Point x = point_at_depth(domain, opt.depths[s], c.master_seed, std::uint64_t(p));
          Rng rng = path_rng(c.master_seed, std::uint64_t(p));
          std::int64_t k = 0;
          while (k < horizon) {
            step(spec, c.dt, rng, x);
            ++k;
            if (!domain.contains(x)) break;
          }
          exit_time(p) = domain.contains(x) ? t_max + c.dt : double(k) * c.dt;
        },
        threads_of(config));
    for (int t = 0; t < nt; ++t) {
      const double alive = (exit_time.array() > opt.times[t] + 1e-12).cast<double>().mean();
      const double se = std::sqrt(alive * (1 - alive) / double(config.n_paths));
      out.survival(s, t) = alive;
      out.std_error(s, t) = se;
      out.ratio(s, t) =
          alive / std::min(1.0, renewal.V(opt.depths[s]) / std::sqrt(opt.times[t]));
      out.excluded(s, t) = !(alive > 0) || se > opt.max_rel_stderr * alive;
    }
  }
  double lo = INFINITY, hi = 0;
  for (int s = 0; s < nd; ++s)
    for (int t = 0; t < nt; ++t)
      if (!out.excluded(s, t)) {
        lo = std::min(lo, out.ratio(s, t));
        hi = std::max(hi, out.ratio(s, t));
      }
  out.spread = hi > 0 ? hi / lo : INFINITY;
  out.pass = std::isfinite(out.spread) && out.spread <= opt.factor &&
             out.excluded.sum() < nd * nt / 2;
  return out;
}

DecayReport survival_decay(const Domain& domain, const Point& x0, const BernsteinSpec& spec,
                           const PathConfig& config, const std::vector<double>& times) {
  check_config(config);
  if (times.size() < 2) throw DomainError("survival_decay: need at least two times");
  const double t_max = *std::max_element(times.begin(), times.end());
  const auto horizon = std::int64_t(std::ceil(t_max / config.dt - 1e-9));
  Eigen::VectorXd exit_time(config.n_paths);
  parallel_for(
      config.n_paths,
      [&](std::int64_t p) {
        Rng rng = path_rng(config.master_seed, std::uint64_t(p));
        Point x = x0;
        std::int64_t k = 0;
        while (k < horizon) {
          step(spec, config.dt, rng, x);
          ++k;
          if (!domain.contains(x)) break;
        }
        exit_time(p) = domain.contains(x) ? t_max + config.dt : double(k) * config.dt;
      },
      threads_of(config));
  DecayReport out;
  out.times = times;
  const int m = int(times.size());
  out.survival.resize(m);
  out.std_error.resize(m);
  for (int i = 0; i < m; ++i) {
    const double s = (exit_time.array() > times[i] + 1e-12).cast<double>().mean();
    out.survival(i) = s;
    out.std_error(i) = std::sqrt(s * (1 - s) / double(config.n_paths));
  }
  if ((out.survival.array() <= 0).any()) return out;  // log undefined: no fit, no pass
  Eigen::MatrixXd X(m, 2);
  Eigen::VectorXd y = out.survival.array().log();
  for (int i = 0; i < m; ++i) X.row(i) << 1, times[i];
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  out.slope = beta(1);
  const double ss_res = (y - X * beta).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  out.r2 = ss_tot > 0 ? 1 - ss_res / ss_tot : 1;
  out.pass = out.slope < 0;
  return out;
}

}  // namespace nonlocal
