#include "nonlocal/renewal.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nonlocal/error.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/sampler.hpp"

namespace nonlocal {

std::string to_string(RenewalMode m) {
  switch (m) {
    case RenewalMode::ExactStable: return "exact-stable";
    case RenewalMode::Surrogate: return "surrogate";
    case RenewalMode::ExperimentalMc: return "experimental-mc";
  }
  return "?";
}

RenewalMode parse_renewal_mode(const std::string& s) {
  if (s == "exact-stable") return RenewalMode::ExactStable;
  if (s == "surrogate") return RenewalMode::Surrogate;
  if (s == "experimental-mc") return RenewalMode::ExperimentalMc;
  throw DomainError("unknown renewal mode '" + s + "'");
}

RenewalMode default_renewal_mode(const BernsteinSpec& spec) {
  return spec.is_stable() ? RenewalMode::ExactStable : RenewalMode::Surrogate;
}

McRenewalEstimate mc_renewal_estimate(const BernsteinSpec& spec, const McRenewalOptions& opt) {
  if (opt.paths < 1 || !(opt.dt > 0)) throw DomainError("mc_renewal_estimate: bad options");
  std::vector<double> xs = opt.x;
  std::sort(xs.begin(), xs.end());
  if (xs.empty() || xs.front() <= 0) throw DomainError("mc_renewal_estimate: x must be > 0");
  if (std::find(xs.begin(), xs.end(), 1.0) == xs.end()) {
    xs.push_back(1.0);
    std::sort(xs.begin(), xs.end());
  }
  const std::size_t nx = xs.size();
  const std::size_t one = std::find(xs.begin(), xs.end(), 1.0) - xs.begin();

  Eigen::MatrixXd counts(opt.paths, nx);
  std::vector<long> censored(opt.paths, 0), steps(opt.paths, 0);
  parallel_for(
      opt.paths,
      [&](std::int64_t p) {
        Rng rng = path_rng(opt.seed, static_cast<std::uint64_t>(p));
        std::normal_distribution<double> gauss;
        double height = 0;
        long epochs = 0;
        std::size_t next = 0;
        while (next < nx) {
          ++epochs;
          // Next strict ascending ladder height of the walk.
          double z = 0;
          long n = 0;
          while (z <= 0) {
            z += std::sqrt(2 * sample_subordinator_increment(spec, opt.dt, rng)) * gauss(rng);
            ++steps[p];
            if (++n > opt.max_steps_per_ladder) {
              ++censored[p];
              z = 0;
              n = 0;
            }
          }
          height += z;
          while (next < nx && height > xs[next]) counts(p, next++) = double(epochs);
        }
      },
      opt.threads > 0 ? opt.threads : default_threads());

  McRenewalEstimate est;
  est.x = Eigen::Map<Eigen::VectorXd>(xs.data(), nx);
  const Eigen::VectorXd mean = counts.colwise().mean();
  Eigen::VectorXd sd(nx);
  for (std::size_t i = 0; i < nx; ++i)
    sd(i) = std::sqrt((counts.col(i).array() - mean(i)).square().sum() / std::max(1, opt.paths - 1));
  const Eigen::VectorXd se = sd / std::sqrt(double(opt.paths));
  for (std::size_t i = 0; i < nx; ++i) {
    if (se(i) > 0.1 * mean(i)) {
      std::ostringstream os;
      os << "mc_renewal_estimate: stderr/mean " << se(i) / mean(i) << " > 10% at x = " << xs[i];
      throw StatisticalFailure(os.str());
    }
  }
  est.V = mean / mean(one);
  est.stderr_ = se / mean(one);
  for (long c : censored) est.censored_draws += c;
  for (long s : steps) est.steps += s;
  return est;
}

RenewalTable::Derivs RenewalTable::eval(double r) const {
  switch (mode_) {
    case RenewalMode::ExactStable: {
      const double a = std::get<Stable>(spec_.variant()).alpha;
      const double v = std::pow(r, a);
      return {v, a * v / r, a * (a - 1) * v / (r * r)};
    }
    case RenewalMode::Surrogate: {
      const double lam = 1 / (r * r);
      const double p = eval_phi(spec_, lam);
      const double p1 = phi_derivative(spec_, lam, 1);
      const double v = 1 / std::sqrt(p);
      const double d1 = std::pow(p, -1.5) * p1 / (r * r * r);
      double d2;
      if (spec_.is_analytic()) {
        const double p2 = phi_derivative(spec_, lam, 2);
        const double r4 = r * r * r * r, r6 = r4 * r * r;
        d2 = 3 * std::pow(p, -2.5) * p1 * p1 / r6 - 2 * std::pow(p, -1.5) * p2 / r6 -
             3 * std::pow(p, -1.5) * p1 / r4;
      } else {
        const double h = 1e-4 * r;
        auto d1_at = [&](double s) {
          const double l = 1 / (s * s);
          return std::pow(eval_phi(spec_, l), -1.5) * phi_derivative(spec_, l, 1) / (s * s * s);
        };
        d2 = (d1_at(r + h) - d1_at(r - h)) / (2 * h);
      }
      return {v, d1, d2};
    }
    case RenewalMode::ExperimentalMc: {
      const double l = std::log(r);
      const double lc = std::clamp(l, fit_lo_, fit_hi_);
      const double q = fit_(0) + fit_(1) * lc + fit_(2) * lc * lc;
      const double s = fit_(1) + 2 * fit_(2) * lc;           // d log V / d log r
      const double c = (l == lc) ? 2 * fit_(2) : 0.0;         // d s / d log r
      const double v = std::exp(q + s * (l - lc));
      return {v, s * v / r, (s * s - s + c) * v / (r * r)};
    }
  }
  return {0, 0, 0};
}

double RenewalTable::V(double r) const { return r <= 0 ? 0.0 : eval(r).v; }
double RenewalTable::Vp(double r) const {
  if (r <= 0) throw DomainError("RenewalTable::Vp: r must be > 0");
  return eval(r).d1;
}
double RenewalTable::Vpp(double r) const {
  if (r <= 0) throw DomainError("RenewalTable::Vpp: r must be > 0");
  return eval(r).d2;
}

double RenewalTable::inverse(double v) const {
  if (v <= 0) return 0;
  return inv_(v);
}

RenewalTable build_renewal(const BernsteinSpec& spec, RenewalMode mode, const RenewalOptions& opt) {
  RenewalTable t;
  t.mode_ = mode;
  t.spec_ = spec;
  if (mode == RenewalMode::ExactStable) {
    const auto* s = std::get_if<Stable>(&spec.variant());
    if (!s) throw UnsupportedVariant("exact-stable renewal needs a Stable spec, got " + spec.name());
    t.alpha1_ = t.alpha2_ = s->alpha;
  } else {
    t.alpha1_ = spec.scaling().alpha1;
    t.alpha2_ = spec.scaling().alpha2;
  }
  if (mode == RenewalMode::ExperimentalMc) {
    const auto est = mc_renewal_estimate(spec, opt.mc);
    const Eigen::Index m = est.x.size();
    Eigen::MatrixXd A(m, 3);
    Eigen::VectorXd b(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double l = std::log(est.x(i));
      const double w = est.V(i) / std::max(est.stderr_(i), 1e-3 * est.V(i));
      A.row(i) << w, w * l, w * l * l;
      b(i) = w * std::log(est.V(i));
    }
    t.fit_ = (A.transpose() * A).ldlt().solve(A.transpose() * b);
    t.fit_lo_ = std::log(est.x(0));
    t.fit_hi_ = std::log(est.x(m - 1));
    for (double l : {t.fit_lo_, t.fit_hi_})
      if (!(t.fit_(1) + 2 * t.fit_(2) * l > 0))
        throw VerificationFailure("experimental-mc renewal fit is not increasing");
  }

  t.r_ = geometric_grid(opt.r_min, opt.r_max, opt.per_decade);
  const Eigen::Index N = t.r_.size();
  t.V_.resize(N);
  t.Vp_.resize(N);
  t.Vpp_.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto d = t.eval(t.r_(i));
    t.V_(i) = d.v;
    t.Vp_(i) = d.d1;
    t.Vpp_(i) = d.d2;
    if (!(d.v > 0) || !(d.d1 > 0) || (i > 0 && !(t.V_(i) > t.V_(i - 1)))) {
      std::ostringstream os;
      os << "build_renewal: V not strictly increasing at r = " << t.r_(i);
      throw VerificationFailure(os.str());
    }
  }
  t.inv_ = LogLogTable(t.V_, t.r_);

  // Fitted constants on (0, 1].
  KernelTable own;
  const KernelTable* kernel = opt.kernel;
  if (!kernel) {
    own = build_kernel_any(spec, opt.dim);
    kernel = &own;
  }
  RenewalConstants c;
  c.C1 = c.C2 = c.C3 = 1;
  c.lemma22 = 0;
  std::vector<Eigen::Index> small;
  for (Eigen::Index i = 0; i < N; ++i)
    if (t.r_(i) <= 1 + 1e-12) small.push_back(i);
  const std::size_t stride = std::max<std::size_t>(1, small.size() / 120);
  for (std::size_t a = 0; a < small.size(); ++a) {
    const Eigen::Index i = small[a];
    const double q = t.V_(i) * t.V_(i) / kernel->varphi(t.r_(i));
    c.C1 = std::max({c.C1, q, 1 / q});
    if (a % stride) continue;
    for (std::size_t b = a; b < small.size(); b += stride) {
      const Eigen::Index k = small[b];
      const double ratio = t.r_(k) / t.r_(i), vr = t.V_(k) / t.V_(i);
      c.C2 = std::max({c.C2, std::pow(ratio, t.alpha1_) / vr, vr / std::pow(ratio, t.alpha2_)});
      // V^{-1} at T = V(R), t = V(r): V^{-1}(T)/V^{-1}(t) = R/r with T/t = vr.
      if (t.V_(k) < t.V(1.0))
        c.C3 = std::max({c.C3, std::pow(vr, 1 / t.alpha2_) / ratio,
                         ratio / std::pow(vr, 1 / t.alpha1_)});
    }
  }
  for (Eigen::Index i = 0; i < N; ++i) {
    const double m = std::min(t.r_(i), 1.0);
    c.lemma22 = std::max({c.lemma22, std::abs(t.Vpp_(i)) * m / t.Vp_(i), t.Vp_(i) * m / t.V_(i)});
  }
  if (!std::isfinite(c.C1) || !std::isfinite(c.C2) || !std::isfinite(c.C3) ||
      !std::isfinite(c.lemma22))
    throw VerificationFailure("build_renewal: fitted constants not finite");
  t.constants_ = c;
  return t;
}

namespace {

// int_a^b g(s) ds on a log grid with composite Simpson (even panel count).
template <typename G>
double log_simpson(G&& g, double a, double b, int per_decade) {
  int m = std::max(2, int(std::ceil(std::log10(b / a) * per_decade)));
  if (m % 2) ++m;
  const double la = std::log(a), h = (std::log(b) - la) / m;
  double sum = 0;
  for (int i = 0; i <= m; ++i) {
    const double s = std::exp(la + i * h);
    const double w = (i == 0 || i == m) ? 1 : (i % 2 ? 4 : 2);
    sum += w * g(s) * s;
  }
  return sum * h / 3;
}

// Power-law continuation of int_0^a g (toward_zero) or int_a^inf g.
template <typename G>
double end_correction(G&& g, double a, bool toward_zero) {
  const double e = 0.05;
  const double h0 = g(a) * a;
  const double h1 = g(a * std::exp(toward_zero ? -e : e)) * a * std::exp(toward_zero ? -e : e);
  if (!(h0 > 0) || !(h1 > 0)) return 0;
  const double p = std::log(h1 / h0) / e;  // decay rate of s g(s) per unit log s, away from a
  if (!(p < 0)) return std::numeric_limits<double>::infinity();
  return h0 / -p;
}

}  // namespace

InequalityReport inequality_suite(const RenewalTable& table, const KernelTable& kernel,
                                  int per_decade, int k_max) {
  auto vphi = [&](double s) { return kernel.varphi(s); };
  auto V = [&](double s) { return table.V(s); };
  const double span = 1e12;

  auto zero_to = [&](auto&& g, double r, int pd) {
    return log_simpson(g, r / span, r, pd) + end_correction(g, r / span, true);
  };
  auto to_inf = [&](auto&& g, double r, int pd) {
    return log_simpson(g, r, r * span, pd) + end_correction(g, r * span, false);
  };

  struct Spec {
    const char* name;
    std::function<double(double, int)> constant;
  };
  const std::vector<Spec> specs{
      {"varphi-0",
       [&](double r, int pd) {
         auto g = [&](double s) { return s / vphi(s); };
         return zero_to(g, r, pd) * vphi(r) / (r * r);
       }},
      {"varphi-inf",
       [&](double r, int pd) {
         auto g = [&](double s) { return 1 / (s * vphi(s)); };
         return to_inf(g, r, pd) * vphi(r);
       }},
      {"V-0a",
       [&](double r, int pd) {
         auto g = [&](double s) { return 1 / V(s); };
         return zero_to(g, r, pd) * V(r) / r;
       }},
      {"V-0b",
       [&](double r, int pd) {
         auto g = [&](double s) { return V(s) / s; };
         return zero_to(g, r, pd) / V(r);
       }},
      {"V-inf",
       [&](double r, int pd) {
         auto g = [&](double s) { return V(s) / (s * vphi(s)); };
         return to_inf(g, r, pd) * V(r);
       }},
  };

  InequalityReport rep;
  rep.pass = true;
  for (const auto& sp : specs) {
    InequalityRow row;
    row.name = sp.name;
    row.r.resize(k_max);
    row.constant.resize(k_max);
    double fine_max = 0;
    for (int k = 1; k <= k_max; ++k) {
      const double r = std::ldexp(1.0, -k);
      row.r(k - 1) = r;
      row.constant(k - 1) = sp.constant(r, per_decade);
      fine_max = std::max(fine_max, sp.constant(r, 2 * per_decade));
    }
    row.max = row.constant.maxCoeff();
    row.max_refined = fine_max;
    row.finite = std::isfinite(row.max) && std::isfinite(fine_max) && row.max > 0;
    row.rel_change = std::abs(fine_max - row.max) / row.max;
    rep.pass = rep.pass && row.finite && row.rel_change <= 0.05;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace nonlocal
