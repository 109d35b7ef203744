#include "nonlocal/bernstein.hpp"

#include <cmath>
#include <sstream>

#include "nonlocal/error.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// alpha (alpha-1) ... (alpha-k+1)
double falling(double alpha, int k) {
  double p = 1;
  for (int i = 0; i < k; ++i) p *= alpha - i;
  return p;
}

double power_derivative(double alpha, double lambda, int k) {
  return falling(alpha, k) * std::pow(lambda, alpha - k);
}

// log-derivatives of g = alpha log(lambda) + beta log(log(1 + lambda))
struct LogDerivs {
  double g1, g2, g3;
};

LogDerivs stable_log_derivs(const StableLog& s, double lambda) {
  const double L = std::log1p(lambda);
  const double L1 = 1.0 / (1.0 + lambda);
  const double L2 = -L1 * L1;
  const double L3 = 2.0 * L1 * L1 * L1;
  const double N = L2 * L - L1 * L1;
  const double N1 = L3 * L - L1 * L2;
  LogDerivs d;
  d.g1 = s.alpha / lambda + s.beta * L1 / L;
  d.g2 = -s.alpha / (lambda * lambda) + s.beta * N / (L * L);
  d.g3 = 2.0 * s.alpha / (lambda * lambda * lambda) + s.beta * (N1 * L - 2.0 * N * L1) / (L * L * L);
  return d;
}

void check_unit_interval(double a, const char* what) {
  if (!(a > 0.0 && a < 1.0)) throw RejectedSpec(std::string(what) + " must lie in (0,1)");
}

}  // namespace

BernsteinSpec BernsteinSpec::make(BernsteinVariant variant, double window_max) {
  BernsteinSpec spec;
  std::visit(overloaded{
                 [](const Stable& s) { check_unit_interval(s.alpha, "alpha"); },
                 [](const StableMixture& m) {
                   if (m.terms.empty()) throw RejectedSpec("mixture needs at least one term");
                   for (const auto& t : m.terms) {
                     check_unit_interval(t.alpha, "mixture alpha");
                     if (!(t.weight > 0)) throw RejectedSpec("mixture weights must be positive");
                   }
                 },
                 [](const StableLog& s) {
                   check_unit_interval(s.alpha, "alpha");
                   if (!(s.beta >= 0)) throw RejectedSpec("beta must be >= 0");
                 },
                 [&spec](const Tabulated& t) {
                   if (t.lambda.size() < 4 || t.lambda.size() != t.phi.size())
                     throw RejectedSpec("tabulated spec needs >= 4 matching (lambda, phi) points");
                   for (Eigen::Index i = 0; i + 1 < t.lambda.size(); ++i) {
                     if (!(t.lambda(i + 1) > t.lambda(i)) || !(t.lambda(i) > 0))
                       throw RejectedSpec("tabulated lambda must be positive and increasing");
                     if (!(t.phi(i + 1) > t.phi(i)) || !(t.phi(i) > 0))
                       throw RejectedSpec("tabulated phi must be positive and increasing");
                   }
                   spec.table_ = LogLogTable(t.lambda, t.phi, /*allow_extrapolation=*/false);
                   // Linear growth at the top end of the table means a drift term.
                   const double top = t.lambda(t.lambda.size() - 1);
                   if (spec.table_.log_slope(top) >= 1.0 - 1e-3)
                     throw RejectedSpec("tabulated phi has nonzero apparent drift");
                 }},
             variant);
  spec.variant_ = std::move(variant);
  if (const auto* t = std::get_if<Tabulated>(&spec.variant_)) {
    window_max = std::min(window_max, t->lambda(t->lambda.size() - 1));
    if (t->lambda(0) > 1.0) throw RejectedSpec("tabulated phi must cover lambda = 1");
  }
  spec.scaling_ = scaling_indices(spec, window_max);
  return spec;
}

std::string BernsteinSpec::name() const {
  std::ostringstream os;
  std::visit(overloaded{[&](const Stable& s) { os << "stable(" << s.alpha << ")"; },
                        [&](const StableMixture& m) {
                          os << "mixture(";
                          for (std::size_t i = 0; i < m.terms.size(); ++i)
                            os << (i ? "," : "") << m.terms[i].alpha << ":" << m.terms[i].weight;
                          os << ")";
                        },
                        [&](const StableLog& s) {
                          os << "stable_log(" << s.alpha << "," << s.beta << ")";
                        },
                        [&](const Tabulated& t) { os << "tabulated[" << t.lambda.size() << "]"; }},
             variant_);
  return os.str();
}

BernsteinSpec make_stable(double alpha) { return BernsteinSpec::make(Stable{alpha}); }
BernsteinSpec make_mixture(std::vector<StableMixture::Term> terms) {
  return BernsteinSpec::make(StableMixture{std::move(terms)});
}
BernsteinSpec make_stable_log(double alpha, double beta) {
  return BernsteinSpec::make(StableLog{alpha, beta});
}
BernsteinSpec make_tabulated(Eigen::VectorXd lambda, Eigen::VectorXd phi) {
  return BernsteinSpec::make(Tabulated{std::move(lambda), std::move(phi)});
}

double eval_phi(const BernsteinSpec& spec, double lambda) {
  if (!(lambda > 0)) throw DomainError("eval_phi: lambda must be > 0");
  return std::visit(
      overloaded{[&](const Stable& s) { return std::pow(lambda, s.alpha); },
                 [&](const StableMixture& m) {
                   double v = 0;
                   for (const auto& t : m.terms) v += t.weight * std::pow(lambda, t.alpha);
                   return v;
                 },
                 [&](const StableLog& s) {
                   return std::pow(lambda, s.alpha) * std::pow(std::log1p(lambda), s.beta);
                 },
                 [&](const Tabulated&) { return spec.table()(lambda); }},
      spec.variant());
}

double phi_derivative(const BernsteinSpec& spec, double lambda, int k) {
  if (!(lambda > 0)) throw DomainError("phi_derivative: lambda must be > 0");
  if (k == 0) return eval_phi(spec, lambda);
  return std::visit(
      overloaded{[&](const Stable& s) { return power_derivative(s.alpha, lambda, k); },
                 [&](const StableMixture& m) {
                   double v = 0;
                   for (const auto& t : m.terms) v += t.weight * power_derivative(t.alpha, lambda, k);
                   return v;
                 },
                 [&](const StableLog& s) {
                   if (k > 3) throw UnsupportedVariant("stable_log derivatives implemented up to 3");
                   const double phi = eval_phi(spec, lambda);
                   const LogDerivs d = stable_log_derivs(s, lambda);
                   if (k == 1) return phi * d.g1;
                   if (k == 2) return phi * (d.g2 + d.g1 * d.g1);
                   return phi * (d.g3 + 3.0 * d.g1 * d.g2 + d.g1 * d.g1 * d.g1);
                 },
                 [&](const Tabulated&) {
                   if (k != 1) throw UnsupportedVariant("tabulated phi: only first derivative");
                   return spec.table().log_slope(lambda) * spec.table()(lambda) / lambda;
                 }},
      spec.variant());
}

double phi_log_slope(const BernsteinSpec& spec, double lambda) {
  if (const auto* t = std::get_if<Tabulated>(&spec.variant())) {
    if (lambda < t->lambda(0) || lambda > t->lambda(t->lambda.size() - 1))
      throw ExtrapolationError("phi_log_slope: outside tabulated range");
    return spec.table().log_slope(lambda);
  }
  return lambda * phi_derivative(spec, lambda, 1) / eval_phi(spec, lambda);
}

double stable_mu_constant(double alpha) { return alpha / std::tgamma(1.0 - alpha); }

double levy_density_mu(const BernsteinSpec& spec, double t) {
  if (!(t > 0)) throw DomainError("levy_density_mu: t must be > 0");
  return std::visit(
      overloaded{[&](const Stable& s) { return stable_mu_constant(s.alpha) * std::pow(t, -1.0 - s.alpha); },
                 [&](const StableMixture& m) {
                   double v = 0;
                   for (const auto& term : m.terms)
                     v += term.weight * stable_mu_constant(term.alpha) * std::pow(t, -1.0 - term.alpha);
                   return v;
                 },
                 [](const StableLog&) -> double {
                   throw UnsupportedVariant("no analytic Levy density for stable_log");
                 },
                 [](const Tabulated&) -> double {
                   throw UnsupportedVariant("no Levy density for tabulated phi");
                 }},
      spec.variant());
}

double phi_from_levy_measure(const BernsteinSpec& spec, double lambda) {
  if (!(lambda > 0)) throw DomainError("phi_from_levy_measure: lambda must be > 0");
  // In v = log(lambda t) the integrand decays like e^{(1-alpha) v} at -inf and
  // e^{-alpha v} at +inf; the window below covers every catalog index.
  auto integrand = [&](double t) { return -std::expm1(-lambda * t) * levy_density_mu(spec, t); };
  const double shift = std::log(lambda);
  double lo_alpha = 1.0, hi_alpha = 0.0;
  if (const auto* s = std::get_if<Stable>(&spec.variant())) {
    lo_alpha = hi_alpha = s->alpha;
  } else if (const auto* m = std::get_if<StableMixture>(&spec.variant())) {
    for (const auto& t : m->terms) {
      lo_alpha = std::min(lo_alpha, t.alpha);
      hi_alpha = std::max(hi_alpha, t.alpha);
    }
  } else {
    throw UnsupportedVariant("phi_from_levy_measure needs an analytic Levy density");
  }
  const double vmin = -42.0 / (1.0 - hi_alpha) - shift;
  const double vmax = 42.0 / lo_alpha - shift;
  return integrate_log<double>(integrand, vmin, vmax, 0.0, 1e-11, 20000);
}

ScalingProfile scaling_indices(const BernsteinSpec& spec, double window_max, int samples) {
  if (!(window_max >= 10.0)) throw DomainError("scaling_indices: window must reach at least 10");
  Eigen::VectorXd lam(samples), logphi(samples);
  ScalingProfile p;
  p.window_max = window_max;
  p.alpha1 = 1e300;
  p.alpha2 = -1e300;
  for (int i = 0; i < samples; ++i) {
    lam(i) = i + 1 == samples ? window_max : std::pow(window_max, double(i) / double(samples - 1));
    logphi(i) = std::log(eval_phi(spec, lam(i)));
    const double slope = phi_log_slope(spec, lam(i));
    p.alpha1 = std::min(p.alpha1, slope);
    p.alpha2 = std::max(p.alpha2, slope);
  }
  if (!(p.alpha1 > 0.0)) throw RejectedSpec("fitted lower scaling index alpha1 <= 0");
  if (!(p.alpha2 < 1.0))
    throw RejectedSpec("fitted upper scaling index alpha2 = " + std::to_string(p.alpha2) + " >= 1");
  // Smallest b1 certifying both sides on every sampled pair r <= R.
  double logb1 = 0.0;
  for (int i = 0; i < samples; ++i) {
    for (int j = i; j < samples; ++j) {
      const double lr = std::log(lam(j) / lam(i));
      const double lq = logphi(j) - logphi(i);
      logb1 = std::max({logb1, p.alpha1 * lr - lq, lq - p.alpha2 * lr});
    }
  }
  p.b1 = std::exp(logb1);
  return p;
}

double richardson_derivative(const BernsteinSpec& spec, double lambda, int k, double rel_step) {
  auto f = [&](double x) { return eval_phi(spec, x); };
  auto central = [&](double h) {
    switch (k) {
      case 1:
        return (f(lambda + h) - f(lambda - h)) / (2 * h);
      case 2:
        return (f(lambda + h) - 2 * f(lambda) + f(lambda - h)) / (h * h);
      case 3:
        return (f(lambda + 2 * h) - 2 * f(lambda + h) + 2 * f(lambda - h) - f(lambda - 2 * h)) /
               (2 * h * h * h);
      default:
        throw DomainError("richardson_derivative: order must be 1..3");
    }
  };
  const double h = rel_step * lambda;
  const double d1 = central(h), d2 = central(h / 2), d3 = central(h / 4);
  const double r1 = (4 * d2 - d1) / 3, r2 = (4 * d3 - d2) / 3;
  return (16 * r2 - r1) / 15;
}

BernsteinReport bernstein_check(const BernsteinSpec& spec, int k_max, double lambda_lo,
                                double lambda_hi, int samples) {
  if (!spec.is_analytic()) throw UnsupportedVariant("bernstein_check needs an analytic variant");
  BernsteinReport report;
  report.k_max = k_max;
  report.samples = samples;
  const bool numeric = std::holds_alternative<StableLog>(spec.variant());
  for (int i = 0; i < samples; ++i) {
    const double lambda = lambda_lo * std::pow(lambda_hi / lambda_lo, double(i) / (samples - 1));
    for (int k = 1; k <= k_max; ++k) {
      const double d = numeric ? richardson_derivative(spec, lambda, k) : phi_derivative(spec, lambda, k);
      const double signed_value = (k % 2 == 1 ? 1.0 : -1.0) * d;
      // Tolerance relative to the natural size phi(lambda)/lambda^k of the
      // k-th derivative absorbs finite-difference noise.
      const double scale = eval_phi(spec, lambda) / std::pow(lambda, k);
      if (signed_value < -1e-7 * scale) report.violations.push_back({k, lambda, signed_value});
    }
  }
  return report;
}

}  // namespace nonlocal
