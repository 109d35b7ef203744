#include "nonlocal/kernel.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "nonlocal/error.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Range of stable indices present in an analytic Levy density.
std::pair<double, double> index_range(const BernsteinSpec& spec) {
  if (const auto* s = std::get_if<Stable>(&spec.variant())) return {s->alpha, s->alpha};
  if (const auto* m = std::get_if<StableMixture>(&spec.variant())) {
    double lo = 1, hi = 0;
    for (const auto& t : m->terms) {
      lo = std::min(lo, t.alpha);
      hi = std::max(hi, t.alpha);
    }
    return {lo, hi};
  }
  throw UnsupportedVariant("build_kernel: " + spec.name() +
                           " has no analytic Levy density; use build_kernel_from_exponent");
}

// Sum of stable closed forms; exact for Stable and StableMixture.
KernelTable::Evaluator closed_form(const BernsteinSpec& spec, int n) {
  std::vector<std::pair<double, double>> terms;  // (constant, exponent)
  if (const auto* s = std::get_if<Stable>(&spec.variant())) {
    terms.emplace_back(stable_kernel_constant(n, s->alpha), -n - 2 * s->alpha);
  } else if (const auto* m = std::get_if<StableMixture>(&spec.variant())) {
    for (const auto& t : m->terms)
      terms.emplace_back(t.weight * stable_kernel_constant(n, t.alpha), -n - 2 * t.alpha);
  } else {
    return {};
  }
  return [terms](double r) {
    double s = 0;
    for (const auto& [c, p] : terms) s += c * std::pow(r, p);
    return s;
  };
}

// phi continued past the ends of a tabulated spec by its end power law.
double phi_extended(const BernsteinSpec& spec, double lambda) {
  if (spec.is_analytic()) return eval_phi(spec, lambda);
  const auto& tab = spec.table();
  const auto& v = std::get<Tabulated>(spec.variant());
  const double lo = v.lambda(0), hi = v.lambda(v.lambda.size() - 1);
  if (lambda >= lo && lambda <= hi) return tab(lambda);
  const double edge = lambda < lo ? lo : hi;
  return tab(edge) * std::pow(lambda / edge, tab.log_slope(edge));
}

double phi_slope_extended(const BernsteinSpec& spec, double lambda) {
  if (spec.is_analytic()) return phi_log_slope(spec, lambda);
  const auto& v = std::get<Tabulated>(spec.variant());
  const double lo = v.lambda(0), hi = v.lambda(v.lambda.size() - 1);
  return spec.table().log_slope(std::clamp(lambda, lo, hi));
}

// Fourth-order central derivative of y with respect to the index, divided by
// the (uniform) step in log r.
double fd4(const Eigen::VectorXd& y, Eigen::Index i, double h) {
  return (-y(i + 2) + 8 * y(i + 1) - 8 * y(i - 1) + y(i - 2)) / (12 * h);
}

// Gauss-Legendre integral over [log a, log b] of g(s) d log s.
template <typename G>
double log_cell(G&& g, double a, double b) {
  static const auto rule = gauss_legendre<double>(8);
  const double la = std::log(a), lb = std::log(b);
  double sum = 0;
  for (int k = 0; k < 8; ++k) {
    const double v = 0.5 * (la + lb) + 0.5 * (lb - la) * rule.first(k);
    sum += rule.second(k) * g(std::exp(v));
  }
  return 0.5 * (lb - la) * sum;
}

}  // namespace

double sphere_area(int n) { return 2 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n); }
double ball_volume(int n) { return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1); }

double stable_kernel_constant(int n, double alpha) {
  return alpha * std::pow(4.0, alpha) * std::tgamma(0.5 * n + alpha) /
         (std::pow(kPi, 0.5 * n) * std::tgamma(1 - alpha));
}

KernelTable::KernelTable(int dim, const ScalingProfile& scaling, Eigen::VectorXd r,
                         Eigen::VectorXd j, Evaluator exact, std::string route,
                         Moments moments)
    : dim_(dim), route_(std::move(route)), r_(std::move(r)), j_(std::move(j)),
      exact_(std::move(exact)), moments_(std::move(moments)) {
  if (dim_ < 1) throw DomainError("KernelTable: dimension must be >= 1");
  if (r_.size() < 8 || r_.size() != j_.size()) throw DomainError("KernelTable: bad grid");
  for (Eigen::Index i = 0; i < j_.size(); ++i) {
    if (!(j_(i) > 0) || !std::isfinite(j_(i))) {
      std::ostringstream os;
      os << "KernelTable: j not positive at r = " << r_(i);
      throw VerificationFailure(os.str());
    }
    if (i > 0 && j_(i) > j_(i - 1) * (1 + 1e-12)) {
      std::ostringstream os;
      os << "KernelTable: j increases at r = " << r_(i);
      throw VerificationFailure(os.str());
    }
  }
  j_tab_ = LogLogTable(r_, j_);
  j1_ = density(1.0);
  fill_derived();
  fit_constants(scaling);
}

double KernelTable::density(double r) const {
  if (!(r > 0)) throw DomainError("KernelTable::density: r must be > 0");
  if (r >= r_min() && r <= r_max()) return j_tab_(r);
  return exact_ ? exact_(r) : j_tab_(r);
}

double KernelTable::log_slope(double r) const {
  if ((r >= r_min() && r <= r_max()) || !exact_) return j_tab_.log_slope(r);
  const double h = 1e-3;
  return (std::log(exact_(r * std::exp(h))) - std::log(exact_(r * std::exp(-h)))) / (2 * h);
}

void KernelTable::fill_derived() {
  const Eigen::Index N = r_.size();
  const int n = dim_;
  const double w = sphere_area(n);
  auto first = [&](double s) { return w * std::pow(s, n) * density(s); };
  auto second = [&](double s) { return w * std::pow(s, n + 2) * density(s); };

  // Mass beyond r_max: quadrature over 13 decades, then the end power law.
  auto tail_far = [&](double r) {
    const double R = r * 1e13;
    const double body = integrate_log<double>([&](double s) { return first(s) / s; },
                                              std::log(r), std::log(R), 0.0, 1e-10);
    const double p = log_slope(R);
    return body + first(R) / (-p - n);
  };
  auto moment_near = [&](double r) {
    const double rho = r * 1e-13;
    const double body = integrate_log<double>([&](double s) { return second(s) / s; },
                                              std::log(rho), std::log(r), 0.0, 1e-10);
    const double p = log_slope(rho);
    return body + second(rho) / (n + 2 + p);
  };

  T_.resize(N);
  M2_.resize(N);
  if (moments_.tail && moments_.second_moment) {
    for (Eigen::Index i = 0; i < N; ++i) {
      T_(i) = moments_.tail(r_(i));
      M2_(i) = moments_.second_moment(r_(i));
    }
  } else {
    T_(N - 1) = tail_far(r_max());
    for (Eigen::Index i = N - 2; i >= 0; --i)
      T_(i) = T_(i + 1) + log_cell(first, r_(i), r_(i + 1));
    M2_(0) = moment_near(r_min());
    for (Eigen::Index i = 1; i < N; ++i)
      M2_(i) = M2_(i - 1) + log_cell(second, r_(i - 1), r_(i));
  }

  varphi_.resize(N);
  P_.resize(N);
  P1_.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    varphi_(i) = j1_ / (j_(i) * std::pow(r_(i), n));
    P_(i) = M2_(i) / (r_(i) * r_(i)) + T_(i);
  }
  // P1(r) = int_r^inf ds / (s varphi(s)), accumulated from the far end.
  auto inv = [&](double s) { return 1.0 / varphi(s); };
  P1_(N - 1) = T_(N - 1) / (w * j1_);
  for (Eigen::Index i = N - 2; i >= 0; --i) P1_(i) = P1_(i + 1) + log_cell(inv, r_(i), r_(i + 1));

  T_tab_ = LogLogTable(r_, T_);
  M2_tab_ = LogLogTable(r_, M2_);
  P1_tab_ = LogLogTable(r_, P1_);
}

double KernelTable::tail(double r) const {
  if (!(r > 0)) throw DomainError("KernelTable::tail: r must be > 0");
  if (r >= r_min() && r <= r_max()) return T_tab_(r);
  if (moments_.tail) return moments_.tail(r);
  const int n = dim_;
  const double w = sphere_area(n);
  auto f = [&](double s) { return w * std::pow(s, n) * density(s) / s; };
  if (r < r_min())
    return T_(0) + integrate_log<double>(f, std::log(r), std::log(r_min()), 0.0, 1e-10);
  const double R = r * 1e13;
  const double p = log_slope(R);
  return integrate_log<double>(f, std::log(r), std::log(R), 0.0, 1e-10) +
         w * std::pow(R, n) * density(R) / (-p - n);
}

double KernelTable::second_moment(double r) const {
  if (!(r > 0)) throw DomainError("KernelTable::second_moment: r must be > 0");
  if (r >= r_min() && r <= r_max()) return M2_tab_(r);
  if (moments_.second_moment) return moments_.second_moment(r);
  const int n = dim_;
  const double w = sphere_area(n);
  auto f = [&](double s) { return w * std::pow(s, n + 2) * density(s) / s; };
  if (r > r_max())
    return M2_(M2_.size() - 1) +
           integrate_log<double>(f, std::log(r_max()), std::log(r), 0.0, 1e-10);
  const double rho = r * 1e-13;
  const double p = log_slope(rho);
  return integrate_log<double>(f, std::log(rho), std::log(r), 0.0, 1e-10) +
         w * std::pow(rho, n + 2) * density(rho) / (n + 2 + p);
}

double KernelTable::varphi(double r) const { return j1_ / (density(r) * std::pow(r, dim_)); }

double KernelTable::P(double r) const { return second_moment(r) / (r * r) + tail(r); }

double KernelTable::P1(double r) const {
  if (r >= r_min() && r <= r_max()) return P1_tab_(r);
  return tail(r) / (sphere_area(dim_) * j1_);
}

void KernelTable::fit_constants(const ScalingProfile& scaling) {
  const Eigen::Index N = r_.size();
  const double h = std::log(r_(1) / r_(0));
  KernelConstants c;

  c.b2 = 0;
  c.b2_reverse = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    if (r_(i) < 1 - 1e-9 || r_(i) + 1 > r_max()) continue;
    const double q = density(r_(i) + 1) / j_(i);
    c.b2 = std::max(c.b2, q);
    c.b2_reverse = std::max(c.b2_reverse, 1 / q);
  }

  const Eigen::VectorXd logj = j_.array().log().matrix();
  Eigen::VectorXd g(N);
  for (Eigen::Index i = 2; i + 2 < N; ++i)
    g(i) = -j_(i) * fd4(logj, i, h) / (r_(i) * r_(i));
  c.ej_violation = 0;
  // Below 1e-12 j(1) the table is at its resolution floor.
  for (Eigen::Index i = 2; i + 3 < N; ++i) {
    if (j_(i + 3) < 1e-12 * j1_) break;
    if (!(g(i) > 0)) {
      c.ej_violation = std::numeric_limits<double>::infinity();
      break;
    }
    c.ej_violation = std::max(c.ej_violation, (g(i + 1) - g(i)) / g(i));
  }

  std::vector<Eigen::Index> small;
  for (Eigen::Index i = 0; i < N; ++i)
    if (r_(i) <= 1 + 1e-12) small.push_back(i);
  const std::size_t stride = std::max<std::size_t>(1, small.size() / 120);
  c.a3 = 1;
  c.comparability = 1;
  for (std::size_t a = 0; a < small.size(); ++a) {
    const Eigen::Index i = small[a];
    const double pv = P_(i) * varphi_(i);
    c.comparability = std::max({c.comparability, pv, 1 / pv});
    if (a % stride) continue;
    for (std::size_t b = a; b < small.size(); b += stride) {
      const Eigen::Index k = small[b];
      const double ratio = r_(k) / r_(i), q = varphi_(k) / varphi_(i);
      c.a3 = std::max({c.a3, std::pow(ratio, 2 * scaling.alpha1) / q,
                       q / std::pow(ratio, 2 * scaling.alpha2)});
    }
  }

  if (!std::isfinite(c.b2) || !std::isfinite(c.b2_reverse) || !std::isfinite(c.a3) ||
      !std::isfinite(c.comparability))
    throw VerificationFailure("KernelTable: fitted constants not finite");
  if (c.ej_violation > 1e-6) {
    std::ostringstream os;
    os << "KernelTable: -j'(r)/r not non-increasing (relative rise " << c.ej_violation << ")";
    throw VerificationFailure(os.str());
  }
  constants_ = c;
}

double kernel_density_quadrature(const BernsteinSpec& spec, int n, double r) {
  if (!(r > 0)) throw DomainError("kernel_density_quadrature: r must be > 0");
  const auto [alo, ahi] = index_range(spec);
  (void)ahi;
  const double r2 = r * r;
  auto f = [&](double s) {
    const double t = r2 / (4 * s);
    return std::pow(s, 0.5 * n) * std::exp(-s) * levy_density_mu(spec, t) * r2 / (4 * s * s);
  };
  const double vmin = -40.0 / (0.5 * n + alo);
  const double vmax = std::log(120.0);
  const double I = integrate_log<double>(f, vmin, vmax, 0.0, 1e-11, 8000);
  return std::pow(kPi, -0.5 * n) * std::pow(r, -n) * I;
}

KernelTable build_kernel(const BernsteinSpec& spec, int dim, const KernelGrid& grid) {
  if (dim < 1) throw DomainError("build_kernel: dimension must be >= 1");
  index_range(spec);  // rejects variants without mu
  const Eigen::VectorXd r = geometric_grid(grid.r_min, grid.r_max, grid.per_decade);
  Eigen::VectorXd j(r.size());
  std::vector<std::string> failures(r.size());
  parallel_for(r.size(), [&](std::int64_t i) {
    try {
      j(i) = kernel_density_quadrature(spec, dim, r(i));
    } catch (const QuadratureError&) {
      failures[i] = "x";
      j(i) = std::numeric_limits<double>::quiet_NaN();
    }
  });
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (!failures[i].empty()) {
      std::ostringstream os;
      os << "build_kernel: quadrature did not converge at r = " << r(i);
      throw QuadratureError(os.str());
    }

  auto exact = closed_form(spec, dim);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r(i) < 1e-3 || r(i) > 1e2) continue;
    const double cf = exact(r(i));
    if (std::abs(cf - j(i)) > 5e-3 * cf) {
      std::ostringstream os;
      os << "build_kernel: closed form and quadrature disagree at r = " << r(i);
      throw VerificationFailure(os.str());
    }
  }
  KernelTable table(dim, spec.scaling(), r, j, exact, "levy-quadrature");
  if (const auto* s = std::get_if<Stable>(&spec.variant()))
    table.stable_constant = stable_kernel_constant(dim, s->alpha);
  return table;
}

KernelTable build_kernel_from_exponent(const BernsteinSpec& spec, int dim,
                                       const KernelGrid& grid) {
  if (dim < 1 || dim > 3) throw DomainError("build_kernel_from_exponent: dimension must be 1..3");
  // Unknown: y_k with mu(dt) ~ sum_k g_ref(t_k) y_k ds delta_{t_k}, s = log t.
  const int per_decade_t = 8, per_decade_l = 16;
  const double t_lo = 1e-12, t_hi = 1e12;
  const Eigen::VectorXd t = geometric_grid(t_lo, t_hi, per_decade_t);
  const Eigen::VectorXd lam = geometric_grid(1e-10, 1e10, per_decade_l);
  const Eigen::Index K = t.size(), M = lam.size();
  const double ds = std::log(t(1) / t(0));

  Eigen::VectorXd gref(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double beta = std::clamp(phi_slope_extended(spec, 1 / t(k)), 0.01, 0.99);
    gref(k) = beta / std::tgamma(1 - beta) * phi_extended(spec, 1 / t(k)) * ds;
  }

  // Rows: relative fit of phi, curvature penalty, weak pull towards the
  // reference density where the data leave y undetermined.
  const double tau = 1e-2, tau0 = 1e-3;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M + 2 * K - 2, K);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(M + 2 * K - 2);
  for (Eigen::Index i = 0; i < M; ++i) {
    const double p = phi_extended(spec, lam(i));
    for (Eigen::Index k = 0; k < K; ++k) A(i, k) = gref(k) * -std::expm1(-lam(i) * t(k)) / p;
    b(i) = 1;
  }
  for (Eigen::Index k = 1; k + 1 < K; ++k) {
    A(M + k - 1, k - 1) = tau;
    A(M + k - 1, k) = -2 * tau;
    A(M + k - 1, k + 1) = tau;
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    A(M + K - 2 + k, k) = tau0;
    b(M + K - 2 + k) = tau0;
  }

  // Active-set projection onto y >= 0 on the normal equations; the
  // Tikhonov rows keep them well conditioned.
  const Eigen::MatrixXd G = A.transpose() * A;
  const Eigen::VectorXd rhs = A.transpose() * b;
  std::vector<bool> active(K, true);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(K);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index k = 0; k < K; ++k)
      if (active[k]) cols.push_back(k);
    const Eigen::Index m = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd Gs(m, m);
    Eigen::VectorXd rs(m);
    for (Eigen::Index p = 0; p < m; ++p) {
      rs(p) = rhs(cols[p]);
      for (Eigen::Index q = 0; q < m; ++q) Gs(p, q) = G(cols[p], cols[q]);
    }
    const Eigen::VectorXd ys = Gs.ldlt().solve(rs);
    y.setZero();
    bool changed = false;
    for (Eigen::Index p = 0; p < m; ++p) {
      if (ys(p) < 0) {
        active[cols[p]] = false;
        changed = true;
      } else {
        y(cols[p]) = ys(p);
      }
    }
    if (!changed) break;
  }

  // Heat-kernel mixture: j, tail mass and second moment in closed form
  // through the regularized incomplete gamma functions of order n/2.
  auto mix = std::make_shared<std::pair<Eigen::VectorXd, Eigen::VectorXd>>(t, gref.cwiseProduct(y));
  auto upper_q = [dim](double x) {  // Q(n/2, x)
    const double sx = std::sqrt(x);
    if (dim == 1) return std::erfc(sx);
    if (dim == 2) return std::exp(-x);
    return std::erfc(sx) + 2 * sx / std::sqrt(kPi) * std::exp(-x);
  };
  Eigen::VectorXd heat_mass(K), inv4t(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    heat_mass(k) = mix->second(k) * std::pow(4 * kPi * t(k), -0.5 * dim);
    inv4t(k) = 1 / (4 * t(k));
  }
  auto mixture_density = [heat_mass, inv4t](double r) {
    return (heat_mass.array() * (-r * r * inv4t.array()).exp()).sum();
  };
  KernelTable::Moments moments;
  moments.tail = [mix, upper_q](double r) {
    const auto& [tk, mk] = *mix;
    double s = 0;
    for (Eigen::Index k = 0; k < tk.size(); ++k) s += mk(k) * upper_q(r * r / (4 * tk(k)));
    return s;
  };
  // int_{|y|<r} |y|^2 G_t = 2 n t P(n/2 + 1, x), P(a+1, x) = P(a, x) - x^a e^{-x} / Gamma(a+1).
  moments.second_moment = [mix, upper_q, dim](double r) {
    const auto& [tk, mk] = *mix;
    const double a = 0.5 * dim;
    double s = 0;
    for (Eigen::Index k = 0; k < tk.size(); ++k) {
      const double x = r * r / (4 * tk(k));
      double p1 = x < 1e-3 ? std::pow(x, a + 1) / std::tgamma(a + 2) * (1 - x * (a + 1) / (a + 2))
                           : (1 - upper_q(x)) - std::pow(x, a) * std::exp(-x) / std::tgamma(a + 1);
      s += mk(k) * 2 * dim * tk(k) * std::max(p1, 0.0);
    }
    return s;
  };

  // Where j falls below 1e-12 j(1) the mixture is at its resolution floor;
  // from there on j continues with the last resolved power law.
  const Eigen::VectorXd r = geometric_grid(grid.r_min, grid.r_max, grid.per_decade);
  const double floor_level = 1e-12 * mixture_density(1.0);
  double r_floor = std::numeric_limits<double>::infinity(), j_floor = 0, p_floor = 0;
  for (Eigen::Index i = 1; i < r.size(); ++i) {
    if (mixture_density(r(i)) < floor_level) {
      r_floor = r(i - 1);
      j_floor = mixture_density(r_floor);
      p_floor = std::log(mixture_density(r_floor) / mixture_density(r_floor * 0.99)) /
                std::log(1 / 0.99);
      break;
    }
  }
  auto density = [=](double x) {
    return x <= r_floor ? mixture_density(x) : j_floor * std::pow(x / r_floor, p_floor);
  };
  if (std::isfinite(r_floor)) {
    const double w = sphere_area(dim);
    moments.tail = [=, tail = moments.tail](double x) {
      auto far = [&](double y) {
        return w * j_floor * std::pow(y / r_floor, p_floor) * std::pow(y, dim) / -(dim + p_floor);
      };
      return x <= r_floor ? tail(x) - tail(r_floor) + far(r_floor) : far(x);
    };
  }
  Eigen::VectorXd j(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) j(i) = density(r(i));

  KernelTable table(dim, spec.scaling(), r, j, density, "exponent-inversion", moments);
  const auto rep = check_char_exponent(table, spec, {0.1, 0.5, 1.0, 2.0, 10.0});
  if (rep.max_rel_dev() > 1e-2) {
    std::ostringstream os;
    os << "build_kernel_from_exponent: characteristic residual " << rep.max_rel_dev()
       << " exceeds 1e-2";
    throw ConvergenceError(os.str());
  }
  return table;
}

KernelTable build_kernel_any(const BernsteinSpec& spec, int dim, const KernelGrid& grid) {
  if (spec.has_levy_density()) return build_kernel(spec, dim, grid);
  return build_kernel_from_exponent(spec, dim, grid);
}

double CharExponentReport::max_rel_dev() const {
  double m = 0;
  for (const auto& row : rows) m = std::max(m, row.rel_dev);
  return m;
}

CharExponentReport check_char_exponent(const KernelTable& table, const BernsteinSpec& spec,
                                       const std::vector<double>& z_list) {
  const int n = table.dim();
  const double w = sphere_area(n);
  // Spherical mean of cos(z.y) at |z||y| = x.
  auto osc = [n](double x) {
    if (n == 1) return std::cos(x);
    if (x < 1e-8) return 1.0;
    const double nu = 0.5 * n - 1;
    return std::tgamma(0.5 * n) * std::pow(2 / x, nu) * std::cyl_bessel_j(nu, x);
  };
  auto one_minus = [&](double x) {
    if (n == 1) return 2 * std::pow(std::sin(0.5 * x), 2);
    return 1 - osc(x);
  };

  CharExponentReport rep;
  for (double z : z_list) {
    if (!(z > 0)) throw DomainError("check_char_exponent: z must be > 0");
    const double rs = 1e-2 / z, ra = 40 / z;

    // Taylor part: (zr)^2/(2n) - (zr)^4/(8n(n+2)).
    const double m4 = integrate_log<double>(
        [&](double s) { return w * std::pow(s, n + 3) * table.density(s); }, std::log(rs) - 40,
        std::log(rs), 0.0, 1e-10);
    double I = z * z / (2.0 * n) * table.second_moment(rs) -
               std::pow(z, 4) / (8.0 * n * (n + 2)) * m4;

    I += integrate_log<double>(
        [&](double s) { return w * std::pow(s, n - 1) * one_minus(z * s) * table.density(s); },
        std::log(rs), std::log(ra), 0.0, 1e-11, 8000);

    // Beyond ra: full mass minus the oscillatory part, summed over half
    // periods; the alternating partial sums are closed by repeated averaging.
    static const auto rule = gauss_legendre<double>(20);
    const double half = kPi / z;
    std::vector<double> partial;
    double S = 0, a = ra;
    for (int p = 0; p < 4000; ++p) {
      double cell = 0;
      for (int k = 0; k < 20; ++k) {
        const double s = a + 0.5 * half * (1 + rule.first(k));
        cell += rule.second(k) * std::pow(s, n - 1) * osc(z * s) * table.density(s);
      }
      cell *= 0.5 * half * w;
      S += cell;
      partial.push_back(S);
      a += half;
      if (std::abs(cell) < 1e-15 * std::abs(I)) break;
      if (p >= 400 && std::abs(cell) < 1e-6 * std::abs(I)) break;
    }
    const std::size_t levels = std::min<std::size_t>(10, partial.size() - 1);
    std::vector<double> tailsum(partial.end() - levels - 1, partial.end());
    for (std::size_t l = 0; l < levels; ++l)
      for (std::size_t i = 0; i + 1 < tailsum.size() - l; ++i)
        tailsum[i] = 0.5 * (tailsum[i] + tailsum[i + 1]);
    I += table.tail(ra) - tailsum[0];

    const double phi = eval_phi(spec, z * z);
    rep.rows.push_back({z, I, phi, std::abs(I - phi) / phi});
  }
  return rep;
}

RecursionReport dimension_recursion_check(const BernsteinSpec& spec, int dim,
                                          const KernelGrid& grid) {
  const KernelTable lo = build_kernel_any(spec, dim, grid);
  const KernelTable hi = build_kernel_any(spec, dim + 2, grid);
  const Eigen::VectorXd& r = lo.r();
  const double h = std::log(r(1) / r(0));
  const Eigen::VectorXd logj = lo.j_values().array().log().matrix();

  RecursionReport rep;
  rep.dim = dim;
  std::vector<double> rs, ls, rh;
  for (Eigen::Index i = 2; i + 2 < r.size(); ++i) {
    if (r(i) < 0.01 * (1 - 1e-12) || r(i) > 10 * (1 + 1e-12)) continue;
    const double lhs = -lo.j_values()(i) * fd4(logj, i, h) / (r(i) * r(i));
    const double rhs = 2 * kPi * hi.density(r(i));
    rs.push_back(r(i));
    ls.push_back(lhs);
    rh.push_back(rhs);
    const double e = std::abs(lhs - rhs) / rhs;
    if (e > rep.max_rel_err) {
      rep.max_rel_err = e;
      rep.worst_r = r(i);
    }
  }
  rep.r = Eigen::Map<Eigen::VectorXd>(rs.data(), rs.size());
  rep.lhs = Eigen::Map<Eigen::VectorXd>(ls.data(), ls.size());
  rep.rhs = Eigen::Map<Eigen::VectorXd>(rh.data(), rh.size());
  return rep;
}

PruittReport pruitt_functions(const KernelTable& table) {
  PruittReport rep;
  rep.r = table.r();
  rep.P = table.pruitt_P();
  rep.P1 = table.pruitt_P1();
  rep.comparability = table.constants().comparability;
  const double norm = sphere_area(table.dim()) * table.j_at_one();
  rep.p1_bound_ratio = 0;
  rep.P_decreasing = rep.P1_decreasing = true;
  for (Eigen::Index i = 0; i < rep.r.size(); ++i) {
    rep.p1_bound_ratio = std::max(rep.p1_bound_ratio, rep.P1(i) * norm / rep.P(i));
    if (i > 0) {
      rep.P_decreasing = rep.P_decreasing && rep.P(i) < rep.P(i - 1);
      rep.P1_decreasing = rep.P1_decreasing && rep.P1(i) < rep.P1(i - 1);
    }
  }
  return rep;
}

}  // namespace nonlocal
