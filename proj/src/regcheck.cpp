#include "nonlocal/regcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nonlocal/error.hpp"
#include "nonlocal/sampler.hpp"

namespace nonlocal {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Centre and radius of a ball or interval.
std::pair<Point, double> ball_of(const Domain& domain) {
  if (const auto* b = std::get_if<Ball>(&domain.shape())) return {b->center, b->radius};
  if (const auto* i = std::get_if<Interval>(&domain.shape()))
    return {point(0.5 * (i->a + i->b)), 0.5 * (i->b - i->a)};
  throw DomainError("expected a ball or an interval, got " + domain.name());
}

// Nearest grid node to x, or -1 outside the box.
Eigen::Index nearest_node(const Grid& g, const Point& x) {
  int idx[2] = {0, 0};
  for (int d = 0; d < g.dim; ++d) {
    const long i = std::lround((x(d) - g.origin(d)) / g.h);
    if (i < 0 || i >= g.n[d]) return -1;
    idx[d] = int(i);
  }
  return g.index(idx[0], idx[1]);
}

}  // namespace

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  LineFit out;
  out.points = int(x.size());
  if (x.size() < 2) return out;
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
  const double syy = (y.array() - my).square().sum();
  if (sxx == 0) return out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return out;
}

double gen_holder_seminorm(const Field& u, const Domain& domain, const Modulus& modulus,
                           const SeminormOptions& opt) {
  const Grid& g = u.grid;
  std::vector<Eigen::Index> nodes;
  for (Eigen::Index k = 0; k < g.size(); ++k)
    if (domain.sdist(g.node(k)) >= 0) nodes.push_back(k);
  if (nodes.size() < 2) return 0;
  const double lo = std::log10(opt.min_distance > 0 ? opt.min_distance : g.h);
  const double hi = std::log10(domain.diameter());
  double best = 0;
  const int k0 = int(std::floor(lo));
  for (int k = k0; k < hi; ++k) {
    const double a = std::max(lo, double(k)), b = std::min(hi, double(k + 1));
    if (b <= a) continue;
    for (int i = 0; i < opt.pairs_per_decade; ++i) {
      Rng rng = path_rng(opt.seed, (std::uint64_t(k - k0) << 32) + std::uint64_t(i));
      std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
      std::uniform_real_distribution<double> unif(0, 1);
      std::normal_distribution<double> n01;
      const Eigen::Index kx = nodes[pick(rng)];
      const Point x = g.node(kx);
      const double rho = std::pow(10.0, a + (b - a) * unif(rng));
      Point dir(g.dim);
      for (int d = 0; d < g.dim; ++d) dir(d) = n01(rng);
      const Eigen::Index ky = nearest_node(g, x + rho * dir / dir.norm());
      if (ky < 0 || ky == kx) continue;
      const Point y = g.node(ky);
      if (domain.sdist(y) < 0) continue;
      const double m = modulus((x - y).norm());
      if (m > 0) best = std::max(best, std::abs(u.values(kx) - u.values(ky)) / m);
    }
  }
  return best;
}

Eigen::VectorXd boundary_quotient(const Field& u, const RenewalTable& renewal,
                                  const Domain& domain) {
  const Grid& g = u.grid;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double d = domain.sdist(g.node(k));
    if (d >= g.h * (1 - 1e-9)) q(k) = u.values(k) / renewal.V(d);
  }
  return q;
}

QuotientFit boundary_quotient_alpha(const Field& u, const RenewalTable& renewal,
                                    const Domain& domain, const QuotientOptions& opt) {
  const Grid& g = u.grid;
  const double dmin = std::max(g.h, opt.min_depth) * (1 - 1e-9);
  Eigen::VectorXd depth(g.size()), q = Eigen::VectorXd::Zero(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    depth(k) = domain.sdist(g.node(k));
    if (depth(k) >= dmin) q(k) = u.values(k) / renewal.V(depth(k));
  }
  std::vector<double> rhos, sups;
  for (double rho = opt.rho_max; rho >= std::max(opt.rho_min, opt.min_cells * g.h) * (1 - 1e-9); rho /= 2) {
    // Offsets in the half space with | |k| h - rho | <= h / 2.
    const int m = int(std::ceil(rho / g.h + 1));
    std::vector<std::array<int, 2>> offs;
    for (int a = -m; a <= m; ++a)
      for (int b = 0; b <= (g.dim == 1 ? 0 : m); ++b) {
        if (b == 0 && a <= 0) continue;
        if (std::abs(std::hypot(a, b) * g.h - rho) <= 0.5 * g.h) offs.push_back({a, b});
      }
    const double cut = std::max(dmin, opt.depth_factor * rho);
    double s = 0;
    bool any = false;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      if (depth(k) < cut) continue;
      const auto [i, j] = g.multi_index(k);
      for (const auto& o : offs) {
        const int i2 = i + o[0], j2 = j + o[1];
        if (i2 < 0 || i2 >= g.n[0] || j2 < 0 || j2 >= g.n[1]) continue;
        const Eigen::Index k2 = g.index(i2, j2);
        if (depth(k2) < cut) continue;
        s = std::max(s, std::abs(q(k) - q(k2)));
        any = true;
      }
    }
    if (any && s > 0) {
      rhos.push_back(rho);
      sups.push_back(s);
    }
  }
  QuotientFit out;
  out.rho = Eigen::Map<Eigen::VectorXd>(rhos.data(), Eigen::Index(rhos.size()));
  out.sup_diff = Eigen::Map<Eigen::VectorXd>(sups.data(), Eigen::Index(sups.size()));
  if (rhos.size() < 3) return out;
  const LineFit f = fit_line(out.rho.array().log(), out.sup_diff.array().log());
  out.alpha = f.slope;
  out.C = std::exp(f.intercept);
  out.r2 = f.r2;
  out.inconclusive = f.r2 < 0.9;
  return out;
}

std::vector<OscillationFit> oscillation_decay(const Field& u, const RenewalTable& renewal,
                                              const Domain& domain,
                                              const std::vector<Point>& boundary_points,
                                              const OscillationOptions& opt) {
  const Grid& g = u.grid;
  const Eigen::VectorXd q = boundary_quotient(u, renewal, domain);
  std::vector<Eigen::Index> nodes;
  for (Eigen::Index k = 0; k < g.size(); ++k)
    if (domain.sdist(g.node(k)) >= g.h * (1 - 1e-9)) nodes.push_back(k);
  std::vector<OscillationFit> out;
  for (const Point& x0 : boundary_points) {
    OscillationFit fit;
    fit.x0 = x0;
    fit.r.resize(opt.levels);
    fit.osc.resize(opt.levels);
    for (int l = 0; l < opt.levels; ++l) {
      const double r = opt.r_max * std::pow(0.5, l);
      double hi = -INFINITY, lo = INFINITY;
      int count = 0;
      for (auto k : nodes)
        if ((g.node(k) - x0).norm() < r && domain.sdist(g.node(k)) >= opt.depth_factor * r) {
          hi = std::max(hi, q(k));
          lo = std::min(lo, q(k));
          ++count;
        }
      if (count < opt.min_nodes)
        throw DomainError("oscillation_decay: only " + std::to_string(count) +
                          " quotient nodes within r = " + std::to_string(r));
      fit.r(l) = r;
      fit.osc(l) = hi - lo;
    }
    if ((fit.osc.array() > 0).all()) {
      Eigen::VectorXd lv(opt.levels);
      for (int l = 0; l < opt.levels; ++l) lv(l) = std::log(renewal.V(fit.r(l)));
      const LineFit f = fit_line(lv, fit.osc.array().log());
      fit.gamma = f.slope;
      fit.C = std::exp(f.intercept);
      fit.r2 = f.r2;
      fit.inconclusive = f.r2 < 0.9 || opt.levels < 3;
    }
    out.push_back(fit);
  }
  return out;
}

std::vector<Point> boundary_points(const Domain& domain, int n) {
  std::vector<Point> out;
  if (const auto* i = std::get_if<Interval>(&domain.shape())) {
    out = {point(i->a), point(i->b)};
    return out;
  }
  const auto* b = std::get_if<Ball>(&domain.shape());
  if (!b) throw DomainError("boundary_points: expected a ball or an interval");
  if (b->center.size() == 1) return {b->center.array() - b->radius, b->center.array() + b->radius};
  for (int k = 0; k < n; ++k) {
    const double t = 2 * kPi * k / n;
    out.push_back(b->center + b->radius * point(std::cos(t), std::sin(t)));
  }
  return out;
}

Function random_exterior_data(const Point& x0, double r, double reach, std::uint64_t seed,
                              std::uint64_t index) {
  Rng rng = path_rng(seed, index);
  std::uniform_real_distribution<double> unif(0, 1);
  std::normal_distribution<double> n01;
  const int dim = int(x0.size());
  const int m = 1 + int(rng() % 3);
  std::vector<std::tuple<Point, double, double>> bumps;
  for (int i = 0; i < m; ++i) {
    Point dir(dim);
    for (int d = 0; d < dim; ++d) dir(d) = n01(rng);
    const double dist = r * (1.1 + (reach / r - 0.1) * unif(rng));
    const double width = 0.1 * r + 0.4 * r * unif(rng);
    bumps.emplace_back(x0 + dist * dir / dir.norm(), width, 0.5 + unif(rng));
  }
  return [bumps](const Point& y) {
    double s = 0;
    for (const auto& [c, w, a] : bumps) {
      const double t = (y - c).norm() / w;
      if (t < 1) s += a * (1 - t * t) * (1 - t * t);
    }
    return s;
  };
}

HarnackReport harnack_ratio(const DirichletSolver& solver, const std::vector<Function>& data,
                            double g_far) {
  const auto& sys = solver.system();
  const auto [x0, r] = ball_of(sys.domain());
  std::vector<Eigen::Index> half;
  for (Eigen::Index i = 0; i < sys.unknowns(); ++i)
    if ((sys.grid().node(sys.node(i)) - x0).norm() < r / 2) half.push_back(i);
  if (half.empty()) throw DomainError("harnack_ratio: no grid node in the half ball");
  HarnackReport out;
  for (const auto& g : data) {
    const Eigen::VectorXd gn = sys.sample_exterior(g);
    const Eigen::VectorXd u = solver.solve_raw(sys.rhs(Eigen::VectorXd::Zero(sys.unknowns()), gn, g_far));
    double hi = -INFINITY, lo = INFINITY;
    for (auto i : half) {
      hi = std::max(hi, u(i));
      lo = std::min(lo, u(i));
    }
    if (!(lo > 1e-12 * hi)) {
      ++out.degenerate;
      continue;
    }
    out.ratios.push_back(hi / lo);
    out.max_ratio = std::max(out.max_ratio, hi / lo);
  }
  return out;
}

}  // namespace nonlocal
