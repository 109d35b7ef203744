#include "nonlocal/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "nonlocal/error.hpp"
#include "nonlocal/parallel.hpp"
#include "nonlocal/quadrature.hpp"
#include "nonlocal/sampler.hpp"

namespace nonlocal {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Radial/angular part on delta < |y| < R_out, integrated in log |y|.
template <typename U>
double mid_range(const U& u, const Point& x, double u0, double scale, const KernelTable& kernel,
                 const QuadratureScheme& s) {
  const int n = int(x.size());
  const int N = std::max(1, s.angular_nodes);
  std::vector<Point> dirs;
  if (n == 2) {
    for (int k = 0; k < N; ++k) {
      const double t = kPi * (k + 0.5) / N;
      dirs.push_back(point(std::cos(t), std::sin(t)));
    }
  } else {
    dirs.push_back(point(1.0));
  }
  const double wdir = n == 2 ? kPi / N : 1.0;
  auto shell = [&](double v) {
    const double rho = std::exp(v);
    double acc = 0;
    for (const Point& e : dirs) acc += u(Point(x + rho * e)) + u(Point(x - rho * e)) - 2 * u0;
    return acc * wdir * std::pow(rho, n) * kernel.density(rho);
  };
  const double lo = std::log(s.delta), hi = std::log(s.R_out);
  const int per_decade = std::max(1, s.radial_nodes / 15);
  const int panels = std::max(1, int(std::ceil((hi - lo) / std::log(10.0) * per_decade)));
  const double width = (hi - lo) / panels;
  const double abs_tol = s.rel_tol * scale / panels;
  double total = 0;
  for (int p = 0; p < panels; ++p) {
    auto r = integrate_adaptive<double>(shell, lo + p * width, lo + (p + 1) * width, abs_tol,
                                        s.rel_tol, s.max_intervals);
    total += r.value;
  }
  return total;
}

void check_scheme(const QuadratureScheme& s, int n) {
  if (n < 1 || n > 2) throw DomainError("apply_L: only n = 1, 2");
  if (!(s.delta > 0) || !(s.R_out > s.delta))
    throw DomainError("apply_L: need 0 < delta < R_out");
}

}  // namespace

QuadratureScheme QuadratureScheme::refined() const {
  QuadratureScheme r = *this;
  r.delta = 0.5 * delta;
  r.radial_nodes = 2 * radial_nodes;
  r.angular_nodes = 2 * angular_nodes;
  return r;
}

double apply_L_smooth(const Function& u, const Point& x, const KernelTable& kernel,
                      const QuadratureScheme& scheme, const FarField& far) {
  const int n = int(x.size());
  check_scheme(scheme, n);
  if (kernel.dim() != n) throw DomainError("apply_L_smooth: kernel dimension mismatch");
  const double u0 = u(x);
  const double eta = 0.5 * scheme.delta;
  double lap = 0;
  for (int d = 0; d < n; ++d) {
    Point xp = x, xm = x;
    xp(d) += eta;
    xm(d) -= eta;
    lap += (u(xp) + u(xm) - 2 * u0) / (eta * eta);
  }
  const double inner = 0.5 * lap / n * kernel.second_moment(scheme.delta);
  const double scale = std::abs(u0) * kernel.tail(scheme.delta) + std::abs(inner) + 1e-300;
  const double mid = mid_range(u, x, u0, scale, kernel, scheme);
  const double outer = (far ? far(x, scheme.R_out) : 0.0) - u0 * kernel.tail(scheme.R_out);
  return inner + mid + outer;
}

CheckedValue apply_L_checked(const Function& u, const Point& x, const KernelTable& kernel,
                             const QuadratureScheme& scheme, const FarField& far) {
  CheckedValue c;
  c.value = apply_L_smooth(u, x, kernel, scheme, far);
  c.refined = apply_L_smooth(u, x, kernel, scheme.refined(), far);
  c.disagreement = std::abs(c.refined - c.value);
  if (c.disagreement > scheme.tol * std::max(1.0, std::abs(c.refined))) {
    std::ostringstream os;
    os << "apply_L: refinement disagreement " << c.disagreement << " exceeds tolerance "
       << scheme.tol;
    throw QuadratureError(os.str());
  }
  return c;
}

double apply_L_field(const Field& u, Eigen::Index node, const KernelTable& kernel,
                     QuadratureScheme scheme) {
  const Grid& g = u.grid;
  if (node < 0 || node >= g.size()) throw DomainError("apply_L_field: node out of range");
  const auto ij = g.multi_index(node);
  for (int d = 0; d < g.dim; ++d)
    if (ij[d] == 0 || ij[d] == g.n[d] - 1)
      throw DomainError("apply_L_field: node on the edge of the grid box");
  if (kernel.dim() != g.dim) throw DomainError("apply_L_field: kernel dimension mismatch");
  if (!(scheme.delta > 0)) scheme.delta = 2 * g.h;
  const Point x = g.node(node);
  const Point lo = g.origin, hi = g.upper();
  double far = 0;
  for (int d = 0; d < g.dim; ++d) far += std::pow(std::max(x(d) - lo(d), hi(d) - x(d)), 2);
  scheme.R_out = std::sqrt(far) + g.h;
  check_scheme(scheme, g.dim);

  const double u0 = u.values(node);
  double lap = 0;
  const Eigen::Index stride[2] = {1, g.n[0]};
  for (int d = 0; d < g.dim; ++d)
    lap += (u.values(node + stride[d]) + u.values(node - stride[d]) - 2 * u0) / (g.h * g.h);
  const double inner = 0.5 * lap / g.dim * kernel.second_moment(scheme.delta);
  const double scale = std::abs(u0) * kernel.tail(scheme.delta) + std::abs(inner) +
                       u.values.cwiseAbs().maxCoeff() * kernel.tail(scheme.delta) * 1e-3 + 1e-300;
  const double mid = mid_range(u, x, u0, scale, kernel, scheme);
  return inner + mid - u0 * kernel.tail(scheme.R_out);
}

BarrierReport barrier_residual(const Domain& domain, const RenewalTable& renewal,
                               const KernelTable& kernel, const BarrierOptions& opt) {
  if (kernel.dim() != domain.dim()) throw DomainError("barrier_residual: kernel dimension mismatch");
  auto V = opt.profile ? opt.profile : [&renewal](double t) { return renewal.V(t); };

  // sup over stratified points of |L V(psi_D)| for a domain D.
  auto run = [&](const Domain& D, std::vector<Point>& xs, Eigen::VectorXd& ds,
                 Eigen::VectorXd& vals) {
    const double diam = D.diameter();
    const double top = D.inradius();
    const double bottom = opt.min_depth * diam;
    std::vector<double> depths;
    for (int k = 0;; ++k) {
      const double d = top * std::pow(10.0, -double(k) / opt.strata_per_decade);
      if (d < bottom * (1 - 1e-12)) break;
      depths.push_back(d);
    }
    xs.clear();
    for (std::size_t k = 0; k < depths.size(); ++k)
      for (int m = 0; m < opt.points_per_stratum; ++m)
        xs.push_back(point_at_depth(D, depths[k], opt.seed, k * opt.points_per_stratum + m));
    ds.resize(xs.size());
    vals.resize(xs.size());
    const Function u = [&](const Point& y) { return V(D.psi(y)); };
    parallel_for(std::int64_t(xs.size()), [&](std::int64_t i) {
      const double d = D.sdist(xs[i]);
      QuadratureScheme s;
      s.delta = opt.delta_factor * d;
      s.R_out = diam;
      s.radial_nodes = opt.radial_nodes;
      s.angular_nodes = opt.angular_nodes;
      s.rel_tol = opt.rel_tol;
      s.max_intervals = opt.max_intervals;
      ds(i) = d;
      vals(i) = apply_L_smooth(u, xs[i], kernel, s);
    });
    return vals.cwiseAbs().maxCoeff();
  };

  BarrierReport rep;
  rep.domain = domain.name();
  rep.sup_abs = run(domain, rep.x, rep.d, rep.value);
  if (const auto* ball = std::get_if<Ball>(&domain.shape())) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (double r : opt.ball_radii) {
      std::vector<Point> xs;
      Eigen::VectorXd ds, vals;
      const double sup = run(Domain(Ball{ball->center, r}), xs, ds, vals);
      rep.radii.push_back(r);
      rep.scale_products.push_back(sup * V(r));
      lo = std::min(lo, rep.scale_products.back());
      hi = std::max(hi, rep.scale_products.back());
    }
    if (!rep.radii.empty()) rep.scale_spread = hi / lo;
  }
  return rep;
}

double bump(double t) {
  auto f = [](double a) { return a > 0 ? std::exp(-1 / a) : 0.0; };
  const double s = 2 * (std::abs(t) - 0.5);
  if (s <= 0) return 1;
  if (s >= 1) return 0;
  return f(1 - s) / (f(1 - s) + f(s));
}

Subsolution build_subsolution(int dim, double r, const RenewalTable& renewal,
                              const KernelTable& kernel, const SubsolutionOptions& opt) {
  if (dim < 1 || dim > 2 || kernel.dim() != dim) throw DomainError("build_subsolution: bad dimension");
  if (!(r > 0)) throw DomainError("build_subsolution: r must be > 0");
  const Point origin = Point::Zero(dim);
  const double R4 = 4 * r;
  const Domain ball4(Ball{origin, R4});
  const double Vr = renewal.V(r), V4r = renewal.V(R4);

  SubsolutionReport rep;
  rep.r = r;
  rep.dim = dim;
  BarrierOptions bopt = opt.barrier;
  bopt.ball_radii.clear();
  rep.C3 = barrier_residual(ball4, renewal, kernel, bopt).sup_abs * V4r;

  const Function barrier = [&renewal, origin, R4](const Point& x) {
    return renewal.V(ball_psi(x, origin, R4));
  };
  const Function eta = [Vr, r](const Point& x) { return Vr * bump(x.norm() / r); };

  Rng rng = path_rng(opt.seed, 0);
  std::normal_distribution<double> gauss;
  auto direction = [&]() {
    Point e(dim);
    for (int i = 0; i < dim; ++i) e(i) = gauss(rng);
    return Point(e.normalized());
  };

  // Annulus samples: geometric depths below the outer sphere, plus a few
  // just outside B_r.
  std::vector<Point> ann;
  const int n_outer = std::max(2, opt.annulus_points - 4);
  const double top = 3 * r * 0.98, bottom = opt.min_depth * R4;
  for (int k = 0; k < n_outer; ++k) {
    const double depth = top * std::pow(bottom / top, double(k) / (n_outer - 1));
    ann.push_back(direction() * (R4 - depth));
  }
  for (double f : {1.01, 1.1, 1.3, 1.6}) ann.push_back(direction() * (f * r));

  const std::size_t na = ann.size();
  Eigen::VectorXd Leta(na), Lbar(na);
  auto scheme_at = [&](const Point& x) {
    QuadratureScheme s;
    s.delta = bopt.delta_factor * std::min(R4 - x.norm(), r);
    s.R_out = 2 * R4;
    s.radial_nodes = bopt.radial_nodes;
    s.angular_nodes = bopt.angular_nodes;
    s.rel_tol = bopt.rel_tol;
    s.max_intervals = bopt.max_intervals;
    return s;
  };
  parallel_for(std::int64_t(na), [&](std::int64_t i) {
    const QuadratureScheme s = scheme_at(ann[i]);
    Leta(i) = apply_L_smooth(eta, ann[i], kernel, s);
    Lbar(i) = apply_L_smooth(barrier, ann[i], kernel, s);
  });
  rep.c2 = Leta.minCoeff() * Vr;
  if (!(rep.c2 > 0) || !(rep.C3 > 0) || !std::isfinite(rep.C3))
    throw VerificationFailure("build_subsolution: non-positive c2 or C3");
  const double coef = rep.c2 / rep.C3;
  const Function w = [=](const Point& x) { return coef * barrier(x) + eta(x); };

  Eigen::VectorXd Lw(na);
  parallel_for(std::int64_t(na), [&](std::int64_t i) {
    Lw(i) = apply_L_smooth(w, ann[i], kernel, scheme_at(ann[i]));
  });
  std::ostringstream worst;
  Eigen::Index imin;
  rep.min_Lw = Lw.minCoeff(&imin) * Vr;
  rep.Lw_nonnegative = rep.min_Lw >= -1e-6;
  if (!rep.Lw_nonnegative)
    worst << "Lw >= 0 fails at |x| = " << ann[imin].norm() << " (Lw V(r) = " << rep.min_Lw << ")";

  rep.C4 = std::numeric_limits<double>::infinity();
  double worst_r = 0;
  for (const Point& x : ann) {
    const double q = w(x) / renewal.V(R4 - x.norm());
    if (q < rep.C4) rep.C4 = q, worst_r = x.norm();
  }
  rep.lower_bound = rep.C4 > 0 && std::isfinite(rep.C4);
  if (!rep.lower_bound && worst.str().empty())
    worst << "w >= C4 V(4r - |x|) fails at |x| = " << worst_r;

  for (int k = 0; k < opt.inner_points; ++k) {
    const Point x = direction() * (r * k / std::max(1, opt.inner_points - 1));
    rep.c4 = std::max(rep.c4, w(x) / Vr);
  }
  rep.bounded_inside = std::isfinite(rep.c4) && rep.c4 > 0;
  if (!rep.bounded_inside && worst.str().empty()) worst << "w <= c4 V(r) fails on B_r";

  for (int k = 0; k < 16; ++k) {
    const Point x = direction() * (R4 * (1 + k / 16.0));
    rep.max_outside = std::max(rep.max_outside, std::abs(w(x)));
  }
  rep.vanishes_outside = rep.max_outside == 0;
  if (!rep.vanishes_outside && worst.str().empty()) worst << "w = 0 outside B_4r fails";
  rep.worst = worst.str();
  if (!rep.pass()) throw VerificationFailure("build_subsolution: " + rep.worst);

  Subsolution out;
  out.w = w;
  out.report = rep;
  const double h = opt.grid_h > 0 ? opt.grid_h : r / 16;
  out.field = Field::sample(ball4, Grid::covering(ball4, h, h), w);
  return out;
}

TestFunctionReport cp_testfunction_check(double r, const KernelTable& kernel, int points,
                                         const QuadratureScheme& scheme) {
  if (!(r >= 4)) throw DomainError("cp_testfunction_check: need r >= 4");
  const int n = kernel.dim();
  TestFunctionReport rep;
  rep.r = r;
  rep.delta_r = kernel.second_moment(r) / (r * r * r);
  const double r3 = r * r * r;
  const Function w = [r3](const Point& x) { return std::min(1.0, x.squaredNorm() / r3); };
  QuadratureScheme s = scheme;
  s.R_out = r + std::pow(r, 1.5);
  // Beyond R_out every x + y with x in B_r lies where w = 1.
  const FarField far = [&kernel](const Point&, double R) { return kernel.tail(R); };
  rep.x.resize(points);
  rep.Lw.resize(points);
  for (int k = 0; k < points; ++k) {
    Point x = Point::Zero(n);
    x(0) = r * k / points;
    rep.x(k) = x(0);
    rep.Lw(k) = apply_L_smooth(w, x, kernel, s, far);
  }
  rep.min_Lw = rep.Lw.minCoeff();
  rep.pass = rep.delta_r > 0 && rep.min_Lw >= rep.delta_r * (1 - 1e-6);
  return rep;
}

HalfSpaceReport half_space_residual(const KernelTable& kernel, const RenewalTable& renewal,
                                    const std::vector<double>& x_list, int levels) {
  if (kernel.dim() != 1) throw DomainError("half_space_residual: 1-d kernel required");
  if (levels < 2) throw DomainError("half_space_residual: need at least two levels");
  const Function u = [&renewal](const Point& x) { return renewal.V(x(0)); };
  const FarField far = [&](const Point& x, double R) {
    auto g = [&](double v) {
      const double y = R * std::exp(v);
      return renewal.V(x(0) + y) * kernel.density(y) * y;
    };
    return integrate<double>(g, 0.0, 80.0, 1e-15, 1e-13, 4000);
  };
  HalfSpaceReport out;
  out.pass = true;
  for (double x : x_list) {
    HalfSpaceRow row;
    row.x = x;
    row.residual.resize(levels);
    row.normalized.resize(levels);
    for (int k = 0; k < levels; ++k) {
      QuadratureScheme s;
      s.delta = x * std::pow(2.0, -2 - k);
      s.R_out = 1e3 * x;
      s.rel_tol = 1e-12;
      s.max_intervals = 2000;
      s.radial_nodes = 30 << k;
      row.residual(k) = std::abs(apply_L_smooth(u, point(x), kernel, s, far));
      row.normalized(k) = row.residual(k) * kernel.varphi(x) / renewal.V(x);
    }
    row.min_factor = INFINITY;
    for (int k = 0; k + 1 < levels; ++k)
      row.min_factor = std::min(row.min_factor, row.residual(k) / row.residual(k + 1));
    out.pass &= row.min_factor >= 2 && row.normalized(levels - 1) <= 1e-2;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace nonlocal
