// One PASS/FAIL line per acceptance criterion. Exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nonlocal/bernstein.hpp"
#include "nonlocal/error.hpp"
#include "nonlocal/kernel.hpp"
#include "nonlocal/montecarlo.hpp"
#include "nonlocal/operator.hpp"
#include "nonlocal/regcheck.hpp"
#include "nonlocal/renewal.hpp"
#include "nonlocal/solver.hpp"

using namespace nonlocal;

namespace {

// Tolerances.
constexpr double kMcSigmas = 3;
constexpr double kMcAllowance = 0.03;
constexpr double kMaxRuntime = 120;
constexpr double kCharTol = 1e-3;
constexpr double kRecursionTol = 5e-3;
constexpr double kInequalityChange = 0.05;
constexpr double kBarrierSpread = 3;
constexpr double kOrderTol = 1e-8;
constexpr double kSeminormBand = 0.2;
constexpr double kR2 = 0.9;
constexpr double kAlphaChange = 0.05;
constexpr double kHarnackBand = 1.5;
constexpr double kSurvivalFactor = 20;

int failures = 0;

void line(int id, bool pass, const std::string& what, const std::string& detail, double seconds) {
  std::printf("[%2d] %s  %-34s %s (%.1f s)\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  failures += !pass;
}

// Runs one criterion; an exception is a failure with its message.
void criterion(int id, const std::string& what, const std::function<bool(std::ostringstream&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;
  detail.precision(4);
  bool pass = false;
  try {
    pass = body(detail);
  } catch (const std::exception& e) {
    detail << "error: " << e.what();
  }
  line(id, pass, what, detail.str(),
       std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

const BernsteinSpec& stable() {
  static const BernsteinSpec s = make_stable(0.5);
  return s;
}
const BernsteinSpec& mixture() {
  static const BernsteinSpec s = make_mixture({{0.3, 1}, {0.6, 1}});
  return s;
}
const KernelTable& stable_kernel(int dim) {
  static const KernelTable k1 = build_kernel(stable(), 1), k2 = build_kernel(stable(), 2);
  return dim == 1 ? k1 : k2;
}
const RenewalTable& stable_V() {
  static const RenewalTable V = build_renewal(stable(), RenewalMode::ExactStable);
  return V;
}
Domain unit(int dim) { return dim == 1 ? Domain(Interval{-1, 1}) : Domain(Ball{point(0.0, 0.0), 1.0}); }

Field torsion(int dim, double h) {
  const DirichletSolver s(stable_kernel(dim), unit(dim), h);
  return s.solve([](const Point&) { return -1.0; }).u;
}

// Sums of 1 to 4 nonnegative Gaussian bumps centred in [-1, 1]^dim.
struct BumpSource {
  std::mt19937_64 rng;
  explicit BumpSource(std::uint64_t seed) : rng(seed) {}
  Function next(int dim) {
    std::uniform_real_distribution<double> c(-1, 1), w(0.05, 0.6), a(0, 3);
    std::vector<std::tuple<Point, double, double>> bumps;
    const int m = 1 + int(rng() % 4);
    for (int i = 0; i < m; ++i) {
      Point x(dim);
      for (int d = 0; d < dim; ++d) x(d) = c(rng);
      bumps.emplace_back(x, w(rng), a(rng));
    }
    return [bumps](const Point& y) {
      double s = 0;
      for (const auto& [x, w, a] : bumps) s += a * std::exp(-(y - x).squaredNorm() / (w * w));
      return s;
    };
  }
};

}  // namespace

int main() {
  std::printf("acceptance: 11 criteria\n");

  criterion(1, "stable torsion vs Monte Carlo", [](std::ostringstream& d) {
    const auto t0 = std::chrono::steady_clock::now();
    const double u0 = torsion(1, 1.0 / 512)(point(0.0));
    const PathConfig pc{.dt = 4e-3, .n_paths = 100000, .master_seed = 2024};
    const auto est = exit_time_richardson(unit(1), point(0.0), stable(), pc);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double diff = std::abs(est.extrapolated.mean - u0);
    const double allowed = kMcSigmas * est.extrapolated.std_error + kMcAllowance * u0;
    d << "u(0)=" << u0 << " mc=" << est.extrapolated.mean << "+-" << est.extrapolated.std_error
      << " |diff|=" << diff << " allowed=" << allowed;
    return diff <= allowed && !est.fine.censor_flag && secs <= kMaxRuntime;
  });

  criterion(2, "characteristic exponent identity", [](std::ostringstream& d) {
    bool ok = true;
    for (const auto* s : {&stable(), &mixture()}) {
      const auto rep = check_char_exponent(build_kernel(*s, 1), *s, {0.1, 0.5, 1, 2, 10});
      d << s->name() << " " << rep.max_rel_dev() << "  ";
      ok = ok && rep.max_rel_dev() <= kCharTol;
    }
    return ok;
  });

  criterion(3, "dimension recursion", [](std::ostringstream& d) {
    bool ok = true;
    for (const auto* s : {&stable(), &mixture()}) {
      const auto rep = dimension_recursion_check(*s, 1);
      d << s->name() << " " << rep.max_rel_err << "  ";
      ok = ok && rep.max_rel_err <= kRecursionTol;
    }
    return ok;
  });

  criterion(4, "half-space harmonicity", [](std::ostringstream& d) {
    const auto rep = half_space_residual(stable_kernel(1), stable_V());
    for (const auto& r : rep.rows)
      d << "x=" << r.x << " factor>=" << r.min_factor << " final=" << r.normalized(r.normalized.size() - 1) << "  ";
    return rep.pass;
  });

  criterion(5, "renewal integral inequalities", [](std::ostringstream& d) {
    bool ok = true;
    for (const auto& s : {stable(), mixture(), make_stable_log(0.5, 0.5)}) {
      const auto k = build_kernel_any(s, 1);
      RenewalOptions opt;
      opt.kernel = &k;
      const auto V = build_renewal(s, default_renewal_mode(s), opt);
      const auto rep = inequality_suite(V, k);
      double worst = 0, cmax = 0;
      for (const auto& r : rep.rows) {
        ok = ok && r.finite && r.rel_change <= kInequalityChange;
        worst = std::max(worst, r.rel_change);
        cmax = std::max(cmax, r.max);
      }
      ok = ok && rep.pass && rep.rows.size() == 5;
      d << s.name() << " Cmax=" << cmax << " change=" << worst << "  ";
    }
    return ok;
  });

  criterion(6, "barrier and scale products", [](std::ostringstream& d) {
    bool ok = true;
    const auto ri = barrier_residual(unit(1), stable_V(), stable_kernel(1));
    const auto r1 = barrier_residual(Domain(Ball{point(0.0), 1.0}), stable_V(), stable_kernel(1));
    const auto r2 = barrier_residual(unit(2), stable_V(), stable_kernel(2));
    ok = std::isfinite(ri.sup_abs) && std::isfinite(r1.sup_abs) && std::isfinite(r2.sup_abs);
    ok = ok && r1.scale_products.size() == 3 && r2.scale_products.size() == 3;
    ok = ok && r1.scale_spread <= kBarrierSpread && r2.scale_spread <= kBarrierSpread;
    d << "sup interval=" << ri.sup_abs << " disk=" << r2.sup_abs << " spread 1d=" << r1.scale_spread
      << " 2d=" << r2.scale_spread;
    return ok;
  });

  criterion(7, "subsolution clauses", [](std::ostringstream& d) {
    bool ok = true;
    for (int dim : {1, 2})
      for (double r : {0.125, 0.25}) {
        const auto s = build_subsolution(dim, r, stable_V(), stable_kernel(dim));
        ok = ok && s.report.pass() && s.report.C4 > 0;
        d << dim << "d r=" << r << " C4=" << s.report.C4 << "  ";
      }
    return ok;
  });

  criterion(8, "maximum principle and comparison", [](std::ostringstream& d) {
    bool ok = true;
    for (int dim : {1, 2}) {
      const DirichletSolver s(stable_kernel(dim), unit(dim), dim == 1 ? 1.0 / 128 : 1.0 / 16);
      const auto& sys = s.system();
      BumpSource src(800 + dim);
      int bad_mp = 0, bad_cmp = 0;
      double worst = -INFINITY;
      for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd f = sys.sample_unknowns(src.next(dim));
        const auto mp = verify_max_principle(s, f, {}, kOrderTol);
        bad_mp += !(mp.pass && mp.sup_u <= kOrderTol * f.lpNorm<Eigen::Infinity>());
      }
      for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd f1 = sys.sample_unknowns(src.next(dim));
        const Eigen::VectorXd f2 = f1 - sys.sample_unknowns(src.next(dim));
        const auto cmp = verify_comparison(sys, s.solve_raw(f1), s.solve_raw(f2), f1, kOrderTol);
        bad_cmp += !(cmp.pass && cmp.hypotheses_hold);
        worst = std::max(worst, cmp.max_violation);
      }
      ok = ok && bad_mp == 0 && bad_cmp == 0;
      d << dim << "d violations mp=" << bad_mp << " cmp=" << bad_cmp << " max(u1-u2)=" << worst << "  ";
    }
    return ok;
  });

  criterion(9, "regularity fits", [](std::ostringstream& d) {
    bool ok = true;
    const Modulus V = [](double t) { return stable_V().V(t); };
    const QuotientOptions qo{.rho_min = 1.0 / 32, .depth_factor = 1};
    const OscillationOptions oo{.levels = 3, .depth_factor = 0.5};
    for (int dim : {1, 2}) {
      const double h = dim == 1 ? 1.0 / 256 : 1.0 / 32;
      const Domain D = unit(dim);
      const Field a = torsion(dim, h), b = torsion(dim, h / 2);
      const double sa = gen_holder_seminorm(a, D, V), sb = gen_holder_seminorm(b, D, V);
      const auto qa = boundary_quotient_alpha(a, stable_V(), D, qo);
      const auto qb = boundary_quotient_alpha(b, stable_V(), D, qo);
      const auto pts = boundary_points(D, 10);
      const auto fits = oscillation_decay(b, stable_V(), D, pts, oo);
      double gmin = INFINITY;
      for (const auto& f : fits) gmin = std::min(gmin, f.gamma);
      ok = ok && std::abs(sb / sa - 1) <= kSeminormBand;
      ok = ok && qa.alpha > 0 && qb.alpha > 0 && qa.r2 >= kR2 && qb.r2 >= kR2;
      ok = ok && std::abs(qa.alpha - qb.alpha) <= kAlphaChange;
      ok = ok && gmin > 0 && fits.size() == (dim == 1 ? 2u : 10u);
      d << dim << "d [u]=" << sa << "->" << sb << " alpha=" << qa.alpha << "->" << qb.alpha
        << " R2=" << std::min(qa.r2, qb.r2) << " min gamma=" << gmin << " (" << fits.size() << " pts)  ";
    }
    return ok;
  });

  criterion(10, "Harnack ratios", [](std::ostringstream& d) {
    bool ok = true;
    for (int dim : {1, 2}) {
      const Domain B = unit(dim);
      std::vector<Function> data;
      for (int i = 0; i < 20; ++i) data.push_back(random_exterior_data(B.center(), 1, 1, 1010, i));
      const double h = dim == 1 ? 1.0 / 64 : 1.0 / 16;
      const auto a = harnack_ratio(DirichletSolver(stable_kernel(dim), B, h, {.margin = 1}), data);
      const auto b = harnack_ratio(DirichletSolver(stable_kernel(dim), B, h / 2, {.margin = 1}), data);
      const double band = std::max(a.max_ratio / b.max_ratio, b.max_ratio / a.max_ratio);
      ok = ok && a.degenerate == 0 && b.degenerate == 0 && std::isfinite(a.max_ratio) &&
           std::isfinite(b.max_ratio) && a.ratios.size() == 20 && band <= kHarnackBand;
      d << dim << "d max=" << a.max_ratio << "->" << b.max_ratio << " band=" << band << "  ";
    }
    return ok;
  });

  criterion(11, "survival comparability and decay", [](std::ostringstream& d) {
    const SurvivalOptions so{.factor = kSurvivalFactor};
    const auto rep = survival_profile(unit(1), stable(), stable_V(),
                                      {.dt = 2e-4, .n_paths = 20000, .master_seed = 11}, so);
    const auto dec = survival_decay(unit(1), point(0.0), stable(),
                                    {.dt = 1e-3, .n_paths = 20000, .master_seed = 12}, {0.5, 1, 2, 3});
    d << "spread=" << rep.spread << " excluded=" << rep.excluded.sum() << " slope=" << dec.slope
      << " R2=" << dec.r2;
    return rep.pass && rep.excluded.sum() == 0 && rep.spread <= kSurvivalFactor && dec.slope < 0;
  });

  std::printf("acceptance: %d of 11 failed\n", failures);
  return failures == 0 ? 0 : 1;
}
