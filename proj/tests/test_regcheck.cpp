#include <cmath>
#include <random>

#include "doctest.h"
#include "nonlocal/bernstein.hpp"
#include "nonlocal/error.hpp"
#include "nonlocal/regcheck.hpp"

using namespace nonlocal;

namespace {

const KernelTable& stable1() {
  static const KernelTable k = build_kernel(make_stable(0.5), 1);
  return k;
}
const KernelTable& stable2() {
  static const KernelTable k = build_kernel(make_stable(0.5), 2);
  return k;
}
const RenewalTable& renewal() {
  static const RenewalTable t = build_renewal(make_stable(0.5), RenewalMode::ExactStable);
  return t;
}
const Domain& interval() {
  static const Domain D(Interval{-1, 1});
  return D;
}

// Stable torsion on (-1, 1): u = R^D 1 = (1 - x^2)^{1/2} in the limit.
Field torsion_1d(double h) {
  const DirichletSolver s(stable1(), interval(), h);
  return s.solve([](const Point&) { return -1.0; }).u;
}

Field v_of_distance(const Domain& D, double h) {
  const Grid g = Grid::covering(D, h);
  return Field::sample(D, g, [&](const Point& x) { return renewal().V(std::max(0.0, D.sdist(x))); });
}

}  // namespace

TEST_CASE("line fit recovers an exact line") {
  Eigen::VectorXd x(5), y(5);
  x << 0, 1, 2, 3, 4;
  y = 2 - 0.5 * x.array();
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(-0.5));
  CHECK(f.intercept == doctest::Approx(2));
  CHECK(f.r2 == doctest::Approx(1));
}

TEST_CASE("generalized Hoelder seminorm") {
  const Modulus V = [](double t) { return renewal().V(t); };
  const double h = 1.0 / 256;
  // Constants have seminorm 0.
  const Grid g = Grid::covering(interval(), h);
  CHECK(gen_holder_seminorm(Field{g, Eigen::VectorXd::Constant(g.size(), 3.0)}, interval(), V) == 0);

  // |d^{1/2}(x) - d^{1/2}(y)| <= |x - y|^{1/2}, with equality at boundary pairs.
  const Field vd = v_of_distance(interval(), h);
  const double s = gen_holder_seminorm(vd, interval(), V);
  CHECK(s <= 1 + 1e-12);
  CHECK(s >= 0.9);

  // Larger budgets sample supersets.
  const Field u = torsion_1d(h);
  double last = 0;
  for (int budget : {10, 100, 1000, 10000}) {
    const double v = gen_holder_seminorm(u, interval(), V, {.pairs_per_decade = budget});
    CHECK(v >= last);
    last = v;
  }
  // sup |u(x) - u(y)| / |x - y|^{1/2} = 2^{1/2} for u = (1 - x^2)^{1/2}.
  CHECK(last == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));

  // A comparable modulus, 0.5 V <= V' <= 1.5 V, moves the seminorm within those factors.
  const Modulus W = [&](double t) { return V(t) * (1 + 0.5 * std::sin(std::log(t))); };
  const double w = gen_holder_seminorm(u, interval(), W);
  CHECK(w >= last / 1.5 - 1e-12);
  CHECK(w <= last / 0.5 + 1e-12);

  // Stable under refinement.
  const double fine = gen_holder_seminorm(torsion_1d(h / 2), interval(), V);
  CHECK(fine == doctest::Approx(last).epsilon(0.2));
}

TEST_CASE("boundary quotient of the stable torsion") {
  const double h = 1.0 / 512;
  const Field u = torsion_1d(h);
  const Eigen::VectorXd q = boundary_quotient(u, renewal(), interval());
  // Closed form q = (1 - x^2)^{1/2} / (1 - |x|)^{1/2} = (1 + |x|)^{1/2}.
  for (int k = 0; k < 20; ++k) {
    const double x = -0.9 + 1.8 * k / 19.0;
    const Eigen::Index node = std::lround((x - u.grid.origin(0)) / h);
    const double xn = u.grid.node(node)(0);
    CAPTURE(xn);
    CHECK(q(node) == doctest::Approx(std::sqrt(1 + std::abs(xn))).epsilon(1e-2));
  }
  // Toward both endpoints q tends to 2^{1/2}.
  CHECK(q(32) == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
  CHECK(q(u.grid.size() - 33) == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));

  const QuotientOptions opt{.rho_min = 1.0 / 32, .depth_factor = 1};
  const QuotientFit a = boundary_quotient_alpha(u, renewal(), interval(), opt);
  const QuotientFit b = boundary_quotient_alpha(torsion_1d(h / 2), renewal(), interval(), opt);
  CHECK(!a.inconclusive);
  CHECK(a.alpha > 0);
  CHECK(a.r2 >= 0.9);
  CHECK(std::abs(a.alpha - b.alpha) <= 0.05);

  // Exponents ignore the scale of u; C follows it.
  Field u2 = u;
  u2.values *= 2;
  const QuotientFit c = boundary_quotient_alpha(u2, renewal(), interval(), opt);
  CHECK(c.alpha == doctest::Approx(a.alpha).epsilon(1e-10));
  CHECK(c.C == doctest::Approx(2 * a.C).epsilon(1e-10));

  // q = 1 for u = V(d_D): nothing to fit.
  const QuotientFit one = boundary_quotient_alpha(v_of_distance(interval(), h), renewal(), interval(), opt);
  CHECK(one.inconclusive);
  CHECK(one.C == 0);

  // Without the depth cutoff the grid boundary layer dominates every scale.
  const QuotientFit raw = boundary_quotient_alpha(u, renewal(), interval());
  CHECK((raw.inconclusive || raw.alpha < 0.2));
}

TEST_CASE("oscillation decay near the boundary") {
  const double h = 1.0 / 512;
  const Field u = torsion_1d(h);
  const auto pts = boundary_points(interval(), 10);
  REQUIRE(pts.size() == 2);
  const OscillationOptions opt{.levels = 3, .depth_factor = 0.5};
  const auto fits = oscillation_decay(u, renewal(), interval(), pts, opt);
  for (const auto& f : fits) {
    CHECK(f.gamma > 0);
    CHECK(f.r2 >= 0.9);
    CHECK(!f.inconclusive);
  }
  Field u2 = u;
  u2.values *= 2;
  const auto fits2 = oscillation_decay(u2, renewal(), interval(), pts, opt);
  CHECK(fits2[0].gamma == doctest::Approx(fits[0].gamma).epsilon(1e-10));
  CHECK(fits2[0].C == doctest::Approx(2 * fits[0].C).epsilon(1e-10));

  // q = 1: zero oscillation at every radius.
  const auto flat = oscillation_decay(v_of_distance(interval(), h), renewal(), interval(), pts, opt);
  CHECK(flat[0].osc.maxCoeff() <= 1e-12);
  CHECK(flat[0].inconclusive);

  // Negative control: q alternating between 1 and 2 node by node.
  Field bad = v_of_distance(interval(), h);
  for (Eigen::Index k = 0; k < bad.values.size(); ++k) bad.values(k) *= 1.5 + 0.5 * (k % 2 ? 1 : -1);
  const auto nf = oscillation_decay(bad, renewal(), interval(), pts, opt);
  for (const auto& f : nf) CHECK((f.inconclusive || f.gamma <= 0.1));

  CHECK_THROWS_AS(oscillation_decay(u, renewal(), interval(), pts, {.levels = 12, .depth_factor = 0.5}),
                  DomainError);
}

TEST_CASE("boundary points of a disk") {
  const Domain disk(Ball{point(0.5, 0.0), 2.0});
  const auto pts = boundary_points(disk, 10);
  REQUIRE(pts.size() == 10);
  for (const auto& p : pts) CHECK(std::abs(disk.sdist(p)) < 1e-12);
  CHECK_THROWS_AS(boundary_points(Domain(Annulus{}), 4), DomainError);
}

TEST_CASE("Harnack ratios") {
  // Constant data: u = 1 and the ratio is 1.
  const DirichletSolver s1(stable1(), interval(), 1.0 / 64, {.margin = 1});
  const auto one = harnack_ratio(s1, {[](const Point&) { return 1.0; }}, 1.0);
  REQUIRE(one.ratios.size() == 1);
  CHECK(one.ratios[0] == doctest::Approx(1).epsilon(1e-10));
  const auto zero = harnack_ratio(s1, {[](const Point&) { return 0.0; }});
  CHECK(zero.degenerate == 1);

  for (int dim : {1, 2}) {
    CAPTURE(dim);
    const Domain B = dim == 1 ? interval() : Domain(Ball{point(0.0, 0.0), 1.0});
    std::vector<Function> data;
    for (int i = 0; i < 20; ++i) data.push_back(random_exterior_data(B.center(), 1, 1, 5, i));
    for (int i = 0; i < 20; ++i) {
      const Point far = B.center() + 1.05 * Point::Unit(dim, 0);
      CHECK(data[i](B.center()) == 0.0);
      CHECK(data[i](far) >= 0.0);
    }
    const double h = dim == 1 ? 1.0 / 64 : 1.0 / 16;
    const KernelTable& k = dim == 1 ? stable1() : stable2();
    const auto a = harnack_ratio(DirichletSolver(k, B, h, {.margin = 1}), data);
    const auto b = harnack_ratio(DirichletSolver(k, B, h / 2, {.margin = 1}), data);
    CHECK(a.degenerate == 0);
    CHECK(std::isfinite(a.max_ratio));
    CHECK(a.max_ratio >= 1);
    CHECK(a.max_ratio / b.max_ratio <= 1.5);
    CHECK(b.max_ratio / a.max_ratio <= 1.5);
  }

  // Bounded across shrinking balls (data rescaled with the ball).
  for (double r : {0.5, 0.25, 0.125}) {
    CAPTURE(r);
    const Domain B(Interval{-r, r});
    std::vector<Function> data;
    for (int i = 0; i < 20; ++i) data.push_back(random_exterior_data(point(0.0), r, r, 9, i));
    const auto rep = harnack_ratio(DirichletSolver(stable1(), B, r / 64, {.margin = r}), data);
    CHECK(rep.max_ratio < 10);
  }
}
