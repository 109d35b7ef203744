#include <cmath>
#include <random>

#include <Eigen/LU>

#include "doctest.h"
#include "nonlocal/bernstein.hpp"
#include "nonlocal/error.hpp"
#include "nonlocal/solver.hpp"

using namespace nonlocal;

namespace {

const double kPi = 3.14159265358979323846;

const KernelTable& stable1() {
  static const KernelTable k = build_kernel(make_stable(0.5), 1);
  return k;
}
const KernelTable& stable2() {
  static const KernelTable k = build_kernel(make_stable(0.5), 2);
  return k;
}

// pi h W_k for j = 1 / (pi r^2): log(k^2 / (k^2 - 1)) for k >= 3.
double stable_weight(int k) {
  if (k <= 1) return 0;
  if (k == 2) return 0.5 - std::log(1.5);
  return std::log(double(k) * k / (double(k) * k - 1));
}

// pi h sum_{k >= K} (W_k + c_in [k = 1]) by telescoping.
double stable_tail(int K) {
  if (K >= 3) return std::log(double(K) / (K - 1));
  if (K == 2) return 0.5;
  return 2.5;
}

// Nonnegative sums of random bumps.
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

TEST_CASE("1-d weights match the closed form for the stable kernel") {
  const double h = 1.0 / 64;
  const LinearSystem sys(stable1(), Domain(Interval{-1, 1}), h);
  CHECK(sys.c_in() * kPi * h == doctest::Approx(2).epsilon(1e-9));
  CHECK(sys.tail_delta() * kPi * h == doctest::Approx(1).epsilon(1e-9));
  for (int k = 0; k < 128; ++k) {
    CAPTURE(k);
    CHECK(sys.weight(k) * kPi * h == doctest::Approx(stable_weight(k)).epsilon(1e-8).scale(1e-12));
  }
}

TEST_CASE("row sums: diagonal + off-diagonal + exterior mass vanish") {
  const double h = 1.0 / 64;
  const LinearSystem sys(stable1(), Domain(Interval{-1, 1}), h);
  const Eigen::Index N = sys.unknowns();
  REQUIRE(N == 127);
  const Eigen::VectorXd ext = sys.exterior_mass();
  const Eigen::MatrixXd A = sys.dense();
  for (Eigen::Index p = 1; p <= N; ++p) {
    const double oracle = (stable_tail(int(p)) + stable_tail(int(N + 1 - p))) / (kPi * h);
    CHECK(std::abs(ext(p - 1) - oracle) <= 1e-8 * std::abs(sys.diagonal()));
    CHECK(std::abs(A.row(p - 1).sum() + ext(p - 1)) <= 1e-10 * std::abs(sys.diagonal()));
  }
}

TEST_CASE("M-matrix structure and inverse positivity") {
  for (int dim : {1, 2}) {
    CAPTURE(dim);
    const Domain D = dim == 1 ? Domain(Interval{-1, 1}) : Domain(Ball{point(0.0, 0.0), 1.0});
    const KernelTable& k = dim == 1 ? stable1() : stable2();
    const LinearSystem sys(k, D, dim == 1 ? 1.0 / 32 : 1.0 / 8);
    const Eigen::MatrixXd A = sys.dense();
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::MatrixXd off = A;
    off.diagonal().setZero();
    CHECK(off.minCoeff() >= 0);
    CHECK(A.diagonal().maxCoeff() < 0);
    const Eigen::VectorXd margin = -A.diagonal() - off.rowwise().sum();
    CHECK(margin.minCoeff() > 0);
    const Eigen::MatrixXd inv = (-A).inverse();
    CHECK(inv.minCoeff() >= -1e-14);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    Eigen::VectorXd u(sys.unknowns());
    for (auto& v : u) v = n01(rng);
    CHECK((sys.apply(u) - A * u).lpNorm<Eigen::Infinity>() <= 1e-11 * A.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("2-d weights against a brute-force midpoint rule") {
  const double h = 1.0 / 8;
  const LinearSystem sys(stable2(), Domain(Ball{point(0.0, 0.0), 1.0}), h);
  CHECK(sys.weight(0, 0) == 0.0);
  for (auto [k0, k1] : {std::pair{1, 1}, std::pair{2, 0}, std::pair{2, 1}, std::pair{3, 2}}) {
    CAPTURE(k0);
    CAPTURE(k1);
    const int m = 1200;
    double s = 0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double s0 = k0 - 1 + (a + 0.5) * 2 / m, s1 = k1 - 1 + (b + 0.5) * 2 / m;
        const double r = std::hypot(s0, s1);
        if (r < 2) continue;
        s += (1 - std::abs(s0 - k0)) * (1 - std::abs(s1 - k1)) * stable2().density(h * r);
      }
    s *= h * h * 4.0 / (double(m) * m);
    CHECK(sys.weight(k0, k1) == doctest::Approx(s).epsilon(2e-3));
    CHECK(sys.weight(k1, k0) == sys.weight(k0, k1));
  }
  // Far weights approach h^2 j(h |k|).
  CHECK(sys.weight(15, 9) ==
        doctest::Approx(h * h * stable2().density(h * std::hypot(15, 9))).epsilon(5e-3));
  CHECK(sys.beyond_box().minCoeff() > 0);
}

TEST_CASE("constant exterior data reproduce the constant") {
  for (int dim : {1, 2}) {
    const Domain D = dim == 1 ? Domain(Interval{-1, 1}) : Domain(Ball{point(0.0, 0.0), 1.0});
    const DirichletSolver s(dim == 1 ? stable1() : stable2(), D, dim == 1 ? 1.0 / 128 : 1.0 / 16);
    const auto r = s.solve(nullptr, [](const Point&) { return 1.0; }, 1.0);
    CHECK((r.u.values.array() - 1).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("stable torsion converges to the closed form") {
  // u = (1 - x^2)^{1/2} on (-1, 1) and (2 / pi)(1 - |x|^2)^{1/2} on the disk.
  double last = 1;
  for (int m : {64, 128, 256, 512}) {
    const DirichletSolver s(stable1(), Domain(Interval{-1, 1}), 1.0 / m);
    const auto r = s.solve([](const Point&) { return -1.0; });
    const double err = std::abs(r.u(point(0.0)) - 1);
    CAPTURE(m);
    CHECK(err < 0.75 * last);
    CHECK(r.residual_sup < 1e-10);
    last = err;
  }
  CHECK(last < 1e-3);

  const DirichletSolver s2(stable2(), Domain(Ball{point(0.0, 0.0), 1.0}), 1.0 / 32);
  const auto r2 = s2.solve([](const Point&) { return -1.0; });
  CHECK(r2.u(point(0.0, 0.0)) == doctest::Approx(2 / kPi).epsilon(5e-4));
  CHECK(r2.u(point(0.5, 0.0)) == doctest::Approx(2 / kPi * std::sqrt(0.75)).epsilon(1e-3));
  CHECK(r2.stats.condition_estimate > 1);
  CHECK(r2.stats.dominance_margin > 0);
}

TEST_CASE("conjugate gradients agree with the dense factorization") {
  const Domain D(Ball{point(0.0, 0.0), 1.0});
  const DirichletSolver dense(stable2(), D, 1.0 / 16, {.method = "dense"});
  const DirichletSolver cg(stable2(), D, 1.0 / 16, {.method = "cg"});
  const Function f = [](const Point& x) { return std::cos(3 * x(0)) - x(1); };
  const Function g = [](const Point& x) { return x.norm() < 1.3 ? 1.0 : 0.0; };
  const auto a = dense.solve(f, g), b = cg.solve(f, g);
  CHECK(b.stats.iterations > 0);
  CHECK(b.stats.method == "cg-fft");
  CHECK((a.u.values - b.u.values).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(a.stats.condition_estimate == doctest::Approx(b.stats.condition_estimate).epsilon(1e-8));
  CHECK_THROWS_AS(DirichletSolver(stable2(), D, 0.25, {.method = "lu"}), DomainError);
}

TEST_CASE("linearity in f and g") {
  const DirichletSolver s(stable1(), Domain(Interval{-1, 1}), 1.0 / 64, {.margin = 0.5});
  BumpSource src(17);
  const Function f1 = src.next(1), f2 = src.next(1), g1 = src.next(1), g2 = src.next(1);
  const auto u1 = s.solve(f1, g1), u2 = s.solve(f2, g2);
  const auto u12 = s.solve([&](const Point& x) { return 2 * f1(x) - 3 * f2(x); },
                           [&](const Point& x) { return 2 * g1(x) - 3 * g2(x); });
  CHECK((u12.u.values - 2 * u1.u.values + 3 * u2.u.values).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("max principle and comparison on random data") {
  for (int dim : {1, 2}) {
    CAPTURE(dim);
    const Domain D = dim == 1 ? Domain(Interval{-1, 1}) : Domain(Ball{point(0.0, 0.0), 1.0});
    const DirichletSolver s(dim == 1 ? stable1() : stable2(), D, dim == 1 ? 1.0 / 128 : 1.0 / 16);
    const auto& sys = s.system();
    BumpSource src(100 + dim);
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd f = sys.sample_unknowns(src.next(dim));
      const auto mp = verify_max_principle(s, f);
      CHECK(mp.pass);
      CHECK(mp.sup_u <= 1e-8 * f.lpNorm<Eigen::Infinity>());
      // Dual form: f = 0, g >= 0.
      const Eigen::VectorXd g = sys.sample_exterior(src.next(dim));
      const auto dual = verify_max_principle(s, Eigen::VectorXd::Zero(sys.unknowns()), g);
      CHECK(dual.pass);
      CHECK(dual.inf_u >= -1e-12);

      const Eigen::VectorXd f2 = f - sys.sample_unknowns(src.next(dim));
      const Eigen::VectorXd u1 = s.solve_raw(f), u2 = s.solve_raw(f2);
      const auto cmp = verify_comparison(sys, u1, u2, f);
      CHECK(cmp.hypotheses_hold);
      CHECK(cmp.pass);
    }
    // A violated hypothesis is reported, not masked.
    const Eigen::VectorXd f = Eigen::VectorXd::Ones(sys.unknowns());
    const Eigen::VectorXd u = s.solve_raw(f);
    CHECK_FALSE(verify_comparison(sys, u, u - Eigen::VectorXd::Ones(sys.unknowns()), f).pass);
  }
}

TEST_CASE("harmonic solve with nonnegative exterior data") {
  const Domain B(Ball{point(0.0, 0.0), 0.5});
  const Function g = [](const Point& x) { return x(0) > 0.6 ? 1.0 : 0.0; };
  const auto r = harmonic_solve(stable2(), B, g, 1.0 / 16, 0.5);
  CHECK(r.u.values.minCoeff() >= 0);
  CHECK(r.u.values.maxCoeff() <= 1 + 1e-12);
  // Mass leans toward the data.
  CHECK(r.u(point(0.3, 0.0)) > r.u(point(-0.3, 0.0)));
  CHECK(r.u(point(0.0, 0.0)) > 0);
}
