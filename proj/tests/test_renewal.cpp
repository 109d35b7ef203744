#include <cmath>

#include "doctest.h"
#include "nonlocal/error.hpp"
#include "nonlocal/renewal.hpp"

using namespace nonlocal;

namespace {

BernsteinSpec mixture() { return make_mixture({{0.3, 1.0}, {0.6, 1.0}}); }

// Central differences of V as an independent oracle for V', V''.
double fd1(const RenewalTable& t, double r) {
  const double h = 1e-4 * r;
  return (t.V(r + h) - t.V(r - h)) / (2 * h);
}
double fd2(const RenewalTable& t, double r) {
  const double h = 1e-3 * r;
  return (t.V(r + h) - 2 * t.V(r) + t.V(r - h)) / (h * h);
}

}  // namespace

TEST_CASE("exact-stable and surrogate closed forms") {
  const auto st = make_stable(0.5);
  const auto ex = build_renewal(st, RenewalMode::ExactStable);
  const auto su = build_renewal(st, RenewalMode::Surrogate);
  for (double r : {1e-5, 1e-3, 0.2, 1.0, 7.0}) {
    CHECK(ex.V(4 * r) / ex.V(r) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(su.V(r) == doctest::Approx(std::sqrt(r)).epsilon(1e-12));
    CHECK(su.V(r) / ex.V(r) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(su.Vp(r) == doctest::Approx(0.5 / std::sqrt(r)).epsilon(1e-10));
    CHECK(su.Vpp(r) == doctest::Approx(-0.25 * std::pow(r, -1.5)).epsilon(1e-10));
  }
  CHECK(ex.V(0.0) == 0.0);
  CHECK(ex.V(-1.0) == 0.0);
  const auto mx = build_renewal(mixture(), RenewalMode::Surrogate);
  CHECK(mx.V(1.0) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(build_renewal(mixture(), RenewalMode::ExactStable), UnsupportedVariant);
  CHECK(default_renewal_mode(st) == RenewalMode::ExactStable);
  CHECK(default_renewal_mode(mixture()) == RenewalMode::Surrogate);
  CHECK(parse_renewal_mode(to_string(RenewalMode::ExperimentalMc)) == RenewalMode::ExperimentalMc);
}

TEST_CASE("surrogate derivatives match finite differences") {
  for (const auto& spec : {mixture(), make_stable_log(0.5, 0.5), make_stable(0.3)}) {
    const auto t = build_renewal(spec, RenewalMode::Surrogate);
    for (double r : {1e-4, 3e-3, 0.1, 0.9, 4.0}) {
      CHECK(t.Vp(r) == doctest::Approx(fd1(t, r)).epsilon(1e-6));
      CHECK(t.Vpp(r) == doctest::Approx(fd2(t, r)).epsilon(1e-4));
    }
  }
}

TEST_CASE("inverse round trip and monotonicity") {
  for (const auto& spec : {mixture(), make_stable_log(0.5, 0.5)}) {
    const auto t = build_renewal(spec, RenewalMode::Surrogate);
    for (Eigen::Index i = 1; i < t.r().size(); ++i) CHECK(t.V_values()(i) > t.V_values()(i - 1));
    for (double r : {2e-5, 1e-3, 0.05, 0.5, 1.0, 9.0})
      CHECK(t.inverse(t.V(r)) == doctest::Approx(r).epsilon(1e-6));
  }
}

TEST_CASE("fitted constants") {
  const auto ex = build_renewal(make_stable(0.5), RenewalMode::ExactStable);
  const auto& c = ex.constants();
  // V^2 = r = varphi for alpha = 1/2, n = 1.
  CHECK(c.C1 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c.C2 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.C3 == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c.lemma22 == doctest::Approx(0.5).epsilon(1e-9));
  for (const auto& spec : {mixture(), make_stable_log(0.5, 0.5)}) {
    const auto t = build_renewal(spec, RenewalMode::Surrogate);
    CHECK(std::isfinite(t.constants().C1));
    CHECK(t.constants().C2 >= 1.0);
    CHECK(std::isfinite(t.constants().C3));
    CHECK(std::isfinite(t.constants().lemma22));
  }
}

TEST_CASE("integral inequalities: stable closed forms") {
  const auto st = make_stable(0.5);
  const auto k = build_kernel(st, 1);
  RenewalOptions opt;
  opt.kernel = &k;
  const auto t = build_renewal(st, RenewalMode::ExactStable, opt);
  const auto rep = inequality_suite(t, k);
  REQUIRE(rep.rows.size() == 5);
  // varphi(s) = s, V(s) = s^{1/2}: constants 1, 1, 2, 2, 2 at every r.
  const double expect[5] = {1, 1, 2, 2, 2};
  for (int i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < rep.rows[i].constant.size(); ++j)
      CHECK(rep.rows[i].constant(j) == doctest::Approx(expect[i]).epsilon(1e-3));
    CHECK(rep.rows[i].rel_change <= 1e-3);
  }
  CHECK(rep.pass);
}

TEST_CASE("integral inequalities: catalog specs") {
  for (const auto& spec : {mixture(), make_stable_log(0.5, 0.5)}) {
    const auto k = build_kernel_any(spec, 1);
    RenewalOptions opt;
    opt.kernel = &k;
    const auto t = build_renewal(spec, RenewalMode::Surrogate, opt);
    const auto rep = inequality_suite(t, k);
    for (const auto& row : rep.rows) {
      CHECK(row.finite);
      CHECK(row.rel_change <= 0.05);
    }
    CHECK(rep.pass);
  }
}

TEST_CASE("ladder-height renewal estimate") {
  McRenewalOptions o;
  o.paths = 1000;
  o.x = {0.1, 0.2, 0.25, 0.4, 0.6, 0.8, 1.0};
  const auto est = mc_renewal_estimate(make_stable(0.5), o);
  CHECK(est.V(6) == 1.0);
  const double ratio = est.V(2);
  CHECK(ratio >= 0.4);
  CHECK(ratio <= 0.6);
  // Least-squares slope in log-log.
  const Eigen::ArrayXd lx = est.x.array().log(), ly = est.V.array().log();
  const double mx = lx.mean(), my = ly.mean();
  const double slope = ((lx - mx) * (ly - my)).sum() / (lx - mx).square().sum();
  CHECK(std::abs(slope - 0.5) <= 0.05);

  // Same seed, same answer.
  const auto again = mc_renewal_estimate(make_stable(0.5), o);
  CHECK((again.V - est.V).cwiseAbs().maxCoeff() == 0.0);

  o.paths = 5;
  CHECK_THROWS_AS(mc_renewal_estimate(make_stable(0.5), o), StatisticalFailure);
}

TEST_CASE("experimental-mc table") {
  RenewalOptions opt;
  opt.mc.paths = 600;
  const auto t = build_renewal(make_stable(0.5), RenewalMode::ExperimentalMc, opt);
  CHECK(t.V(1.0) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(t.V(0.25) / t.V(1.0) == doctest::Approx(0.5).epsilon(0.2));
  CHECK(t.Vp(0.5) > 0);
  CHECK(t.Vp(0.5) == doctest::Approx(fd1(t, 0.5)).epsilon(1e-5));
}
