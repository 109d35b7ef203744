#include <cmath>
#include <random>

#include "doctest.h"
#include "nonlocal/bernstein.hpp"
#include "nonlocal/error.hpp"

using namespace nonlocal;

namespace {

// Oracle: min/max of the secant slope of log phi on a fine geometric grid.
std::pair<double, double> brute_force_slopes(double (*logphi)(double), double lo, double hi) {
  const int n = 20000;
  double mn = 1e300, mx = -1e300;
  for (int i = 0; i < n; ++i) {
    const double a = std::log(lo) + (std::log(hi) - std::log(lo)) * i / n;
    const double b = std::log(lo) + (std::log(hi) - std::log(lo)) * (i + 1) / n;
    const double s = (logphi(std::exp(b)) - logphi(std::exp(a))) / (b - a);
    mn = std::min(mn, s);
    mx = std::max(mx, s);
  }
  return {mn, mx};
}

double log_mixture(double l) { return std::log(std::pow(l, 0.3) + std::pow(l, 0.6)); }

}  // namespace

TEST_CASE("eval_phi closed forms") {
  CHECK(eval_phi(make_stable(0.5), 4.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(eval_phi(make_stable(0.5), 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(eval_phi(make_mixture({{0.3, 1.0}, {0.6, 1.0}}), 1.0) == doctest::Approx(2.0));
  const auto sl = make_stable_log(0.5, 0.5);
  CHECK(eval_phi(sl, 3.0) == doctest::Approx(std::sqrt(3.0) * std::sqrt(std::log(4.0))));
}

TEST_CASE("eval_phi error paths") {
  CHECK_THROWS_AS(eval_phi(make_stable(0.5), 0.0), DomainError);
  CHECK_THROWS_AS(eval_phi(make_stable(0.5), -1.0), DomainError);
  Eigen::VectorXd lam(5), phi(5);
  for (int i = 0; i < 5; ++i) {
    lam(i) = std::pow(10.0, i - 1);
    phi(i) = std::pow(lam(i), 0.5);
  }
  const auto tab = make_tabulated(lam, phi);
  CHECK(eval_phi(tab, 10.0) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-10));
  CHECK_THROWS_AS(eval_phi(tab, 1e6), ExtrapolationError);
  CHECK_THROWS_AS(eval_phi(tab, 1e-3), ExtrapolationError);
}

TEST_CASE("tabulated spec with linear growth is rejected as drift") {
  Eigen::VectorXd lam(6), phi(6);
  for (int i = 0; i < 6; ++i) {
    lam(i) = std::pow(10.0, i - 1);
    phi(i) = 0.5 * lam(i) + std::sqrt(lam(i));
  }
  // Top-end slope is close to but below 1; a strict drift reaches it.
  for (int i = 0; i < 6; ++i) phi(i) = 2.0 * lam(i);
  CHECK_THROWS_AS(make_tabulated(lam, phi), RejectedSpec);
}

TEST_CASE("Levy density round trip recovers phi") {
  const auto st = make_stable(0.5);
  for (double lambda : {0.5, 1.0, 2.0, 10.0}) {
    const double rt = phi_from_levy_measure(st, lambda);
    CHECK(std::abs(rt - eval_phi(st, lambda)) / eval_phi(st, lambda) <= 1e-4);
  }
  const auto mix = make_mixture({{0.3, 2.0}, {0.6, 3.0}});
  for (double lambda : {0.5, 1.0, 2.0, 10.0}) {
    const double rt = phi_from_levy_measure(mix, lambda);
    CHECK(std::abs(rt - eval_phi(mix, lambda)) / eval_phi(mix, lambda) <= 1e-4);
  }
  CHECK(levy_density_mu(mix, 1.0) ==
        doctest::Approx(2 * stable_mu_constant(0.3) + 3 * stable_mu_constant(0.6)));
  // Tail: mu(t) t^{1+alpha1} stays bounded.
  const double a = levy_density_mu(mix, 1e6) * std::pow(1e6, 1.3);
  const double b = levy_density_mu(mix, 1e9) * std::pow(1e9, 1.3);
  CHECK(b == doctest::Approx(a).epsilon(0.01));
  CHECK_THROWS_AS(levy_density_mu(make_stable_log(0.5, 0.5), 1.0), UnsupportedVariant);
}

TEST_CASE("scaling indices") {
  const auto p = scaling_indices(make_stable(0.5), 1e6);
  CHECK(p.alpha1 == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(p.alpha2 == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(p.b1 == doctest::Approx(1.0).epsilon(1e-6));

  const auto mix = make_mixture({{0.3, 1.0}, {0.6, 1.0}});
  const auto [lo, hi] = brute_force_slopes(&log_mixture, 1.0, 1e6);
  const auto pm = scaling_indices(mix, 1e6);
  CHECK(std::abs(pm.alpha1 - lo) <= 0.02);
  CHECK(std::abs(pm.alpha2 - hi) <= 0.02);
  CHECK(std::abs(pm.alpha2 - 0.6) <= 0.02);
  CHECK(pm.b1 >= 1.0);

  // StableLog: closed-form slope alpha + beta lambda / ((1+lambda) log(1+lambda)).
  const auto sl = make_stable_log(0.5, 0.5);
  const auto ps = sl.scaling();
  CHECK(ps.alpha1 >= 0.5);
  CHECK(ps.alpha2 == doctest::Approx(0.5 + 0.5 / (2.0 * std::log(2.0))).epsilon(1e-9));
  // beta = 1 pushes the slope near lambda = 1 above one: rejected.
  CHECK_THROWS_AS(make_stable_log(0.5, 1.0), RejectedSpec);
  CHECK_THROWS_AS(scaling_indices(mix, 5.0), DomainError);
}

TEST_CASE("scaling certification holds on every sampled pair") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ud(0.0, 6.0);
  for (const auto& spec : {make_stable(0.3), make_mixture({{0.3, 1.0}, {0.6, 1.0}}),
                           make_mixture({{0.2, 0.5}, {0.9, 2.0}}), make_stable_log(0.4, 0.3)}) {
    const auto s = spec.scaling();
    CHECK(s.alpha1 > 0);
    CHECK(s.alpha1 <= s.alpha2);
    CHECK(s.alpha2 < 1);
    for (int i = 0; i < 200; ++i) {
      // Pairs on the certification sample (geometric, 200 points).
      int a = int(ud(rng) / 6.0 * 199), b = int(ud(rng) / 6.0 * 199);
      if (a > b) std::swap(a, b);
      const double r = std::pow(1e6, a / 199.0), R = std::pow(1e6, b / 199.0);
      const double q = eval_phi(spec, R) / eval_phi(spec, r);
      CHECK(q >= std::pow(R / r, s.alpha1) / s.b1 * (1 - 1e-12));
      CHECK(q <= s.b1 * std::pow(R / r, s.alpha2) * (1 + 1e-12));
    }
  }
}

TEST_CASE("monotonicity on geometric grids") {
  for (const auto& spec : {make_stable(0.5), make_mixture({{0.3, 1.0}, {0.6, 1.0}}),
                           make_stable_log(0.5, 0.5)}) {
    double prev = 0;
    for (int i = 0; i <= 400; ++i) {
      const double v = eval_phi(spec, std::pow(10.0, -6 + i * 0.03));
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("Bernstein sign pattern") {
  const auto st = make_stable(0.5);
  for (double l : {0.1, 1.0, 10.0}) {
    CHECK(phi_derivative(st, l, 1) > 0);
    CHECK(phi_derivative(st, l, 2) < 0);
    CHECK(phi_derivative(st, l, 3) > 0);
  }
  CHECK(bernstein_check(st).ok());
  CHECK(bernstein_check(make_mixture({{0.3, 1.0}, {0.6, 1.0}})).ok());
  const auto sl = make_stable_log(0.5, 0.5);
  const auto rep = bernstein_check(sl, 3, 1e-2, 1e4);
  CHECK(rep.ok());
  CHECK(rep.samples > 0);
}

TEST_CASE("Richardson derivatives agree with analytic StableLog derivatives") {
  const auto sl = make_stable_log(0.5, 0.5);
  for (double l : {0.01, 0.3, 1.0, 17.0, 5e3}) {
    for (int k = 1; k <= 3; ++k) {
      const double a = phi_derivative(sl, l, k);
      const double n = richardson_derivative(sl, l, k);
      CHECK(n == doctest::Approx(a).epsilon(1e-6));
    }
  }
}
