#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>
#include <vector>

#include "nonlocal/error.hpp"

namespace nonlocal {

template <typename Scalar>
struct QuadResult {
  Scalar value{0};
  Scalar abs_error{0};
  int intervals{0};
  bool converged{false};
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar, typename F>
std::pair<Scalar, Scalar> gk15(F& f, Scalar a, Scalar b) {
  const Scalar center = Scalar(0.5) * (a + b);
  const Scalar half = Scalar(0.5) * (b - a);
  const Scalar fc = f(center);
  Scalar resg = fc * Scalar(kWg[3]);
  Scalar resk = fc * Scalar(kWgk[7]);
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Scalar(kXgk[j]);
    const Scalar f1 = f(center - dx);
    const Scalar f2 = f(center + dx);
    resk += Scalar(kWgk[j]) * (f1 + f2);
    if (j % 2 == 1) resg += Scalar(kWg[j / 2]) * (f1 + f2);
  }
  return {resk * half, std::abs((resk - resg) * half)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (7/15) on a finite interval. Stops when the
// summed error estimate is below max(abs_tol, rel_tol*|I|) or the interval
// budget is spent; `converged` tells which.
template <typename Scalar, typename F>
QuadResult<Scalar> integrate_adaptive(F&& f, Scalar a, Scalar b, Scalar abs_tol,
                                      Scalar rel_tol, int max_intervals = 2000) {
  QuadResult<Scalar> out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  struct Piece {
    Scalar a, b, value, err;
    bool operator<(const Piece& o) const { return err < o.err; }
  };
  std::priority_queue<Piece> heap;
  auto [v0, e0] = detail::gk15<Scalar>(f, a, b);
  heap.push({a, b, v0, e0});
  Scalar total = v0, err = e0;
  int count = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && count < max_intervals) {
    Piece p = heap.top();
    heap.pop();
    const Scalar mid = Scalar(0.5) * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) {
      heap.push(p);
      break;
    }
    auto [v1, e1] = detail::gk15<Scalar>(f, p.a, mid);
    auto [v2, e2] = detail::gk15<Scalar>(f, mid, p.b);
    total += v1 + v2 - p.value;
    err += e1 + e2 - p.err;
    heap.push({p.a, mid, v1, e1});
    heap.push({mid, p.b, v2, e2});
    ++count;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0;
  err = 0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().err;
    heap.pop();
  }
  out.value = total;
  out.abs_error = err;
  out.intervals = count;
  out.converged = err <= std::max(abs_tol, rel_tol * std::abs(total)) * Scalar(1.0001);
  return out;
}

// Same as integrate_adaptive but throws QuadratureError on non-convergence.
template <typename Scalar, typename F>
Scalar integrate(F&& f, Scalar a, Scalar b, Scalar abs_tol, Scalar rel_tol,
                 int max_intervals = 2000) {
  auto r = integrate_adaptive<Scalar>(f, a, b, abs_tol, rel_tol, max_intervals);
  if (!r.converged && r.abs_error > Scalar(1e3) * std::max(abs_tol, rel_tol * std::abs(r.value)))
    throw QuadratureError("adaptive quadrature did not converge on [" + std::to_string(double(a)) +
                          ", " + std::to_string(double(b)) + "]");
  return r.value;
}

// Integral over (0, inf) of f(t) dt via t = exp(v), on v in [vmin, vmax].
// The caller chooses a window outside of which the integrand is negligible.
template <typename Scalar, typename F>
Scalar integrate_log(F&& f, Scalar vmin, Scalar vmax, Scalar abs_tol, Scalar rel_tol,
                     int max_intervals = 4000) {
  auto g = [&](Scalar v) {
    const Scalar t = std::exp(v);
    return f(t) * t;
  };
  return integrate<Scalar>(g, vmin, vmax, abs_tol, rel_tol, max_intervals);
}

// Gauss-Legendre nodes/weights on [-1, 1] (Newton on P_n).
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>
gauss_legendre(int n) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vec x(n), w(n);
  const Scalar pi = Scalar(3.14159265358979323846264338327950288);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar z = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar pp = 0;
    for (int it = 0; it < 100; ++it) {
      Scalar p1 = 1, p2 = 0;
      for (int j = 1; j <= n; ++j) {
        const Scalar p3 = p2;
        p2 = p1;
        p1 = ((Scalar(2 * j - 1)) * z * p2 - Scalar(j - 1) * p3) / Scalar(j);
      }
      pp = Scalar(n) * (z * p1 - p2) / (z * z - Scalar(1));
      const Scalar z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < Scalar(1e-15)) break;
    }
    x(i) = -z;
    x(n - 1 - i) = z;
    w(i) = w(n - 1 - i) = Scalar(2) / ((Scalar(1) - z * z) * pp * pp);
  }
  return {x, w};
}

// Fixed composite Gauss-Legendre rule over `panels` equal panels of [a, b].
template <typename Scalar, typename F>
Scalar integrate_composite(F&& f, Scalar a, Scalar b, int panels, int order) {
  auto [x, w] = gauss_legendre<Scalar>(order);
  const Scalar width = (b - a) / Scalar(panels);
  Scalar sum = 0;
  for (int p = 0; p < panels; ++p) {
    const Scalar lo = a + width * Scalar(p);
    const Scalar c = lo + Scalar(0.5) * width;
    Scalar s = 0;
    for (int i = 0; i < order; ++i) s += w(i) * f(c + Scalar(0.5) * width * x(i));
    sum += Scalar(0.5) * width * s;
  }
  return sum;
}

}  // namespace nonlocal
