#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "nonlocal/error.hpp"

namespace nonlocal {

// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes; preserves
// monotonicity of the data. Knots must be strictly increasing.
template <typename Scalar>
class MonotoneCubic {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  MonotoneCubic() = default;
  MonotoneCubic(Vec x, Vec y) : x_(std::move(x)), y_(std::move(y)) {
    const Eigen::Index n = x_.size();
    if (n < 2 || y_.size() != n) throw DomainError("MonotoneCubic: need >= 2 matching knots");
    d_.resize(n);
    Vec delta(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const Scalar hx = x_(i + 1) - x_(i);
      if (!(hx > 0)) throw DomainError("MonotoneCubic: knots not increasing");
      delta(i) = (y_(i + 1) - y_(i)) / hx;
    }
    if (n == 2) {
      d_.setConstant(delta(0));
      return;
    }
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      if (delta(i - 1) * delta(i) <= 0) {
        d_(i) = 0;
      } else {
        const Scalar h0 = x_(i) - x_(i - 1), h1 = x_(i + 1) - x_(i);
        const Scalar w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
        d_(i) = (w1 + w2) / (w1 / delta(i - 1) + w2 / delta(i));
      }
    }
    d_(0) = end_slope(x_(1) - x_(0), x_(2) - x_(1), delta(0), delta(1));
    d_(n - 1) = end_slope(x_(n - 1) - x_(n - 2), x_(n - 2) - x_(n - 3), delta(n - 2), delta(n - 3));
  }

  Scalar front() const { return x_(0); }
  Scalar back() const { return x_(x_.size() - 1); }
  const Vec& knots() const { return x_; }
  const Vec& values() const { return y_; }

  Scalar operator()(Scalar t) const {
    const auto [i, s, h] = locate(t);
    const Scalar s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_(i) + (s3 - 2 * s2 + s) * h * d_(i) +
           (-2 * s3 + 3 * s2) * y_(i + 1) + (s3 - s2) * h * d_(i + 1);
  }

  Scalar derivative(Scalar t) const {
    const auto [i, s, h] = locate(t);
    const Scalar s2 = s * s;
    return ((6 * s2 - 6 * s) * y_(i) + (6 * s - 6 * s2) * y_(i + 1)) / h +
           (3 * s2 - 4 * s + 1) * d_(i) + (3 * s2 - 2 * s) * d_(i + 1);
  }

 private:
  struct Loc {
    Eigen::Index i;
    Scalar s, h;
  };

  Loc locate(Scalar t) const {
    const Eigen::Index n = x_.size();
    if (t < x_(0) || t > x_(n - 1))
      throw ExtrapolationError("MonotoneCubic: query outside tabulated range");
    const Scalar* begin = x_.data();
    Eigen::Index i = std::upper_bound(begin, begin + n, t) - begin - 1;
    i = std::clamp<Eigen::Index>(i, 0, n - 2);
    const Scalar h = x_(i + 1) - x_(i);
    return {i, (t - x_(i)) / h, h};
  }

  static Scalar end_slope(Scalar h0, Scalar h1, Scalar d0, Scalar d1) {
    Scalar d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0) return 0;
    if (d0 * d1 <= 0 && std::abs(d) > std::abs(3 * d0)) return 3 * d0;
    return d;
  }

  Vec x_, y_, d_;
};

// Positive function tabulated on a geometric grid, interpolated in log-log
// coordinates. Outside the grid it continues as a power law with the end
// log-slope unless extrapolation is disabled.
class LogLogTable {
 public:
  LogLogTable() = default;
  LogLogTable(const Eigen::VectorXd& x, const Eigen::VectorXd& y, bool allow_extrapolation = true)
      : allow_extrapolation_(allow_extrapolation) {
    if ((y.array() <= 0).any()) throw DomainError("LogLogTable: values must be positive");
    spline_ = MonotoneCubic<double>(x.array().log().matrix(), y.array().log().matrix());
  }

  bool empty() const { return spline_.knots().size() == 0; }
  double x_min() const { return std::exp(spline_.front()); }
  double x_max() const { return std::exp(spline_.back()); }

  double operator()(double x) const { return std::exp(log_value(x)); }

  // d log y / d log x
  double log_slope(double x) const {
    const double lx = std::log(x);
    return spline_.derivative(std::clamp(lx, spline_.front(), spline_.back()));
  }

  double log_value(double x) const {
    if (!(x > 0)) throw DomainError("LogLogTable: argument must be positive");
    const double lx = std::log(x);
    if (lx < spline_.front() || lx > spline_.back()) {
      if (!allow_extrapolation_) throw ExtrapolationError("LogLogTable: query outside table");
      const double edge = lx < spline_.front() ? spline_.front() : spline_.back();
      return spline_(edge) + spline_.derivative(edge) * (lx - edge);
    }
    return spline_(lx);
  }

 private:
  MonotoneCubic<double> spline_;
  bool allow_extrapolation_ = true;
};

// Geometric grid with `per_decade` points per decade covering [lo, hi].
inline Eigen::VectorXd geometric_grid(double lo, double hi, int per_decade) {
  const double decades = std::log10(hi / lo);
  const int n = std::max(2, static_cast<int>(std::lround(decades * per_decade)) + 1);
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g(i) = lo * std::pow(hi / lo, double(i) / double(n - 1));
  return g;
}

}  // namespace nonlocal
