#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <variant>

namespace nonlocal {

// Point of R^n, n <= 3, stored inline.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;

inline Point point(double x) { return Point::Constant(1, x); }
inline Point point(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

struct Interval {
  double a = -1, b = 1;
};

struct Ball {
  Point center = Point::Zero(2);
  double radius = 1;
};

struct Annulus {
  Point center = Point::Zero(2);
  double inner = 0.5, outer = 1;
};

// 2-d star domain with boundary |x - c| = radius (1 + amplitude cos(lobes theta)).
struct SmoothStar {
  Point center = Point::Zero(2);
  double radius = 1;
  double amplitude = 0.1;
  int lobes = 5;
};

using DomainShape = std::variant<Interval, Ball, Annulus, SmoothStar>;

// Characteristics of a C^{1,1} open set: localisation radius and the
// Lipschitz bound of the boundary charts' gradients.
struct C11Params {
  double R0 = 0;
  double Lambda = 0;
};

// Open set D through its signed distance d_D (positive inside), with the
// regularised distance psi. Cheap to copy.
class Domain {
 public:
  Domain() = default;
  explicit Domain(DomainShape shape);

  const DomainShape& shape() const { return shape_; }
  int dim() const { return dim_; }
  std::string name() const;
  const C11Params& c11() const { return c11_; }

  double sdist(const Point& x) const;
  bool contains(const Point& x) const { return sdist(x) > 0; }
  double diameter() const;
  Point center() const;
  // Half-widths of the axis-aligned bounding box about center().
  Point half_extent() const;
  // Largest d_D over D.
  double inradius() const;

  double psi(const Point& x) const;
  Point grad_psi(const Point& x) const;

 private:
  DomainShape shape_;
  int dim_ = 1;
  C11Params c11_;
};

// C^2 profile of the regularised distance of the unit interval/ball:
// p(d) = d for d <= 1/8, constant 5/16 for d >= 1/2, smoothstep blend of p'.
double psi_profile(double d);
double psi_profile_slope(double d);

// Psi_r for the ball B(x0, r): r * p(1 - |x - x0| / r).
double ball_psi(const Point& x, const Point& x0, double r);

struct RegularizedDistanceReport {
  double C_tilde = 0;       // max of the four ratios below
  double ratio_min = 0;     // min psi / d_D
  double ratio_max = 0;     // max psi / d_D
  double grad_max = 0;      // max |grad psi|
  double lipschitz = 0;     // max |grad psi(x) - grad psi(y)| / |x - y|
  int samples = 0;
};

// Samples the regularised-distance bounds C^{-1} d <= psi <= C d,
// |grad psi| <= C and Lip(grad psi) <= C on D. Throws VerificationFailure
// when the fitted constant exceeds `bound`.
RegularizedDistanceReport regularized_distance(const Domain& domain, double bound = 10,
                                               int samples = 4000, std::uint64_t seed = 7);

// Uniform samples of D by rejection from its bounding box.
Point sample_uniform(const Domain& domain, std::uint64_t seed, std::uint64_t index);

// A point with d_D = d (d at most the inradius) in a random direction.
Point point_at_depth(const Domain& domain, double d, std::uint64_t seed, std::uint64_t index);

}  // namespace nonlocal
