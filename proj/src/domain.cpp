#include "nonlocal/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "nonlocal/error.hpp"
#include "nonlocal/sampler.hpp"

namespace nonlocal {

namespace {

constexpr double kPi = 3.14159265358979323846;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3 - 2 * s);
}

// Star boundary: gamma(theta) = c + R(theta) e(theta).
struct StarCurve {
  const SmoothStar& s;
  double R(double t) const { return s.radius * (1 + s.amplitude * std::cos(s.lobes * t)); }
  double R1(double t) const { return -s.radius * s.amplitude * s.lobes * std::sin(s.lobes * t); }
  double R2(double t) const {
    return -s.radius * s.amplitude * s.lobes * s.lobes * std::cos(s.lobes * t);
  }
  Eigen::Vector2d gamma(double t) const {
    return s.center.head<2>() + R(t) * Eigen::Vector2d(std::cos(t), std::sin(t));
  }
  Eigen::Vector2d d1(double t) const {
    return R1(t) * Eigen::Vector2d(std::cos(t), std::sin(t)) +
           R(t) * Eigen::Vector2d(-std::sin(t), std::cos(t));
  }
  Eigen::Vector2d d2(double t) const {
    return (R2(t) - R(t)) * Eigen::Vector2d(std::cos(t), std::sin(t)) +
           2 * R1(t) * Eigen::Vector2d(-std::sin(t), std::cos(t));
  }
  double curvature(double t) const {
    const double r = R(t), r1 = R1(t), r2 = R2(t);
    return std::abs(r * r + 2 * r1 * r1 - r * r2) / std::pow(r * r + r1 * r1, 1.5);
  }

  double distance(const Eigen::Vector2d& x) const {
    constexpr int kCoarse = 256;
    double best = 0, best_d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kCoarse; ++i) {
      const double t = 2 * kPi * i / kCoarse;
      const double d2 = (gamma(t) - x).squaredNorm();
      if (d2 < best_d2) best_d2 = d2, best = t;
    }
    double t = best;
    for (int it = 0; it < 30; ++it) {
      const Eigen::Vector2d g = gamma(t) - x;
      const double f = g.dot(d1(t));
      const double fp = d1(t).squaredNorm() + g.dot(d2(t));
      if (!(fp > 0)) break;
      const double step = std::clamp(f / fp, -kPi / kCoarse, kPi / kCoarse);
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    return std::sqrt(std::min(best_d2, (gamma(t) - x).squaredNorm()));
  }

  bool inside(const Eigen::Vector2d& x) const {
    const Eigen::Vector2d v = x - s.center.head<2>();
    return v.norm() < R(std::atan2(v.y(), v.x()));
  }
};

// Interval-type profile across a slab of half-width H: H p(d / H).
double slab_psi(double d, double H) { return d <= 0 ? 0.0 : H * psi_profile(d / H); }

// Mollifier nodes on the unit disk with weight (1 - r^2)^2.
struct Mollifier {
  std::vector<Eigen::Vector2d> z;
  std::vector<double> w;
  Mollifier() {
    const double rs[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
    const double rw[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
    double total = 0;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 8; ++k) {
        const double t = 2 * kPi * (k + 0.5 * i) / 8;
        const double r = rs[i];
        z.emplace_back(r * std::cos(t), r * std::sin(t));
        w.push_back(rw[i] * r * std::pow(1 - r * r, 2));
        total += w.back();
      }
    for (double& v : w) v /= total;
  }
};

const Mollifier& mollifier() {
  static const Mollifier m;
  return m;
}

}  // namespace

double psi_profile(double d) {
  if (d <= 0.125) return d;
  if (d >= 0.5) return 0.3125;
  // p' = 1 - S(s) with s = (d - 1/8) / (3/8); integrate the cubic exactly.
  const double s = (d - 0.125) / 0.375;
  const double intS = s * s * s - 0.5 * s * s * s * s;  // int_0^s (3u^2 - 2u^3) du
  return 0.125 + 0.375 * (s - intS);
}

double psi_profile_slope(double d) {
  if (d <= 0.125) return 1;
  if (d >= 0.5) return 0;
  return 1 - smoothstep((d - 0.125) / 0.375);
}

double ball_psi(const Point& x, const Point& x0, double r) {
  return slab_psi(r - (x - x0).norm(), r);
}

Domain::Domain(DomainShape shape) : shape_(std::move(shape)) {
  std::visit(overloaded{
                 [&](const Interval& s) {
                   if (!(s.b > s.a)) throw DomainError("Interval: need a < b");
                   dim_ = 1;
                   c11_ = {0.5 * (s.b - s.a), 0};
                 },
                 [&](const Ball& s) {
                   if (!(s.radius > 0) || s.center.size() < 1 || s.center.size() > 3)
                     throw DomainError("Ball: need radius > 0 and 1 <= dim <= 3");
                   dim_ = int(s.center.size());
                   c11_ = {s.radius, 1 / s.radius};
                 },
                 [&](const Annulus& s) {
                   if (!(s.inner > 0 && s.outer > s.inner) || s.center.size() != 2)
                     throw DomainError("Annulus: need 0 < inner < outer in 2-d");
                   dim_ = 2;
                   c11_ = {std::min(s.inner, 0.5 * (s.outer - s.inner)), 1 / s.inner};
                 },
                 [&](const SmoothStar& s) {
                   if (!(s.radius > 0) || !(std::abs(s.amplitude) < 1) || s.lobes < 0 ||
                       s.center.size() != 2)
                     throw DomainError("SmoothStar: need radius > 0, |amplitude| < 1, 2-d");
                   dim_ = 2;
                   StarCurve c{s};
                   double kmax = 0;
                   for (int i = 0; i < 2048; ++i) kmax = std::max(kmax, c.curvature(2 * kPi * i / 2048));
                   c11_ = {1 / kmax, kmax};
                 },
             },
             shape_);
}

std::string Domain::name() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Interval& s) { os << "Interval(" << s.a << "," << s.b << ")"; },
                 [&](const Ball& s) { os << "Ball(dim=" << s.center.size() << ",r=" << s.radius << ")"; },
                 [&](const Annulus& s) { os << "Annulus(" << s.inner << "," << s.outer << ")"; },
                 [&](const SmoothStar& s) {
                   os << "SmoothStar(r=" << s.radius << ",eps=" << s.amplitude << ",k=" << s.lobes << ")";
                 },
             },
             shape_);
  return os.str();
}

double Domain::sdist(const Point& x) const {
  return std::visit(overloaded{
                        [&](const Interval& s) { return std::min(x(0) - s.a, s.b - x(0)); },
                        [&](const Ball& s) { return s.radius - (x - s.center).norm(); },
                        [&](const Annulus& s) {
                          const double rho = (x - s.center).norm();
                          return std::min(rho - s.inner, s.outer - rho);
                        },
                        [&](const SmoothStar& s) {
                          StarCurve c{s};
                          const Eigen::Vector2d y = x.head<2>();
                          const double d = c.distance(y);
                          return c.inside(y) ? d : -d;
                        },
                    },
                    shape_);
}

double Domain::diameter() const {
  return std::visit(overloaded{
                        [](const Interval& s) { return s.b - s.a; },
                        [](const Ball& s) { return 2 * s.radius; },
                        [](const Annulus& s) { return 2 * s.outer; },
                        [](const SmoothStar& s) { return 2 * s.radius * (1 + std::abs(s.amplitude)); },
                    },
                    shape_);
}

Point Domain::center() const {
  return std::visit(overloaded{
                        [](const Interval& s) { return point(0.5 * (s.a + s.b)); },
                        [](const Ball& s) { return s.center; },
                        [](const Annulus& s) { return s.center; },
                        [](const SmoothStar& s) { return s.center; },
                    },
                    shape_);
}

Point Domain::half_extent() const {
  return Point::Constant(dim_, 0.5 * diameter());
}

double Domain::inradius() const {
  return std::visit(overloaded{
                        [](const Interval& s) { return 0.5 * (s.b - s.a); },
                        [](const Ball& s) { return s.radius; },
                        [](const Annulus& s) { return 0.5 * (s.outer - s.inner); },
                        [this](const SmoothStar& s) { return sdist(s.center); },
                    },
                    shape_);
}

double Domain::psi(const Point& x) const {
  return std::visit(overloaded{
                        [&](const Interval& s) { return slab_psi(sdist(x), 0.5 * (s.b - s.a)); },
                        [&](const Ball& s) { return slab_psi(sdist(x), s.radius); },
                        [&](const Annulus& s) { return slab_psi(sdist(x), 0.5 * (s.outer - s.inner)); },
                        [&](const SmoothStar&) {
                          const double d = sdist(x);
                          if (d <= 0) return 0.0;
                          const Mollifier& m = mollifier();
                          const double eps = 0.25 * d;
                          double acc = 0;
                          for (std::size_t k = 0; k < m.z.size(); ++k) {
                            Point y = x;
                            y.head<2>() += eps * m.z[k];
                            acc += m.w[k] * sdist(y);
                          }
                          return acc;
                        },
                    },
                    shape_);
}

Point Domain::grad_psi(const Point& x) const {
  Point g = Point::Zero(dim_);
  if (sdist(x) <= 0) return g;
  auto radial = [&](const Point& c, double slope, double sign) {
    const Point v = x - c;
    const double n = v.norm();
    if (n > 0) g = sign * slope * v / n;
  };
  std::visit(overloaded{
                 [&](const Interval& s) {
                   const double H = 0.5 * (s.b - s.a);
                   const double left = x(0) - s.a, right = s.b - x(0);
                   g(0) = psi_profile_slope(std::min(left, right) / H) * (left < right ? 1 : -1);
                 },
                 [&](const Ball& s) { radial(s.center, psi_profile_slope(sdist(x) / s.radius), -1); },
                 [&](const Annulus& s) {
                   const double rho = (x - s.center).norm();
                   const double H = 0.5 * (s.outer - s.inner);
                   const bool near_inner = rho - s.inner < s.outer - rho;
                   radial(s.center, psi_profile_slope(sdist(x) / H), near_inner ? 1 : -1);
                 },
                 [&](const SmoothStar&) {
                   const double e = 1e-6 * std::max(sdist(x), 1e-3);
                   for (int i = 0; i < dim_; ++i) {
                     Point a = x, b = x;
                     a(i) += e;
                     b(i) -= e;
                     g(i) = (psi(a) - psi(b)) / (2 * e);
                   }
                 },
             },
             shape_);
  return g;
}

Point sample_uniform(const Domain& domain, std::uint64_t seed, std::uint64_t index) {
  Rng rng = path_rng(seed, index);
  std::uniform_real_distribution<double> u(-1, 1);
  const Point c = domain.center(), half = domain.half_extent();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Point x(domain.dim());
    for (int i = 0; i < domain.dim(); ++i) x(i) = c(i) + half(i) * u(rng);
    if (domain.contains(x)) return x;
  }
  throw VerificationFailure("sample_uniform: rejection sampling failed for " + domain.name());
}

Point point_at_depth(const Domain& domain, double d, std::uint64_t seed, std::uint64_t index) {
  if (!(d > 0) || d > domain.inradius() * (1 + 1e-12))
    throw DomainError("point_at_depth: depth outside (0, inradius]");
  Rng rng = path_rng(seed, index);
  std::uniform_real_distribution<double> unif(0, 1);
  const double theta = 2 * kPi * unif(rng);
  const bool flip = unif(rng) < 0.5;
  const Eigen::Vector2d e(std::cos(theta), std::sin(theta));
  return std::visit(overloaded{
                        [&](const Interval& s) { return point(flip ? s.b - d : s.a + d); },
                        [&](const Ball& s) {
                          Point dir(s.center.size());
                          std::normal_distribution<double> g;
                          for (int i = 0; i < dir.size(); ++i) dir(i) = g(rng);
                          if (dir.size() == 1) dir(0) = flip ? 1 : -1;
                          return Point(s.center + (s.radius - d) * dir.normalized());
                        },
                        [&](const Annulus& s) {
                          const double rho = flip ? s.outer - d : s.inner + d;
                          Point x = s.center;
                          x.head<2>() += rho * e;
                          return x;
                        },
                        [&](const SmoothStar& s) {
                          StarCurve c{s};
                          const Eigen::Vector2d t = c.d1(theta).normalized();
                          Point x = s.center;
                          x.head<2>() = c.gamma(theta) + d * Eigen::Vector2d(-t.y(), t.x());
                          return x;
                        },
                    },
                    domain.shape());
}

RegularizedDistanceReport regularized_distance(const Domain& domain, double bound, int samples,
                                               std::uint64_t seed) {
  RegularizedDistanceReport rep;
  rep.ratio_min = std::numeric_limits<double>::infinity();
  Rng rng = path_rng(seed, 0);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0, 1);
  const double diam = domain.diameter();
  for (int k = 0; k < samples; ++k) {
    // Odd samples sit at a log-uniform depth, down to 1e-5 diam.
    const Point x = k % 2 == 0 ? sample_uniform(domain, seed, k + 1)
                               : point_at_depth(domain,
                                                std::min(domain.inradius(),
                                                         diam * std::pow(10.0, -5 * unif(rng))),
                                                seed, k + 1);
    if (!domain.contains(x)) continue;
    const double d = domain.sdist(x);
    const double p = domain.psi(x);
    const Point g = domain.grad_psi(x);
    rep.ratio_min = std::min(rep.ratio_min, p / d);
    rep.ratio_max = std::max(rep.ratio_max, p / d);
    rep.grad_max = std::max(rep.grad_max, g.norm());
    // Lipschitz quotient of grad psi against a nearby point.
    Point dir(x.size());
    for (int i = 0; i < x.size(); ++i) dir(i) = gauss(rng);
    const Point y = x + 0.1 * d * dir.normalized();
    if (domain.contains(y)) {
      rep.lipschitz = std::max(rep.lipschitz, (domain.grad_psi(y) - g).norm() / (y - x).norm());
    }
    ++rep.samples;
  }
  rep.C_tilde = std::max({1 / rep.ratio_min, rep.ratio_max, rep.grad_max, rep.lipschitz});
  if (!(rep.C_tilde <= bound)) {
    std::ostringstream os;
    os << "regularized_distance: fitted constant " << rep.C_tilde << " exceeds " << bound << " on "
       << domain.name();
    throw VerificationFailure(os.str());
  }
  return rep;
}

}  // namespace nonlocal
