#include "nonlocal/field.hpp"

#include <cmath>

#include "nonlocal/error.hpp"

namespace nonlocal {

Point Grid::node(Eigen::Index k) const {
  Point x = origin;
  const auto [i, j] = multi_index(k);
  x(0) += h * i;
  if (dim == 2) x(1) += h * j;
  return x;
}

Point Grid::upper() const {
  Point x = origin;
  x(0) += h * (n[0] - 1);
  if (dim == 2) x(1) += h * (n[1] - 1);
  return x;
}

Grid Grid::covering(const Domain& domain, double h, double margin) {
  if (!(h > 0)) throw DomainError("Grid: h must be > 0");
  if (domain.dim() > 2) throw DomainError("Grid: only 1-d and 2-d grids");
  Grid g;
  g.dim = domain.dim();
  g.h = h;
  const Point c = domain.center(), half = domain.half_extent();
  g.origin = c;
  for (int d = 0; d < g.dim; ++d) {
    const int m = int(std::ceil((half(d) + margin) / h - 1e-9));
    g.origin(d) -= m * h;
    g.n[d] = 2 * m + 1;
  }
  return g;
}

double Field::operator()(const Point& x) const {
  const Grid& g = grid;
  double s[2] = {0, 0};
  int i0[2] = {0, 0};
  for (int d = 0; d < g.dim; ++d) {
    const double t = (x(d) - g.origin(d)) / g.h;
    if (!(t >= 0) || t > g.n[d] - 1) return 0.0;
    int i = int(std::floor(t));
    if (i >= g.n[d] - 1) i = g.n[d] - 2;
    if (i < 0) i = 0;
    i0[d] = i;
    s[d] = t - i;
  }
  if (g.dim == 1) {
    if (g.n[0] == 1) return values(0);
    return (1 - s[0]) * values(i0[0]) + s[0] * values(i0[0] + 1);
  }
  const Eigen::Index k = g.index(i0[0], i0[1]);
  const Eigen::Index nx = g.n[0];
  return (1 - s[0]) * (1 - s[1]) * values(k) + s[0] * (1 - s[1]) * values(k + 1) +
         (1 - s[0]) * s[1] * values(k + nx) + s[0] * s[1] * values(k + nx + 1);
}

Field Field::sample(const Domain& domain, const Grid& grid,
                    const std::function<double(const Point&)>& f,
                    const std::function<double(const Point&)>& exterior) {
  Field u;
  u.grid = grid;
  u.values.setZero(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const Point x = grid.node(k);
    if (domain.contains(x))
      u.values(k) = f(x);
    else if (exterior)
      u.values(k) = exterior(x);
  }
  return u;
}

}  // namespace nonlocal
