#pragma once

#include <Eigen/Core>

#include <array>
#include <functional>

#include "nonlocal/domain.hpp"

namespace nonlocal {

// Uniform Cartesian grid in 1 or 2 dimensions. Node (i, j) sits at
// origin + h (i, j); index i + n[0] j.
struct Grid {
  int dim = 1;
  double h = 0;
  Point origin;
  std::array<int, 2> n{1, 1};

  Eigen::Index size() const { return Eigen::Index(n[0]) * n[1]; }
  Eigen::Index index(int i, int j = 0) const { return i + Eigen::Index(n[0]) * j; }
  std::array<int, 2> multi_index(Eigen::Index k) const {
    return {int(k % n[0]), int(k / n[0])};
  }
  Point node(Eigen::Index k) const;
  Point upper() const;

  // Grid of spacing h with the domain centre on a node, covering the
  // bounding box of D enlarged by `margin` on every side.
  static Grid covering(const Domain& domain, double h, double margin = 0);
};

// Grid function. Values at nodes outside D hold the exterior data (zero for
// Dirichlet fields); the field vanishes outside the grid box.
struct Field {
  Grid grid;
  Eigen::VectorXd values;

  // Multilinear interpolation; 0 outside the grid box.
  double operator()(const Point& x) const;

  // f at nodes of D, `exterior` elsewhere (0 when null).
  static Field sample(const Domain& domain, const Grid& grid,
                      const std::function<double(const Point&)>& f,
                      const std::function<double(const Point&)>& exterior = nullptr);
};

}  // namespace nonlocal
