#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "vps/grid.hpp"

namespace vps {

// Node-valued scalar, row-major (i fastest).
struct ScalarField {
  Grid grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

  double& operator()(int i, int j) { return v[grid.at(i, j)]; }
  double operator()(int i, int j) const { return v[grid.at(i, j)]; }
  std::size_t size() const { return v.size(); }
};

// Staggered two-component field. x[i,j] sits on the x-face between cells
// (i,j) and (i+1,j); y[i,j] on the y-face between (i,j) and (i,j+1).
// Under periodic bc the last face wraps around. Under neumann bc the
// entries x[nx-1,j] and y[i,ny-1] are the right/top wall faces and the
// left/bottom wall faces are implicit; wall-normal values are held at zero
// for fluxes (no-flux) and for velocity (no-penetration).
struct VectorField {
  Grid grid;
  std::vector<double> x;
  std::vector<double> y;

  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0)
      : grid(g), x(g.size(), fill), y(g.size(), fill) {}

  double& fx(int i, int j) { return x[grid.at(i, j)]; }
  double fx(int i, int j) const { return x[grid.at(i, j)]; }
  double& fy(int i, int j) { return y[grid.at(i, j)]; }
  double fy(int i, int j) const { return y[grid.at(i, j)]; }
  std::size_t size() const { return x.size(); }
};

// Symmetric 2x2 tensor per node: components c11, c12, c22.
struct SymTensorField {
  Grid grid;
  std::vector<double> c11;
  std::vector<double> c12;
  std::vector<double> c22;

  SymTensorField() = default;
  explicit SymTensorField(const Grid& g, double d11 = 0.0, double d12 = 0.0,
                          double d22 = 0.0)
      : grid(g), c11(g.size(), d11), c12(g.size(), d12), c22(g.size(), d22) {}

  std::size_t size() const { return c11.size(); }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string("grid mismatch in ") + what);
}

}  // namespace vps
