#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vps {

enum class Bc { neumann, periodic };

inline const char* to_string(Bc bc) {
  return bc == Bc::neumann ? "neumann" : "periodic";
}

// Uniform 2D grid. Scalar and tensor values live at cell centers
// x_i = (i + 1/2) hx, y_j = (j + 1/2) hy; vector components live on faces.
struct Grid {
  int nx = 0;
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  Bc bc = Bc::neumann;

  Grid() = default;
  Grid(int nx_, int ny_, double lx_, double ly_, Bc bc_)
      : nx(nx_), ny(ny_), lx(lx_), ly(ly_), bc(bc_) {
    if (nx < 8 || ny < 8)
      throw std::invalid_argument("grid: nx and ny must be at least 8, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
    if (!(lx > 0.0) || !(ly > 0.0))
      throw std::invalid_argument("grid: domain lengths must be positive");
  }

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_area() const { return hx() * hy(); }
  double area() const { return lx * ly; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }

  std::size_t at(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

  // Cell-center coordinates.
  double x(int i) const { return (i + 0.5) * hx(); }
  double y(int j) const { return (j + 0.5) * hy(); }

  bool operator==(const Grid& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly && bc == o.bc;
  }
};

}  // namespace vps
