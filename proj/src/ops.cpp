#include "vps/ops.hpp"

#include <algorithm>
#include <cmath>

namespace vps {

void gradient_into(const ScalarField& f, VectorField& out) {
  require_same_grid(f.grid, out.grid, "gradient");
  const Grid& g = f.grid;
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  const bool wrap = g.bc == Bc::periodic;
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = g.at(0, j);
    for (int i = 0; i < nx - 1; ++i)
      out.x[row + i] = (f.v[row + i + 1] - f.v[row + i]) * ihx;
    out.x[row + nx - 1] = wrap ? (f.v[row] - f.v[row + nx - 1]) * ihx : 0.0;
  }
  for (int j = 0; j < ny - 1; ++j) {
    const std::size_t row = g.at(0, j);
    for (int i = 0; i < nx; ++i)
      out.y[row + i] = (f.v[row + nx + i] - f.v[row + i]) * ihy;
  }
  {
    const std::size_t top = g.at(0, ny - 1);
    for (int i = 0; i < nx; ++i)
      out.y[top + i] = wrap ? (f.v[g.at(i, 0)] - f.v[top + i]) * ihy : 0.0;
  }
}

VectorField gradient(const ScalarField& f) {
  VectorField out(f.grid);
  gradient_into(f, out);
  return out;
}

void divergence_into(const VectorField& v, ScalarField& out) {
  require_same_grid(v.grid, out.grid, "divergence");
  const Grid& g = v.grid;
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  const bool wrap = g.bc == Bc::periodic;
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = g.at(0, j);
    for (int i = 0; i < nx; ++i) {
      double left = (i > 0) ? v.x[row + i - 1] : (wrap ? v.x[row + nx - 1] : 0.0);
      double below = (j > 0) ? v.y[row - nx + i] : (wrap ? v.y[g.at(i, ny - 1)] : 0.0);
      out.v[row + i] = (v.x[row + i] - left) * ihx + (v.y[row + i] - below) * ihy;
    }
  }
}

ScalarField divergence(const VectorField& v) {
  ScalarField out(v.grid);
  divergence_into(v, out);
  return out;
}

void laplacian_into(const ScalarField& f, ScalarField& out) {
  require_same_grid(f.grid, out.grid, "laplacian");
  const Grid& g = f.grid;
  const int nx = g.nx, ny = g.ny;
  const double ihx2 = 1.0 / (g.hx() * g.hx()), ihy2 = 1.0 / (g.hy() * g.hy());
  const bool wrap = g.bc == Bc::periodic;
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = g.at(0, j);
    const std::size_t rup = g.at(0, (j < ny - 1) ? j + 1 : (wrap ? 0 : j));
    const std::size_t rdn = g.at(0, (j > 0) ? j - 1 : (wrap ? ny - 1 : 0));
    for (int i = 0; i < nx; ++i) {
      const double fc = f.v[row + i];
      const double fe = (i < nx - 1) ? f.v[row + i + 1] : (wrap ? f.v[row] : fc);
      const double fw = (i > 0) ? f.v[row + i - 1] : (wrap ? f.v[row + nx - 1] : fc);
      const double fn = (j < ny - 1 || wrap) ? f.v[rup + i] : fc;
      const double fs = (j > 0 || wrap) ? f.v[rdn + i] : fc;
      out.v[row + i] = (fe - 2.0 * fc + fw) * ihx2 + (fn - 2.0 * fc + fs) * ihy2;
    }
  }
}

ScalarField laplacian(const ScalarField& f) {
  ScalarField out(f.grid);
  laplacian_into(f, out);
  return out;
}

namespace {

// Mirror/wrap index resolution for node-based fields.
inline int nbr(int k, int n, bool wrap) {
  if (k < 0) return wrap ? k + n : -k - 1;  // mirror: -1 -> 0, -2 -> 1
  if (k >= n) return wrap ? k - n : 2 * n - k - 1;
  return k;
}

}  // namespace

VectorField tensor_divergence(const SymTensorField& T) {
  const Grid& g = T.grid;
  VectorField out(g);
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  const bool wrap = g.bc == Bc::periodic;

  auto at = [&](const std::vector<double>& c, int i, int j) {
    return c[g.at(nbr(i, nx, wrap), nbr(j, ny, wrap))];
  };
  // T12 at the corner (i+1/2, j+1/2).
  auto t12c = [&](int i, int j) {
    return 0.25 * (at(T.c12, i, j) + at(T.c12, i + 1, j) + at(T.c12, i, j + 1) +
                   at(T.c12, i + 1, j + 1));
  };
  // T12 at the corner (i+1/2, j-1/2).
  auto t12c_dn = [&](int i, int j) {
    return 0.25 * (at(T.c12, i, j) + at(T.c12, i + 1, j) + at(T.c12, i, j - 1) +
                   at(T.c12, i + 1, j - 1));
  };

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (i == nx - 1 && !wrap) {
        out.fx(i, j) = 0.0;
      } else {
        double dT11 = (at(T.c11, i + 1, j) - at(T.c11, i, j)) * ihx;
        double dT12 = (t12c(i, j) - t12c_dn(i, j)) * ihy;
        out.fx(i, j) = dT11 + dT12;
      }
      if (j == ny - 1 && !wrap) {
        out.fy(i, j) = 0.0;
      } else {
        double dT22 = (at(T.c22, i, j + 1) - at(T.c22, i, j)) * ihy;
        // T12 corners (i+1/2, j+1/2) and (i-1/2, j+1/2).
        double cr = 0.25 * (at(T.c12, i, j) + at(T.c12, i + 1, j) +
                            at(T.c12, i, j + 1) + at(T.c12, i + 1, j + 1));
        double cl = 0.25 * (at(T.c12, i - 1, j) + at(T.c12, i, j) +
                            at(T.c12, i - 1, j + 1) + at(T.c12, i, j + 1));
        out.fy(i, j) = dT22 + (cr - cl) * ihx;
      }
    }
  return out;
}

void laplacian_tensor_into(const SymTensorField& C, SymTensorField& out) {
  require_same_grid(C.grid, out.grid, "laplacian_tensor");
  ScalarField tmp(C.grid), res(C.grid);
  const std::vector<double>* src[3] = {&C.c11, &C.c12, &C.c22};
  std::vector<double>* dst[3] = {&out.c11, &out.c12, &out.c22};
  for (int k = 0; k < 3; ++k) {
    tmp.v = *src[k];
    laplacian_into(tmp, res);
    *dst[k] = res.v;
  }
}

SymTensorField laplacian_tensor(const SymTensorField& C) {
  SymTensorField out(C.grid);
  laplacian_tensor_into(C, out);
  return out;
}

void face_average_into(const ScalarField& m, VectorField& out) {
  require_same_grid(m.grid, out.grid, "face_average");
  const Grid& g = m.grid;
  const int nx = g.nx, ny = g.ny;
  const bool wrap = g.bc == Bc::periodic;
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = g.at(0, j);
    for (int i = 0; i < nx - 1; ++i)
      out.x[row + i] = 0.5 * (m.v[row + i] + m.v[row + i + 1]);
    out.x[row + nx - 1] =
        wrap ? 0.5 * (m.v[row + nx - 1] + m.v[row]) : m.v[row + nx - 1];
  }
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = g.at(0, j);
    for (int i = 0; i < nx; ++i) {
      if (j < ny - 1)
        out.y[row + i] = 0.5 * (m.v[row + i] + m.v[row + nx + i]);
      else
        out.y[row + i] = wrap ? 0.5 * (m.v[row + i] + m.v[g.at(i, 0)]) : m.v[row + i];
    }
  }
}

VectorField face_average(const ScalarField& m) {
  VectorField out(m.grid);
  face_average_into(m, out);
  return out;
}

void scale_faces_into(const VectorField& coef, const VectorField& v, VectorField& out) {
  require_same_grid(coef.grid, v.grid, "scale_faces");
  require_same_grid(v.grid, out.grid, "scale_faces");
  const std::size_t n = v.size();
  for (std::size_t k = 0; k < n; ++k) out.x[k] = coef.x[k] * v.x[k];
  for (std::size_t k = 0; k < n; ++k) out.y[k] = coef.y[k] * v.y[k];
}

void apply_noflux_walls(VectorField& v) {
  const Grid& g = v.grid;
  if (g.bc == Bc::periodic) return;
  for (int j = 0; j < g.ny; ++j) v.fx(g.nx - 1, j) = 0.0;
  for (int i = 0; i < g.nx; ++i) v.fy(i, g.ny - 1) = 0.0;
}

void to_nodes(const VectorField& v, ScalarField& outx, ScalarField& outy) {
  require_same_grid(v.grid, outx.grid, "to_nodes");
  require_same_grid(v.grid, outy.grid, "to_nodes");
  const Grid& g = v.grid;
  const int nx = g.nx, ny = g.ny;
  const bool wrap = g.bc == Bc::periodic;
  for (int j = 0; j < ny; ++j) {
    const std::size_t row = g.at(0, j);
    for (int i = 0; i < nx; ++i) {
      double left = (i > 0) ? v.x[row + i - 1] : (wrap ? v.x[row + nx - 1] : 0.0);
      double below = (j > 0) ? v.y[row - nx + i] : (wrap ? v.y[g.at(i, ny - 1)] : 0.0);
      outx.v[row + i] = 0.5 * (left + v.x[row + i]);
      outy.v[row + i] = 0.5 * (below + v.y[row + i]);
    }
  }
}

double integrate(const ScalarField& f) {
  CompensatedSum acc;
  for (double x : f.v) acc.add(x);
  return acc.value() * f.grid.cell_area();
}

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "inner");
  CompensatedSum acc;
  const std::size_t n = a.size();
  for (std::size_t k = 0; k < n; ++k) acc.add(a.v[k] * b.v[k]);
  return acc.value() * a.grid.cell_area();
}

double inner_faces(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "inner_faces");
  CompensatedSum acc;
  const std::size_t n = a.size();
  for (std::size_t k = 0; k < n; ++k) acc.add(a.x[k] * b.x[k]);
  for (std::size_t k = 0; k < n; ++k) acc.add(a.y[k] * b.y[k]);
  return acc.value() * a.grid.cell_area();
}

double min_value(const ScalarField& f) {
  return *std::min_element(f.v.begin(), f.v.end());
}

double max_value(const ScalarField& f) {
  return *std::max_element(f.v.begin(), f.v.end());
}

namespace {

int wrap_i(int k, int n) { return ((k % n) + n) % n; }

int reflect_i(int k, int n) {
  k = wrap_i(k, 2 * n);
  return (k < n) ? k : 2 * n - 1 - k;
}

}  // namespace

double sample_ux(const VectorField& u, int i, int j) {
  const Grid& g = u.grid;
  if (g.bc == Bc::periodic) return u.x[g.at(wrap_i(i, g.nx), wrap_i(j, g.ny))];
  if (i < 0 || i >= g.nx - 1) return 0.0;
  if (j < 0) return -u.x[g.at(i, 0)];
  if (j >= g.ny) return -u.x[g.at(i, g.ny - 1)];
  return u.x[g.at(i, j)];
}

double sample_uy(const VectorField& u, int i, int j) {
  const Grid& g = u.grid;
  if (g.bc == Bc::periodic) return u.y[g.at(wrap_i(i, g.nx), wrap_i(j, g.ny))];
  if (j < 0 || j >= g.ny - 1) return 0.0;
  if (i < 0) return -u.y[g.at(0, j)];
  if (i >= g.nx) return -u.y[g.at(g.nx - 1, j)];
  return u.y[g.at(i, j)];
}

void corner_velocity_grads(const VectorField& u, std::vector<double>& dyux,
                           std::vector<double>& dxuy) {
  const Grid& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  dyux.assign(static_cast<std::size_t>(nx + 1) * (ny + 1), 0.0);
  dxuy.assign(static_cast<std::size_t>(nx + 1) * (ny + 1), 0.0);
  for (int jj = 0; jj <= ny; ++jj)
    for (int ii = 0; ii <= nx; ++ii) {
      const std::size_t k = static_cast<std::size_t>(jj) * (nx + 1) + ii;
      dyux[k] = (sample_ux(u, ii - 1, jj) - sample_ux(u, ii - 1, jj - 1)) * ihy;
      dxuy[k] = (sample_uy(u, ii, jj - 1) - sample_uy(u, ii - 1, jj - 1)) * ihx;
    }
}

void corner_average(const ScalarField& f, std::vector<double>& out) {
  const Grid& g = f.grid;
  const int nx = g.nx, ny = g.ny;
  const bool per = g.bc == Bc::periodic;
  out.assign(static_cast<std::size_t>(nx + 1) * (ny + 1), 0.0);
  auto cell = [&](int i, int j) {
    if (per) return f.v[g.at(wrap_i(i, nx), wrap_i(j, ny))];
    return f.v[g.at(reflect_i(i, nx), reflect_i(j, ny))];
  };
  for (int jj = 0; jj <= ny; ++jj)
    for (int ii = 0; ii <= nx; ++ii)
      out[static_cast<std::size_t>(jj) * (nx + 1) + ii] =
          0.25 * (cell(ii - 1, jj - 1) + cell(ii, jj - 1) + cell(ii - 1, jj) +
                  cell(ii, jj));
}

}  // namespace vps
