#pragma once

#include <cmath>

#include "vps/field.hpp"

namespace vps {

// Neumaier-compensated accumulator; deterministic and order-fixed.
struct CompensatedSum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    const double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

inline double compensated_total(const std::vector<double>& v) {
  CompensatedSum acc;
  for (double x : v) acc.add(x);
  return acc.value();
}

// Differential operators on the staggered layout. Scalars are cell-centered;
// gradient lands on faces, divergence pulls faces back to centers, so
// laplacian == divergence(gradient(.)) is the compact 5-point stencil.
// Boundary policy: periodic wraps; neumann mirrors scalars across walls
// (zero normal derivative) and treats wall-normal face values as zero
// (no-flux). With that pairing the duality <grad f, v> + <f, div v> = 0
// holds exactly under both boundary types, and integrate(divergence(v))
// telescopes to zero.

VectorField gradient(const ScalarField& f);
void gradient_into(const ScalarField& f, VectorField& out);

ScalarField divergence(const VectorField& v);
void divergence_into(const VectorField& v, ScalarField& out);

ScalarField laplacian(const ScalarField& f);
void laplacian_into(const ScalarField& f, ScalarField& out);

// Force of a node-based symmetric tensor, located on faces:
// (d_x T11 + d_y T12, d_x T12 + d_y T22). Wall faces get zero under neumann.
VectorField tensor_divergence(const SymTensorField& T);

// Component-wise 5-point laplacian with mirror ghosts (d_n C = 0) or wrap.
SymTensorField laplacian_tensor(const SymTensorField& C);
void laplacian_tensor_into(const SymTensorField& C, SymTensorField& out);

// Arithmetic face averages of a node-based coefficient, stored as a
// VectorField (x = x-face values, y = y-face values). Wall faces get the
// adjacent cell value under neumann; they multiply zero-flux entries anyway.
VectorField face_average(const ScalarField& m);
void face_average_into(const ScalarField& m, VectorField& out);

// Pointwise face scaling: out = coef (.) v.
void scale_faces_into(const VectorField& coef, const VectorField& v, VectorField& out);

// Zero wall-normal face entries under neumann; no-op under periodic.
void apply_noflux_walls(VectorField& v);

// Face components averaged back to cell centers (implicit zero wall faces
// under neumann, wrap under periodic).
void to_nodes(const VectorField& v, ScalarField& outx, ScalarField& outy);

// Ghost-resolved point reads of staggered components. Periodic wraps; under
// neumann wall-normal entries are zero (reads of the stored right/top wall
// entries included) and tangential ghosts reflect oddly (no slip).
double sample_ux(const VectorField& u, int i, int j);
double sample_uy(const VectorField& u, int i, int j);

// Velocity-gradient pieces on the (nx+1) x (ny+1) corner lattice; corner
// (ii, jj) sits at (ii hx, jj hy). Periodic grids fill the duplicate last
// row/column by wrapping.
void corner_velocity_grads(const VectorField& u, std::vector<double>& dyux,
                           std::vector<double>& dxuy);

// Nodal coefficient averaged onto the corner lattice (mirror/wrap ghosts).
void corner_average(const ScalarField& f, std::vector<double>& out);

// Midpoint quadrature (exact for constants) with compensated summation.
double integrate(const ScalarField& f);
double inner(const ScalarField& a, const ScalarField& b);
// Face-based quadrature of a vector field: sum over stored faces.
double inner_faces(const VectorField& a, const VectorField& b);
double min_value(const ScalarField& f);
double max_value(const ScalarField& f);

}  // namespace vps
