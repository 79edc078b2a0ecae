#include "vps/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vps/ops.hpp"
#include "vps/spectrum.hpp"

namespace vps {

EnergyReport energy_report(const State& s, const FluxPair& flux,
                           const PotentialSpec& pot, const CoefficientSet& coeffs) {
  const Grid& g = s.phi.grid;
  const std::size_t N = g.size();
  const double h2 = g.cell_area();
  EnergyReport r;
  r.t = s.t;

  VectorField gphi = gradient(s.phi);
  {
    CompensatedSum fsum;
    for (std::size_t k = 0; k < N; ++k) fsum.add(eval_potential(pot, s.phi.v[k]).F);
    r.e_mix = 0.5 * coeffs.c0 * inner_faces(gphi, gphi) + fsum.value() * h2;
  }
  r.e_bulk = 0.5 * inner(s.q, s.q);
  {
    CompensatedSum el, ellog;
    bool spd = true;
    for (std::size_t k = 0; k < N; ++k) {
      const double a = s.C.c11[k], b = s.C.c12[k], c = s.C.c22[k];
      el.add(a * a + 2.0 * b * b + c * c);
      const double det = a * c - b * b;
      if (a <= 0.0 || det <= 0.0)
        spd = false;
      else
        ellog.add((a + c) * (a + c) - 2.0 * std::log(det) - 4.0);
    }
    r.e_el = 0.25 * el.value() * h2;
    r.e_el_log = spd ? 0.25 * ellog.value() * h2
                     : std::numeric_limits<double>::quiet_NaN();
  }
  r.e_kin = 0.5 * inner_faces(s.u, s.u);
  r.e_tot = r.e_mix + r.e_bulk + r.e_el + r.e_kin;

  // cross terms between the mixing flux and the bulk-stress coupling
  {
    ScalarField aq(g);
    for (std::size_t k = 0; k < N; ++k)
      aq.v[k] = eval_coupling_A(coeffs.coupling, s.phi.v[k]).A * s.q.v[k];
    VectorField gaq = gradient(aq);
    VectorField diff(g);
    for (std::size_t k = 0; k < N; ++k) {
      diff.x[k] = flux.Jhat.x[k] - gaq.x[k];
      diff.y[k] = flux.Jhat.y[k] - gaq.y[k];
    }
    r.cross_vec = inner_faces(diff, diff);
    ScalarField jx(g), jy(g), gx(g), gy(g);
    to_nodes(flux.Jhat, jx, jy);
    to_nodes(gaq, gx, gy);
    CompensatedSum mixed;
    for (std::size_t k = 0; k < N; ++k)
      mixed.add(std::hypot(jx.v[k], jy.v[k]) * std::hypot(gx.v[k], gy.v[k]));
    // quadratic terms as face sums, mixed term nodal; the averaging is
    // L2-contractive, so the combination stays >= 0
    r.cross_abs = std::max(0.0, inner_faces(flux.Jhat, flux.Jhat) -
                                    2.0 * mixed.value() * h2 +
                                    inner_faces(gaq, gaq));
  }
  {
    CompensatedSum relax;
    for (std::size_t k = 0; k < N; ++k)
      relax.add(s.q.v[k] * s.q.v[k] / eval_coef(coeffs.tau, s.phi.v[k]));
    r.relax_q = relax.value() * h2;
    VectorField gq = gradient(s.q);
    r.eps1 = coeffs.eps1 * inner_faces(gq, gq);
  }
  {
    // same quadrature as the viscous operator: diagonal rate parts at nodes,
    // the shear part at corners
    const int nx = g.nx, ny = g.ny;
    const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
    ScalarField eta(g);
    for (std::size_t k = 0; k < N; ++k)
      eta.v[k] = eval_coef(coeffs.eta, s.phi.v[k]);
    CompensatedSum acc;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = g.at(i, j);
        const double d11 = (sample_ux(s.u, i, j) - sample_ux(s.u, i - 1, j)) * ihx;
        const double d22 = (sample_uy(s.u, i, j) - sample_uy(s.u, i, j - 1)) * ihy;
        acc.add(eta.v[k] * (d11 * d11 + d22 * d22));
      }
    std::vector<double> dyux, dxuy, etac;
    corner_velocity_grads(s.u, dyux, dxuy);
    corner_average(eta, etac);
    const bool per = g.bc == Bc::periodic;
    const int cx = per ? nx : nx + 1, cy = per ? ny : ny + 1;
    for (int jj = 0; jj < cy; ++jj)
      for (int ii = 0; ii < cx; ++ii) {
        const std::size_t kc = static_cast<std::size_t>(jj) * (nx + 1) + ii;
        const double d12 = 0.5 * (dyux[kc] + dxuy[kc]);
        acc.add(2.0 * etac[kc] * d12 * d12);
      }
    r.visc = acc.value() * h2;
  }
  {
    ScalarField comp(g);
    double quad = 0.0;
    for (auto* cv : {&s.C.c11, &s.C.c12, &s.C.c22}) {
      comp.v = *cv;
      VectorField gc = gradient(comp);
      const double w = (cv == &s.C.c12) ? 2.0 : 1.0;
      quad += w * inner_faces(gc, gc);
    }
    r.eps2 = 0.5 * coeffs.eps2 * quad;
  }
  {
    CompensatedSum pet, src;
    for (std::size_t k = 0; k < N; ++k) {
      const double h = eval_coef(coeffs.hel, s.phi.v[k]);
      const double tr = s.C.c11[k] + s.C.c22[k];
      const double frob2 = s.C.c11[k] * s.C.c11[k] + 2.0 * s.C.c12[k] * s.C.c12[k] +
                           s.C.c22[k] * s.C.c22[k];
      pet.add(h * tr * tr * frob2);
      src.add(h * tr * tr);
    }
    r.peterlin = 0.5 * pet.value() * h2;
    r.source = 0.5 * src.value() * h2;
  }
  return r;
}

std::vector<double> energy_inequality_residual(const std::vector<EnergyReport>& hist) {
  std::vector<double> R(hist.size(), 0.0);
  if (hist.empty()) return R;
  const double e0 = hist[0].e_tot;
  double acc = 0.0;
  for (std::size_t k = 1; k < hist.size(); ++k) {
    const EnergyReport& r = hist[k];
    const double dt = r.t - hist[k - 1].t;
    const double diss =
        r.cross_abs + r.relax_q + r.eps1 + r.visc + r.eps2 + r.peterlin;
    acc += dt * (diss - r.source);
    R[k] = r.e_tot - e0 + acc;
  }
  return R;
}

BoundReport bound_report(const State& s, const MobilitySpec& mob,
                         const EntropySpec& ent, double eps0) {
  const ScalarField& phi = s.phi;
  const double h2 = phi.grid.cell_area();
  BoundReport b;
  b.phi_min = min_value(phi);
  b.phi_max = max_value(phi);
  CompensatedSum high, low;
  std::size_t degenerate = 0;
  for (double p : phi.v) {
    if (p > 1.0) high.add((p - 1.0) * (p - 1.0));
    if (p < 0.0) low.add(p * p);
    if (std::abs(p) < eps0 || std::abs(p - 1.0) < eps0) ++degenerate;
  }
  b.overshoot_sq_high = high.value() * h2;
  b.overshoot_sq_low = low.value() * h2;
  b.entropy_total = entropy_total(phi, ent);
  b.bound_rhs_high = 2.0 * eval_mobility(mob, 1.0 - mob.delta).m * b.entropy_total;
  b.bound_rhs_low = 2.0 * eval_mobility(mob, mob.delta).m * b.entropy_total;
  b.degenerate_set_fraction =
      static_cast<double>(degenerate) / static_cast<double>(phi.size());
  return b;
}

double entropy_total(const ScalarField& phi, const EntropySpec& ent) {
  CompensatedSum acc;
  for (double p : phi.v) acc.add(eval_entropy(ent, p).G);
  return acc.value() * phi.grid.cell_area();
}

double gronwall_proxy(const State& s) {
  VectorField gphi = gradient(s.phi);
  VectorField gq = gradient(s.q);
  return inner_faces(gphi, gphi) *
         (inner(s.q, s.q) + inner_faces(gq, gq));
}

StructureMetrics structure_metrics(const ScalarField& phi) {
  StructureMetrics m;
  const double mean =
      compensated_total(phi.v) / static_cast<double>(phi.size());
  CompensatedSum var;
  for (double p : phi.v) var.add((p - mean) * (p - mean));
  m.variance = var.value() / static_cast<double>(phi.size());
  VectorField gphi = gradient(phi);
  m.interface = inner_faces(gphi, gphi);
  const double k1 = spectrum_first_moment(radial_spectrum(phi));
  m.domain_scale = (k1 > 0.0) ? 2.0 * std::numbers::pi / k1 : 0.0;
  return m;
}

}  // namespace vps
