#pragma once

#include <vector>

#include "vps/physics.hpp"
#include "vps/stepper.hpp"

namespace vps {

// Energy components and the quadratic forms of the discrete energy balance.
// All entries use the same staggered quadratures as the scheme, so the
// mixing flux term matches the phase step identically. Every dissipation
// entry is non-negative by construction.
struct EnergyReport {
  double t = 0.0;
  double e_mix = 0.0;   // c0/2 |grad phi|^2 + F_delta(phi)
  double e_bulk = 0.0;  // 1/2 q^2
  double e_el = 0.0;    // 1/4 |C|^2 (the Lyapunov form)
  double e_kin = 0.0;   // 1/2 |u|^2
  double e_tot = 0.0;
  // trace-log elastic energy 1/4 (tr(T) - 2 log det C - 2); nan unless C is
  // positive definite at every node
  double e_el_log = 0.0;
  double cross_abs = 0.0;  // integral of (|Jhat| - |grad(A q)|)^2
  double cross_vec = 0.0;  // integral of (Jhat - grad(A q))^2
  double relax_q = 0.0;    // q^2 / tau
  double eps1 = 0.0;       // eps1 |grad q|^2
  double visc = 0.0;       // eta |D u|^2
  double eps2 = 0.0;       // eps2/2 |grad C|^2
  double peterlin = 0.0;   // 1/2 h |tr(C) C|^2
  double source = 0.0;     // 1/2 h tr(C)^2
};

// flux must be the FluxPair of the phase step that produced s.phi.
EnergyReport energy_report(const State& s, const FluxPair& flux,
                           const PotentialSpec& pot, const CoefficientSet& coeffs);

// R(t_k) = E(t_k) - E(t_0) + sum_{j<=k} (t_j - t_{j-1}) (D_j - S_j) with D
// the sum of the dissipation entries (cross_abs form) and S the source.
// R <= 0 up to discretization error; R[0] = 0.
std::vector<double> energy_inequality_residual(const std::vector<EnergyReport>& hist);

// Phase bounds, overshoot masses, and the entropy bound that confines them:
// overshoot_sq_high <= bound_rhs_high and overshoot_sq_low <= bound_rhs_low
// hold whenever the quadratic continuation of the potential is active.
struct BoundReport {
  double phi_min = 0.0;
  double phi_max = 0.0;
  double overshoot_sq_high = 0.0;  // integral over {phi > 1} of (phi - 1)^2
  double overshoot_sq_low = 0.0;   // integral over {phi < 0} of phi^2
  double entropy_total = 0.0;      // integral of G_delta(phi)
  double bound_rhs_high = 0.0;     // 2 m(1 - delta) entropy_total
  double bound_rhs_low = 0.0;      // 2 m(delta) entropy_total
  double degenerate_set_fraction = 0.0;  // |phi| < eps0 or |phi - 1| < eps0
};

BoundReport bound_report(const State& s, const MobilitySpec& mob,
                         const EntropySpec& ent, double eps0 = 1e-3);

double entropy_total(const ScalarField& phi, const EntropySpec& ent);

// |grad phi|^2 (|q|^2 + |grad q|^2), the right-hand side driving the
// entropy growth estimate.
double gronwall_proxy(const State& s);

struct StructureMetrics {
  double variance = 0.0;      // mean square of phi - mean(phi)
  double interface = 0.0;     // integral of |grad phi|^2
  double domain_scale = 0.0;  // 2 pi / (first moment of the radial spectrum)
};

// domain_scale is 0 for a spectrum without power (uniform phi).
StructureMetrics structure_metrics(const ScalarField& phi);

}  // namespace vps
