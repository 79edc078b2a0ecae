#pragma once

#include <string>
#include <vector>

namespace vps {

// ---------------------------------------------------------------------------
// Double-well potential F = F1 + F2 with F1 convex and F2 concave.
//
// flory_huggins: F1(x) = (1/n_p) x ln x + (1/n_s)(1-x) ln(1-x), F2 = chi x(1-x).
//   The singular convex part is replaced by its quadratic continuation outside
//   [delta, 1-delta]: F1'' is clamped there and F1, F1' stay C^1, anchored so
//   that F1 and F1' are untouched at x = 1/2 (and on the whole inner interval).
// ginzburg_landau: F(x) = x^2 (1-x)^2, split F1 = x^4 - 2x^3 + 1.5 x^2,
//   F2 = -0.5 x^2. Already C^2 with polynomial growth, so it is its own
//   regularization; delta is ignored.
// ---------------------------------------------------------------------------

enum class PotentialKind { flory_huggins, ginzburg_landau };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::flory_huggins;
  double n_p = 1.0;
  double n_s = 1.0;
  double chi = 28.0 / 11.0;
  double delta = 1e-3;  // regularization width, in (0, 1/2)

  void validate() const;
};

struct PotentialEval {
  double F = 0.0;     // regularized F_delta(x)
  double dF = 0.0;    // F_delta'(x)
  double d2F1 = 0.0;  // convex part second derivative (clamped)
  double d2F2 = 0.0;  // concave part second derivative
};

PotentialEval eval_potential(const PotentialSpec& spec, double x);

// ---------------------------------------------------------------------------
// Mobility pair (m, n). regular: m = n = 1. single_degenerate: m = n =
// x^e (1-x)^e on [0,1], zero outside. double_degenerate: n = x(1-x) on [0,1],
// zero outside, and m = n^2. Evaluation is delta-regularized by clamping the
// argument to [delta, 1-delta], so m_delta has the positive floor m(delta).
// ---------------------------------------------------------------------------

enum class MobilityKind { regular, single_degenerate, double_degenerate };

struct MobilitySpec {
  MobilityKind kind = MobilityKind::double_degenerate;
  double exponent = 2.0;  // single_degenerate only, >= 1
  double delta = 1e-3;

  void validate() const;
};

struct MobilityEval {
  double m = 0.0;   // m_delta(x)
  double dm = 0.0;  // derivative of the clamped composition (0 outside)
  double n = 0.0;   // n_delta(x)
};

MobilityEval eval_mobility(const MobilitySpec& spec, double x);

// ---------------------------------------------------------------------------
// Elastic coupling A(phi). tanh forms take the argument
// slope * (cot(pi phi_star) - cot(pi y)) with y clamped to
// [clamp_eps, 1-clamp_eps]; tanh_shifted maps into [0,1], tanh_verbatim into
// [-1/2, 1/2]. The constant form exists for validation probes and tests.
// ---------------------------------------------------------------------------

enum class CouplingForm { tanh_shifted, tanh_verbatim, constant };

struct CouplingSpec {
  CouplingForm form = CouplingForm::tanh_shifted;
  double phi_star = 0.4;
  double slope = 1e3;
  double clamp_eps = 1e-6;
  double value = 1.0;  // constant form only

  void validate() const;
  bool operator==(const CouplingSpec&) const = default;
};

struct CouplingEval {
  double A = 0.0;
  double dA = 0.0;
};

CouplingEval eval_coupling_A(const CouplingSpec& spec, double x);

// ---------------------------------------------------------------------------
// Scalar coefficient families for tau(phi), h(phi), eta(phi).
// constant: a. inverse_quadratic: 1/(a y^2) with the argument clamped to
// y = clamp(x, clamp_lo, clamp_hi), which keeps the family positive and
// bounded. quadratic: a + b x^2.
// ---------------------------------------------------------------------------

enum class CoefFamily { constant, inverse_quadratic, quadratic };

struct ScalarCoef {
  CoefFamily family = CoefFamily::constant;
  double a = 1.0;
  double b = 0.0;
  double clamp_lo = 0.05;
  double clamp_hi = 1.0;

  void validate(const char* name) const;
  bool operator==(const ScalarCoef&) const = default;
};

double eval_coef(const ScalarCoef& c, double x);

struct CoefficientSet {
  ScalarCoef tau;   // relaxation time
  ScalarCoef hel;   // elastic coefficient h(phi)
  ScalarCoef eta;   // viscosity
  double c0 = 1.0;  // interface coefficient
  double eps1 = 0.1;
  double eps2 = 0.1;
  CouplingSpec coupling;

  void validate() const;
};

// Reference-experiment parameter set: tau = h = (5 phi^2)^-1 clamped to
// [0.05, 1], eta = 2 + phi^2, c0 = 1, eps1 = eps2 = 0.1, shifted tanh
// coupling.
CoefficientSet reference_coefficients();

// ---------------------------------------------------------------------------
// Entropy function G with G'' = 1/m_delta, G(1/2) = G'(1/2) = 0. Closed forms
// exist for m = 1, m = x(1-x) and m = x^2 (1-x)^2 (the double-degenerate m);
// the quadrature mode integrates G(x) = int_{1/2}^x (x-s)/m_delta(s) ds with
// composite Gauss panels split at the clamp breakpoints. Outside
// [delta, 1-delta] both modes continue quadratically, which yields the tail
// bounds G(y) >= (y-1)^2 / (2 m(1-delta)) for y > 1 and
// G(y) >= y^2 / (2 m(delta)) for y < 0.
// ---------------------------------------------------------------------------

enum class EntropyMode { closed_form, quadrature };

struct EntropySpec {
  MobilitySpec mobility;
  EntropyMode mode = EntropyMode::closed_form;
  int initial_panels = 4;
  int max_panels = 1 << 16;
  double quad_tol = 1e-13;
};

struct EntropyEval {
  double G = 0.0;
  double dG = 0.0;
};

bool entropy_closed_form_available(const MobilitySpec& mobility);
EntropyEval eval_entropy(const EntropySpec& spec, double x);
// Curvature G''(x) = 1/m_delta(x), evaluated through the mobility path.
double eval_entropy_curvature(const EntropySpec& spec, double x);

// ---------------------------------------------------------------------------
// Coefficient probing. Samples the coefficient families on [-0.5, 1.5] and
// the coupling on (0,1); in double-degenerate mode additionally checks that
// A/n and A'/n do not blow up toward the endpoints (the raw n, not the
// regularized one). Never throws; failures land in the report.
// ---------------------------------------------------------------------------

struct ValidationEntry {
  std::string name;
  double observed_min = 0.0;
  double observed_max = 0.0;
  bool pass = true;
  std::string note;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  bool pass = true;

  const ValidationEntry* find(const std::string& name) const;
};

ValidationReport validate_coefficients(const CoefficientSet& coeffs,
                                       const MobilitySpec& mobility);

}  // namespace vps
