#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "vps/physics.hpp"

using namespace vps;

namespace {

PotentialSpec fh_spec(double delta = 1e-4) {
  PotentialSpec p;
  p.kind = PotentialKind::flory_huggins;
  p.n_p = 1.0;
  p.n_s = 1.0;
  p.chi = 28.0 / 11.0;
  p.delta = delta;
  return p;
}

MobilitySpec dd_spec(double delta = 1e-3) {
  MobilitySpec m;
  m.kind = MobilityKind::double_degenerate;
  m.delta = delta;
  return m;
}

}  // namespace

TEST_CASE("flory-huggins midpoint value and symmetry") {
  const PotentialSpec p = fh_spec();
  const PotentialEval e = eval_potential(p, 0.5);
  CHECK(e.F == doctest::Approx(-std::log(2.0) + 7.0 / 11.0).epsilon(1e-14));
  CHECK(e.F == doctest::Approx(-0.0567835441963089).epsilon(1e-13));
  CHECK(std::abs(e.dF) < 1e-14);
  CHECK(e.d2F1 == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(e.d2F2 == doctest::Approx(-2.0 * 28.0 / 11.0).epsilon(1e-14));
}

TEST_CASE("flory-huggins quadratic continuation outside [delta, 1-delta]") {
  const double d = 1e-4;
  const PotentialSpec p = fh_spec(d);
  // constant convex curvature outside the inner interval
  CHECK(eval_potential(p, 0.3 * d).d2F1 ==
        doctest::Approx(eval_potential(p, d).d2F1).epsilon(1e-14));
  CHECK(eval_potential(p, -0.2).d2F1 ==
        doctest::Approx(eval_potential(p, d).d2F1).epsilon(1e-14));
  CHECK(eval_potential(p, 1.2).d2F1 ==
        doctest::Approx(eval_potential(p, 1.0 - d).d2F1).epsilon(1e-14));
  // below delta dF is affine, and extrapolating its tail slope to the
  // breakpoint reproduces the interior derivative: the join is C1
  const double g0 = eval_potential(p, -0.2).dF;
  const double g1 = eval_potential(p, -0.1).dF;
  const double g2 = eval_potential(p, 0.0).dF;
  CHECK(g2 - g1 == doctest::Approx(g1 - g0).epsilon(1e-10));
  const double slope = (g2 - g1) / 0.1;
  CHECK(g2 + slope * d ==
        doctest::Approx(eval_potential(p, d).dF).epsilon(1e-9));
  // finite everywhere, including the endpoints the raw potential cannot reach
  CHECK(std::isfinite(eval_potential(p, 0.0).F));
  CHECK(std::isfinite(eval_potential(p, 1.0).F));
  CHECK(std::isfinite(eval_potential(p, -3.0).F));
}

TEST_CASE("ginzburg-landau polynomial values") {
  PotentialSpec p = fh_spec();
  p.kind = PotentialKind::ginzburg_landau;
  // F = x^4 - 2x^3 + x^2 split as convex x^4 - 2x^3 + 1.5x^2, concave -0.5x^2
  CHECK(eval_potential(p, 0.0).F == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(eval_potential(p, 1.0).F == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(eval_potential(p, 0.5).F == doctest::Approx(0.0625).epsilon(1e-14));
  const PotentialEval e = eval_potential(p, 0.3);
  CHECK(e.dF == doctest::Approx(4 * 0.027 - 6 * 0.09 + 2 * 0.3).epsilon(1e-13));
  CHECK(e.d2F1 + e.d2F2 == doctest::Approx(12 * 0.09 - 12 * 0.3 + 2).epsilon(1e-13));
}

TEST_CASE("double-degenerate mobility squares the single-degenerate base") {
  const MobilitySpec m = dd_spec();
  const MobilityEval e = eval_mobility(m, 0.5);
  CHECK(e.m == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  CHECK(e.n == doctest::Approx(0.25).epsilon(1e-15));
  for (double x : {0.1, 0.25, 0.4, 0.77, 0.999}) {
    const MobilityEval v = eval_mobility(m, x);
    CHECK(v.m == doctest::Approx(v.n * v.n).epsilon(1e-15));
  }
}

TEST_CASE("mobility clamps to the regularized range") {
  const MobilitySpec m = dd_spec(1e-3);
  CHECK(eval_mobility(m, -0.3).m == eval_mobility(m, m.delta).m);
  CHECK(eval_mobility(m, 1.7).m == eval_mobility(m, 1.0 - m.delta).m);
  CHECK(eval_mobility(m, m.delta).m > 0.0);
  MobilitySpec r;
  r.kind = MobilityKind::regular;
  CHECK(eval_mobility(r, -5.0).m == 1.0);
  CHECK(eval_mobility(r, 0.3).n == 1.0);
}

TEST_CASE("entropy closed form matches frozen values") {
  // G'' = 1/m_delta, G(1/2) = G'(1/2) = 0; interior values are
  // delta-independent. For m = x(1-x): G(x) = x ln x + (1-x) ln(1-x) + ln 2.
  MobilitySpec sd;
  sd.kind = MobilityKind::single_degenerate;
  sd.exponent = 1.0;
  sd.delta = 1e-3;
  EntropySpec es;
  es.mobility = sd;
  es.mode = EntropyMode::closed_form;
  CHECK(eval_entropy(es, 0.25).G ==
        doctest::Approx(0.1308120359411370).epsilon(1e-13));
  EntropySpec ed;
  ed.mobility = dd_spec();
  ed.mode = EntropyMode::closed_form;
  CHECK(eval_entropy(ed, 0.25).G ==
        doctest::Approx(0.5493061443340548).epsilon(1e-13));
}

TEST_CASE("entropy quadrature agrees with the closed form") {
  for (MobilityKind kind :
       {MobilityKind::regular, MobilityKind::double_degenerate}) {
    MobilitySpec m;
    m.kind = kind;
    m.delta = 1e-3;
    EntropySpec closed, quad;
    closed.mobility = quad.mobility = m;
    closed.mode = EntropyMode::closed_form;
    quad.mode = EntropyMode::quadrature;
    for (double x : {-0.1, 0.05, 0.25, 0.5, 0.61, 0.97, 1.2}) {
      const double gc = eval_entropy(closed, x).G;
      const double gq = eval_entropy(quad, x).G;
      CHECK(gq == doctest::Approx(gc).epsilon(1e-10));
    }
  }
}

TEST_CASE("entropy tail bounds hold by construction") {
  const MobilitySpec m = dd_spec(1e-3);
  EntropySpec es;
  es.mobility = m;
  const double m_high = eval_mobility(m, 1.0 - m.delta).m;
  const double m_low = eval_mobility(m, m.delta).m;
  for (double y : {1.0001, 1.01, 1.3, 2.0}) {
    CHECK(eval_entropy(es, y).G >= (y - 1.0) * (y - 1.0) / (2.0 * m_high));
  }
  for (double y : {-0.0001, -0.05, -0.4}) {
    CHECK(eval_entropy(es, y).G >= y * y / (2.0 * m_low));
  }
}

TEST_CASE("entropy derivative and curvature are consistent") {
  EntropySpec es;
  es.mobility = dd_spec();
  const double e = 1e-6;
  for (double x : {0.2, 0.5, 0.85, 1.1}) {
    const double fd = (eval_entropy(es, x + e).G - eval_entropy(es, x - e).G) / (2 * e);
    CHECK(eval_entropy(es, x).dG == doctest::Approx(fd).epsilon(1e-6));
  }
  // interior curvature is exactly 1/m
  const double x = 0.3;
  CHECK(eval_entropy_curvature(es, x) * eval_mobility(es.mobility, x).m ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("coupling forms: midpoint, range, constant") {
  CouplingSpec c;  // tanh_shifted, phi_star 0.4, slope 1e3
  CHECK(eval_coupling_A(c, 0.4).A == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eval_coupling_A(c, 0.9).A <= 1.0);
  CHECK(eval_coupling_A(c, 0.9).A >= 0.0);
  CHECK(eval_coupling_A(c, 0.05).A >= 0.0);
  // saturates away from phi_star
  CHECK(eval_coupling_A(c, 0.7).A == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(eval_coupling_A(c, 0.1).A) < 1e-8);
  CouplingSpec v = c;
  v.form = CouplingForm::tanh_verbatim;
  CHECK(eval_coupling_A(v, 0.4).A == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eval_coupling_A(v, 0.7).A == doctest::Approx(0.5).epsilon(1e-8));
  CouplingSpec k = c;
  k.form = CouplingForm::constant;
  k.value = 0.7;
  CHECK(eval_coupling_A(k, 0.123).A == 0.7);
  CHECK(eval_coupling_A(k, 0.123).dA == 0.0);
}

TEST_CASE("inverse-quadratic coefficients clamp the argument") {
  const ScalarCoef tau{CoefFamily::inverse_quadratic, 5.0, 0.0, 0.05, 1.0};
  CHECK(eval_coef(tau, 0.4) == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(eval_coef(tau, 0.01) == doctest::Approx(80.0).epsilon(1e-14));
  CHECK(eval_coef(tau, -2.0) == eval_coef(tau, 0.05));
  CHECK(eval_coef(tau, 3.0) == doctest::Approx(0.2).epsilon(1e-14));
  const ScalarCoef eta{CoefFamily::quadratic, 2.0, 1.0, 0.05, 1.0};
  CHECK(eval_coef(eta, 0.4) == doctest::Approx(2.16).epsilon(1e-14));
  const ScalarCoef c{CoefFamily::constant, 3.5, 0.0, 0.05, 1.0};
  CHECK(eval_coef(c, -100.0) == 3.5);
}

TEST_CASE("reference coefficient set passes the hard validation entries") {
  const ValidationReport r =
      validate_coefficients(reference_coefficients(), dd_spec());
  for (const ValidationEntry& e : r.entries) {
    if (e.name.find("_over_n") != std::string::npos) continue;
    CHECK_MESSAGE(e.pass, e.name, ": [", e.observed_min, ", ", e.observed_max,
                  "] ", e.note);
  }
  CHECK(r.find("tau_positive_bounded") != nullptr);
  CHECK(r.find("A_bounded") != nullptr);
}

TEST_CASE("coefficient validation flags nonpositive and unbounded inputs") {
  CoefficientSet bad = reference_coefficients();
  bad.c0 = 0.0;
  CHECK_THROWS(bad.validate());
  ScalarCoef neg{CoefFamily::constant, -1.0, 0.0, 0.05, 1.0};
  CHECK_THROWS(neg.validate("tau"));
  ScalarCoef flipped{CoefFamily::inverse_quadratic, 5.0, 0.0, 1.0, 0.05};
  CHECK_THROWS(flipped.validate("tau"));
}
