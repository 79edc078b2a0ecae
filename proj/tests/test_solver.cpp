#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "vps/experiments.hpp"
#include "vps/ops.hpp"
#include "vps/poisson.hpp"
#include "vps/rng.hpp"
#include "vps/stepper.hpp"

using namespace vps;

namespace {

RunManifest small_manifest(int n, double l) {
  RunManifest m;
  m.nx = m.ny = n;
  m.lx = m.ly = l;
  return m;
}

State quiescent_state(const Grid& g, double phi0) {
  State s(g);
  for (double& v : s.phi.v) v = phi0;
  const double c = 1.0 / std::sqrt(2.0);
  for (double& v : s.C.c11) v = c;
  for (double& v : s.C.c22) v = c;
  return s;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

Eigen::MatrixXd dense_from(const LinearOp& apply, int n) {
  Eigen::MatrixXd A(n, n);
  std::vector<double> e(n, 0.0), col;
  for (int k = 0; k < n; ++k) {
    e[k] = 1.0;
    apply(e, col);
    for (int r = 0; r < n; ++r) A(r, k) = col[r];
    e[k] = 0.0;
  }
  return A;
}

}  // namespace

TEST_CASE("quiescent equilibrium is preserved under both transport schemes") {
  for (Convection conv : {Convection::upwind, Convection::semi_lagrangian}) {
    RunManifest m = small_manifest(16, 4.0);
    m.convection = conv;
    const Grid g = m.grid();
    Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
               SchemeConfig::from(m));
    State s = quiescent_state(g, 0.4);
    const double c = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < 20; ++k) st.advance(s);
    for (double v : s.phi.v) CHECK(std::abs(v - 0.4) <= 1e-14);
    for (double v : s.q.v) CHECK(std::abs(v) <= 1e-14);
    for (double v : s.u.x) CHECK(std::abs(v) <= 1e-14);
    for (double v : s.u.y) CHECK(std::abs(v) <= 1e-14);
    for (double v : s.C.c11) CHECK(std::abs(v - c) <= 1e-13);
    for (double v : s.C.c12) CHECK(std::abs(v) <= 1e-14);
    for (double v : s.C.c22) CHECK(std::abs(v - c) <= 1e-13);
  }
}

TEST_CASE("mass is conserved through noisy dynamics") {
  RunManifest m = small_manifest(16, 4.0);
  m.seed = 7;
  const Grid g = m.grid();
  State s = make_initial_state(m);
  const double mass0 = integrate(s.phi);
  Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
             SchemeConfig::from(m));
  for (int k = 0; k < 50; ++k) st.advance(s);
  CHECK(std::abs(integrate(s.phi) - mass0) <= 1e-12 * g.area());
}

TEST_CASE("captured phase system matches a dense direct solve") {
  RunManifest m = small_manifest(8, 2.0);
  m.initial_amplitude = 0.05;
  m.seed = 3;
  m.ch_tol = 1e-13;
  m.spd_tol = 1e-13;
  const Grid g = m.grid();
  State s = make_initial_state(m);
  Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
             SchemeConfig::from(m));
  st.advance(s);
  st.advance(s);
  LinearProbe probe;
  st.capture("phase", &probe);
  st.advance(s);
  REQUIRE(probe.apply != nullptr);
  REQUIRE(probe.rhs.size() == 1);

  const int n = static_cast<int>(g.size());
  const Eigen::MatrixXd A = dense_from(probe.apply, n);
  Eigen::VectorXd b(n);
  for (int k = 0; k < n; ++k) b(k) = probe.rhs[0][k];
  const Eigen::VectorXd x = A.partialPivLu().solve(b);
  std::vector<double> xd(x.data(), x.data() + n);
  CHECK(max_abs_diff(xd, probe.solution[0]) <= 1e-10);
}

TEST_CASE("uniform conformation follows the scalar update exactly") {
  RunManifest m = small_manifest(12, 3.0);
  const Grid g = m.grid();
  Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
             SchemeConfig::from(m));
  State s = quiescent_state(g, 0.4);
  const double c = 0.3;
  for (double& v : s.C.c11) v = c;
  for (double& v : s.C.c22) v = c;
  const double dt = 0.01;
  const double h = eval_coef(m.coefficients().hel, 0.4);
  st.step_conformation(s, dt);
  const double expect = (c / dt + 2.0 * h * c) / (1.0 / dt + 4.0 * h * c * c);
  for (double v : s.C.c11) CHECK(v == doctest::Approx(expect).epsilon(1e-13));
  for (double v : s.C.c22) CHECK(v == doctest::Approx(expect).epsilon(1e-13));
  for (double v : s.C.c12) CHECK(std::abs(v) <= 1e-15);

  // iterating contracts toward the isotropic fixed point tr C = sqrt(2)
  double d0 = std::abs(2.0 * expect - std::sqrt(2.0));
  for (int k = 0; k < 100; ++k) st.step_conformation(s, dt);
  const double dN = std::abs(s.C.c11[0] + s.C.c22[0] - std::sqrt(2.0));
  CHECK(dN < 0.2 * d0);
}

TEST_CASE("projection leaves a discretely divergence-free velocity") {
  RunManifest m = small_manifest(16, 2.0);
  const Grid g = m.grid();
  Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
             SchemeConfig::from(m));
  State s = quiescent_state(g, 0.4);
  VectorField forcing(g);
  SplitMix64 rng(9);
  for (double& v : forcing.x) v = rng.symmetric(1.0);
  for (double& v : forcing.y) v = rng.symmetric(1.0);
  double div_norm = -1.0;
  st.step_velocity(s, 0.01, &forcing, nullptr, nullptr, &div_norm);
  CHECK(div_norm >= 0.0);
  CHECK(div_norm <= 1e-11);
  double umax = 0.0;
  for (double v : s.u.x) umax = std::max(umax, std::abs(v));
  CHECK(umax > 0.0);  // the forcing actually moved the fluid
}

TEST_CASE("step halving retries and exhaustion restores the entry state") {
  RunManifest m = small_manifest(8, 2.0);
  m.initial_amplitude = 0.05;
  m.seed = 5;
  m.spd_max_iter = 1;  // viscous/conformation solves cannot converge
  m.spd_tol = 1e-16;
  m.max_halvings = 2;
  const Grid g = m.grid();
  State s = make_initial_state(m);
  Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
             SchemeConfig::from(m));
  const State before = s;
  CHECK_THROWS_AS(st.advance(s), SolverFailure);
  CHECK(s.t == before.t);
  CHECK(max_abs_diff(s.phi.v, before.phi.v) == 0.0);
  CHECK(max_abs_diff(s.q.v, before.q.v) == 0.0);
  CHECK(max_abs_diff(s.C.c11, before.C.c11) == 0.0);
}

TEST_CASE("spectral poisson solve matches the stencil inverse") {
  for (Bc bc : {Bc::neumann, Bc::periodic}) {
    const Grid g(24, 16, 2.0, 1.0, bc);
    ScalarField rhs(g);
    SplitMix64 rng(13);
    for (double& v : rhs.v) v = rng.symmetric(1.0);
    const double mean = compensated_total(rhs.v) / static_cast<double>(g.size());
    for (double& v : rhs.v) v -= mean;
    FastPoisson fp(g);
    std::vector<double> x;
    fp.solve(rhs.v, x);
    ScalarField xf(g);
    xf.v = x;
    const ScalarField lap = laplacian(xf);
    double err = 0.0;
    CompensatedSum xsum;
    for (std::size_t k = 0; k < g.size(); ++k) {
      err = std::max(err, std::abs(-lap.v[k] - rhs.v[k]));
      xsum.add(x[k]);
    }
    CHECK(err <= 1e-12);
    CHECK(std::abs(xsum.value()) <= 1e-12 * static_cast<double>(g.size()));
  }
}
