#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "vps/krylov.hpp"
#include "vps/rng.hpp"

using namespace vps;

namespace {

// Tridiagonal apply with optional skew part; SPD for skew = 0.
LinearOp tridiag(int n, double diag, double off, double skew) {
  return [n, diag, off, skew](const std::vector<double>& x, std::vector<double>& y) {
    y.resize(x.size());
    for (int k = 0; k < n; ++k) {
      double s = diag * x[k];
      if (k > 0) s += (off - skew) * x[k - 1];
      if (k < n - 1) s += (off + skew) * x[k + 1];
      y[k] = s;
    }
  };
}

std::vector<double> random_vec(int n, std::uint64_t seed) {
  std::vector<double> v(n);
  SplitMix64 rng(seed);
  for (double& w : v) w = rng.symmetric(1.0);
  return v;
}

double true_residual(const LinearOp& apply, const std::vector<double>& rhs,
                     const std::vector<double>& x) {
  std::vector<double> ax;
  apply(x, ax);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    num += (rhs[k] - ax[k]) * (rhs[k] - ax[k]);
    den += rhs[k] * rhs[k];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("cg solves an spd system and certifies the true residual") {
  const int n = 64;
  const LinearOp op = tridiag(n, 2.5, -1.0, 0.0);
  const std::vector<double> rhs = random_vec(n, 3);
  std::vector<double> x(n, 0.0);
  KrylovOptions opt;
  opt.method = KrylovMethod::cg;
  opt.tol = 1e-12;
  const KrylovResult res = krylov_solve(op, rhs, x, opt);
  CHECK(res.converged);
  CHECK(res.iterations > 0);
  CHECK(true_residual(op, rhs, x) <= 2.0 * opt.tol);
  CHECK(res.residual <= 2.0 * opt.tol);
  CHECK(!res.history.empty());
}

TEST_CASE("bicgstab solves a nonsymmetric system") {
  const int n = 80;
  const LinearOp op = tridiag(n, 3.0, -1.0, 0.4);
  const std::vector<double> rhs = random_vec(n, 9);
  std::vector<double> x(n, 0.0);
  KrylovOptions opt;
  opt.method = KrylovMethod::bicgstab;
  opt.tol = 1e-11;
  const KrylovResult res = krylov_solve(op, rhs, x, opt);
  CHECK(res.converged);
  CHECK(true_residual(op, rhs, x) <= 2.0 * opt.tol);
}

TEST_CASE("zero right-hand side returns the zero solution immediately") {
  const LinearOp op = tridiag(16, 2.0, -1.0, 0.0);
  const std::vector<double> rhs(16, 0.0);
  for (KrylovMethod m : {KrylovMethod::cg, KrylovMethod::bicgstab}) {
    std::vector<double> x(16, 0.5);  // stale guess must be discarded
    KrylovOptions opt;
    opt.method = m;
    const KrylovResult res = krylov_solve(op, rhs, x, opt);
    CHECK(res.converged);
    CHECK(res.iterations == 0);
    for (double v : x) CHECK(v == 0.0);
  }
}

TEST_CASE("warm start at the solution converges without iterating") {
  const int n = 32;
  const LinearOp op = tridiag(n, 2.0, -0.5, 0.0);
  const std::vector<double> sol = random_vec(n, 17);
  std::vector<double> rhs;
  op(sol, rhs);
  std::vector<double> x = sol;
  KrylovOptions opt;
  opt.tol = 1e-11;
  const KrylovResult res = krylov_solve(op, rhs, x, opt);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
}

TEST_CASE("cg reports indefiniteness instead of returning garbage") {
  const int n = 8;
  const LinearOp op = [n](const std::vector<double>& x, std::vector<double>& y) {
    y.resize(x.size());
    for (int k = 0; k < n; ++k) y[k] = -x[k];
  };
  const std::vector<double> rhs(n, 1.0);
  std::vector<double> x(n, 0.0);
  KrylovOptions opt;
  opt.method = KrylovMethod::cg;
  const KrylovResult res = krylov_solve(op, rhs, x, opt);
  CHECK(!res.converged);
  CHECK(res.note.find("not positive definite") != std::string::npos);
}

TEST_CASE("iteration cap is honored and reported") {
  const int n = 200;
  const LinearOp op = tridiag(n, 2.0, -1.0, 0.0);  // ill conditioned at this size
  const std::vector<double> rhs = random_vec(n, 5);
  std::vector<double> x(n, 0.0);
  KrylovOptions opt;
  opt.method = KrylovMethod::cg;
  opt.tol = 1e-14;
  opt.max_iter = 3;
  const KrylovResult res = krylov_solve(op, rhs, x, opt);
  CHECK(!res.converged);
  CHECK(res.iterations == 3);
  CHECK(res.note == "max_iter exceeded");
  CHECK(res.residual > 0.0);
}
