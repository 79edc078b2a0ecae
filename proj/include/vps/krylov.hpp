#pragma once

#include <functional>
#include <string>
#include <vector>

namespace vps {

enum class KrylovMethod { cg, bicgstab };

struct KrylovOptions {
  KrylovMethod method = KrylovMethod::cg;
  double tol = 1e-11;  // relative to ||rhs||_2
  int max_iter = 2000;
};

struct KrylovResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // final relative residual
  std::vector<double> history;
  std::string note;  // breakdown reason when not converged
};

using LinearOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

// Solves apply(x) = rhs in place; x enters as the initial guess. CG requires
// a symmetric positive definite operator and reports indefiniteness instead
// of returning garbage. Convergence is certified on the true residual, not
// the recurrence one.
KrylovResult krylov_solve(const LinearOp& apply, const std::vector<double>& rhs,
                          std::vector<double>& x, const KrylovOptions& opt);

}  // namespace vps
