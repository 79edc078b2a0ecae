#include "vps/krylov.hpp"

#include <cmath>

namespace vps {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void residual_into(const LinearOp& apply, const std::vector<double>& rhs,
                   const std::vector<double>& x, std::vector<double>& work,
                   std::vector<double>& r) {
  apply(x, work);
  for (std::size_t k = 0; k < rhs.size(); ++k) r[k] = rhs[k] - work[k];
}

KrylovResult solve_cg(const LinearOp& apply, const std::vector<double>& rhs,
                      std::vector<double>& x, const KrylovOptions& opt) {
  KrylovResult res;
  const std::size_t n = rhs.size();
  const double rhs_norm = norm(rhs);
  if (rhs_norm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  std::vector<double> r(n), p(n), ap(n), work(n);
  residual_into(apply, rhs, x, work, r);
  double rel = norm(r) / rhs_norm;
  res.history.push_back(rel);
  if (rel <= opt.tol) {
    res.converged = true;
    res.residual = rel;
    return res;
  }
  p = r;
  double rs = dot(r, r);
  for (int it = 1; it <= opt.max_iter; ++it) {
    apply(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      res.iterations = it;
      res.residual = rel;
      res.note = "operator not positive definite (p'Ap = " + std::to_string(pap) + ")";
      return res;
    }
    const double alpha = rs / pap;
    for (std::size_t k = 0; k < n; ++k) x[k] += alpha * p[k];
    for (std::size_t k = 0; k < n; ++k) r[k] -= alpha * ap[k];
    const double rs_new = dot(r, r);
    rel = std::sqrt(rs_new) / rhs_norm;
    res.history.push_back(rel);
    res.iterations = it;
    if (rel <= opt.tol) {
      // Certify against the true residual; the recurrence can drift.
      residual_into(apply, rhs, x, work, r);
      const double true_rel = norm(r) / rhs_norm;
      if (true_rel <= 2.0 * opt.tol) {
        res.converged = true;
        res.residual = true_rel;
        return res;
      }
      rs = dot(r, r);
      p = r;
      rel = true_rel;
      continue;
    }
    const double beta = rs_new / rs;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    rs = rs_new;
  }
  res.residual = rel;
  res.note = "max_iter exceeded";
  return res;
}

KrylovResult solve_bicgstab(const LinearOp& apply, const std::vector<double>& rhs,
                            std::vector<double>& x, const KrylovOptions& opt) {
  KrylovResult res;
  const std::size_t n = rhs.size();
  const double rhs_norm = norm(rhs);
  if (rhs_norm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), work(n);
  residual_into(apply, rhs, x, work, r);
  double rel = norm(r) / rhs_norm;
  res.history.push_back(rel);
  if (rel <= opt.tol) {
    res.converged = true;
    res.residual = rel;
    return res;
  }
  rhat = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    res.iterations = it;
    const double rho_new = dot(rhat, r);
    if (std::abs(rho_new) < 1e-300) {
      // Lanczos breakdown; restart the shadow residual.
      rhat = r;
      rho = dot(rhat, r);
      if (std::abs(rho) < 1e-300) {
        res.residual = rel;
        res.note = "bicgstab breakdown (rho = 0)";
        return res;
      }
      p = r;
      v.assign(n, 0.0);
      alpha = omega = 1.0;
      continue;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
    apply(p, v);
    const double rhat_v = dot(rhat, v);
    if (std::abs(rhat_v) < 1e-300) {
      res.residual = rel;
      res.note = "bicgstab breakdown (rhat'v = 0)";
      return res;
    }
    alpha = rho_new / rhat_v;
    for (std::size_t k = 0; k < n; ++k) s[k] = r[k] - alpha * v[k];
    double s_norm = norm(s);
    if (s_norm / rhs_norm <= opt.tol) {
      for (std::size_t k = 0; k < n; ++k) x[k] += alpha * p[k];
      residual_into(apply, rhs, x, work, r);
      rel = norm(r) / rhs_norm;
      res.history.push_back(rel);
      if (rel <= 2.0 * opt.tol) {
        res.converged = true;
        res.residual = rel;
        return res;
      }
      rhat = r;
      p = r;
      v.assign(n, 0.0);
      rho = alpha = omega = 1.0;
      continue;
    }
    apply(s, t);
    const double tt = dot(t, t);
    if (tt == 0.0) {
      res.residual = s_norm / rhs_norm;
      res.note = "bicgstab breakdown (t = 0)";
      return res;
    }
    omega = dot(t, s) / tt;
    for (std::size_t k = 0; k < n; ++k) x[k] += alpha * p[k] + omega * s[k];
    for (std::size_t k = 0; k < n; ++k) r[k] = s[k] - omega * t[k];
    rel = norm(r) / rhs_norm;
    res.history.push_back(rel);
    if (rel <= opt.tol) {
      residual_into(apply, rhs, x, work, r);
      rel = norm(r) / rhs_norm;
      if (rel <= 2.0 * opt.tol) {
        res.converged = true;
        res.residual = rel;
        return res;
      }
      rhat = r;
      p = r;
      v.assign(n, 0.0);
      rho = alpha = omega = 1.0;
      continue;
    }
    if (std::abs(omega) < 1e-300) {
      res.residual = rel;
      res.note = "bicgstab breakdown (omega = 0)";
      return res;
    }
    rho = rho_new;
  }
  res.residual = rel;
  res.note = "max_iter exceeded";
  return res;
}

}  // namespace

KrylovResult krylov_solve(const LinearOp& apply, const std::vector<double>& rhs,
                          std::vector<double>& x, const KrylovOptions& opt) {
  x.resize(rhs.size(), 0.0);
  return opt.method == KrylovMethod::cg ? solve_cg(apply, rhs, x, opt)
                                        : solve_bicgstab(apply, rhs, x, opt);
}

}  // namespace vps
