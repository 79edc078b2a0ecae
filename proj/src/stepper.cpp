#include "vps/stepper.hpp"

#include <algorithm>
#include <cmath>

#include "vps/ops.hpp"
#include "vps/poisson.hpp"

namespace vps {

SchemeConfig SchemeConfig::from(const RunManifest& m) {
  SchemeConfig c;
  c.dt = m.dt;
  c.convection = m.convection;
  c.ch = {KrylovMethod::bicgstab, m.ch_tol, m.ch_max_iter};
  c.spd = {KrylovMethod::cg, m.spd_tol, m.spd_max_iter};
  c.projection = {KrylovMethod::cg, m.projection_tol, m.spd_max_iter};
  c.max_halvings = m.max_halvings;
  c.mass_shift = m.mass_shift;
  return c;
}

namespace {

int wrap(int k, int n) { return ((k % n) + n) % n; }

// Reflect an arbitrary index into [0, n) with period 2n (cell-center mirror).
int reflect(int k, int n) {
  k = wrap(k, 2 * n);
  return (k < n) ? k : 2 * n - 1 - k;
}

// Conservative upwind transport div(u f) with face-flux upwinding; the face
// fluxes telescope, so the cell sum vanishes for any u.
void upwind_scalar(const VectorField& u, const ScalarField& f, VectorField& fluxws,
                   ScalarField& out) {
  const Grid& g = f.grid;
  const int nx = g.nx, ny = g.ny;
  const bool per = g.bc == Bc::periodic;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = g.at(i, j);
      if (!per && i == nx - 1) {
        fluxws.x[k] = 0.0;
      } else {
        const double uf = u.x[k];
        const double up = (uf >= 0.0) ? f.v[k] : f.v[g.at(per ? wrap(i + 1, nx) : i + 1, j)];
        fluxws.x[k] = uf * up;
      }
      if (!per && j == ny - 1) {
        fluxws.y[k] = 0.0;
      } else {
        const double vf = u.y[k];
        const double up = (vf >= 0.0) ? f.v[k] : f.v[g.at(i, per ? wrap(j + 1, ny) : j + 1)];
        fluxws.y[k] = vf * up;
      }
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double fxl = (i > 0) ? fluxws.x[g.at(i - 1, j)]
                                 : (per ? fluxws.x[g.at(nx - 1, j)] : 0.0);
      const double fyl = (j > 0) ? fluxws.y[g.at(i, j - 1)]
                                 : (per ? fluxws.y[g.at(i, ny - 1)] : 0.0);
      const std::size_t k = g.at(i, j);
      out.v[k] = (fluxws.x[k] - fxl) * ihx + (fluxws.y[k] - fyl) * ihy;
    }
}

// Bilinear sample of a cell-centered field at an arbitrary point; indices
// wrap (periodic) or mirror-reflect (neumann).
double sample_cc(const ScalarField& f, double x, double y) {
  const Grid& g = f.grid;
  const bool per = g.bc == Bc::periodic;
  const double sx = x / g.hx() - 0.5, sy = y / g.hy() - 0.5;
  const int i0 = static_cast<int>(std::floor(sx));
  const int j0 = static_cast<int>(std::floor(sy));
  const double ax = sx - i0, ay = sy - j0;
  auto idx = [&](int i, int n) { return per ? wrap(i, n) : reflect(i, n); };
  const int i1 = idx(i0 + 1, g.nx), i0m = idx(i0, g.nx);
  const int j1 = idx(j0 + 1, g.ny), j0m = idx(j0, g.ny);
  return (1.0 - ax) * (1.0 - ay) * f.v[g.at(i0m, j0m)] +
         ax * (1.0 - ay) * f.v[g.at(i1, j0m)] +
         (1.0 - ax) * ay * f.v[g.at(i0m, j1)] + ax * ay * f.v[g.at(i1, j1)];
}

// Semi-Lagrangian transport: (f - f(X_dep))/dt with node velocities and
// bilinear backtracking. Not conservative.
void sl_scalar(const VectorField& u, const ScalarField& f, double dt,
               ScalarField& unx, ScalarField& uny, ScalarField& out) {
  const Grid& g = f.grid;
  to_nodes(u, unx, uny);
  const double idt = 1.0 / dt;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.at(i, j);
      const double xd = g.x(i) - dt * unx.v[k];
      const double yd = g.y(j) - dt * uny.v[k];
      out.v[k] = (f.v[k] - sample_cc(f, xd, yd)) * idt;
    }
}

// Advective upwind self-transport of the staggered velocity.
void upwind_velocity(const VectorField& u, VectorField& out) {
  const Grid& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  const bool per = g.bc == Bc::periodic;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = g.at(i, j);
      if (!per && i == nx - 1) {
        out.x[k] = 0.0;
      } else {
        const double uf = u.x[k];
        const double dudx = (uf >= 0.0)
                                ? (sample_ux(u, i, j) - sample_ux(u, i - 1, j)) * ihx
                                : (sample_ux(u, i + 1, j) - sample_ux(u, i, j)) * ihx;
        const double vf = 0.25 * (sample_uy(u, i, j) + sample_uy(u, i + 1, j) +
                                  sample_uy(u, i, j - 1) + sample_uy(u, i + 1, j - 1));
        const double dudy = (vf >= 0.0)
                                ? (sample_ux(u, i, j) - sample_ux(u, i, j - 1)) * ihy
                                : (sample_ux(u, i, j + 1) - sample_ux(u, i, j)) * ihy;
        out.x[k] = uf * dudx + vf * dudy;
      }
      if (!per && j == ny - 1) {
        out.y[k] = 0.0;
      } else {
        const double vf = u.y[k];
        const double dvdy = (vf >= 0.0)
                                ? (sample_uy(u, i, j) - sample_uy(u, i, j - 1)) * ihy
                                : (sample_uy(u, i, j + 1) - sample_uy(u, i, j)) * ihy;
        const double uf = 0.25 * (sample_ux(u, i, j) + sample_ux(u, i - 1, j) +
                                  sample_ux(u, i, j + 1) + sample_ux(u, i - 1, j + 1));
        const double dvdx = (uf >= 0.0)
                                ? (sample_uy(u, i, j) - sample_uy(u, i - 1, j)) * ihx
                                : (sample_uy(u, i + 1, j) - sample_uy(u, i, j)) * ihx;
        out.y[k] = uf * dvdx + vf * dvdy;
      }
    }
}

// ---------------------------------------------------------------------------
// Implicit block operators. Each context owns its coefficient fields and
// scratch space, so a copy is a self-contained linear operator (used by the
// probe machinery); apply() allocates nothing.
// ---------------------------------------------------------------------------

struct PhaseOpCtx {
  Grid g;
  double c0 = 0.0, idt = 0.0;
  ScalarField b;    // lagged convex curvature F1''(phi^n)
  VectorField mf;   // face mobility
  ScalarField xf, lap, w, dv;
  VectorField gw, flux;

  explicit PhaseOpCtx(const Grid& g_)
      : g(g_), b(g_), mf(g_), xf(g_), lap(g_), w(g_), dv(g_), gw(g_), flux(g_) {}

  void apply(const std::vector<double>& x, std::vector<double>& out) {
    xf.v = x;
    laplacian_into(xf, lap);
    for (std::size_t k = 0; k < x.size(); ++k)
      w.v[k] = -c0 * lap.v[k] + b.v[k] * x[k];
    gradient_into(w, gw);
    scale_faces_into(mf, gw, flux);
    divergence_into(flux, dv);
    out.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] * idt - dv.v[k];
  }
};

struct BulkOpCtx {
  Grid g;
  double eps1 = 0.0;
  ScalarField a;     // coupling A(phi^{n+1})
  ScalarField diag;  // 1/dt + 1/tau(phi^{n+1})
  ScalarField xf, ax, lap1, lap2;

  explicit BulkOpCtx(const Grid& g_)
      : g(g_), a(g_), diag(g_), xf(g_), ax(g_), lap1(g_), lap2(g_) {}

  void apply(const std::vector<double>& x, std::vector<double>& out) {
    xf.v = x;
    for (std::size_t k = 0; k < x.size(); ++k) ax.v[k] = a.v[k] * x[k];
    laplacian_into(ax, lap1);
    laplacian_into(xf, lap2);
    out.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
      out[k] = diag.v[k] * x[k] - a.v[k] * lap1.v[k] - eps1 * lap2.v[k];
  }
};

struct PoissonOpCtx {
  Grid g;
  ScalarField xf, lap;

  explicit PoissonOpCtx(const Grid& g_) : g(g_), xf(g_), lap(g_) {}

  void apply(const std::vector<double>& x, std::vector<double>& out) {
    xf.v = x;
    laplacian_into(xf, lap);
    out.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = -lap.v[k];
  }
};

struct ConfOpCtx {
  Grid g;
  double eps2 = 0.0;
  std::vector<double> diag;  // 1/dt + h(phi) tr(C^n)^2
  ScalarField xf, lap;

  explicit ConfOpCtx(const Grid& g_) : g(g_), diag(g_.size(), 0.0), xf(g_), lap(g_) {}

  void apply(const std::vector<double>& x, std::vector<double>& out) {
    xf.v = x;
    laplacian_into(xf, lap);
    out.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
      out[k] = diag[k] * x[k] - eps2 * lap.v[k];
  }
};

// Unknown layout [wx; wy]. out = w/dt - div(eta D w) with D11, D22 at nodes,
// D12 at corners; under neumann the wall-face rows are identities and reads
// of wall-normal entries are hard zeros, which keeps the operator symmetric
// positive definite on the constrained subspace.
struct ViscousOpCtx {
  Grid g;
  double idt = 0.0;
  ScalarField eta;
  std::vector<double> etac;  // corner lattice
  std::vector<double> s11, s22, s12c;

  explicit ViscousOpCtx(const Grid& g_)
      : g(g_), eta(g_), etac((g_.nx + 1) * (g_.ny + 1), 0.0), s11(g_.size(), 0.0),
        s22(g_.size(), 0.0), s12c((g_.nx + 1) * (g_.ny + 1), 0.0) {}

  void apply(const std::vector<double>& x, std::vector<double>& out) {
    const int nx = g.nx, ny = g.ny;
    const std::size_t N = g.size();
    const bool per = g.bc == Bc::periodic;
    const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
    auto X = [&](int i, int j) -> double {
      if (per) return x[g.at(wrap(i, nx), wrap(j, ny))];
      if (i < 0 || i >= nx - 1) return 0.0;
      if (j < 0) return -x[g.at(i, 0)];
      if (j >= ny) return -x[g.at(i, ny - 1)];
      return x[g.at(i, j)];
    };
    auto Y = [&](int i, int j) -> double {
      if (per) return x[N + g.at(wrap(i, nx), wrap(j, ny))];
      if (j < 0 || j >= ny - 1) return 0.0;
      if (i < 0) return -x[N + g.at(0, j)];
      if (i >= nx) return -x[N + g.at(nx - 1, j)];
      return x[N + g.at(i, j)];
    };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = g.at(i, j);
        s11[k] = eta.v[k] * (X(i, j) - X(i - 1, j)) * ihx;
        s22[k] = eta.v[k] * (Y(i, j) - Y(i, j - 1)) * ihy;
      }
    for (int jj = 0; jj <= ny; ++jj)
      for (int ii = 0; ii <= nx; ++ii) {
        const std::size_t kc = static_cast<std::size_t>(jj) * (nx + 1) + ii;
        const double d12 = 0.5 * ((X(ii - 1, jj) - X(ii - 1, jj - 1)) * ihy +
                                  (Y(ii, jj - 1) - Y(ii - 1, jj - 1)) * ihx);
        s12c[kc] = etac[kc] * d12;
      }
    out.resize(2 * N);
    auto c = [&](int ii, int jj) {
      return s12c[static_cast<std::size_t>(jj) * (nx + 1) + ii];
    };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = g.at(i, j);
        if (!per && i == nx - 1) {
          out[k] = x[k] * idt;
        } else {
          const std::size_t kr = g.at(per ? wrap(i + 1, nx) : i + 1, j);
          out[k] = x[k] * idt - ((s11[kr] - s11[k]) * ihx +
                                 (c(i + 1, j + 1) - c(i + 1, j)) * ihy);
        }
        if (!per && j == ny - 1) {
          out[N + k] = x[N + k] * idt;
        } else {
          const std::size_t kt = g.at(i, per ? wrap(j + 1, ny) : j + 1);
          out[N + k] = x[N + k] * idt - ((s22[kt] - s22[k]) * ihy +
                                         (c(i + 1, j + 1) - c(i, j + 1)) * ihx);
        }
      }
  }
};

}  // namespace

struct Stepper::Work {
  // phase
  PhaseOpCtx phase;
  ScalarField rnode, mnode, nnode, anode, aq, conv, div1, div2, lap;
  VectorField nf, sqmf, gtmp, ftmp;
  // bulk
  BulkOpCtx bulk;
  ScalarField divj;
  // velocity
  ViscousOpCtx visc;
  PoissonOpCtx poisson;
  FastPoisson fftp;
  VectorField convu, kort, lapf;
  SymTensorField tens;
  ScalarField divu;
  // conformation
  ConfOpCtx conf;
  ScalarField trn, hphi, l11, l22, l12, l21;
  std::vector<double> dyuxc, dxuyc;
  // semi-Lagrangian node velocities
  ScalarField unx, uny;
  // krylov vectors
  std::vector<double> xv, rhsv, xv2, rhsv2;

  explicit Work(const Grid& g)
      : phase(g), rnode(g), mnode(g), nnode(g), anode(g), aq(g), conv(g), div1(g),
        div2(g), lap(g), nf(g), sqmf(g), gtmp(g), ftmp(g), bulk(g), divj(g),
        visc(g), poisson(g), fftp(g), convu(g), kort(g), lapf(g), tens(g),
        divu(g), conf(g), trn(g), hphi(g), l11(g), l22(g), l12(g), l21(g),
        unx(g), uny(g) {}
};

Stepper::Stepper(const Grid& g, const PotentialSpec& pot, const MobilitySpec& mob,
                 const CoefficientSet& coeffs, const SchemeConfig& cfg)
    : grid_(g), pot_(pot), mob_(mob), coeffs_(coeffs), cfg_(cfg),
      flux_{VectorField(g), VectorField(g)}, coupling_flux_(g), psi_(g),
      work_(std::make_unique<Work>(g)) {
  pot_.validate();
  mob_.validate();
  coeffs_.validate();
}

Stepper::~Stepper() = default;

void Stepper::capture(const std::string& block, LinearProbe* probe) {
  probe_block_ = block;
  probe_ = probe;
  if (probe_) {
    probe_->rhs.clear();
    probe_->solution.clear();
    probe_->apply = nullptr;
  }
}

void Stepper::convection_scalar(const VectorField& u, const ScalarField& f,
                                double dt, ScalarField& out) const {
  Work& wk = *work_;
  if (cfg_.convection == Convection::upwind)
    upwind_scalar(u, f, wk.ftmp, out);
  else
    sl_scalar(u, f, dt, wk.unx, wk.uny, out);
}

KrylovResult Stepper::solve_block(const std::string& name, const LinearOp& apply,
                                  const std::vector<double>& rhs,
                                  std::vector<double>& x, const KrylovOptions& opt) {
  KrylovResult res = krylov_solve(apply, rhs, x, opt);
  if (!res.converged)
    throw SolverFailure(name + " solve failed after " +
                        std::to_string(res.iterations) + " iterations (residual " +
                        std::to_string(res.residual) +
                        (res.note.empty() ? ")" : "): " + res.note));
  return res;
}

FluxPair Stepper::step_phase(State& s, double dt, const ScalarField* forcing,
                             BlockStats* stats, double* shift) {
  Work& wk = *work_;
  const Grid& g = grid_;
  const std::size_t N = g.size();
  const double idt = 1.0 / dt;

  PhaseOpCtx& ctx = wk.phase;
  ctx.c0 = coeffs_.c0;
  ctx.idt = idt;
  for (std::size_t k = 0; k < N; ++k) {
    const double p = s.phi.v[k];
    const PotentialEval pe = eval_potential(pot_, p);
    ctx.b.v[k] = pe.d2F1;
    // remainder of mu~ that does not multiply phi^{n+1}
    wk.rnode.v[k] = pe.dF - pe.d2F1 * p;
    const MobilityEval me = eval_mobility(mob_, p);
    wk.mnode.v[k] = me.m;
    wk.nnode.v[k] = me.n;
    wk.anode.v[k] = eval_coupling_A(coeffs_.coupling, p).A;
    wk.aq.v[k] = wk.anode.v[k] * s.q.v[k];
  }
  face_average_into(wk.mnode, ctx.mf);
  face_average_into(wk.nnode, wk.nf);
  for (std::size_t k = 0; k < N; ++k) {
    wk.sqmf.x[k] = std::sqrt(ctx.mf.x[k]);
    wk.sqmf.y[k] = std::sqrt(ctx.mf.y[k]);
  }

  convection_scalar(s.u, s.phi, dt, wk.conv);
  gradient_into(wk.rnode, wk.gtmp);
  scale_faces_into(ctx.mf, wk.gtmp, wk.ftmp);
  divergence_into(wk.ftmp, wk.div1);
  gradient_into(wk.aq, wk.gtmp);
  scale_faces_into(wk.nf, wk.gtmp, wk.ftmp);
  divergence_into(wk.ftmp, wk.div2);

  wk.rhsv.resize(N);
  for (std::size_t k = 0; k < N; ++k)
    wk.rhsv[k] = s.phi.v[k] * idt - wk.conv.v[k] + wk.div1.v[k] - wk.div2.v[k] +
                 (forcing ? forcing->v[k] : 0.0);

  const double mass_before = compensated_total(s.phi.v);
  wk.xv = s.phi.v;
  LinearOp apply = [&ctx](const std::vector<double>& x, std::vector<double>& out) {
    ctx.apply(x, out);
  };
  KrylovResult res = solve_block("phase", apply, wk.rhsv, wk.xv, cfg_.ch);
  if (probe_ && probe_block_ == "phase") {
    auto owned = std::make_shared<PhaseOpCtx>(ctx);
    probe_->apply = [owned](const std::vector<double>& x, std::vector<double>& out) {
      owned->apply(x, out);
    };
    probe_->rhs.push_back(wk.rhsv);
    probe_->solution.push_back(wk.xv);
    probe_ = nullptr;
  }

  // The exact solution conserves the cell sum when transport is conservative
  // (fluxes telescope); remove the Krylov-residual drift so it cannot
  // accumulate over long runs.
  double sh = 0.0;
  if (cfg_.mass_shift && cfg_.convection == Convection::upwind && !forcing) {
    sh = (mass_before - compensated_total(wk.xv)) / static_cast<double>(N);
    for (std::size_t k = 0; k < N; ++k) wk.xv[k] += sh;
  }
  if (shift) *shift = sh;

  s.phi.v = wk.xv;
  laplacian_into(s.phi, wk.lap);
  for (std::size_t k = 0; k < N; ++k)
    s.mu.v[k] = -coeffs_.c0 * wk.lap.v[k] + ctx.b.v[k] * s.phi.v[k] + wk.rnode.v[k];

  gradient_into(s.mu, wk.gtmp);
  scale_faces_into(ctx.mf, wk.gtmp, flux_.J);
  scale_faces_into(wk.sqmf, wk.gtmp, flux_.Jhat);
  scale_faces_into(wk.nf, wk.gtmp, coupling_flux_);

  if (stats) *stats = {res.iterations, res.residual};
  return flux_;
}

void Stepper::step_bulk(State& s, double dt, const ScalarField* forcing,
                        BlockStats* stats) {
  Work& wk = *work_;
  const Grid& g = grid_;
  const std::size_t N = g.size();
  const double idt = 1.0 / dt;

  BulkOpCtx& ctx = wk.bulk;
  ctx.eps1 = coeffs_.eps1;
  for (std::size_t k = 0; k < N; ++k) {
    const double p = s.phi.v[k];
    ctx.a.v[k] = eval_coupling_A(coeffs_.coupling, p).A;
    ctx.diag.v[k] = idt + 1.0 / eval_coef(coeffs_.tau, p);
  }

  convection_scalar(s.u, s.q, dt, wk.conv);
  divergence_into(coupling_flux_, wk.divj);

  wk.rhsv.resize(N);
  for (std::size_t k = 0; k < N; ++k)
    wk.rhsv[k] = s.q.v[k] * idt - wk.conv.v[k] - ctx.a.v[k] * wk.divj.v[k] +
                 (forcing ? forcing->v[k] : 0.0);

  wk.xv = s.q.v;
  LinearOp apply = [&ctx](const std::vector<double>& x, std::vector<double>& out) {
    ctx.apply(x, out);
  };
  KrylovResult res = solve_block("bulk", apply, wk.rhsv, wk.xv, cfg_.spd);
  if (probe_ && probe_block_ == "bulk") {
    auto owned = std::make_shared<BulkOpCtx>(ctx);
    probe_->apply = [owned](const std::vector<double>& x, std::vector<double>& out) {
      owned->apply(x, out);
    };
    probe_->rhs.push_back(wk.rhsv);
    probe_->solution.push_back(wk.xv);
    probe_ = nullptr;
  }
  s.q.v = wk.xv;
  if (stats) *stats = {res.iterations, res.residual};
}

void Stepper::step_velocity(State& s, double dt, const VectorField* forcing,
                            BlockStats* viscous, BlockStats* poisson,
                            double* div_norm) {
  Work& wk = *work_;
  const Grid& g = grid_;
  const std::size_t N = g.size();
  const bool per = g.bc == Bc::periodic;
  const double idt = 1.0 / dt;

  upwind_velocity(s.u, wk.convu);

  // elastic force div T, T = tr(C) C - I
  for (std::size_t k = 0; k < N; ++k) {
    const double tr = s.C.c11[k] + s.C.c22[k];
    wk.tens.c11[k] = tr * s.C.c11[k] - 1.0;
    wk.tens.c12[k] = tr * s.C.c12[k];
    wk.tens.c22[k] = tr * s.C.c22[k] - 1.0;
  }
  const VectorField ftens = tensor_divergence(wk.tens);

  // Korteweg force -c0 (lap phi) grad phi; the F'(phi) grad phi part of
  // mu grad phi is a pure gradient and lands in the pressure.
  laplacian_into(s.phi, wk.lap);
  face_average_into(wk.lap, wk.lapf);
  gradient_into(s.phi, wk.gtmp);
  for (std::size_t k = 0; k < N; ++k) {
    wk.kort.x[k] = -coeffs_.c0 * wk.lapf.x[k] * wk.gtmp.x[k];
    wk.kort.y[k] = -coeffs_.c0 * wk.lapf.y[k] * wk.gtmp.y[k];
  }

  ViscousOpCtx& ctx = wk.visc;
  ctx.idt = idt;
  for (std::size_t k = 0; k < N; ++k)
    ctx.eta.v[k] = eval_coef(coeffs_.eta, s.phi.v[k]);
  corner_average(ctx.eta, ctx.etac);

  wk.rhsv2.assign(2 * N, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.at(i, j);
      if (per || i < g.nx - 1)
        wk.rhsv2[k] = s.u.x[k] * idt - wk.convu.x[k] + ftens.x[k] + wk.kort.x[k] +
                      (forcing ? forcing->x[k] : 0.0);
      if (per || j < g.ny - 1)
        wk.rhsv2[N + k] = s.u.y[k] * idt - wk.convu.y[k] + ftens.y[k] +
                          wk.kort.y[k] + (forcing ? forcing->y[k] : 0.0);
    }

  wk.xv2.resize(2 * N);
  std::copy(s.u.x.begin(), s.u.x.end(), wk.xv2.begin());
  std::copy(s.u.y.begin(), s.u.y.end(), wk.xv2.begin() + N);
  LinearOp apply = [&ctx](const std::vector<double>& x, std::vector<double>& out) {
    ctx.apply(x, out);
  };
  KrylovResult vres = solve_block("viscous", apply, wk.rhsv2, wk.xv2, cfg_.spd);
  if (probe_ && probe_block_ == "viscous") {
    auto owned = std::make_shared<ViscousOpCtx>(ctx);
    probe_->apply = [owned](const std::vector<double>& x, std::vector<double>& out) {
      owned->apply(x, out);
    };
    probe_->rhs.push_back(wk.rhsv2);
    probe_->solution.push_back(wk.xv2);
    probe_ = nullptr;
  }
  std::copy(wk.xv2.begin(), wk.xv2.begin() + N, s.u.x.begin());
  std::copy(wk.xv2.begin() + N, wk.xv2.end(), s.u.y.begin());
  apply_noflux_walls(s.u);

  // projection: -lap psi = -div u*, then subtract grad psi
  divergence_into(s.u, wk.divu);
  const double dmean = compensated_total(wk.divu.v) / static_cast<double>(N);
  wk.rhsv.resize(N);
  for (std::size_t k = 0; k < N; ++k) wk.rhsv[k] = -(wk.divu.v[k] - dmean);
  PoissonOpCtx& pctx = wk.poisson;
  wk.fftp.solve(wk.rhsv, wk.xv);
  // Transform solve is direct; certify it on the true residual like the
  // iterative blocks, with cfg.projection.tol as the acceptance threshold.
  KrylovResult pres;
  pres.iterations = 0;
  pctx.apply(wk.xv, wk.rhsv2);
  {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      const double r = wk.rhsv[k] - wk.rhsv2[k];
      num += r * r;
      den += wk.rhsv[k] * wk.rhsv[k];
    }
    pres.residual = (den > 0.0) ? std::sqrt(num / den) : 0.0;
    pres.converged = pres.residual <= cfg_.projection.tol;
  }
  if (!pres.converged)
    throw SolverFailure("poisson transform residual " +
                        std::to_string(pres.residual) + " above tolerance");
  if (probe_ && probe_block_ == "poisson") {
    auto owned = std::make_shared<PoissonOpCtx>(pctx);
    probe_->apply = [owned](const std::vector<double>& x, std::vector<double>& out) {
      owned->apply(x, out);
    };
    probe_->rhs.push_back(wk.rhsv);
    probe_->solution.push_back(wk.xv);
    probe_ = nullptr;
  }
  const double pmean = compensated_total(wk.xv) / static_cast<double>(N);
  for (std::size_t k = 0; k < N; ++k) wk.xv[k] -= pmean;
  psi_.v = wk.xv;

  gradient_into(psi_, wk.gtmp);
  for (std::size_t k = 0; k < N; ++k) {
    s.u.x[k] -= wk.gtmp.x[k];
    s.u.y[k] -= wk.gtmp.y[k];
    s.p.v[k] = psi_.v[k] * idt;
  }
  apply_noflux_walls(s.u);

  if (viscous) *viscous = {vres.iterations, vres.residual};
  if (poisson) *poisson = {pres.iterations, pres.residual};
  if (div_norm) {
    divergence_into(s.u, wk.divu);
    double dmax = 0.0;
    for (double d : wk.divu.v) dmax = std::max(dmax, std::abs(d));
    *div_norm = dmax;
  }
}

void Stepper::step_conformation(State& s, double dt, const SymTensorField* forcing,
                                BlockStats* stats) {
  Work& wk = *work_;
  const Grid& g = grid_;
  const std::size_t N = g.size();
  const int nx = g.nx, ny = g.ny;
  const double idt = 1.0 / dt;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();

  // velocity gradient at nodes: diagonal parts compact, off-diagonal parts
  // averaged from the four surrounding corners
  corner_velocity_grads(s.u, wk.dyuxc, wk.dxuyc);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = g.at(i, j);
      wk.l11.v[k] = (sample_ux(s.u, i, j) - sample_ux(s.u, i - 1, j)) * ihx;
      wk.l22.v[k] = (sample_uy(s.u, i, j) - sample_uy(s.u, i, j - 1)) * ihy;
      const std::size_t c00 = static_cast<std::size_t>(j) * (nx + 1) + i;
      const std::size_t c10 = c00 + 1;
      const std::size_t c01 = c00 + (nx + 1);
      const std::size_t c11 = c01 + 1;
      wk.l12.v[k] = 0.25 * (wk.dyuxc[c00] + wk.dyuxc[c10] + wk.dyuxc[c01] + wk.dyuxc[c11]);
      wk.l21.v[k] = 0.25 * (wk.dxuyc[c00] + wk.dxuyc[c10] + wk.dxuyc[c01] + wk.dxuyc[c11]);
    }

  ConfOpCtx& ctx = wk.conf;
  ctx.eps2 = coeffs_.eps2;
  for (std::size_t k = 0; k < N; ++k) {
    wk.trn.v[k] = s.C.c11[k] + s.C.c22[k];
    wk.hphi.v[k] = eval_coef(coeffs_.hel, s.phi.v[k]);
    ctx.diag[k] = idt + wk.hphi.v[k] * wk.trn.v[k] * wk.trn.v[k];
  }

  LinearOp apply = [&ctx](const std::vector<double>& x, std::vector<double>& out) {
    ctx.apply(x, out);
  };
  const bool probing = probe_ && probe_block_ == "conformation";
  if (probing) {
    auto owned = std::make_shared<ConfOpCtx>(ctx);
    probe_->apply = [owned](const std::vector<double>& x, std::vector<double>& out) {
      owned->apply(x, out);
    };
  }

  BlockStats acc;
  ScalarField comp(g);
  auto solve_component = [&](const std::vector<double>& cn,
                             const std::vector<double>* fc, int which,
                             std::vector<double>& outv) {
    comp.v = cn;
    convection_scalar(s.u, comp, dt, wk.conv);
    wk.rhsv.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
      double stretch, relax_src;
      if (which == 0) {
        stretch = 2.0 * (wk.l11.v[k] * s.C.c11[k] + wk.l12.v[k] * s.C.c12[k]);
        relax_src = wk.hphi.v[k] * wk.trn.v[k];
      } else if (which == 1) {
        stretch = (wk.l11.v[k] + wk.l22.v[k]) * s.C.c12[k] +
                  wk.l12.v[k] * s.C.c22[k] + wk.l21.v[k] * s.C.c11[k];
        relax_src = 0.0;
      } else {
        stretch = 2.0 * (wk.l21.v[k] * s.C.c12[k] + wk.l22.v[k] * s.C.c22[k]);
        relax_src = wk.hphi.v[k] * wk.trn.v[k];
      }
      wk.rhsv[k] = cn[k] * idt - wk.conv.v[k] + stretch + relax_src +
                   (fc ? (*fc)[k] : 0.0);
    }
    wk.xv = cn;
    KrylovResult res = solve_block("conformation", apply, wk.rhsv, wk.xv, cfg_.spd);
    if (probing) {
      probe_->rhs.push_back(wk.rhsv);
      probe_->solution.push_back(wk.xv);
    }
    acc.iterations += res.iterations;
    acc.residual = std::max(acc.residual, res.residual);
    outv = wk.xv;
  };

  std::vector<double> n11, n12, n22;
  solve_component(s.C.c11, forcing ? &forcing->c11 : nullptr, 0, n11);
  solve_component(s.C.c12, forcing ? &forcing->c12 : nullptr, 1, n12);
  solve_component(s.C.c22, forcing ? &forcing->c22 : nullptr, 2, n22);
  s.C.c11 = std::move(n11);
  s.C.c12 = std::move(n12);
  s.C.c22 = std::move(n22);
  if (probing) probe_ = nullptr;
  if (stats) *stats = acc;
}

StepReport Stepper::advance(State& s) {
  const State entry = s;
  double dt = cfg_.dt;
  for (int attempt = 0;; ++attempt) {
    try {
      StepReport rep;
      rep.retries = attempt;
      double umax = 0.0;
      for (std::size_t k = 0; k < grid_.size(); ++k)
        umax = std::max({umax, std::abs(entry.u.x[k]), std::abs(entry.u.y[k])});
      rep.cfl = umax * dt / std::min(grid_.hx(), grid_.hy());
      step_phase(s, dt, nullptr, &rep.phase, &rep.mass_shift);
      step_bulk(s, dt, nullptr, &rep.bulk);
      step_velocity(s, dt, nullptr, &rep.viscous, &rep.poisson, &rep.div_norm);
      step_conformation(s, dt, nullptr, &rep.conformation);
      s.t = entry.t + dt;
      rep.t = s.t;
      rep.dt = dt;
      return rep;
    } catch (const SolverFailure&) {
      s = entry;
      if (attempt >= cfg_.max_halvings) throw;
      dt *= 0.5;
    }
  }
}

}  // namespace vps
