#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vps/field.hpp"
#include "vps/krylov.hpp"
#include "vps/manifest.hpp"
#include "vps/physics.hpp"

namespace vps {

struct State {
  ScalarField phi;
  ScalarField q;
  ScalarField mu;  // chemical potential of the last phase step
  ScalarField p;   // pressure of the last velocity step
  VectorField u;
  SymTensorField C;
  double t = 0.0;

  State() = default;
  explicit State(const Grid& g) : phi(g), q(g), mu(g), p(g), u(g), C(g) {}
};

struct SchemeConfig {
  double dt = 0.01;
  Convection convection = Convection::upwind;
  KrylovOptions ch;   // nonsymmetric phase block
  KrylovOptions spd;  // bulk stress, viscous, conformation blocks
  KrylovOptions projection;
  int max_halvings = 5;
  bool mass_shift = true;  // remove the solver-residual mean drift in phi

  static SchemeConfig from(const RunManifest& m);
};

// Face fluxes of the phase step: J = m_f grad(mu), Jhat = sqrt(m_f) grad(mu),
// so that sum_faces Jhat^2 h^2 is exactly the mixing dissipation of the
// discrete energy identity.
struct FluxPair {
  VectorField J;
  VectorField Jhat;
};

struct BlockStats {
  int iterations = 0;
  double residual = 0.0;
};

struct StepReport {
  double t = 0.0;       // time after the step
  double dt = 0.0;      // actually used step size
  int retries = 0;      // halvings spent in this call
  double cfl = 0.0;     // |u|_inf dt / min(hx, hy), from the pre-step velocity
  BlockStats phase, bulk, viscous, poisson, conformation;
  double div_norm = 0.0;    // |div u|_inf after projection
  double mass_shift = 0.0;  // mean correction applied to phi
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Copy of one implicit block's linear system, for structural solver tests.
// `apply` owns copies of its coefficient fields and stays valid after the
// step. Blocks with several solves against one operator (conformation) list
// each rhs/solution pair.
struct LinearProbe {
  LinearOp apply;
  std::vector<std::vector<double>> rhs;
  std::vector<std::vector<double>> solution;
};

// Semi-implicit splitting for the coupled phase / bulk-stress / velocity /
// conformation system. Block order per cycle: phi, q, u, C. The convex part
// of the potential enters through its lagged-curvature linearization, the
// concave part explicitly; mobilities, coupling and transport velocities are
// lagged one block or one step as noted in the implementation. All linear
// solves are matrix-free Krylov iterations on the staggered operators.
class Stepper {
 public:
  Stepper(const Grid& g, const PotentialSpec& pot, const MobilitySpec& mob,
          const CoefficientSet& coeffs, const SchemeConfig& cfg);
  ~Stepper();
  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  // One full cycle at cfg.dt. On a linear-solve failure the cycle restarts
  // from the entry state with halved dt, up to cfg.max_halvings times;
  // exhaustion throws SolverFailure.
  StepReport advance(State& s);

  // Individual blocks at an explicit dt. The forcing hooks add manufactured
  // sources; the phase block skips the mass shift when forced.
  FluxPair step_phase(State& s, double dt, const ScalarField* forcing = nullptr,
                      BlockStats* stats = nullptr, double* shift = nullptr);
  void step_bulk(State& s, double dt, const ScalarField* forcing = nullptr,
                 BlockStats* stats = nullptr);
  void step_velocity(State& s, double dt, const VectorField* forcing = nullptr,
                     BlockStats* viscous = nullptr, BlockStats* poisson = nullptr,
                     double* div_norm = nullptr);
  void step_conformation(State& s, double dt, const SymTensorField* forcing = nullptr,
                         BlockStats* stats = nullptr);

  // Arms a one-shot capture: the next solve of the named block ("phase",
  // "bulk", "viscous", "poisson", "conformation") copies its linear system
  // into *probe.
  void capture(const std::string& block, LinearProbe* probe);

  const SchemeConfig& config() const { return cfg_; }
  const Grid& grid() const { return grid_; }

  // Fluxes of the most recent phase step. coupling_flux = n_f grad(mu) is
  // the face flux whose divergence forces the bulk-stress block.
  const FluxPair& last_flux() const { return flux_; }
  const VectorField& last_coupling_flux() const { return coupling_flux_; }

 private:
  struct Work;

  void convection_scalar(const VectorField& u, const ScalarField& f, double dt,
                         ScalarField& out) const;
  KrylovResult solve_block(const std::string& name, const LinearOp& apply,
                           const std::vector<double>& rhs, std::vector<double>& x,
                           const KrylovOptions& opt);

  Grid grid_;
  PotentialSpec pot_;
  MobilitySpec mob_;
  CoefficientSet coeffs_;
  SchemeConfig cfg_;

  FluxPair flux_;
  VectorField coupling_flux_;
  ScalarField psi_;  // projection potential, warm start across steps

  std::string probe_block_;
  LinearProbe* probe_ = nullptr;

  std::unique_ptr<Work> work_;
};

}  // namespace vps
