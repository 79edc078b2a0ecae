// Acceptance suite: one PASS/FAIL line per criterion, exit 0 only if all
// criteria hold. Heavy runs are shared across criteria where possible.
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vps/diagnostics.hpp"
#include "vps/experiments.hpp"
#include "vps/ops.hpp"
#include "vps/rng.hpp"
#include "vps/stepper.hpp"

using namespace vps;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

constexpr const char* kDiagHeader =
    "t,e_mix,e_bulk,e_el,e_kin,e_tot,e_el_log,cross_abs,cross_vec,relax_q,"
    "eps1,visc,eps2,peterlin,source,residual,mass,phi_min,phi_max,"
    "overshoot_high,overshoot_low,entropy,gronwall,variance,interface,"
    "domain_scale";

enum DiagCol : int {
  cT = 0,
  cEMix,
  cEBulk,
  cEEl,
  cEKin,
  cETot,
  cEElLog,
  cCrossAbs,
  cCrossVec,
  cRelaxQ,
  cEps1,
  cVisc,
  cEps2,
  cPeterlin,
  cSource,
  cResidual,
  cMass,
  cPhiMin,
  cPhiMax,
  cOverHigh,
  cOverLow,
  cEntropy,
  cGronwall,
  cVariance,
  cInterface,
  cDomainScale,
  kDiagCols
};

struct Line {
  int id;
  bool pass;
  std::string text;
};

std::vector<Line> results;

void report(int id, bool pass, const std::string& detail) {
  results.push_back({id, pass, detail});
  std::fprintf(stderr, "[acceptance] criterion %d %s\n", id,
               pass ? "pass" : "FAIL");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

// Reads a CSV of doubles with the given header; returns rows.
std::vector<std::vector<double>> read_csv(const fs::path& path,
                                          const std::string& header) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != header)
    throw std::runtime_error("header mismatch in " + path.string());
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      row.push_back(std::strtod(p, &end));
      if (end == p) throw std::runtime_error("bad number in " + path.string());
      p = end;
      if (*p == ',') {
        ++p;
        continue;
      }
      break;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Eigen::MatrixXd dense_from(const LinearOp& apply, int n) {
  Eigen::MatrixXd A(n, n);
  std::vector<double> e(n, 0.0), col(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply(e, col);
    e[j] = 0.0;
    for (int i = 0; i < n; ++i) A(i, j) = col[i];
  }
  return A;
}

double max_abs_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double m = 0.0;
  for (int k = 0; k < b.size(); ++k)
    m = std::max(m, std::abs(a[static_cast<std::size_t>(k)] - b(k)));
  return m;
}

// --------------------------------------------------------------------------
// Flagship-dependent criteria: mass conservation (1), energy inequality on
// the full system (2a), phase confinement (3a), spinodal signature (8),
// reproducibility (9).
// --------------------------------------------------------------------------

void flagship_criteria() {
  const RunManifest m;  // the reference experiment
  const fs::path dir_a = fresh_dir("vps_acc_flagship_a");

  const auto t0 = clk::now();
  const int rc_a = cli_run(m, dir_a.string(), true);
  const double wall_a = seconds_since(t0);
  std::fprintf(stderr, "[acceptance] flagship run: rc %d, %.0f s\n", rc_a,
               wall_a);

  if (rc_a != kExitOk && rc_a != kExitViolation) {
    const std::string why = "flagship run exited " + std::to_string(rc_a);
    report(1, false, why);
    report(2, false, why);
    report(3, false, why);
    report(8, false, why);
    report(9, false, why);
    return;
  }

  const auto rows = read_csv(dir_a / "diagnostics.csv", kDiagHeader);
  const double area = m.lx * m.ly;

  {  // criterion 1: mass conservation and the runtime budget
    double drift = 0.0;
    for (const auto& r : rows)
      drift = std::max(drift, std::abs(r[cMass] - rows.front()[cMass]) / area);
    const bool ok = drift <= 1e-8 && wall_a <= 1800.0;
    report(1, ok,
           "mass conservation: max |mass(t) - mass(0)| / area = " +
               num(drift) + " (tol 1.0e-08); wall " + num(wall_a) +
               " s (budget 1800 s)");
  }

  {  // criterion 2a: energy inequality residual on the full system
    double acc = 0.0, max_r = 0.0, max_e = rows.front()[cETot];
    const double e0 = rows.front()[cETot];
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto& r = rows[k];
      const double diss = r[cCrossAbs] + r[cRelaxQ] + r[cEps1] + r[cVisc] +
                          r[cEps2] + r[cPeterlin];
      if (k > 0)
        acc += (r[cT] - rows[k - 1][cT]) * (diss - r[cSource]);
      max_r = std::max(max_r, r[cETot] - e0 + acc);
      max_e = std::max(max_e, r[cETot]);
    }
    const double budget = 1e-3 * max_e;
    const bool ok = std::isfinite(max_r) && max_r <= budget;
    report(2, ok,
           "energy inequality: flagship max residual = " + num(max_r) +
               " <= " + num(budget) + " (1e-3 * max energy); subsystem: see "
               "criterion 2 subsystem line");
  }

  {  // criterion 3a: confinement of the flagship trajectory
    const MobilitySpec mob = m.mobility();
    const double m_high = eval_mobility(mob, 1.0 - mob.delta).m;
    const double m_low = eval_mobility(mob, mob.delta).m;
    double excursion = 0.0;
    std::size_t violations = 0;
    for (const auto& r : rows) {
      excursion = std::max(
          excursion, std::max({r[cPhiMax] - 1.0, -r[cPhiMin], 0.0}));
      if (r[cOverHigh] > 2.0 * m_high * r[cEntropy]) ++violations;
      if (r[cOverLow] > 2.0 * m_low * r[cEntropy]) ++violations;
    }
    const bool ok = excursion <= 1e-2 && violations == 0;
    report(3, ok,
           "confinement: flagship excursion max(phi - 1, -phi, 0) = " +
               num(excursion) + " (kappa 1.0e-02); entropy-bound violations " +
               std::to_string(violations) + " of " +
               std::to_string(2 * rows.size()) + " row checks; sweep "
               "monotonicity on the criterion 3 sweep line");
  }

  {  // criterion 8: spinodal signature
    const double v0 = rows.front()[cVariance];
    double vmax = 0.0;
    for (const auto& r : rows) vmax = std::max(vmax, r[cVariance]);
    const double ratio = (v0 > 0.0) ? vmax / v0 : 0.0;
    const bool variance_ok = ratio >= 1e4;

    const int windows = 8;
    std::vector<double> mean(windows, 0.0);
    std::vector<int> count(windows, 0);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const int w = std::min<int>(
          windows - 1,
          static_cast<int>(k * static_cast<std::size_t>(windows) / rows.size()));
      mean[w] += rows[k][cDomainScale];
      ++count[w];
    }
    bool envelope_ok = true;
    double min_ratio = 1e300;
    for (int w = 0; w < windows; ++w) {
      mean[w] /= std::max(1, count[w]);
      if (w > 0 && mean[w - 1] > 0.0)
        min_ratio = std::min(min_ratio, mean[w] / mean[w - 1]);
    }
    envelope_ok = min_ratio >= 0.98;
    const bool ok = variance_ok && envelope_ok;
    report(8, ok,
           "spinodal signature: variance amplification " + num(ratio) +
               " (required >= 1.0e+04, from " + num(v0) + " to " + num(vmax) +
               "); domain-scale coarse envelope min window ratio " +
               num(min_ratio) + " (required >= 0.98, windows " +
               num(mean.front()) + " -> " + num(mean.back()) + ")");
  }

  {  // criterion 9: byte-identical reproduction
    const fs::path dir_b = fresh_dir("vps_acc_flagship_b");
    const auto t1 = clk::now();
    const int rc_b = cli_run(m, dir_b.string(), true);
    std::fprintf(stderr, "[acceptance] flagship rerun: rc %d, %.0f s\n", rc_b,
                 seconds_since(t1));
    bool ok = (rc_b == rc_a);
    std::string detail;
    if (!ok) {
      detail = "reruns exited differently (" + std::to_string(rc_a) + " vs " +
               std::to_string(rc_b) + ")";
    } else {
      const std::string a = slurp(dir_a / "diagnostics.csv");
      const std::string b = slurp(dir_b / "diagnostics.csv");
      ok = !a.empty() && a == b;
      detail = "reproducibility: two flagship diagnostics.csv are " +
               std::string(ok ? "byte-identical" : "DIFFERENT") + " (" +
               std::to_string(a.size()) + " bytes)";
    }
    report(9, ok, detail);
  }
}

// --------------------------------------------------------------------------
// Criterion 2b: unconditional stability of the phase subsystem.
// --------------------------------------------------------------------------

void subsystem_energy_criterion() {
  RunManifest m;
  m.ch_tol = 1e-14;
  const Grid g = m.grid();
  State s = make_initial_state(m);
  Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
             SchemeConfig::from(m));
  const auto t0 = clk::now();
  std::vector<EnergyReport> hist;
  hist.push_back(energy_report(s, {VectorField(g), VectorField(g)},
                               m.potential(), m.coefficients()));
  for (int k = 0; k < 500; ++k) {
    st.step_phase(s, m.dt);
    s.t += m.dt;
    hist.push_back(
        energy_report(s, st.last_flux(), m.potential(), m.coefficients()));
  }
  const double wall = seconds_since(t0);
  const std::vector<double> R = energy_inequality_residual(hist);
  const double max_r = *std::max_element(R.begin(), R.end());
  const double gate = 1e-10 * std::abs(hist.front().e_tot);
  const bool ok = max_r <= gate && wall <= 120.0;
  report(2, ok,
         "energy inequality, phase subsystem: max residual over 500 steps = " +
             num(max_r) + " <= " + num(gate) + " (1e-10 * E(0)); wall " +
             num(wall) + " s (budget 120 s)");
}

// --------------------------------------------------------------------------
// Criteria 3b and 4: the regularization sweep.
// --------------------------------------------------------------------------

void sweep_criteria() {
  RunManifest m;
  m.nx = m.ny = 64;
  const fs::path dir = fresh_dir("vps_acc_sweep");
  const auto t0 = clk::now();
  const int rc = cli_sweep_delta(m, dir.string(), true);
  const double wall = seconds_since(t0);
  std::fprintf(stderr, "[acceptance] sweep: rc %d, %.0f s\n", rc, wall);
  if (rc != kExitOk) {
    const std::string why = "sweep exited " + std::to_string(rc);
    report(3, false, why);
    report(4, false, why);
    return;
  }
  const auto table =
      read_csv(dir / "sweep.csv", "delta,max_overshoot,max_entropy,terminal_diff");

  bool overshoot_ok = true;
  for (std::size_t k = 1; k < table.size(); ++k)
    if (table[k][1] > table[k - 1][1] + 1e-14) overshoot_ok = false;

  // literal discrete confinement inequality at every logged step of every
  // sub-run, with the sub-run's own delta
  std::size_t checked = 0, violations = 0;
  for (const auto& entry : table) {
    MobilitySpec mob = m.mobility();
    mob.delta = entry[0];
    const double m_high = eval_mobility(mob, 1.0 - mob.delta).m;
    const double m_low = eval_mobility(mob, mob.delta).m;
    char sub[48];
    std::snprintf(sub, sizeof sub, "delta_%g", entry[0]);
    const auto rows = read_csv(dir / sub / "diagnostics.csv", kDiagHeader);
    for (const auto& r : rows) {
      if (r[cOverHigh] > 2.0 * m_high * r[cEntropy]) ++violations;
      if (r[cOverLow] > 2.0 * m_low * r[cEntropy]) ++violations;
      checked += 2;
    }
  }
  report(3, overshoot_ok && violations == 0,
         "confinement, sweep: max overshoot per delta {" + num(table[0][1]) +
             ", " + num(table[1][1]) + ", " + num(table[2][1]) +
             "} non-increasing: " + (overshoot_ok ? "yes" : "NO") +
             "; literal entropy-bound violations " + std::to_string(violations) +
             " of " + std::to_string(checked) + " checks");

  double emax = 0.0, emin = 1e300;
  for (const auto& r : table) {
    emax = std::max(emax, r[2]);
    emin = std::min(emin, r[2]);
  }
  const double spread = (emin > 0.0) ? emax / emin : 1e300;
  const bool ok = spread <= 2.0 && wall <= 2700.0;
  report(4, ok,
         "entropy boundedness: max_t entropy across deltas in [" + num(emin) +
             ", " + num(emax) + "], spread " + num(spread) +
             " (allowed 2.0); wall " + num(wall) + " s (budget 2700 s)");
}

// --------------------------------------------------------------------------
// Criterion 5: every implicit block against a dense direct solve.
// --------------------------------------------------------------------------

void oracle_criterion() {
  RunManifest m;
  m.nx = m.ny = 8;
  m.lx = m.ly = 2.0;
  m.dt = 0.01;
  m.ch_tol = 1e-13;
  m.spd_tol = 1e-13;
  m.projection_tol = 1e-9;
  const Grid g = m.grid();

  State s(g);
  SplitMix64 rng(3);
  for (double& v : s.phi.v) v = 0.4 + rng.symmetric(0.05);
  for (double& v : s.q.v) v = rng.symmetric(0.02);
  const double cdiag = 1.0 / std::sqrt(2.0);
  for (double& v : s.C.c11) v = cdiag + rng.symmetric(0.05);
  for (double& v : s.C.c22) v = cdiag + rng.symmetric(0.05);
  for (double& v : s.C.c12) v = rng.symmetric(0.03);

  Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
             SchemeConfig::from(m));

  const char* blocks[] = {"phase", "bulk", "viscous", "poisson", "conformation"};
  std::map<std::string, double> worst;
  std::map<std::string, int> captures;
  bool ok = true;
  std::string fail_note;

  for (int rep = 0; rep < 5 && ok; ++rep) {
    for (const char* block : blocks) {
      LinearProbe probe;
      st.capture(block, &probe);
      st.advance(s);
      if (!probe.apply || probe.rhs.empty()) {
        ok = false;
        fail_note = std::string(block) + " capture produced no system";
        break;
      }
      const int n = static_cast<int>(probe.rhs.front().size());
      const Eigen::MatrixXd A = dense_from(probe.apply, n);
      const bool rank_deficient =
          std::string(block) == "poisson" || std::string(block) == "viscous";
      Eigen::PartialPivLU<Eigen::MatrixXd> lu;
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
      if (rank_deficient)
        cod.compute(A);
      else
        lu.compute(A);
      for (std::size_t j = 0; j < probe.rhs.size(); ++j) {
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i)
          b(i) = probe.rhs[j][static_cast<std::size_t>(i)];
        const Eigen::VectorXd x = rank_deficient
                                      ? Eigen::VectorXd(cod.solve(b))
                                      : Eigen::VectorXd(lu.solve(b));
        const double err = max_abs_diff(probe.solution[j], x);
        worst[block] = std::max(worst[block], err);
        ++captures[block];
        if (err > 1e-10) {
          ok = false;
          fail_note = std::string(block) + " max-abs " + num(err);
        }
      }
    }
  }

  std::string detail = "oracle equivalence vs dense direct solves: ";
  if (!fail_note.empty()) detail += fail_note + "; ";
  detail += "max-abs per block";
  for (const char* block : blocks)
    detail += " " + std::string(block) + "=" + num(worst[block]) + "(x" +
              std::to_string(captures[block]) + ")";
  detail += " (tol 1.0e-10)";
  report(5, ok, detail);
}

// --------------------------------------------------------------------------
// Criterion 6: manufactured-solution convergence orders.
// --------------------------------------------------------------------------

void mms_criterion() {
  const RunManifest m;
  const fs::path dir = fresh_dir("vps_acc_mms");
  const auto t0 = clk::now();
  const int rc = cli_mms(m, dir.string(), true);
  const double wall = seconds_since(t0);
  std::fprintf(stderr, "[acceptance] mms: rc %d, %.0f s\n", rc, wall);
  if (rc != kExitOk) {
    report(6, false, "mms driver exited " + std::to_string(rc));
    return;
  }
  std::ifstream is(dir / "slopes.csv");
  std::string line;
  std::getline(is, line);  // header
  std::map<std::string, double> slope;
  while (std::getline(is, line)) {
    const auto c1 = line.find(',');
    if (c1 == std::string::npos) continue;
    const auto c2 = line.find(',', c1 + 1);
    slope[line.substr(0, c1)] =
        std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr);
  }
  const bool ok = slope.count("phase") && slope["phase"] >= 1.9 &&
                  slope.count("pressure") && slope["pressure"] >= 1.9 &&
                  slope.count("viscous") && slope["viscous"] >= 1.9 &&
                  slope.count("transport") && slope["transport"] >= 0.7 &&
                  wall <= 300.0;
  report(6, ok,
         "discretization order: slopes phase=" + num(slope["phase"]) +
             " pressure=" + num(slope["pressure"]) +
             " viscous=" + num(slope["viscous"]) + " (gates 1.9), transport=" +
             num(slope["transport"]) + " (gate 0.7), relaxation=" +
             num(slope["relaxation"]) + " (reported); wall " + num(wall) +
             " s (budget 300 s)");
}

// --------------------------------------------------------------------------
// Criterion 7: the quiescent fixed point and the Peterlin relaxation ODE.
// --------------------------------------------------------------------------

void fixed_point_criteria() {
  bool quiet_ok = false;
  double drift = 0.0;
  {
    RunManifest m;
    m.nx = m.ny = 32;  // flagship cell size on a smaller patch
    m.lx = m.ly = 24.0;
    const Grid g = m.grid();
    State s(g);
    for (double& v : s.phi.v) v = 0.4;
    const double cdiag = 1.0 / std::sqrt(2.0);
    for (double& v : s.C.c11) v = cdiag;
    for (double& v : s.C.c22) v = cdiag;
    const State init = s;
    Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
               SchemeConfig::from(m));
    for (int k = 0; k < 100; ++k) st.advance(s);
    auto field_drift = [](const std::vector<double>& a,
                          const std::vector<double>& b, double scale) {
      double d = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k)
        d = std::max(d, std::abs(a[k] - b[k]));
      return d / scale;
    };
    drift = std::max({field_drift(s.phi.v, init.phi.v, 0.4),
                      field_drift(s.q.v, init.q.v, 1.0),
                      field_drift(s.u.x, init.u.x, 1.0),
                      field_drift(s.u.y, init.u.y, 1.0),
                      field_drift(s.C.c11, init.C.c11, cdiag),
                      field_drift(s.C.c12, init.C.c12, 1.0),
                      field_drift(s.C.c22, init.C.c22, cdiag)});
    quiet_ok = drift <= 1e-12;
  }

  // Peterlin relaxation from C = c0 I: scheme trajectory against a reference
  // Runge-Kutta integration of cdot = h (2 c - 4 c^3), and convergence of
  // tr(C) to sqrt(2).
  bool ode_ok = false, limit_ok = false;
  double traj_err = 0.0, limit_err = 0.0;
  {
    RunManifest m;
    m.nx = m.ny = 8;
    m.lx = m.ly = 2.0;
    m.spd_tol = 1e-14;
    const Grid g = m.grid();
    const double h = eval_coef(m.coefficients().hel, 0.4);
    const double c_init = 0.3;

    auto make_state = [&]() {
      State s(g);
      for (double& v : s.phi.v) v = 0.4;
      for (double& v : s.C.c11) v = c_init;
      for (double& v : s.C.c22) v = c_init;
      return s;
    };

    Stepper st(g, m.potential(), m.mobility(), m.coefficients(),
               SchemeConfig::from(m));
    {
      State s = make_state();
      const double dt = 1e-6, T = 0.05;
      const int steps = static_cast<int>(T / dt + 0.5);
      for (int k = 0; k < steps; ++k) st.step_conformation(s, dt);

      double c = c_init;
      const double dt_ref = 1e-7;
      const int ref_steps = static_cast<int>(T / dt_ref + 0.5);
      auto f = [h](double y) { return h * (2.0 * y - 4.0 * y * y * y); };
      for (int k = 0; k < ref_steps; ++k) {
        const double k1 = f(c);
        const double k2 = f(c + 0.5 * dt_ref * k1);
        const double k3 = f(c + 0.5 * dt_ref * k2);
        const double k4 = f(c + dt_ref * k3);
        c += dt_ref / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      traj_err = std::abs(s.C.c11.front() - c);
      ode_ok = traj_err <= 1e-6;
    }
    {
      State s = make_state();
      for (int k = 0; k < 2000; ++k) st.step_conformation(s, 0.01);
      limit_err = std::abs(s.C.c11.front() + s.C.c22.front() - std::sqrt(2.0));
      limit_ok = limit_err <= 1e-9;
    }
  }

  report(7, quiet_ok && ode_ok && limit_ok,
         "fixed points: quiescent drift over 100 steps = " + num(drift) +
             " (tol 1.0e-12); Peterlin trajectory vs RK4 = " + num(traj_err) +
             " (tol 1.0e-06); |tr C - sqrt(2)| after relaxation = " +
             num(limit_err) + " (tol 1.0e-09)");
}

}  // namespace

int main() {
  try {
    oracle_criterion();
    mms_criterion();
    fixed_point_criteria();
    subsystem_energy_criterion();
    sweep_criteria();
    flagship_criteria();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance harness: %s\n", e.what());
    return 1;
  }

  std::stable_sort(results.begin(), results.end(),
                   [](const Line& a, const Line& b) { return a.id < b.id; });
  bool all = true;
  for (const Line& l : results) {
    std::printf("%s criterion %d: %s\n", l.pass ? "PASS" : "FAIL", l.id,
                l.text.c_str());
    all = all && l.pass;
  }
  std::printf("%s\n", all ? "ACCEPTANCE OK" : "ACCEPTANCE INCOMPLETE");
  return all ? 0 : 1;
}
