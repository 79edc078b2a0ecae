#pragma once

#include <string>

#include "vps/manifest.hpp"
#include "vps/stepper.hpp"

namespace vps {

// Process exit codes shared by the CLI entry points.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitViolation = 4;

// State at t = 0 from the [initial] section. uniform_noise draws one
// symmetric() per phi node in storage order (i fastest); file loads a
// snapshot whose grid must match the manifest grid.
State make_initial_state(const RunManifest& m);

// Full simulation. Writes manifest.cfg, diagnostics.csv, steps.csv, field
// snapshots under fields/ and verify.txt into out_dir, then evaluates the
// [verify] gates on the collected series. Returns kExitOk, kExitConfig on an
// invalid configuration, kExitSolver on an unrecoverable solve, or
// kExitViolation when a gate fails.
int cli_run(const RunManifest& m, const std::string& out_dir, bool quiet);

// One sub-run per entry of sweep_deltas (same seed and grid, t_end =
// sweep_t_end) into out_dir/delta_*/, then sweep.csv: per delta the max
// phase-bound overshoot, the max entropy integral, and the terminal-state
// distance to the previous row. With a degenerate mobility the overshoot
// column must be non-increasing and the distance column decreasing.
int cli_sweep_delta(const RunManifest& m, const std::string& out_dir, bool quiet);

// Grid-refinement studies against manufactured solutions, dt refined with
// h^2. Writes mms.csv (per-grid errors) and slopes.csv (fitted orders).
// Gates: phase, pressure and viscous slopes >= 1.9, upwind transport >= 0.7;
// the relaxation study is reported without a gate.
int cli_mms(const RunManifest& m, const std::string& out_dir, bool quiet);

// Re-reads manifest.cfg and diagnostics.csv from a finished run directory,
// re-evaluates the gates and rewrites verify.txt.
int cli_verify(const std::string& run_dir, bool quiet);

}  // namespace vps
