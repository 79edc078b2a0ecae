#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vps/grid.hpp"
#include "vps/physics.hpp"

namespace vps {

// Flat INI-style run configuration. Sections and keys are fixed; unknown or
// duplicate keys are hard errors. Values: integers, doubles, booleans
// (true/false), enum tokens, comma-separated lists. Missing keys keep the
// reference-experiment defaults below. serialize() emits the canonical form:
// every key, fixed order, doubles at full precision, so
// parse(serialize(m)) == m exactly.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class Convection { upwind, semi_lagrangian };
enum class InitialKind { uniform_noise, constant, file };
enum class ConformationInit { iso2d, iso3d, identity };

struct RunManifest {
  // [grid]
  int nx = 96;
  int ny = 96;
  double lx = 24.0;
  double ly = 24.0;
  Bc bc = Bc::neumann;

  // [time]
  double dt = 0.01;
  double t_end = 200.0;

  // [solver]
  double ch_tol = 1e-11;
  int ch_max_iter = 4000;
  double spd_tol = 1e-11;
  int spd_max_iter = 4000;
  double projection_tol = 1e-10;
  int max_halvings = 5;
  Convection convection = Convection::upwind;
  bool mass_shift = true;

  // [potential]
  PotentialKind potential_kind = PotentialKind::flory_huggins;
  double n_p = 1.0;
  double n_s = 1.0;
  double chi = 28.0 / 11.0;

  // [regularization] shared by potential, mobility and entropy
  double delta = 1e-3;

  // [mobility]
  MobilityKind mobility_kind = MobilityKind::double_degenerate;
  double mobility_exponent = 2.0;

  // [coupling]
  CouplingSpec coupling;

  // [coefficients]
  ScalarCoef tau{CoefFamily::inverse_quadratic, 5.0, 0.0, 0.05, 1.0};
  ScalarCoef hel{CoefFamily::inverse_quadratic, 5.0, 0.0, 0.05, 1.0};
  ScalarCoef eta{CoefFamily::quadratic, 2.0, 1.0, 0.05, 1.0};
  double c0 = 1.0;
  double eps1 = 0.1;
  double eps2 = 0.1;

  // [entropy]
  EntropyMode entropy_mode = EntropyMode::closed_form;

  // [initial]
  InitialKind initial_kind = InitialKind::uniform_noise;
  double initial_mean = 0.4;
  double initial_amplitude = 1e-3;
  std::uint64_t seed = 1;
  double q0 = 0.0;
  ConformationInit conformation = ConformationInit::iso2d;
  std::string initial_file;  // snapshot path, kind = file only

  // [output]
  int snapshot_every = 0;  // 0: initial and final state only
  int spectrum_every = 20;
  bool vtk = false;

  // [verify] acceptance gates applied to a finished run
  double tol_mass = 1e-8;
  double tol_energy = 1e-3;    // scaled by max_t E_tot
  double kappa = 1e-2;         // allowed phase-bound excursion
  double entropy_ceiling = 1e6;

  // [sweep]
  std::vector<double> sweep_deltas = {1e-2, 1e-3, 1e-4};
  double sweep_t_end = 40.0;

  // [mms]
  std::vector<int> mms_grids = {32, 48, 64, 96};
  double mms_dt0 = 2e-3;
  double mms_t_end = 0.1;

  // Typed views consumed by the solver modules.
  Grid grid() const { return Grid(nx, ny, lx, ly, bc); }
  PotentialSpec potential() const;
  MobilitySpec mobility() const;
  CoefficientSet coefficients() const;
  EntropySpec entropy() const;

  // Cross-field validation; throws ConfigError.
  void validate() const;

  bool operator==(const RunManifest&) const = default;
};

RunManifest parse_manifest(const std::string& text);
RunManifest load_manifest(const std::string& path);
std::string serialize_manifest(const RunManifest& m);
void save_manifest(const RunManifest& m, const std::string& path);

}  // namespace vps
