#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "vps/experiments.hpp"
#include "vps/manifest.hpp"

namespace {

struct CommonOpts {
  std::string manifest_path;
  std::string out_dir;
  bool quiet = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int snapshots = 0;
  bool snapshots_set = false;
};

void add_overrides(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--seed", o->seed, "override initial.seed")
      ->each([o](const std::string&) { o->seed_set = true; });
  cmd->add_option("--snapshots", o->snapshots, "override output.snapshot_every")
      ->each([o](const std::string&) { o->snapshots_set = true; });
  cmd->add_flag("--quiet", o->quiet, "suppress progress and tables");
}

vps::RunManifest load_with_overrides(const CommonOpts& o) {
  vps::RunManifest m = vps::load_manifest(o.manifest_path);
  if (o.seed_set) m.seed = o.seed;
  if (o.snapshots_set) m.snapshot_every = o.snapshots;
  m.validate();
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viscoelastic phase separation simulator"};
  app.require_subcommand(1);

  CommonOpts run_o, sweep_o, mms_o;
  std::string verify_dir;
  bool verify_quiet = false;

  CLI::App* run = app.add_subcommand("run", "full simulation with diagnostics");
  run->add_option("manifest", run_o.manifest_path, "run configuration file")
      ->required();
  run->add_option("--out", run_o.out_dir, "output directory")
      ->default_val("./run_out");
  add_overrides(run, &run_o);

  CLI::App* sweep = app.add_subcommand(
      "sweep-delta", "regularization sweep with a comparison table");
  sweep->add_option("manifest", sweep_o.manifest_path, "run configuration file")
      ->required();
  sweep->add_option("--out", sweep_o.out_dir, "output directory")
      ->default_val("./sweep_out");
  add_overrides(sweep, &sweep_o);

  CLI::App* mms = app.add_subcommand(
      "mms", "manufactured-solution convergence studies");
  mms->add_option("manifest", mms_o.manifest_path, "run configuration file")
      ->required();
  mms->add_option("--out", mms_o.out_dir, "output directory")
      ->default_val("./mms_out");
  add_overrides(mms, &mms_o);

  CLI::App* verify = app.add_subcommand(
      "verify", "re-evaluate the gates of a finished run directory");
  verify->add_option("dir", verify_dir, "run output directory")->required();
  verify->add_flag("--quiet", verify_quiet, "suppress gate lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : vps::kExitConfig;
  }

  try {
    if (run->parsed())
      return vps::cli_run(load_with_overrides(run_o), run_o.out_dir,
                          run_o.quiet);
    if (sweep->parsed())
      return vps::cli_sweep_delta(load_with_overrides(sweep_o), sweep_o.out_dir,
                                  sweep_o.quiet);
    if (mms->parsed())
      return vps::cli_mms(load_with_overrides(mms_o), mms_o.out_dir,
                          mms_o.quiet);
    if (verify->parsed()) return vps::cli_verify(verify_dir, verify_quiet);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return vps::kExitConfig;
  }
  return vps::kExitConfig;
}
