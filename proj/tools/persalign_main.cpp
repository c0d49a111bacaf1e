// Command line shell: argument parsing plus exit-code mapping.  All the real
// work lives in the library so tests can drive it in-process.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "persalign/cli.hpp"
#include "persalign/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"simulation lab for personalized preference learning"};
  app.require_subcommand(1);

  persalign::CliOverrides ov;
  std::string config_path;
  std::string out_path;
  std::string instance_path;
  std::optional<std::string> diagnose_out;
  std::uint64_t verify_seed = 1;
  std::vector<std::uint64_t> seed_list;

  auto* gen = app.add_subcommand(
      "gen-instance", "sample an accepted problem instance, write it as JSON");
  gen->add_option("--config", config_path,
                  "config file with an [instance] section");
  gen->add_option("--out", out_path, "output instance path")->required();
  gen->add_option("--seed", ov.seed, "base candidate seed");

  auto* online =
      app.add_subcommand("online", "greedy online run with scheduled refits");
  online->add_option("--config", config_path,
                     "config file ([online] and [fit] sections)");
  online->add_option("--instance", ov.instance_path,
                     "instance JSON path (overrides the config)");
  online->add_option("--out", ov.out_dir, "run directory");
  online->add_option("--seed", ov.seed, "run seed");
  online->add_option("--eta", ov.eta, "tilt strength");
  online->add_option("--horizon", ov.horizon, "number of rounds");
  online->add_option("--refit-divisor", ov.refit_divisor,
                     "refit schedule divisor");
  online->add_option("--slate-mode", ov.slate_mode, "paper-bt or iid-tilted");
  online->add_flag("--cold-start", ov.cold_start,
                   "re-initialize instead of warm starting each refit");

  auto* offline = app.add_subcommand(
      "offline-sweep", "reference-logged dataset, nested-prefix regret sweep");
  offline->add_option("--config", config_path,
                      "config file ([offline] and [fit] sections)");
  offline->add_option("--instance", ov.instance_path,
                      "instance JSON path (overrides the config)");
  offline->add_option("--out", ov.out_dir, "run directory");
  offline->add_option("--seed", ov.seed, "single log seed override");
  offline->add_option("--seeds", seed_list, "log seeds, comma separated")
      ->delimiter(',');
  offline->add_option("--n-total", ov.n_total, "total records per seed");
  offline->add_option("--checkpoints", ov.checkpoints,
                      "number of prefix checkpoints");
  offline->add_option("--jobs", ov.jobs, "seed-level thread parallelism");
  offline->add_flag("--cold-start", ov.cold_start,
                    "re-initialize at every checkpoint");

  auto* diag = app.add_subcommand(
      "diagnose", "gap and user-diversity diagnostics for an instance");
  diag->add_option("instance", instance_path, "instance JSON path")
      ->required();
  diag->add_option("--out", diagnose_out,
                   "directory to write diversity.json into");

  auto* verify =
      app.add_subcommand("verify", "run the mathematical property suites");
  verify->add_option("--seed", verify_seed, "suite seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return persalign::kExitConfig;
  }
  if (!seed_list.empty()) ov.seeds = seed_list;

  try {
    if (gen->parsed()) {
      return persalign::cmd_gen_instance(config_path, out_path, ov);
    }
    if (online->parsed()) return persalign::cmd_online(config_path, ov);
    if (offline->parsed()) return persalign::cmd_offline_sweep(config_path, ov);
    if (diag->parsed()) return persalign::cmd_diagnose(instance_path,
                                                       diagnose_out);
    if (verify->parsed()) return persalign::cmd_verify(verify_seed);
  } catch (const persalign::InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return persalign::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return persalign::kExitRuntime;
  }
  return persalign::kExitConfig;
}
