#pragma once

// Subcommand implementations behind the `persalign` binary.  They live in
// the library so tests can call them in-process; the binary is a thin
// argument-parsing shell around these.  All of them honor the PERSALIGN_SEED
// environment variable as a seed override and write their outputs atomically,
// with a manifest written last so a complete manifest implies a complete run.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace persalign {

// Exit codes shared by every subcommand.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

struct CliOverrides {
  // Common
  std::optional<std::string> instance_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  // online
  std::optional<double> eta;
  std::optional<long> horizon;
  std::optional<long> refit_divisor;
  std::optional<std::string> slate_mode;
  // offline-sweep
  std::optional<long> n_total;
  std::optional<int> checkpoints;
  std::optional<std::vector<std::uint64_t>> seeds;
  bool cold_start = false;
};

int cmd_gen_instance(const std::string& config_path,
                     const std::string& out_path, const CliOverrides& ov);
int cmd_online(const std::string& config_path, const CliOverrides& ov);
int cmd_offline_sweep(const std::string& config_path, const CliOverrides& ov);
int cmd_diagnose(const std::string& instance_path,
                 const std::optional<std::string>& out_dir);
int cmd_verify(std::uint64_t seed);

}  // namespace persalign
