#pragma once

// Offline reference-logged sweeps: log one dataset of n_total records under
// the uniform reference policy, then fit on nested prefixes and measure the
// exact expected regret of each fitted model.  The per-checkpoint regrets
// trace out how fast temperature-zero performance improves with log size.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "persalign/dataset.hpp"
#include "persalign/fit.hpp"
#include "persalign/instance.hpp"
#include "persalign/regret.hpp"

namespace persalign {

struct OfflineConfig {
  long n_total = 100000;
  int n_checkpoints = 100;  // evenly spaced from 0 to n_total inclusive
  int slate_size = 2;
  std::vector<std::uint64_t> seeds = {1};
  bool warm_start_across_prefixes = true;  // cold restarts re-initialize
  PairWeighting weighting = PairWeighting::kUniformPair;
};

// Records drawn entirely under the reference policy: user from user_dist,
// context uniform, every slate slot uniform over the bank, label from the
// truth MNL.  Bit-reproducible from (inst, seed) alone.
PrefDataset log_offline_dataset(const ProblemInstance& inst, long n,
                                int slate_size, std::uint64_t seed);

// Checkpoint sizes: n_checkpoints values evenly spaced over [0, n_total],
// rounded to integers, first 0 and last n_total, strictly increasing.
std::vector<long> checkpoint_sizes(long n_total, int n_checkpoints);

struct SweepRow {
  std::uint64_t seed = 0;
  long n = 0;
  double mean_regret = 0.0;
  bool zero_flag = false;  // mean_regret is exactly zero
};

struct SweepResult {
  std::vector<SweepRow> rows;  // seed-major, checkpoint order within a seed
  std::vector<FitReport> fit_reports;
};

// `jobs` > 1 fits different seeds on different threads; row order in the
// result is independent of scheduling.
SweepResult run_sweep(const ProblemInstance& inst, const OfflineConfig& cfg,
                      const FitConfig& fit_cfg, int jobs = 1);

// Least-squares fit of ln(mean_regret) against n over the positive
// checkpoints.  Throws InsufficientPositivePoints when fewer than five
// checkpoints have positive regret.  r_squared is 1 for an exact fit, and
// by convention also 1 when the points are constant (zero residual).
struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int positive_points = 0;
};
DecayFit fit_decay_rate(const std::vector<std::pair<long, double>>& points);
DecayFit fit_decay_rate(const SweepResult& sweep, std::uint64_t seed);

// Smallest checkpoint from which regret stays exactly zero through the last
// checkpoint; nullopt when the final checkpoint is still positive.
std::optional<long> zero_regret_burn_in(const SweepResult& sweep,
                                        std::uint64_t seed);

// CSV with header "seed,n,mean_regret,zero_flag".
std::string sweep_to_csv(const SweepResult& sweep);

// Per-seed decay fits plus burn-in, as a JSON document.
std::string decay_to_json(const SweepResult& sweep, const OfflineConfig& cfg);

}  // namespace persalign
