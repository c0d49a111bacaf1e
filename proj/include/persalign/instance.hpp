#pragma once

// Synthetic problem instances: a shared bilinear representation, one head
// per user, and per-user context/action banks.  The reward of action a in
// context x for user i is
//
//     R_i(x, a) = sum_j heads(j, i) * x^T W_j a
//
// Instances are sampled i.i.d. standard normal and accepted only when every
// (user, context) pair has a strictly positive top-two reward gap of at
// least raw_gap_target * head_scale, so temperature-zero evaluation is
// never decided by a coin flip.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "persalign/errors.hpp"

namespace persalign {

struct InstanceConfig {
  int dim_d = 3;        // context/action dimension
  int dim_j = 4;        // representation dimension (number of W_j)
  int num_users = 6;
  int contexts_per_user = 20;
  int actions_per_user = 20;
  double raw_gap_target = 0.05;  // accepted min gap is this times head_scale
  double head_scale = 1.0;       // multiplier applied to heads at construction
  int max_retries = 500;         // candidate seeds tried before giving up
  // Degenerate variant: heads confined to a random subspace of this rank.
  // 0 means full-rank sampling (the default generator).
  int head_rank = 0;
  // Optional user marginal; empty means uniform.  Must sum to 1 if given.
  std::vector<double> user_dist;
};

struct GapStats {
  double min_gap = 0.0;
  double pct5_gap = 0.0;    // nearest-rank percentile
  double median_gap = 0.0;  // nearest-rank, so scaling laws hold exactly
  double mean_gap = 0.0;
};

struct ProblemInstance {
  int dim_d = 0;
  int dim_j = 0;
  int num_users = 0;
  std::vector<Eigen::MatrixXd> w_true;    // dim_j matrices, each d x d
  Eigen::MatrixXd heads_true;             // dim_j x num_users, scale applied
  std::vector<Eigen::MatrixXd> contexts;  // per user: n_ctx x d, rows are x
  std::vector<Eigen::MatrixXd> actions;   // per user: n_act x d, rows are a
  std::vector<double> user_dist;          // length num_users, sums to 1
  double head_scale = 1.0;
  std::uint64_t seed = 0;  // the accepted candidate seed

  int num_contexts(int user) const {
    return static_cast<int>(contexts[user].rows());
  }
  int num_actions(int user) const {
    return static_cast<int>(actions[user].rows());
  }
};

/**
 * Draws candidate instances from seeds seed, seed+1, ... until one meets the
 * gap target, and returns it with the accepted seed recorded.  Any exact
 * top-two tie rejects the candidate outright.  Throws GapUnreachable after
 * cfg.max_retries rejected candidates and InvalidConfig for nonsensical
 * dimensions.  Identical (cfg, seed) always yields a bit-identical instance.
 */
ProblemInstance generate_instance(const InstanceConfig& cfg,
                                  std::uint64_t seed);

/**
 * Same accept/reject search, but user heads are confined to a head_rank
 * dimensional subspace: a random rotation is drawn once, its first head_rank
 * columns form the basis, and each user's head is a random combination of
 * those.  cfg.head_rank must be in [1, dim_j].
 */
ProblemInstance generate_degenerate_instance(const InstanceConfig& cfg,
                                             std::uint64_t seed);

// Exact enumeration of top-two truth gaps over all (user, context) pairs.
GapStats gap_stats(const ProblemInstance& inst);

// Largest truth reward range (max minus min over a bank) across all
// (user, context) pairs; the coarse end of the regret/disagreement sandwich.
double max_reward_range(const ProblemInstance& inst);

// Multiplies the true heads (and the recorded head_scale) by c in place.
void scale_heads(ProblemInstance& inst, double c);

// Versioned JSON round trip.  Floats are written with up to 17 significant
// digits so parsing them back reproduces every double bit for bit.
std::string instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const std::string& text);
void write_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance read_instance(const std::string& path);

}  // namespace persalign
