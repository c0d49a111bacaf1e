#pragma once

// Temperature-zero evaluation: recommend the argmax action under a model,
// score it under the truth.  Ties break to the lowest index by exact float
// comparison, everywhere, so a model equal to the truth has regret exactly
// zero and repeated evaluations are bit-stable.

#include <vector>

#include "persalign/instance.hpp"
#include "persalign/score.hpp"

namespace persalign {

// Lowest index attaining the maximum.
int top_action(const Eigen::VectorXd& scores);

// Argmax action index for every (user, context) pair; selectors[u][c].
std::vector<std::vector<int>> selector_map(const RewardModel& m,
                                           const ProblemInstance& inst);

// Truth reward of the truth argmax minus truth reward of the model argmax;
// zero iff the model picks a truth-optimal action.
double one_step_regret(const ProblemInstance& inst, const RewardModel& m,
                       int user, int ctx);

enum class PairWeighting {
  kUserDist,     // user_dist marginal, uniform contexts within a user
  kUniformPair,  // every (user, context) pair weighted equally
};

// Exact average of one_step_regret over all (user, context) pairs.
double expected_regret(const ProblemInstance& inst, const RewardModel& m,
                       PairWeighting weighting = PairWeighting::kUserDist);

// Weighted mass of pairs where the model's selector disagrees with the
// truth's.  Same weighting semantics as expected_regret.
double disagreement_mass(const ProblemInstance& inst, const RewardModel& m,
                         PairWeighting weighting = PairWeighting::kUserDist);

// Wherever the model misrecommends, its centered scores must be off by at
// least half the instance's minimum gap somewhere in that bank.  Returns the
// number of violations (0 in exact arithmetic, by a pigeonhole argument on
// the top-two gap).
struct MisrecCheckResult {
  int misrecommended_pairs = 0;
  int violations = 0;
  double worst_margin = 0.0;  // most negative slack seen, 0 if none
};
MisrecCheckResult misrec_score_error_check(const ProblemInstance& inst,
                                           const RewardModel& m,
                                           double min_gap);

}  // namespace persalign
