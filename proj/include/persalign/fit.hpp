#pragma once

// =============================================================================
// PURPOSE
//   Exact empirical-risk minimization for the bilinear preference model.
//   The objective is the average multinomial-logit loss over all logged
//   records plus a small ridge term on both factors:
//
//     F(W, L) = (1/t) sum_s loss(scores_s, label_s)
//               + (ridge/2) * (|W|_F^2 + |L|_F^2)
//
// DESIGN
//   Alternating minimization.  One outer iteration is a full-batch gradient
//   step on the shared matrices W (Armijo backtracking from step 1.0) followed
//   by one damped Newton step per user head (the head subproblems decouple
//   given W, so each user's step can backtrack against that user's partial
//   objective alone).  The loop stops when the relative objective decrease
//   falls below `tolerance` or both update budgets are spent.  The objective
//   never increases: every accepted step passed its own line search.
//
//   Warm starts matter: online refits pass the previous model and usually
//   converge in one or two iterations.  Cold starts go through the
//   gradient-SVD initializer below.
// =============================================================================

#include <optional>
#include <string>
#include <vector>

#include "persalign/dataset.hpp"
#include "persalign/instance.hpp"
#include "persalign/score.hpp"

namespace persalign {

struct FitConfig {
  double ridge = 1e-3;
  int max_rep_updates = 40;   // budget of W gradient steps per fit
  int max_head_updates = 25;  // budget of per-user Newton passes per fit
  double tolerance = 1e-9;    // relative objective decrease stopping rule
  // Armijo backtracking line search for the W step.
  double armijo_c = 1e-4;
  double backtrack_start = 1.0;
  double backtrack_factor = 0.5;
};

struct FitReport {
  int round = 0;  // filled by callers that fit on growing histories
  int iterations_used = 0;
  double final_objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Average MNL loss over the dataset plus the ridge penalty.  Throws
// EmptyDataset when there are no records.
double empirical_loss(const RewardModel& m, const PrefDataset& data,
                      const ProblemInstance& inst, double ridge);

// Analytic gradient of empirical_loss with respect to every W matrix and
// every head.  Layout matches the model: grad_w[j] is d x d, grad_heads is
// dim_j x num_users.  Exposed for finite-difference verification.
struct LossGradient {
  std::vector<Eigen::MatrixXd> grad_w;
  Eigen::MatrixXd grad_heads;
  double objective = 0.0;
};
LossGradient loss_gradient(const RewardModel& m, const PrefDataset& data,
                           const ProblemInstance& inst, double ridge);

// Data-driven initializer.  For each user, take the gradient of the loss at
// the all-zero model with respect to an unconstrained per-user d x d score
// matrix; stack the vectorized gradients into a num_users x d^2 matrix;
// factor its negation by rank-dim_j truncated SVD.  Left factors times
// singular values become the heads, right factors reshape into the W
// matrices.  The result is the best rank-dim_j alignment with the steepest
// descent direction out of the uninformative model.
RewardModel init_gradient_svd(const PrefDataset& data,
                              const ProblemInstance& inst);

// Runs the alternating loop starting from `start` (pass the previous model
// for a warm start, or init_gradient_svd / zero_model for a cold one).
FitReport fit(RewardModel& start, const PrefDataset& data,
              const ProblemInstance& inst, const FitConfig& cfg);

// Re-expresses a model so the rows of the stacked representation
// [vec(W_1); ...; vec(W_J)] are orthonormal, absorbing the change of basis
// into the heads.  Scores are unchanged.  When the representation has
// numerical rank below dim_j the result is still score-preserving but the
// flag is set; callers decide whether they care.
struct GaugeFixResult {
  RewardModel model;
  bool rank_deficient = false;
};
GaugeFixResult gauge_fix(const RewardModel& m);

// CSV with header "round,iterations_used,final_objective,grad_norm,converged".
std::string fit_reports_to_csv(const std::vector<FitReport>& reports);

}  // namespace persalign
