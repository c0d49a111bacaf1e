#pragma once

// Scores, choice probabilities, and the multinomial-logit loss.
//
// A RewardModel is structurally identical to the truth inside a
// ProblemInstance: shared d x d matrices plus one head per user.  All
// downstream code (fitting, policies, regret) works against this type, so
// the truth itself can be used as a model wherever an oracle is needed.

#include <vector>

#include <Eigen/Dense>

#include "persalign/errors.hpp"
#include "persalign/instance.hpp"

namespace persalign {

struct RewardModel {
  std::vector<Eigen::MatrixXd> w;  // dim_j matrices, each d x d
  Eigen::MatrixXd heads;           // dim_j x num_users

  int dim_j() const { return static_cast<int>(w.size()); }
  int dim_d() const { return w.empty() ? 0 : static_cast<int>(w[0].rows()); }
  int num_users() const { return static_cast<int>(heads.cols()); }
};

// All-zero model with the instance's shapes; scores everything 0.
RewardModel zero_model(const ProblemInstance& inst);

// True when every parameter is exactly zero.  That point is a stationary
// saddle of the bilinear objective, so fitting loops test for it before
// deciding whether a warm start is usable.
bool is_zero_model(const RewardModel& m);

// The instance's truth as a RewardModel (copies).
RewardModel truth_model(const ProblemInstance& inst);

// Collapsed per-user score matrix M_i = sum_j heads(j,i) W_j, so that
// score(x, a) = x^T M_i a.  One small matrix per user; recompute it after
// any change to the model.
Eigen::MatrixXd user_score_matrix(const RewardModel& m, int user);

// Score of a single (context, action) pair for one user.  Convenience /
// oracle path; bulk callers should go through bank_scores.
double raw_score(const RewardModel& m, int user, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& a);

// Scores of every action in the user's bank for context index ctx.
Eigen::VectorXd bank_scores(const RewardModel& m, const ProblemInstance& inst,
                            int user, int ctx);

// Same minus the bank mean.  Centering is the canonical gauge for comparing
// two models: choice probabilities, tilted policies, and argmaxes are all
// unchanged by a per-(user, context) constant shift.
Eigen::VectorXd centered_scores(const RewardModel& m,
                                const ProblemInstance& inst, int user,
                                int ctx);

// Softmax with max subtraction; exact on constant shifts by construction.
Eigen::VectorXd mnl_probs(const Eigen::VectorXd& scores);

// log(sum_k exp(v_k)) - v_label, computed via the same max subtraction.
// Nonnegative, at most log K + (max - min score).
double mnl_loss(const Eigen::VectorXd& scores, int label);

// KL divergence between the choice distributions induced by two score
// vectors over the same slate, computed from logits so that zero comes out
// exactly zero when the score vectors are equal.
double choice_kl(const Eigen::VectorXd& scores_p,
                 const Eigen::VectorXd& scores_q);

}  // namespace persalign
