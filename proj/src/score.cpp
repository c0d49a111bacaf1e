#include "persalign/score.hpp"

#include <cmath>

namespace persalign {

RewardModel zero_model(const ProblemInstance& inst) {
  RewardModel m;
  m.w.assign(inst.dim_j, Eigen::MatrixXd::Zero(inst.dim_d, inst.dim_d));
  m.heads = Eigen::MatrixXd::Zero(inst.dim_j, inst.num_users);
  return m;
}

RewardModel truth_model(const ProblemInstance& inst) {
  RewardModel m;
  m.w = inst.w_true;
  m.heads = inst.heads_true;
  return m;
}

bool is_zero_model(const RewardModel& m) {
  if (m.heads.size() > 0 && m.heads.cwiseAbs().maxCoeff() != 0.0) {
    return false;
  }
  for (const Eigen::MatrixXd& w : m.w) {
    if (w.size() > 0 && w.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

Eigen::MatrixXd user_score_matrix(const RewardModel& m, int user) {
  if (user < 0 || user >= m.num_users()) {
    throw IndexOutOfRange("user_score_matrix: user out of range");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.dim_d(), m.dim_d());
  for (int j = 0; j < m.dim_j(); ++j) out += m.heads(j, user) * m.w[j];
  return out;
}

double raw_score(const RewardModel& m, int user, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& a) {
  if (x.size() != m.dim_d() || a.size() != m.dim_d()) {
    throw DimensionMismatch("raw_score: vector dimension mismatch");
  }
  double total = 0.0;
  for (int j = 0; j < m.dim_j(); ++j) {
    total += m.heads(j, user) * x.dot(m.w[j] * a);
  }
  return total;
}

Eigen::VectorXd bank_scores(const RewardModel& m, const ProblemInstance& inst,
                            int user, int ctx) {
  if (m.dim_d() != inst.dim_d) {
    throw DimensionMismatch("bank_scores: model/instance dimension mismatch");
  }
  if (user < 0 || user >= inst.num_users) {
    throw IndexOutOfRange("bank_scores: user out of range");
  }
  if (ctx < 0 || ctx >= inst.num_contexts(user)) {
    throw IndexOutOfRange("bank_scores: context out of range");
  }
  if (inst.num_actions(user) == 0) throw EmptyBank("bank_scores: empty bank");
  const Eigen::MatrixXd mu = user_score_matrix(m, user);
  return inst.actions[user] *
         (mu.transpose() * inst.contexts[user].row(ctx).transpose());
}

Eigen::VectorXd centered_scores(const RewardModel& m,
                                const ProblemInstance& inst, int user,
                                int ctx) {
  Eigen::VectorXd s = bank_scores(m, inst, user, ctx);
  return s.array() - s.mean();
}

Eigen::VectorXd mnl_probs(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw EmptyBank("mnl_probs: empty score vector");
  const double vmax = scores.maxCoeff();
  Eigen::VectorXd p = (scores.array() - vmax).exp();
  return p / p.sum();
}

double mnl_loss(const Eigen::VectorXd& scores, int label) {
  if (scores.size() == 0) throw EmptyBank("mnl_loss: empty score vector");
  if (label < 0 || label >= scores.size()) {
    throw IndexOutOfRange("mnl_loss: label out of range");
  }
  const double vmax = scores.maxCoeff();
  double total = 0.0;
  for (int k = 0; k < scores.size(); ++k) {
    total += std::exp(scores(k) - vmax);
  }
  return std::log(total) + vmax - scores(label);
}

double choice_kl(const Eigen::VectorXd& scores_p,
                 const Eigen::VectorXd& scores_q) {
  if (scores_p.size() != scores_q.size()) {
    throw DimensionMismatch("choice_kl: slates differ in size");
  }
  if (scores_p.size() == 0) throw EmptyBank("choice_kl: empty slate");
  // KL(p||q) = sum_k p_k [(v_k - lse(v)) - (u_k - lse(u))].  Working with
  // log-probabilities keeps tiny probabilities exact and makes the result
  // exactly zero for identical inputs.
  const auto log_probs = [](const Eigen::VectorXd& v) {
    const double vmax = v.maxCoeff();
    double total = 0.0;
    for (int k = 0; k < v.size(); ++k) total += std::exp(v(k) - vmax);
    const double lse = std::log(total) + vmax;
    return Eigen::VectorXd(v.array() - lse);
  };
  const Eigen::VectorXd lp = log_probs(scores_p);
  const Eigen::VectorXd lq = log_probs(scores_q);
  double kl = 0.0;
  for (int k = 0; k < lp.size(); ++k) {
    kl += std::exp(lp(k)) * (lp(k) - lq(k));
  }
  return kl;
}

}  // namespace persalign
