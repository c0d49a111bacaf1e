#include "persalign/regret.hpp"

#include <cmath>

namespace persalign {
namespace {

// Weight of one (user, context) pair under the chosen convention.
double pair_weight(const ProblemInstance& inst, PairWeighting weighting,
                   int user, long total_pairs) {
  if (weighting == PairWeighting::kUniformPair) {
    return 1.0 / static_cast<double>(total_pairs);
  }
  return inst.user_dist[user] / static_cast<double>(inst.num_contexts(user));
}

long count_pairs(const ProblemInstance& inst) {
  long n = 0;
  for (int u = 0; u < inst.num_users; ++u) n += inst.num_contexts(u);
  return n;
}

}  // namespace

int top_action(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw EmptyBank("top_action: empty score vector");
  int best = 0;
  for (int i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;  // strict: ties keep lowest index
  }
  return best;
}

std::vector<std::vector<int>> selector_map(const RewardModel& m,
                                           const ProblemInstance& inst) {
  std::vector<std::vector<int>> sel(inst.num_users);
  for (int u = 0; u < inst.num_users; ++u) {
    const Eigen::MatrixXd mu = user_score_matrix(m, u);
    sel[u].resize(inst.num_contexts(u));
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      const Eigen::VectorXd scores =
          inst.actions[u] *
          (mu.transpose() * inst.contexts[u].row(c).transpose());
      sel[u][c] = top_action(scores);
    }
  }
  return sel;
}

double one_step_regret(const ProblemInstance& inst, const RewardModel& m,
                       int user, int ctx) {
  const RewardModel truth = truth_model(inst);
  const Eigen::VectorXd truth_scores = bank_scores(truth, inst, user, ctx);
  const Eigen::VectorXd model_scores = bank_scores(m, inst, user, ctx);
  return truth_scores(top_action(truth_scores)) -
         truth_scores(top_action(model_scores));
}

double expected_regret(const ProblemInstance& inst, const RewardModel& m,
                       PairWeighting weighting) {
  const long total_pairs = count_pairs(inst);
  double total = 0.0;
  for (int u = 0; u < inst.num_users; ++u) {
    const Eigen::MatrixXd mu_truth =
        user_score_matrix(truth_model(inst), u);
    const Eigen::MatrixXd mu_model = user_score_matrix(m, u);
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      const Eigen::VectorXd xt = inst.contexts[u].row(c).transpose();
      const Eigen::VectorXd truth_scores =
          inst.actions[u] * (mu_truth.transpose() * xt);
      const Eigen::VectorXd model_scores =
          inst.actions[u] * (mu_model.transpose() * xt);
      const double r = truth_scores(top_action(truth_scores)) -
                       truth_scores(top_action(model_scores));
      total += pair_weight(inst, weighting, u, total_pairs) * r;
    }
  }
  return total;
}

double disagreement_mass(const ProblemInstance& inst, const RewardModel& m,
                         PairWeighting weighting) {
  const long total_pairs = count_pairs(inst);
  const auto truth_sel = selector_map(truth_model(inst), inst);
  const auto model_sel = selector_map(m, inst);
  double mass = 0.0;
  for (int u = 0; u < inst.num_users; ++u) {
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      if (truth_sel[u][c] != model_sel[u][c]) {
        mass += pair_weight(inst, weighting, u, total_pairs);
      }
    }
  }
  return mass;
}

MisrecCheckResult misrec_score_error_check(const ProblemInstance& inst,
                                           const RewardModel& m,
                                           double min_gap) {
  const RewardModel truth = truth_model(inst);
  MisrecCheckResult out;
  for (int u = 0; u < inst.num_users; ++u) {
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      const Eigen::VectorXd ts = bank_scores(truth, inst, u, c);
      const Eigen::VectorXd ms = bank_scores(m, inst, u, c);
      if (top_action(ts) == top_action(ms)) continue;
      ++out.misrecommended_pairs;
      // Centered sup error over this bank must reach half the minimum gap:
      // picking a suboptimal action while being closer than that everywhere
      // would contradict the top-two separation.
      const Eigen::VectorXd dt = ts.array() - ts.mean();
      const Eigen::VectorXd dm = ms.array() - ms.mean();
      const double sup_err = (dt - dm).cwiseAbs().maxCoeff();
      const double margin = sup_err - 0.5 * min_gap;
      if (margin < 0.0) {
        ++out.violations;
        out.worst_margin = std::min(out.worst_margin, margin);
      }
    }
  }
  return out;
}

}  // namespace persalign
