#include "persalign/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "persalign/io.hpp"
#include "persalign/regret.hpp"
#include "persalign/score.hpp"

namespace persalign {
namespace {

// Representation features of one (context, action) pair under the true
// shared matrices: phi_j = x^T W_j a.
Eigen::VectorXd true_features(const ProblemInstance& inst,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& a) {
  Eigen::VectorXd phi(inst.dim_j);
  for (int j = 0; j < inst.dim_j; ++j) phi(j) = x.dot(inst.w_true[j] * a);
  return phi;
}

struct HardPair {
  double gap;
  int user;
  int ctx;
  int best;
  int runner_up;
};

// All (user, context) pairs with their top-two truth actions, pair index
// running user-major then context-minor.
std::vector<HardPair> collect_pairs(const ProblemInstance& inst) {
  std::vector<HardPair> pairs;
  const RewardModel truth = truth_model(inst);
  for (int u = 0; u < inst.num_users; ++u) {
    if (inst.num_actions(u) < 2) {
      throw DegenerateBank("diversity: bank needs at least two actions");
    }
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      const Eigen::VectorXd scores = bank_scores(truth, inst, u, c);
      int best = 0, second = -1;
      for (int a = 1; a < scores.size(); ++a) {
        if (scores(a) > scores(best)) {
          second = best;
          best = a;
        } else if (second < 0 || scores(a) > scores(second)) {
          second = a;
        }
      }
      pairs.push_back({scores(best) - scores(second), u, c, best, second});
    }
  }
  return pairs;
}

// The ceil(hard_fraction * n) smallest-gap pairs; ties on the gap resolve
// by pair index, which the stable sort preserves.
std::vector<HardPair> hard_subset(const ProblemInstance& inst,
                                  double hard_fraction) {
  if (!(hard_fraction > 0.0) || hard_fraction > 1.0) {
    throw InvalidConfig("hard_fraction must lie in (0, 1]");
  }
  std::vector<HardPair> pairs = collect_pairs(inst);
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const HardPair& a, const HardPair& b) {
                     return a.gap < b.gap;
                   });
  const auto keep = static_cast<std::size_t>(
      std::ceil(hard_fraction * static_cast<double>(pairs.size())));
  pairs.resize(std::max<std::size_t>(1, std::min(keep, pairs.size())));
  return pairs;
}

// Head deviations about the mean, anchored at the first head so that
// identical heads give exact zeros (summing differences of equal doubles
// is exact; a naive mean need not be).
Eigen::MatrixXd head_deviations(const ProblemInstance& inst) {
  const Eigen::MatrixXd& h = inst.heads_true;
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(inst.dim_j);
  for (int u = 0; u < inst.num_users; ++u) shift += h.col(u) - h.col(0);
  const Eigen::VectorXd mean =
      h.col(0) + shift / static_cast<double>(inst.num_users);
  return h.colwise() - mean;
}

}  // namespace

Eigen::MatrixXd head_second_moment(const ProblemInstance& inst) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(inst.dim_j, inst.dim_j);
  for (int u = 0; u < inst.num_users; ++u) {
    g += inst.user_dist[u] * inst.heads_true.col(u) *
         inst.heads_true.col(u).transpose();
  }
  return g;
}

double drd(const ProblemInstance& inst, double hard_fraction, bool bessel) {
  if (bessel && inst.num_users < 2) {
    throw InvalidConfig("bessel correction needs at least two users");
  }
  const std::vector<HardPair> hard = hard_subset(inst, hard_fraction);
  const Eigen::MatrixXd dev = head_deviations(inst);

  // tr(Cov * H) written as a mean of squared projections, so the result is
  // nonnegative by construction and exactly zero when all heads coincide.
  double total = 0.0;
  for (const HardPair& hp : hard) {
    const Eigen::VectorXd x = inst.contexts[hp.user].row(hp.ctx).transpose();
    const Eigen::VectorXd dphi =
        true_features(inst, x, inst.actions[hp.user].row(hp.best).transpose()) -
        true_features(inst, x,
                      inst.actions[hp.user].row(hp.runner_up).transpose());
    for (int u = 0; u < inst.num_users; ++u) {
      const double proj = dev.col(u).dot(dphi);
      total += proj * proj;
    }
  }
  const double denom_users =
      bessel ? static_cast<double>(inst.num_users - 1)
             : static_cast<double>(inst.num_users);
  return total / (denom_users * static_cast<double>(hard.size()));
}

DiversityReport diversity_report(const ProblemInstance& inst,
                                 double hard_fraction, double rank_tol) {
  DiversityReport report;
  report.hard_fraction = hard_fraction;

  const Eigen::MatrixXd g = head_second_moment(inst);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  Eigen::VectorXd vals = eig.eigenvalues();  // ascending
  report.g_lambda_eigs.resize(vals.size());
  for (int i = 0; i < vals.size(); ++i) {
    report.g_lambda_eigs[i] = vals(vals.size() - 1 - i);
  }
  report.min_eig = vals(0);
  const double max_eig = vals(vals.size() - 1);
  for (double v : report.g_lambda_eigs) {
    if (v > 1e-8 * max_eig) ++report.numerical_rank;
  }
  report.drd = drd(inst, hard_fraction);
  report.drd_scale_free = report.drd / (inst.head_scale * inst.head_scale);
  report.verdict_full_rank = report.min_eig > rank_tol * max_eig;
  return report;
}

bool diversity_verdict(const DiversityReport& report, double rank_tol) {
  if (!(rank_tol > 0.0) || rank_tol >= 1.0) {
    throw InvalidConfig("rank_tol must lie in (0, 1)");
  }
  if (report.g_lambda_eigs.empty()) {
    throw InvalidConfig("diversity verdict on an empty report");
  }
  return report.min_eig > rank_tol * report.g_lambda_eigs.front();
}

std::string diversity_report_to_json(const DiversityReport& report) {
  std::string out = "{\n  \"schema_version\": 1,\n  \"g_lambda_eigs\": [";
  for (std::size_t i = 0; i < report.g_lambda_eigs.size(); ++i) {
    if (i) out += ',';
    out += format_double(report.g_lambda_eigs[i]);
  }
  out += "],\n";
  out += "  \"min_eig\": " + format_double(report.min_eig) + ",\n";
  out += "  \"numerical_rank\": " + std::to_string(report.numerical_rank) +
         ",\n";
  out += "  \"drd\": " + format_double(report.drd) + ",\n";
  out += "  \"drd_scale_free\": " + format_double(report.drd_scale_free) +
         ",\n";
  out += "  \"hard_fraction\": " + format_double(report.hard_fraction) + ",\n";
  out += std::string("  \"verdict_full_rank\": ") +
         (report.verdict_full_rank ? "true" : "false") + "\n}\n";
  return out;
}

}  // namespace persalign
