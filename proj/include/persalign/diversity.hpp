#pragma once

// User-diversity diagnostics.
//
// Two second-moment objects decide whether a population of users is
// informative enough for decision-making:
//
//   * the head second moment  G = sum_i user_dist(i) * head_i head_i^T,
//     whose minimum eigenvalue certifies the full-rank sufficient condition;
//   * the decision-relevant diversity score  drd = tr(Cov(heads) * H),
//     where H averages outer products of representation differences between
//     the best and runner-up actions on the hardest (user, context) pairs.
//
// drd scales as head_scale^2; drd_scale_free divides that back out so
// instances at different reward scales are comparable.

#include <vector>

#include <Eigen/Dense>

#include "persalign/instance.hpp"

namespace persalign {

struct DiversityReport {
  std::vector<double> g_lambda_eigs;  // descending
  double min_eig = 0.0;
  int numerical_rank = 0;  // eigenvalues above 1e-8 * max eigenvalue
  double drd = 0.0;
  double drd_scale_free = 0.0;
  double hard_fraction = 0.0;
  bool verdict_full_rank = false;
};

// G = sum_i user_dist(i) * head_i head_i^T  (uncentered, dist-weighted).
Eigen::MatrixXd head_second_moment(const ProblemInstance& inst);

// Decision-relevant diversity.  The hard subset is the ceil(hard_fraction *
// num_pairs) pairs with the smallest top-two truth gap, ties broken by pair
// index (user-major, context-minor).  The head covariance is centered and
// divided by num_users; pass bessel=true for the 1/(U-1) variant.  Computed
// as an average of squared projections, so the result is exactly
// nonnegative and exactly zero when all heads are identical.
double drd(const ProblemInstance& inst, double hard_fraction = 0.10,
           bool bessel = false);

// Full report; rank_tol is relative to the largest eigenvalue.
DiversityReport diversity_report(const ProblemInstance& inst,
                                 double hard_fraction = 0.10,
                                 double rank_tol = 1e-8);

// min_eig > rank_tol * max_eig, the full-rank sufficient condition.
bool diversity_verdict(const DiversityReport& report, double rank_tol = 1e-8);

std::string diversity_report_to_json(const DiversityReport& report);

}  // namespace persalign
