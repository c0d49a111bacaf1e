#include "persalign/verify.hpp"

#include <cmath>
#include <sstream>

#include "persalign/diversity.hpp"
#include "persalign/fit.hpp"
#include "persalign/instance.hpp"
#include "persalign/io.hpp"
#include "persalign/online.hpp"
#include "persalign/policy.hpp"
#include "persalign/regret.hpp"
#include "persalign/rng.hpp"
#include "persalign/score.hpp"

namespace persalign {
namespace {

Eigen::VectorXd random_scores(Rng& rng, int n, double bound) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = bound * (2.0 * rng.next_double() - 1.0);
  return v;
}

Eigen::VectorXd random_gaussian(Rng& rng, int n, double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * rng.next_normal();
  return v;
}

// Small accepted instance for the model-level suites.
ProblemInstance small_instance(std::uint64_t seed, int head_rank = 0) {
  InstanceConfig cfg;
  cfg.dim_d = 3;
  cfg.dim_j = 3;
  cfg.num_users = 4;
  cfg.contexts_per_user = 6;
  cfg.actions_per_user = 8;
  cfg.raw_gap_target = 0.02;
  cfg.head_scale = 1.0;
  cfg.max_retries = 200;
  cfg.head_rank = head_rank;
  return head_rank > 0 ? generate_degenerate_instance(cfg, seed)
                       : generate_instance(cfg, seed);
}

// Truth plus elementwise Gaussian noise of the given magnitude in both
// factor blocks.
RewardModel perturbed_model(const ProblemInstance& inst, Rng& rng,
                            double magnitude) {
  RewardModel m = truth_model(inst);
  for (auto& w : m.w) {
    for (int r = 0; r < w.rows(); ++r) {
      for (int c = 0; c < w.cols(); ++c) {
        w(r, c) += magnitude * rng.next_normal();
      }
    }
  }
  for (int j = 0; j < m.heads.rows(); ++j) {
    for (int u = 0; u < m.heads.cols(); ++u) {
      m.heads(j, u) += magnitude * rng.next_normal();
    }
  }
  return m;
}

std::string describe(const char* what, long case_idx, double lhs, double rhs) {
  std::ostringstream ss;
  ss << what << " at case " << case_idx << ": lhs=" << lhs << " rhs=" << rhs;
  return ss.str();
}

SuiteResult pass(const std::string& name, long cases) {
  return {name, true, cases, ""};
}

SuiteResult fail(const std::string& name, long cases, std::string why) {
  return {name, false, cases, std::move(why)};
}

// ---------------------------------------------------------------------------
// Choice probabilities, tilts, and argmaxes are invariant to constant score
// shifts; subtracting the bank mean must change nothing beyond rounding.
SuiteResult suite_centering_invariance(std::uint64_t seed) {
  const char* name = "centering_invariance";
  const long cases = 1000;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const int n = 2 + static_cast<int>(rng.next_below(9));
    const Eigen::VectorXd v = random_gaussian(rng, n, 3.0);
    const Eigen::VectorXd centered = v.array() - v.mean();
    const double eta = 3.0 * rng.next_double();

    const Eigen::VectorXd dp = mnl_probs(v) - mnl_probs(centered);
    if (dp.cwiseAbs().maxCoeff() > 1e-12) {
      return fail(name, i,
                  describe("probability shift", i, dp.cwiseAbs().maxCoeff(),
                           1e-12));
    }
    const Eigen::VectorXd dw =
        tilted_weights(v, eta) - tilted_weights(centered, eta);
    if (dw.cwiseAbs().maxCoeff() > 1e-12) {
      return fail(name, i,
                  describe("tilt shift", i, dw.cwiseAbs().maxCoeff(), 1e-12));
    }
    if (top_action(v) != top_action(centered)) {
      return fail(name, i, describe("argmax moved", i, top_action(v),
                                    top_action(centered)));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// 0 <= loss <= log K + 2B whenever scores are bounded by B.
SuiteResult suite_loss_envelope(std::uint64_t seed) {
  const char* name = "loss_envelope";
  const long cases = 1000;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const int n = 2 + static_cast<int>(rng.next_below(7));
    const double bound = 0.25 + 2.0 * rng.next_double();
    const Eigen::VectorXd v = random_scores(rng, n, bound);
    const int label = static_cast<int>(rng.next_below(n));
    const double loss = mnl_loss(v, label);
    const double cap = std::log(static_cast<double>(n)) + 2.0 * bound;
    if (!(loss >= 0.0) || loss > cap + 1e-12) {
      return fail(name, i, describe("loss outside envelope", i, loss, cap));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// |loss(v, y) - loss(u, y)| <= 2 * max_k |v_k - u_k|.
SuiteResult suite_loss_lipschitz(std::uint64_t seed) {
  const char* name = "loss_lipschitz";
  const long cases = 1000;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const int n = 2 + static_cast<int>(rng.next_below(7));
    const Eigen::VectorXd v = random_gaussian(rng, n, 2.0);
    const Eigen::VectorXd u = v + random_gaussian(rng, n, 0.7);
    const int label = static_cast<int>(rng.next_below(n));
    const double lhs = std::abs(mnl_loss(v, label) - mnl_loss(u, label));
    const double rhs = 2.0 * (v - u).cwiseAbs().maxCoeff();
    if (lhs > rhs + 1e-12) {
      return fail(name, i, describe("Lipschitz bound broken", i, lhs, rhs));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// Label-averaged excess loss equals the choice KL exactly:
//   E_{y ~ p(v_true)}[loss(v, y) - loss(v_true, y)] = KL(p(v_true) || p(v)).
SuiteResult suite_excess_loss_kl(std::uint64_t seed) {
  const char* name = "excess_loss_is_kl";
  const long cases = 500;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const int n = 2 + static_cast<int>(rng.next_below(5));
    const Eigen::VectorXd v_true = random_gaussian(rng, n, 2.0);
    const Eigen::VectorXd v = random_gaussian(rng, n, 2.0);
    const Eigen::VectorXd p = mnl_probs(v_true);
    double excess = 0.0;
    for (int y = 0; y < n; ++y) {
      excess += p(y) * (mnl_loss(v, y) - mnl_loss(v_true, y));
    }
    const double kl = choice_kl(v_true, v);
    if (std::abs(excess - kl) > 1e-12 * std::max(1.0, std::abs(kl))) {
      return fail(name, i, describe("identity broken", i, excess, kl));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// Tilted weights against the uniform reference stay inside
// [exp(-2 eta B), exp(2 eta B)] whenever scores are bounded by B.
SuiteResult suite_tilt_envelope(std::uint64_t seed) {
  const char* name = "tilt_likelihood_ratio";
  const long cases = 1000;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const int n = 2 + static_cast<int>(rng.next_below(19));
    const double bound = 0.25 + 0.75 * rng.next_double();
    const double eta = 0.25 + 1.75 * rng.next_double();
    const Eigen::VectorXd v = random_scores(rng, n, bound);
    const Eigen::VectorXd w = tilted_weights(v, eta);
    for (int k = 0; k < n; ++k) {
      const double log_ratio = std::log(w(k) * static_cast<double>(n));
      if (std::abs(log_ratio) > 2.0 * eta * bound + 1e-9) {
        return fail(name, i,
                    describe("ratio escapes envelope", i, log_ratio,
                             2.0 * eta * bound));
      }
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// Monte-Carlo: mean choice KL over i.i.d. uniform slates dominates
// (exp(-2B)/2) * ((K-1)/K) * Var(score difference), within 3 standard errors.
SuiteResult suite_choice_kl_variance(std::uint64_t seed) {
  const char* name = "choice_kl_variance_floor";
  long cases = 0;
  const long num_slates = 100000;
  const int bank = 30;
  for (const int k_n : {2, 5}) {
    for (const double bound : {0.5, 1.0}) {
      Rng rng = Rng::stream(seed, cases, stream_id::kTest);
      const Eigen::VectorXd sp = random_scores(rng, bank, bound);
      const Eigen::VectorXd sq = random_scores(rng, bank, bound);
      const Eigen::VectorXd delta = sp - sq;
      const double mean_delta = delta.mean();
      const double var_delta =
          (delta.array() - mean_delta).square().sum() / bank;

      double total = 0.0, total_sq = 0.0;
      Eigen::VectorXd vp(k_n), vq(k_n);
      for (long s = 0; s < num_slates; ++s) {
        for (int k = 0; k < k_n; ++k) {
          const int a = static_cast<int>(rng.next_below(bank));
          vp(k) = sp(a);
          vq(k) = sq(a);
        }
        const double kl = choice_kl(vp, vq);
        total += kl;
        total_sq += kl * kl;
      }
      const double mean_kl = total / num_slates;
      const double var_kl =
          std::max(0.0, total_sq / num_slates - mean_kl * mean_kl);
      const double se = std::sqrt(var_kl / num_slates);
      const double floor = 0.5 * std::exp(-2.0 * bound) *
                           (static_cast<double>(k_n - 1) / k_n) * var_delta;
      if (mean_kl < floor - 3.0 * se) {
        return fail(name, cases,
                    describe("variance floor broken", cases, mean_kl,
                             floor - 3.0 * se));
      }
      ++cases;
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// KL between softmax distributions is at most half the squared euclidean
// distance between the score vectors.
SuiteResult suite_softmax_kl_quadratic(std::uint64_t seed) {
  const char* name = "softmax_kl_quadratic";
  const long cases = 1000;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const int n = 2 + static_cast<int>(rng.next_below(9));
    const Eigen::VectorXd u = random_gaussian(rng, n, 2.0);
    const Eigen::VectorXd v = u + random_gaussian(rng, n, 1.0);
    const double kl = choice_kl(u, v);
    const double cap = 0.5 * (u - v).squaredNorm();
    if (kl > cap + 1e-12) {
      return fail(name, i, describe("quadratic cap broken", i, kl, cap));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// min_gap * disagreement <= expected regret <= max_range * disagreement.
SuiteResult suite_regret_sandwich(std::uint64_t seed) {
  const char* name = "regret_disagreement_sandwich";
  const long cases = 500;
  const int models_per_instance = 50;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const ProblemInstance inst =
        small_instance(seed * 1000 + 17 * (i / models_per_instance));
    const double min_gap = gap_stats(inst).min_gap;
    const double max_range = max_reward_range(inst);
    const double mag = std::pow(10.0, -3.0 + 3.5 * rng.next_double());
    const RewardModel q = perturbed_model(inst, rng, mag);
    const double regret = expected_regret(inst, q);
    const double mass = disagreement_mass(inst, q);
    const double slack = 1e-9 * std::max(1.0, regret);
    if (min_gap * mass > regret + slack) {
      return fail(name, i,
                  describe("lower side broken", i, min_gap * mass, regret));
    }
    if (regret > max_range * mass + slack) {
      return fail(name, i,
                  describe("upper side broken", i, regret, max_range * mass));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// Every misrecommendation forces a centered sup error of at least half the
// minimum gap somewhere in that bank.
SuiteResult suite_misrec_sup_error(std::uint64_t seed) {
  const char* name = "misrec_implies_sup_error";
  const long cases = 500;
  const int models_per_instance = 50;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const ProblemInstance inst =
        small_instance(seed * 2000 + 13 * (i / models_per_instance));
    const double min_gap = gap_stats(inst).min_gap;
    const double mag = std::pow(10.0, -3.0 + 3.5 * rng.next_double());
    const RewardModel q = perturbed_model(inst, rng, mag);
    const MisrecCheckResult check = misrec_score_error_check(inst, q, min_gap);
    if (check.violations != 0) {
      return fail(name, i,
                  describe("sup-error certificate missing", i,
                           check.violations, 0.0));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// Perturbations strictly below half the minimum gap in sup norm cannot move
// any selector.
SuiteResult suite_selector_stability(std::uint64_t seed) {
  const char* name = "selector_stability";
  const long cases = 500;
  const int models_per_instance = 50;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const ProblemInstance inst =
        small_instance(seed * 3000 + 11 * (i / models_per_instance));
    const double min_gap = gap_stats(inst).min_gap;

    // Perturb one factor block only, so the induced score error is exactly
    // linear in the perturbation scale and can be normalized to target.
    RewardModel q = truth_model(inst);
    const bool heads_side = rng.next_below(2) == 0;
    RewardModel direction = q;
    for (auto& w : direction.w) w.setZero();
    direction.heads.setZero();
    if (heads_side) {
      for (int j = 0; j < direction.heads.rows(); ++j) {
        for (int u = 0; u < direction.heads.cols(); ++u) {
          direction.heads(j, u) = rng.next_normal();
        }
      }
    } else {
      for (auto& w : direction.w) {
        for (int r = 0; r < w.rows(); ++r) {
          for (int c = 0; c < w.cols(); ++c) w(r, c) = rng.next_normal();
        }
      }
    }

    const auto apply = [&](double scale) {
      RewardModel m = truth_model(inst);
      if (heads_side) {
        m.heads += scale * direction.heads;
      } else {
        for (int j = 0; j < m.dim_j(); ++j) m.w[j] += scale * direction.w[j];
      }
      return m;
    };
    const auto sup_error = [&](const RewardModel& m) {
      const RewardModel truth = truth_model(inst);
      double sup = 0.0;
      for (int u = 0; u < inst.num_users; ++u) {
        for (int c = 0; c < inst.num_contexts(u); ++c) {
          const Eigen::VectorXd diff = bank_scores(m, inst, u, c) -
                                       bank_scores(truth, inst, u, c);
          sup = std::max(sup, diff.cwiseAbs().maxCoeff());
        }
      }
      return sup;
    };

    const double raw_sup = sup_error(apply(1.0));
    if (raw_sup == 0.0) continue;  // degenerate direction; nothing to test
    const double scale = 0.49 * min_gap / raw_sup;
    const RewardModel m = apply(scale);
    if (sup_error(m) >= 0.5 * min_gap) {
      return fail(name, i, describe("rescale overshot", i, sup_error(m),
                                    0.5 * min_gap));
    }
    if (disagreement_mass(inst, m) != 0.0) {
      return fail(name, i,
                  describe("selector moved under small perturbation", i,
                           disagreement_mass(inst, m), 0.0));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// Gap statistics scale exactly with the heads (bitwise for power-of-two
// factors) and are ordered min <= pct5 <= median <= max.
SuiteResult suite_gap_scaling(std::uint64_t seed) {
  const char* name = "gap_scale_homogeneity";
  const long cases = 20;
  for (long i = 0; i < cases; ++i) {
    ProblemInstance inst = small_instance(seed * 4000 + i);
    const GapStats base = gap_stats(inst);
    if (!(base.min_gap <= base.pct5_gap && base.pct5_gap <= base.median_gap)) {
      return fail(name, i,
                  describe("order statistics out of order", i, base.min_gap,
                           base.median_gap));
    }
    ProblemInstance doubled = inst;
    scale_heads(doubled, 2.0);
    const GapStats two = gap_stats(doubled);
    if (two.min_gap != 2.0 * base.min_gap ||
        two.pct5_gap != 2.0 * base.pct5_gap ||
        two.median_gap != 2.0 * base.median_gap ||
        two.mean_gap != 2.0 * base.mean_gap) {
      return fail(name, i,
                  describe("power-of-two scaling not exact", i, two.min_gap,
                           2.0 * base.min_gap));
    }
    ProblemInstance tripled = inst;
    scale_heads(tripled, 3.0);
    const GapStats three = gap_stats(tripled);
    if (std::abs(three.median_gap - 3.0 * base.median_gap) >
        1e-12 * std::max(1.0, 3.0 * base.median_gap)) {
      return fail(name, i,
                  describe("triple scaling drifted", i, three.median_gap,
                           3.0 * base.median_gap));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// drd scales as the square of the head scale, is nonnegative, and vanishes
// exactly for identical heads.
SuiteResult suite_drd_scaling(std::uint64_t seed) {
  const char* name = "drd_scale_law";
  const long cases = 20;
  for (long i = 0; i < cases; ++i) {
    ProblemInstance inst = small_instance(seed * 5000 + i);
    const double base = drd(inst);
    if (!(base >= 0.0)) {
      return fail(name, i, describe("negative drd", i, base, 0.0));
    }
    for (const double c : {2.0, 10.0, 100.0}) {
      ProblemInstance scaled = inst;
      scale_heads(scaled, c);
      const double got = drd(scaled);
      const double want = c * c * base;
      if (std::abs(got - want) > 1e-6 * std::max(1e-300, want)) {
        return fail(name, i, describe("square law broken", i, got, want));
      }
    }
    ProblemInstance flat = inst;
    for (int u = 1; u < flat.num_users; ++u) {
      flat.heads_true.col(u) = flat.heads_true.col(0);
    }
    if (drd(flat) != 0.0) {
      return fail(name, i,
                  describe("identical heads should zero drd", i, drd(flat),
                           0.0));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// Identical (cfg, seed) reproduces the instance bit for bit.
SuiteResult suite_instance_determinism(std::uint64_t seed) {
  const char* name = "instance_determinism";
  const long cases = 5;
  for (long i = 0; i < cases; ++i) {
    const ProblemInstance a = small_instance(seed * 6000 + i);
    const ProblemInstance b = small_instance(seed * 6000 + i);
    if (instance_to_json(a) != instance_to_json(b)) {
      return fail(name, i, "same seed produced different instances");
    }
    const ProblemInstance c = small_instance(seed * 6000 + i + 100000);
    if (instance_to_json(a) == instance_to_json(c)) {
      return fail(name, i, "different seeds produced identical instances");
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// Refit schedule shape: dense up to the divisor, then linearly growing gaps.
SuiteResult suite_refit_schedule(std::uint64_t seed) {
  const char* name = "refit_schedule_shape";
  (void)seed;
  const std::vector<long> geometric = refit_rounds(1, 1 << 20);
  for (std::size_t k = 1; k < geometric.size(); ++k) {
    if (geometric[k] != 2 * geometric[k - 1]) {
      return fail(name, k, "divisor 1 should double between refits");
    }
  }
  const std::vector<long> dense = refit_rounds(1000000000L, 500);
  if (dense.size() != 500) {
    return fail(name, 0, "huge divisor should refit every round");
  }
  const std::vector<long> mid = refit_rounds(5000, 400000);
  if (mid.size() < 1000 || mid.size() > 40000) {
    return fail(name, 0,
                describe("refit count out of band", 0,
                         static_cast<double>(mid.size()), 27000.0));
  }
  long prev_gap = 0;
  for (std::size_t k = 1; k < mid.size(); ++k) {
    const long gap = mid[k] - mid[k - 1];
    if (gap < prev_gap) {
      return fail(name, k, "inter-refit gaps must be nondecreasing");
    }
    prev_gap = gap;
  }
  return pass(name, 3);
}

// ---------------------------------------------------------------------------
// Evaluation identities: oracle has zero regret; regret and disagreement
// agree with a brute-force recomputation; exact ties go to the lowest index.
SuiteResult suite_regret_identities(std::uint64_t seed) {
  const char* name = "regret_identities";
  const long cases = 200;
  const int models_per_instance = 50;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const ProblemInstance inst =
        small_instance(seed * 7000 + 7 * (i / models_per_instance));
    if (i % models_per_instance == 0) {
      if (expected_regret(inst, truth_model(inst)) != 0.0) {
        return fail(name, i, "oracle model must have exactly zero regret");
      }
      Eigen::VectorXd tied(4);
      tied << 1.0, 7.0, 7.0, 3.0;
      if (top_action(tied) != 1) {
        return fail(name, i, "ties must resolve to the lowest index");
      }
    }
    const double mag = std::pow(10.0, -3.0 + 3.5 * rng.next_double());
    const RewardModel q = perturbed_model(inst, rng, mag);

    // Brute force through the scalar scoring path.
    const RewardModel truth = truth_model(inst);
    double brute_regret = 0.0, brute_mass = 0.0;
    for (int u = 0; u < inst.num_users; ++u) {
      const double wu = inst.user_dist[u] / inst.num_contexts(u);
      for (int c = 0; c < inst.num_contexts(u); ++c) {
        const Eigen::VectorXd x = inst.contexts[u].row(c).transpose();
        int best_t = 0, best_q = 0;
        double val_t = -1e300, val_q = -1e300;
        for (int a = 0; a < inst.num_actions(u); ++a) {
          const Eigen::VectorXd act = inst.actions[u].row(a).transpose();
          const double st = raw_score(truth, u, x, act);
          const double sq = raw_score(q, u, x, act);
          if (st > val_t) {
            val_t = st;
            best_t = a;
          }
          if (sq > val_q) {
            val_q = sq;
            best_q = a;
          }
        }
        const double chosen_truth =
            raw_score(truth, u, x, inst.actions[u].row(best_q).transpose());
        brute_regret += wu * (val_t - chosen_truth);
        if (best_t != best_q) brute_mass += wu;
      }
    }
    const double regret = expected_regret(inst, q);
    const double mass = disagreement_mass(inst, q);
    if (std::abs(regret - brute_regret) > 1e-12 * std::max(1.0, brute_regret)) {
      return fail(name, i,
                  describe("expected_regret mismatch", i, regret,
                           brute_regret));
    }
    if (std::abs(mass - brute_mass) > 1e-12) {
      return fail(name, i,
                  describe("disagreement mismatch", i, mass, brute_mass));
    }
  }
  return pass(name, cases);
}

// ---------------------------------------------------------------------------
// mnl_probs lands on the simplex and matches mnl_loss.
SuiteResult suite_mnl_consistency(std::uint64_t seed) {
  const char* name = "mnl_probs_loss_consistency";
  const long cases = 1000;
  for (long i = 0; i < cases; ++i) {
    Rng rng = Rng::stream(seed, i, stream_id::kTest);
    const int n = 2 + static_cast<int>(rng.next_below(7));
    const Eigen::VectorXd v = random_gaussian(rng, n, 4.0);
    const Eigen::VectorXd p = mnl_probs(v);
    if (std::abs(p.sum() - 1.0) > 1e-12 || p.minCoeff() < 0.0) {
      return fail(name, i, describe("not a distribution", i, p.sum(), 1.0));
    }
    const int label = static_cast<int>(rng.next_below(n));
    const double loss = mnl_loss(v, label);
    if (std::abs(loss + std::log(p(label))) > 1e-12 * std::max(1.0, loss)) {
      return fail(name, i,
                  describe("loss and probs disagree", i, loss,
                           -std::log(p(label))));
    }
  }
  return pass(name, cases);
}

}  // namespace

const std::vector<Suite>& verification_suites() {
  static const std::vector<Suite> suites = {
      {"centering_invariance", suite_centering_invariance},
      {"loss_envelope", suite_loss_envelope},
      {"loss_lipschitz", suite_loss_lipschitz},
      {"excess_loss_is_kl", suite_excess_loss_kl},
      {"tilt_likelihood_ratio", suite_tilt_envelope},
      {"choice_kl_variance_floor", suite_choice_kl_variance},
      {"softmax_kl_quadratic", suite_softmax_kl_quadratic},
      {"regret_disagreement_sandwich", suite_regret_sandwich},
      {"misrec_implies_sup_error", suite_misrec_sup_error},
      {"selector_stability", suite_selector_stability},
      {"gap_scale_homogeneity", suite_gap_scaling},
      {"drd_scale_law", suite_drd_scaling},
      {"instance_determinism", suite_instance_determinism},
      {"refit_schedule_shape", suite_refit_schedule},
      {"regret_identities", suite_regret_identities},
      {"mnl_probs_loss_consistency", suite_mnl_consistency},
  };
  return suites;
}

std::vector<SuiteResult> run_all_suites(std::uint64_t seed) {
  std::vector<SuiteResult> results;
  std::uint64_t salt = 0;
  for (const Suite& suite : verification_suites()) {
    results.push_back(suite.run(mix64(seed + (++salt) * 0x9e3779b97f4a7c15ull)));
  }
  return results;
}

}  // namespace persalign
