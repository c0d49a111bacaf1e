#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "persalign/diversity.hpp"
#include "persalign/errors.hpp"
#include "persalign/instance.hpp"
#include "persalign/score.hpp"

using namespace persalign;

namespace {

// Hand-built instance: one user, explicit reward list via d=1 bilinear with
// W=[[1]], head=(1), context (1), action k = (reward_k).
ProblemInstance reward_list_instance(const std::vector<double>& rewards) {
  ProblemInstance inst;
  inst.dim_d = 1;
  inst.dim_j = 1;
  inst.num_users = 1;
  inst.w_true = {Eigen::MatrixXd::Ones(1, 1)};
  inst.heads_true = Eigen::MatrixXd::Ones(1, 1);
  inst.contexts = {Eigen::MatrixXd::Ones(1, 1)};
  Eigen::MatrixXd acts(static_cast<int>(rewards.size()), 1);
  for (int i = 0; i < acts.rows(); ++i) acts(i, 0) = rewards[i];
  inst.actions = {acts};
  inst.user_dist = {1.0};
  inst.head_scale = 1.0;
  return inst;
}

InstanceConfig small_cfg() {
  InstanceConfig cfg;
  cfg.dim_d = 2;
  cfg.dim_j = 2;
  cfg.num_users = 3;
  cfg.contexts_per_user = 3;
  cfg.actions_per_user = 4;
  cfg.raw_gap_target = 0.05;
  cfg.head_scale = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("identical config and seed give a bit-identical instance") {
  const InstanceConfig cfg = small_cfg();
  const ProblemInstance a = generate_instance(cfg, 7);
  const ProblemInstance b = generate_instance(cfg, 7);
  CHECK(instance_to_json(a) == instance_to_json(b));
  const ProblemInstance c = generate_instance(cfg, 8);
  CHECK(instance_to_json(a) != instance_to_json(c));
}

TEST_CASE("accepted instances meet the gap target with unique argmaxes") {
  InstanceConfig cfg = small_cfg();
  cfg.head_scale = 3.0;
  const ProblemInstance inst = generate_instance(cfg, 1);
  const GapStats gs = gap_stats(inst);
  CHECK(gs.min_gap >= cfg.raw_gap_target * cfg.head_scale);
  // Unique argmax on every pair: top two rewards strictly separated.
  const RewardModel truth = truth_model(inst);
  for (int u = 0; u < inst.num_users; ++u) {
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      Eigen::VectorXd s = bank_scores(truth, inst, u, c);
      std::vector<double> v(s.data(), s.data() + s.size());
      std::sort(v.begin(), v.end());
      CHECK(v[v.size() - 1] > v[v.size() - 2]);
    }
  }
  CHECK(inst.seed >= 1);
}

TEST_CASE("gap statistics match an exhaustive rescan exactly") {
  const ProblemInstance inst = generate_instance(small_cfg(), 3);
  const RewardModel truth = truth_model(inst);
  std::vector<double> gaps;
  double sum = 0.0;
  for (int u = 0; u < inst.num_users; ++u) {
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      // Independent top-two scan over the bank.
      double best = -1e300, second = -1e300;
      for (int a = 0; a < inst.num_actions(u); ++a) {
        const double r =
            raw_score(truth, u, inst.contexts[u].row(c).transpose(),
                      inst.actions[u].row(a).transpose());
        if (r > best) {
          second = best;
          best = r;
        } else if (r > second) {
          second = r;
        }
      }
      gaps.push_back(best - second);
      sum += best - second;
    }
  }
  std::sort(gaps.begin(), gaps.end());
  const GapStats gs = gap_stats(inst);
  // The rescan sums scores in a different order, so compare to the last
  // couple of bits rather than exactly.
  CHECK(gs.min_gap == doctest::Approx(gaps.front()).epsilon(1e-12));
  const auto rank = [&](double q) {
    const std::size_t n = gaps.size();
    std::size_t k = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(n)));
    if (k < 1) k = 1;
    return gaps[k - 1];
  };
  CHECK(gs.pct5_gap == doctest::Approx(rank(0.05)).epsilon(1e-12));
  CHECK(gs.median_gap == doctest::Approx(rank(0.50)).epsilon(1e-12));
  CHECK(gs.mean_gap == doctest::Approx(sum / gaps.size()).epsilon(1e-12));
  CHECK(gs.min_gap <= gs.pct5_gap);
  CHECK(gs.pct5_gap <= gs.median_gap);
}

TEST_CASE("analytic one-by-one bilinear case") {
  // Rewards (1, -1): gap exactly 2.
  const ProblemInstance inst = reward_list_instance({1.0, -1.0});
  const GapStats gs = gap_stats(inst);
  CHECK(gs.min_gap == 2.0);
  CHECK(gs.median_gap == 2.0);
  CHECK(gs.mean_gap == 2.0);
  CHECK(max_reward_range(inst) == 2.0);
}

TEST_CASE("single pair with rewards 3,1,0 has all statistics equal 2") {
  const ProblemInstance inst = reward_list_instance({3.0, 1.0, 0.0});
  const GapStats gs = gap_stats(inst);
  CHECK(gs.min_gap == 2.0);
  CHECK(gs.pct5_gap == 2.0);
  CHECK(gs.median_gap == 2.0);
  CHECK(gs.mean_gap == 2.0);
  CHECK(max_reward_range(inst) == 3.0);
}

TEST_CASE("gap statistics are positively homogeneous in the head scale") {
  ProblemInstance inst = generate_instance(small_cfg(), 11);
  const GapStats base = gap_stats(inst);

  ProblemInstance doubled = inst;
  scale_heads(doubled, 2.0);
  const GapStats g2 = gap_stats(doubled);
  // Power-of-two scaling is exact in floating point.
  CHECK(g2.min_gap == 2.0 * base.min_gap);
  CHECK(g2.pct5_gap == 2.0 * base.pct5_gap);
  CHECK(g2.median_gap == 2.0 * base.median_gap);
  CHECK(g2.mean_gap == 2.0 * base.mean_gap);
  CHECK(doubled.head_scale == 2.0 * inst.head_scale);

  ProblemInstance tripled = inst;
  scale_heads(tripled, 3.0);
  const GapStats g3 = gap_stats(tripled);
  CHECK(g3.min_gap == doctest::Approx(3.0 * base.min_gap).epsilon(1e-12));
  CHECK(g3.mean_gap == doctest::Approx(3.0 * base.mean_gap).epsilon(1e-12));
  CHECK_THROWS_AS(scale_heads(inst, 0.0), InvalidConfig);
}

TEST_CASE("degenerate generator confines heads to the requested rank") {
  InstanceConfig cfg = small_cfg();
  cfg.dim_j = 4;
  cfg.num_users = 8;
  cfg.actions_per_user = 6;
  cfg.head_rank = 2;
  const ProblemInstance inst = generate_degenerate_instance(cfg, 1);
  const DiversityReport rep = diversity_report(inst);
  CHECK(rep.numerical_rank == 2);
  CHECK(rep.min_eig <= 1e-10 * rep.g_lambda_eigs.front());
  CHECK_FALSE(rep.verdict_full_rank);
  CHECK(gap_stats(inst).min_gap >= cfg.raw_gap_target * cfg.head_scale);

  cfg.head_rank = 0;
  CHECK_THROWS_AS(generate_degenerate_instance(cfg, 1), InvalidConfig);
}

TEST_CASE("unreachable gap targets and bad dimensions are rejected") {
  InstanceConfig cfg = small_cfg();
  cfg.raw_gap_target = 1e7;
  cfg.max_retries = 5;
  CHECK_THROWS_AS(generate_instance(cfg, 1), GapUnreachable);
  try {
    generate_instance(cfg, 1);
  } catch (const GapUnreachable& e) {
    CHECK(e.attempts == 5);
    CHECK(e.target == 1e7);
    CHECK(e.best_min_gap < 1e7);
  }

  InstanceConfig bad = small_cfg();
  bad.dim_d = 0;
  CHECK_THROWS_AS(generate_instance(bad, 1), InvalidConfig);
  bad = small_cfg();
  bad.actions_per_user = 1;
  CHECK_THROWS_AS(generate_instance(bad, 1), InvalidConfig);
}

TEST_CASE("user distribution is validated and honored") {
  InstanceConfig cfg = small_cfg();
  cfg.user_dist = {0.5, 0.25, 0.25};
  const ProblemInstance inst = generate_instance(cfg, 1);
  CHECK(inst.user_dist == cfg.user_dist);

  cfg.user_dist = {0.5, 0.25};  // wrong length
  CHECK_THROWS_AS(generate_instance(cfg, 1), InvalidConfig);
  cfg.user_dist = {0.5, 0.25, 0.1};  // does not sum to 1
  CHECK_THROWS_AS(generate_instance(cfg, 1), InvalidConfig);
  cfg.user_dist = {1.5, -0.25, -0.25};  // negative entries
  CHECK_THROWS_AS(generate_instance(cfg, 1), InvalidConfig);

  // Default marginal is uniform.
  const ProblemInstance uni = generate_instance(small_cfg(), 1);
  for (double p : uni.user_dist) CHECK(p == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("json serialization round-trips bit for bit") {
  const ProblemInstance inst = generate_instance(small_cfg(), 5);
  const std::string text = instance_to_json(inst);
  const ProblemInstance back = instance_from_json(text);
  CHECK(instance_to_json(back) == text);
  CHECK(back.seed == inst.seed);
  CHECK(back.head_scale == inst.head_scale);
  CHECK(back.heads_true == inst.heads_true);
  for (int j = 0; j < inst.dim_j; ++j) CHECK(back.w_true[j] == inst.w_true[j]);

  CHECK_THROWS_AS(instance_from_json("{\"schema_version\": 99}"),
                  InvalidConfig);
  CHECK_THROWS(instance_from_json("not json at all"));
}

TEST_CASE("file round trip preserves every byte") {
  const ProblemInstance inst = generate_instance(small_cfg(), 9);
  const std::string path = "/tmp/persalign_test_inst.json";
  write_instance(inst, path);
  const ProblemInstance back = read_instance(path);
  CHECK(instance_to_json(back) == instance_to_json(inst));
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_instance("/tmp/persalign_no_such_file.json"),
                  RuntimeFailure);
}
