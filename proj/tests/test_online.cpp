#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "persalign/instance.hpp"
#include "persalign/online.hpp"
#include "persalign/regret.hpp"
#include "persalign/score.hpp"

using namespace persalign;

namespace {

ProblemInstance tiny_instance(std::uint64_t seed = 21) {
  InstanceConfig cfg;
  cfg.dim_d = 2;
  cfg.dim_j = 2;
  cfg.num_users = 3;
  cfg.contexts_per_user = 6;
  cfg.actions_per_user = 8;
  cfg.raw_gap_target = 0.05;
  return generate_instance(cfg, seed);
}

OnlineConfig quick_config(long horizon, long divisor,
                          LearnerKind learner = LearnerKind::kErm) {
  OnlineConfig cfg;
  cfg.horizon = horizon;
  cfg.refit_divisor = divisor;
  cfg.run_seed = 9;
  cfg.learner = learner;
  return cfg;
}

FitConfig quick_fit() {
  FitConfig f;
  f.max_rep_updates = 6;
  f.max_head_updates = 6;
  return f;
}

}  // namespace

TEST_CASE("a huge divisor refits every round") {
  const std::vector<long> rounds = refit_rounds(1000, 50);
  REQUIRE(rounds.size() == 50);
  for (long r = 1; r <= 50; ++r) CHECK(rounds[r - 1] == r);
}

TEST_CASE("divisor one doubles the gap every refit") {
  const std::vector<long> rounds = refit_rounds(1, 100);
  const std::vector<long> expect = {1, 2, 4, 8, 16, 32, 64};
  CHECK(rounds == expect);
}

TEST_CASE("the divisor-5000 schedule lands in the planned budget") {
  const std::vector<long> rounds = refit_rounds(5000, 400000);
  CHECK(rounds.size() >= 1000);
  CHECK(rounds.size() <= 40000);
  for (std::size_t i = 2; i < rounds.size(); ++i) {
    CHECK(rounds[i] - rounds[i - 1] >= rounds[i - 1] - rounds[i - 2]);
  }
  CHECK(rounds.front() == 1);
}

TEST_CASE("a one-round run charges the zero model") {
  const ProblemInstance inst = tiny_instance();
  const OnlineRunResult res = run_online(inst, quick_config(1, 1), quick_fit());
  REQUIRE(res.trace.size() == 1);
  const TraceRow& row = res.trace[0];
  CHECK(row.round == 1);
  CHECK(row.cumulative == row.one_step_regret);
  CHECK(row.refit_occurred);  // round 1 always fires, deploys at round 2
  CHECK(res.summary.refit_count == 1);

  // The zero model scores every action 0, so it serves the lowest index.
  const Eigen::VectorXd s =
      bank_scores(truth_model(inst), inst, row.user, row.ctx);
  CHECK(row.one_step_regret ==
        doctest::Approx(s.maxCoeff() - s(0)).epsilon(1e-12));
}

TEST_CASE("the oracle learner has exactly zero regret and never refits") {
  const ProblemInstance inst = tiny_instance();
  OnlineConfig cfg = quick_config(300, 10, LearnerKind::kOracle);
  cfg.eval_cadence = 100;
  const OnlineRunResult res = run_online(inst, cfg, quick_fit());
  CHECK(res.summary.cumulative_regret == 0.0);
  CHECK(res.summary.last_positive_round == 0);
  CHECK(res.summary.substantial_fraction == 0.0);
  CHECK(res.summary.refit_count == 0);
  CHECK(res.fit_reports.empty());
  for (const TraceRow& row : res.trace) {
    CHECK(row.one_step_regret == 0.0);
    CHECK_FALSE(row.refit_occurred);
  }
  REQUIRE(res.summary.expected_regret_curve.size() == 3);
  for (const auto& [round, value] : res.summary.expected_regret_curve) {
    CHECK(value == 0.0);
  }
}

TEST_CASE("the frozen zero learner always serves the first action") {
  const ProblemInstance inst = tiny_instance();
  const OnlineRunResult res =
      run_online(inst, quick_config(120, 10, LearnerKind::kZero), quick_fit());
  CHECK(res.summary.refit_count == 0);
  const RewardModel truth = truth_model(inst);
  for (const TraceRow& row : res.trace) {
    const Eigen::VectorXd s = bank_scores(truth, inst, row.user, row.ctx);
    CHECK(row.one_step_regret ==
          doctest::Approx(s.maxCoeff() - s(0)).epsilon(1e-12));
  }
}

TEST_CASE("cumulative regret is the exact running sum") {
  const ProblemInstance inst = tiny_instance();
  const OnlineRunResult res =
      run_online(inst, quick_config(200, 25), quick_fit());
  double running = 0.0;
  for (const TraceRow& row : res.trace) {
    running += row.one_step_regret;
    CHECK(row.cumulative == running);  // same additions in the same order
    CHECK(row.one_step_regret >= 0.0);
  }
  CHECK(res.summary.cumulative_regret == running);
}

TEST_CASE("refits happen exactly on the scheduled rounds") {
  const ProblemInstance inst = tiny_instance();
  const OnlineRunResult res = run_online(inst, quick_config(200, 7), quick_fit());
  std::vector<long> fired;
  for (const TraceRow& row : res.trace) {
    if (row.refit_occurred) fired.push_back(row.round);
  }
  CHECK(fired == refit_rounds(7, 200));
  CHECK(res.fit_reports.size() == fired.size());
  for (std::size_t i = 0; i < fired.size(); ++i) {
    CHECK(res.fit_reports[i].round == static_cast<int>(fired[i]));
  }
}

TEST_CASE("identical configurations reproduce the trace bit for bit") {
  const ProblemInstance inst = tiny_instance();
  const OnlineConfig cfg = quick_config(150, 20);
  const OnlineRunResult a = run_online(inst, cfg, quick_fit());
  const OnlineRunResult b = run_online(inst, cfg, quick_fit());
  CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));
  CHECK(summary_to_json(a.summary) == summary_to_json(b.summary));

  OnlineConfig other = cfg;
  other.run_seed = 10;
  const OnlineRunResult c = run_online(inst, other, quick_fit());
  CHECK(trace_to_csv(a.trace) != trace_to_csv(c.trace));
}

TEST_CASE("the evaluation curve samples the deployed model on cadence") {
  const ProblemInstance inst = tiny_instance();
  OnlineConfig cfg = quick_config(100, 10);
  cfg.eval_cadence = 25;
  const OnlineRunResult res = run_online(inst, cfg, quick_fit());
  REQUIRE(res.summary.expected_regret_curve.size() == 4);
  long expect_round = 25;
  for (const auto& [round, value] : res.summary.expected_regret_curve) {
    CHECK(round == expect_round);
    CHECK(value >= 0.0);
    expect_round += 25;
  }
}

TEST_CASE("summaries match a hand count on a synthetic trace") {
  std::vector<TraceRow> trace;
  const std::vector<double> regrets = {0.0, 1.5, 0.0, 0.0, 2.0, 0.0};
  double cum = 0.0;
  for (std::size_t i = 0; i < regrets.size(); ++i) {
    cum += regrets[i];
    const bool refit = (i == 1 || i == 4);
    trace.push_back({static_cast<long>(i + 1), 0, 0, regrets[i], cum, refit});
  }
  OnlineConfig cfg;
  cfg.horizon = 6;
  const OnlineRunSummary s = summarize(trace, cfg);
  CHECK(s.cumulative_regret == 3.5);
  CHECK(s.last_positive_round == 5);
  CHECK(s.substantial_fraction == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  CHECK(s.refit_count == 2);
  REQUIRE(s.cumulative_at.count(3) == 1);
  CHECK(s.cumulative_at.at(3) == 1.5);
  REQUIRE(s.cumulative_at.count(6) == 1);
  CHECK(s.cumulative_at.at(6) == 3.5);
}

TEST_CASE("an all-zero trace summarizes to zero everywhere") {
  std::vector<TraceRow> trace;
  for (long r = 1; r <= 10; ++r) trace.push_back({r, 0, 0, 0.0, 0.0, false});
  OnlineConfig cfg;
  cfg.horizon = 10;
  const OnlineRunSummary s = summarize(trace, cfg);
  CHECK(s.cumulative_regret == 0.0);
  CHECK(s.last_positive_round == 0);
  CHECK(s.substantial_fraction == 0.0);
}

TEST_CASE("trace csv carries the exact header and one line per round") {
  const ProblemInstance inst = tiny_instance();
  const OnlineRunResult res = run_online(inst, quick_config(40, 5), quick_fit());
  const std::string csv = trace_to_csv(res.trace);
  CHECK(csv.rfind("round,user,context,one_step_regret,cumulative,refit_occurred\n",
                  0) == 0);
  long lines = 0;
  for (char ch : csv) {
    if (ch == '\n') ++lines;
  }
  CHECK(lines == 41);  // header plus one row per round
  CHECK(csv.substr(csv.size() - 2) == "1\n");  // round 40 is a refit round
}

TEST_CASE("summary json names every field") {
  const ProblemInstance inst = tiny_instance();
  OnlineConfig cfg = quick_config(50, 10);
  cfg.eval_cadence = 25;
  const OnlineRunResult res = run_online(inst, cfg, quick_fit());
  const std::string json = summary_to_json(res.summary);
  for (const char* key :
       {"schema_version", "horizon", "eta", "cumulative_regret",
        "cumulative_at", "last_positive_round", "substantial_fraction",
        "refit_count", "expected_regret_curve"}) {
    CHECK(json.find(key) != std::string::npos);
  }
}

TEST_CASE("the fitted learner beats the frozen zero learner") {
  const ProblemInstance inst = tiny_instance(22);
  const OnlineRunResult learned =
      run_online(inst, quick_config(600, 50), quick_fit());
  const OnlineRunResult frozen =
      run_online(inst, quick_config(600, 50, LearnerKind::kZero), quick_fit());
  CHECK(learned.summary.cumulative_regret <
        0.5 * frozen.summary.cumulative_regret);
  CHECK(expected_regret(inst, learned.final_model, PairWeighting::kUserDist) <
        expected_regret(inst, frozen.final_model, PairWeighting::kUserDist));
  // Late-phase accrual should be a small share once the fit settles.
  const double at_half = learned.summary.cumulative_at.at(300);
  const double tail = learned.summary.cumulative_regret - at_half;
  CHECK(tail < 0.5 * learned.summary.cumulative_regret);
}
