#pragma once

// Greedy online loop.  Each round: draw an arrival (user from user_dist,
// context uniform from that user's bank), show a slate sampled under the
// tilted policy for the currently deployed model, log the truth-MNL choice,
// and record the one-step regret of the deployed model on that arrival.
// Refits happen on the full history according to a divisor schedule; a refit
// at round t deploys starting at round t+1, so regret is always charged to
// the model that actually served the arrival.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "persalign/dataset.hpp"
#include "persalign/fit.hpp"
#include "persalign/instance.hpp"
#include "persalign/policy.hpp"

namespace persalign {

// Which model serves recommendations.  The fitted learner is the subject of
// study; the oracle and frozen-zero learners are controls (no refits).
enum class LearnerKind { kErm, kOracle, kZero };

struct OnlineConfig {
  long horizon = 50000;
  double eta = 1.0;
  SlateMode slate_mode = SlateMode::kPaperBt;
  int slate_size = 2;
  long refit_divisor = 5000;
  bool warm_start = true;
  std::uint64_t run_seed = 1;
  // Every eval_cadence rounds the deployed model's exact expected regret
  // over the whole instance is recorded as a diagnostic curve; 0 disables.
  long eval_cadence = 0;
  LearnerKind learner = LearnerKind::kErm;
};

// Refit cadence: every round while round <= divisor, then with gaps of
// ceil(round / divisor), so the gap grows linearly and the total number of
// refits up to T is about divisor * (1 + ln(T / divisor)).
class RefitSchedule {
 public:
  explicit RefitSchedule(long divisor);
  bool fires(long round);  // rounds must be queried in increasing order

 private:
  long divisor_;
  long next_;
};

// All refit rounds up to and including horizon, for tests and planning.
std::vector<long> refit_rounds(long divisor, long horizon);

struct TraceRow {
  long round = 0;  // 1-based
  int user = 0;
  int ctx = 0;
  double one_step_regret = 0.0;
  double cumulative = 0.0;
  bool refit_occurred = false;
};

struct OnlineRunSummary {
  long horizon = 0;
  double eta = 0.0;
  double cumulative_regret = 0.0;
  std::map<long, double> cumulative_at;  // horizon/10 checkpoints
  long last_positive_round = 0;          // 0 when no round had regret
  double substantial_fraction = 0.0;     // rounds with positive regret / T
  long refit_count = 0;
  std::vector<std::pair<long, double>> expected_regret_curve;
};

struct OnlineRunResult {
  std::vector<TraceRow> trace;
  std::vector<FitReport> fit_reports;
  OnlineRunSummary summary;
  RewardModel final_model;
};

OnlineRunResult run_online(const ProblemInstance& inst,
                           const OnlineConfig& cfg, const FitConfig& fit_cfg);

OnlineRunSummary summarize(const std::vector<TraceRow>& trace,
                           const OnlineConfig& cfg);

// CSV with header "round,user,context,one_step_regret,cumulative,refit_occurred".
std::string trace_to_csv(const std::vector<TraceRow>& trace);

std::string summary_to_json(const OnlineRunSummary& s);

}  // namespace persalign
