#include "persalign/online.hpp"

#include <cmath>
#include <memory>

#include "persalign/io.hpp"
#include "persalign/regret.hpp"

namespace persalign {

RefitSchedule::RefitSchedule(long divisor) : divisor_(divisor), next_(1) {
  if (divisor < 1) throw InvalidConfig("refit divisor must be at least 1");
}

bool RefitSchedule::fires(long round) {
  if (round < next_) return false;
  // Gap until the next refit grows linearly with the current round: 1 while
  // round <= divisor, then ceil(round / divisor).
  next_ = round + (round + divisor_ - 1) / divisor_;
  return true;
}

std::vector<long> refit_rounds(long divisor, long horizon) {
  RefitSchedule sched(divisor);
  std::vector<long> rounds;
  for (long r = 1; r <= horizon; ++r) {
    if (sched.fires(r)) rounds.push_back(r);
  }
  return rounds;
}

namespace {

void validate(const ProblemInstance& inst, const OnlineConfig& cfg) {
  if (cfg.horizon < 1) throw InvalidConfig("horizon must be at least 1");
  if (!std::isfinite(cfg.eta) || cfg.eta < 0.0) {
    throw InvalidConfig("eta must be finite and nonnegative");
  }
  if (cfg.slate_size < 1 || cfg.slate_size > kMaxSlate) {
    throw InvalidConfig("slate_size out of range");
  }
  if (cfg.slate_mode == SlateMode::kPaperBt && cfg.slate_size != 2) {
    throw InvalidConfig("paper-bt slates have exactly two slots");
  }
  if (cfg.eval_cadence < 0) throw InvalidConfig("eval_cadence must be >= 0");
  if (inst.num_users < 1) throw InvalidConfig("instance has no users");
}

}  // namespace

OnlineRunResult run_online(const ProblemInstance& inst,
                           const OnlineConfig& cfg, const FitConfig& fit_cfg) {
  validate(inst, cfg);

  const RewardModel truth = truth_model(inst);
  // Truth argmax value and the per-user truth matrices are fixed for the
  // whole run; precompute them once.
  std::vector<Eigen::MatrixXd> truth_mats(inst.num_users);
  for (int u = 0; u < inst.num_users; ++u) {
    truth_mats[u] = user_score_matrix(truth, u);
  }
  std::vector<std::vector<double>> truth_best(inst.num_users);
  for (int u = 0; u < inst.num_users; ++u) {
    truth_best[u].resize(inst.num_contexts(u));
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      const Eigen::VectorXd s =
          inst.actions[u] *
          (truth_mats[u].transpose() * inst.contexts[u].row(c).transpose());
      truth_best[u][c] = s.maxCoeff();
    }
  }

  RewardModel model =
      cfg.learner == LearnerKind::kOracle ? truth : zero_model(inst);
  bool ever_fitted = false;
  auto policy = std::make_unique<TiltedPolicy>(inst, model, cfg.eta);
  // Deployed-model score matrices, refreshed lazily after refits.
  std::vector<Eigen::MatrixXd> model_mats(inst.num_users);
  std::vector<bool> model_mat_ready(inst.num_users, false);

  PrefDataset data(inst.num_users);
  RefitSchedule sched(cfg.refit_divisor);

  OnlineRunResult out;
  out.trace.reserve(cfg.horizon);

  double cumulative = 0.0;
  for (long t = 1; t <= cfg.horizon; ++t) {
    Rng arrival = Rng::stream(cfg.run_seed, t, stream_id::kArrival);
    const int u = arrival.next_categorical(inst.user_dist);
    const int c = static_cast<int>(arrival.next_below(inst.num_contexts(u)));

    Rng slate_rng = Rng::stream(cfg.run_seed, t, stream_id::kSlate);
    const Eigen::VectorXd& weights = policy->weights(u, c);
    const std::vector<int> slate =
        sample_slate(weights, cfg.slate_mode, cfg.slate_size, slate_rng);

    // Labels always come from the truth scores; eta shapes only the slate.
    const Eigen::VectorXd xw =
        truth_mats[u].transpose() * inst.contexts[u].row(c).transpose();
    Eigen::VectorXd slate_scores(cfg.slate_size);
    for (int k = 0; k < cfg.slate_size; ++k) {
      slate_scores(k) = inst.actions[u].row(slate[k]).dot(xw);
    }
    Rng choice_rng = Rng::stream(cfg.run_seed, t, stream_id::kChoice);
    const int label = sample_choice(slate_scores, choice_rng);

    PrefRecord rec;
    rec.user = static_cast<std::uint16_t>(u);
    rec.ctx = static_cast<std::uint16_t>(c);
    rec.slate_size = static_cast<std::uint8_t>(cfg.slate_size);
    rec.label = static_cast<std::uint8_t>(label);
    for (int k = 0; k < cfg.slate_size; ++k) {
      rec.slate[k] = static_cast<std::uint16_t>(slate[k]);
    }
    data.append(rec);

    // Regret is charged to the model that served this arrival; a refit this
    // round only deploys at round t+1.
    if (!model_mat_ready[u]) {
      model_mats[u] = user_score_matrix(model, u);
      model_mat_ready[u] = true;
    }
    const Eigen::VectorXd model_scores =
        inst.actions[u] *
        (model_mats[u].transpose() * inst.contexts[u].row(c).transpose());
    const int picked = top_action(model_scores);
    const double regret =
        truth_best[u][c] - inst.actions[u].row(picked).dot(xw);
    cumulative += regret;

    bool refit_now = false;
    if (cfg.learner == LearnerKind::kErm && sched.fires(t)) {
      refit_now = true;
      // The all-zero model is a stationary point of the bilinear objective
      // (each factor block's gradient vanishes when the other is zero), so
      // the first fit must start from the data-driven initializer; warm
      // starts only make sense once a fitted model exists.
      if (!cfg.warm_start || !ever_fitted) {
        model = init_gradient_svd(data, inst);
      }
      FitReport report = fit(model, data, inst, fit_cfg);
      // A fit that never left the saddle (every slate so far uninformative)
      // must not be warm started; the next refit re-inits on richer data.
      ever_fitted = !is_zero_model(model);
      report.round = static_cast<int>(t);
      out.fit_reports.push_back(report);
      policy = std::make_unique<TiltedPolicy>(inst, model, cfg.eta);
      model_mat_ready.assign(inst.num_users, false);
    }

    out.trace.push_back({t, u, c, regret, cumulative, refit_now});

    if (cfg.eval_cadence > 0 && t % cfg.eval_cadence == 0) {
      out.summary.expected_regret_curve.emplace_back(
          t, expected_regret(inst, model, PairWeighting::kUserDist));
    }
  }

  auto curve = std::move(out.summary.expected_regret_curve);
  out.summary = summarize(out.trace, cfg);
  out.summary.expected_regret_curve = std::move(curve);
  out.final_model = model;
  return out;
}

OnlineRunSummary summarize(const std::vector<TraceRow>& trace,
                           const OnlineConfig& cfg) {
  OnlineRunSummary s;
  s.horizon = cfg.horizon;
  s.eta = cfg.eta;
  if (trace.empty()) return s;
  s.cumulative_regret = trace.back().cumulative;
  long positives = 0;
  for (const TraceRow& row : trace) {
    if (row.one_step_regret > 0.0) {
      ++positives;
      s.last_positive_round = row.round;
    }
    if (row.refit_occurred) ++s.refit_count;
  }
  s.substantial_fraction =
      static_cast<double>(positives) / static_cast<double>(cfg.horizon);
  for (int k = 1; k <= 10; ++k) {
    const long checkpoint = (cfg.horizon * k) / 10;
    if (checkpoint >= 1 && checkpoint <= static_cast<long>(trace.size())) {
      s.cumulative_at[checkpoint] = trace[checkpoint - 1].cumulative;
    }
  }
  return s;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::string out =
      "round,user,context,one_step_regret,cumulative,refit_occurred\n";
  out.reserve(out.size() + trace.size() * 40);
  for (const TraceRow& row : trace) {
    out += std::to_string(row.round);
    out += ',';
    out += std::to_string(row.user);
    out += ',';
    out += std::to_string(row.ctx);
    out += ',';
    out += format_double(row.one_step_regret);
    out += ',';
    out += format_double(row.cumulative);
    out += ',';
    out += row.refit_occurred ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string summary_to_json(const OnlineRunSummary& s) {
  std::string out = "{\n  \"schema_version\": 1,\n";
  out += "  \"horizon\": " + std::to_string(s.horizon) + ",\n";
  out += "  \"eta\": " + format_double(s.eta) + ",\n";
  out += "  \"cumulative_regret\": " + format_double(s.cumulative_regret) +
         ",\n";
  out += "  \"cumulative_at\": {";
  bool first = true;
  for (const auto& [round, value] : s.cumulative_at) {
    if (!first) out += ", ";
    first = false;
    out += "\"" + std::to_string(round) + "\": " + format_double(value);
  }
  out += "},\n";
  out += "  \"last_positive_round\": " + std::to_string(s.last_positive_round) +
         ",\n";
  out += "  \"substantial_fraction\": " + format_double(s.substantial_fraction) +
         ",\n";
  out += "  \"refit_count\": " + std::to_string(s.refit_count) + ",\n";
  out += "  \"expected_regret_curve\": [";
  for (std::size_t i = 0; i < s.expected_regret_curve.size(); ++i) {
    if (i) out += ',';
    out += "[" + std::to_string(s.expected_regret_curve[i].first) + "," +
           format_double(s.expected_regret_curve[i].second) + "]";
  }
  out += "]\n}\n";
  return out;
}

}  // namespace persalign
