#include "persalign/offline.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "persalign/io.hpp"
#include "persalign/policy.hpp"

namespace persalign {

PrefDataset log_offline_dataset(const ProblemInstance& inst, long n,
                                int slate_size, std::uint64_t seed) {
  if (n < 0) throw InvalidConfig("offline log size must be nonnegative");
  if (slate_size < 1 || slate_size > kMaxSlate) {
    throw InvalidConfig("offline slate size out of range");
  }
  const RewardModel truth = truth_model(inst);
  std::vector<Eigen::MatrixXd> truth_mats(inst.num_users);
  for (int u = 0; u < inst.num_users; ++u) {
    truth_mats[u] = user_score_matrix(truth, u);
  }

  PrefDataset data(inst.num_users);
  Eigen::VectorXd slate_scores(slate_size);
  for (long s = 0; s < n; ++s) {
    Rng arrival = Rng::stream(seed, s, stream_id::kArrival);
    const int u = arrival.next_categorical(inst.user_dist);
    const int c = static_cast<int>(arrival.next_below(inst.num_contexts(u)));

    // Reference policy: every slot uniform over the bank, independently.
    Rng slate_rng = Rng::stream(seed, s, stream_id::kSlate);
    PrefRecord rec;
    rec.user = static_cast<std::uint16_t>(u);
    rec.ctx = static_cast<std::uint16_t>(c);
    rec.slate_size = static_cast<std::uint8_t>(slate_size);
    const Eigen::VectorXd xw =
        truth_mats[u].transpose() * inst.contexts[u].row(c).transpose();
    for (int k = 0; k < slate_size; ++k) {
      const int a = static_cast<int>(slate_rng.next_below(inst.num_actions(u)));
      rec.slate[k] = static_cast<std::uint16_t>(a);
      slate_scores(k) = inst.actions[u].row(a).dot(xw);
    }
    Rng choice_rng = Rng::stream(seed, s, stream_id::kChoice);
    rec.label = static_cast<std::uint8_t>(sample_choice(slate_scores, choice_rng));
    data.append(rec);
  }
  return data;
}

std::vector<long> checkpoint_sizes(long n_total, int n_checkpoints) {
  if (n_total < 1) throw InvalidConfig("n_total must be at least 1");
  if (n_checkpoints < 2) {
    throw InvalidConfig("need at least two checkpoints (0 and n_total)");
  }
  std::vector<long> sizes;
  sizes.reserve(n_checkpoints);
  for (int i = 0; i < n_checkpoints; ++i) {
    const double frac =
        static_cast<double>(i) / static_cast<double>(n_checkpoints - 1);
    sizes.push_back(std::lround(frac * static_cast<double>(n_total)));
  }
  sizes.front() = 0;
  sizes.back() = n_total;
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw InvalidConfig(
          "checkpoints collide; reduce n_checkpoints or grow n_total");
    }
  }
  return sizes;
}

namespace {

struct SeedOutcome {
  std::vector<SweepRow> rows;
  std::vector<FitReport> fit_reports;
};

SeedOutcome sweep_one_seed(const ProblemInstance& inst,
                           const OfflineConfig& cfg, const FitConfig& fit_cfg,
                           std::uint64_t seed,
                           const std::vector<long>& checkpoints) {
  const PrefDataset full =
      log_offline_dataset(inst, cfg.n_total, cfg.slate_size, seed);

  SeedOutcome out;
  PrefDataset prefix(inst.num_users);
  long consumed = 0;
  RewardModel model = zero_model(inst);
  bool ever_fitted = false;
  for (long n : checkpoints) {
    while (consumed < n) {
      prefix.append(full[consumed]);
      ++consumed;
    }
    if (n > 0) {
      // The zero model is a stationary point of the bilinear objective, so
      // the first data fit must leave it via the initializer; afterwards the
      // warm path reuses the previous checkpoint's solution.
      if (!cfg.warm_start_across_prefixes || !ever_fitted) {
        model = init_gradient_svd(prefix, inst);
      }
      FitReport report = fit(model, prefix, inst, fit_cfg);
      // A fit that never left the saddle (every record so far uninformative)
      // must not be warm started; the next checkpoint re-inits instead.
      ever_fitted = !is_zero_model(model);
      report.round = static_cast<int>(n);
      out.fit_reports.push_back(report);
    }
    const double regret = expected_regret(inst, model, cfg.weighting);
    out.rows.push_back({seed, n, regret, regret == 0.0});
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const ProblemInstance& inst, const OfflineConfig& cfg,
                      const FitConfig& fit_cfg, int jobs) {
  if (cfg.seeds.empty()) throw InvalidConfig("offline sweep needs seeds");
  if (jobs < 1) throw InvalidConfig("jobs must be at least 1");
  const std::vector<long> checkpoints =
      checkpoint_sizes(cfg.n_total, cfg.n_checkpoints);

  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  if (jobs == 1 || cfg.seeds.size() == 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      outcomes[i] = sweep_one_seed(inst, cfg, fit_cfg, cfg.seeds[i],
                                   checkpoints);
    }
  } else {
    // Seeds are independent; results are gathered in seed order, so the
    // output is identical whatever the scheduling.
    std::vector<std::future<SeedOutcome>> futures;
    futures.reserve(cfg.seeds.size());
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      futures.push_back(std::async(std::launch::async, [&, i] {
        return sweep_one_seed(inst, cfg, fit_cfg, cfg.seeds[i], checkpoints);
      }));
    }
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      outcomes[i] = futures[i].get();
    }
  }

  SweepResult result;
  for (auto& o : outcomes) {
    result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
    result.fit_reports.insert(result.fit_reports.end(), o.fit_reports.begin(),
                              o.fit_reports.end());
  }
  return result;
}

DecayFit fit_decay_rate(const std::vector<std::pair<long, double>>& points) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& [n, regret] : points) {
    if (regret > 0.0) {
      xy.emplace_back(static_cast<double>(n), std::log(regret));
    }
  }
  DecayFit fitres;
  fitres.positive_points = static_cast<int>(xy.size());
  if (xy.size() < 5) {
    throw InsufficientPositivePoints(
        "decay fit needs at least 5 positive checkpoints, got " +
        std::to_string(xy.size()));
  }
  double sx = 0, sy = 0;
  for (const auto& [x, y] : xy) {
    sx += x;
    sy += y;
  }
  const double n = static_cast<double>(xy.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) {
    throw InsufficientPositivePoints("decay fit: all checkpoints coincide");
  }
  fitres.slope = sxy / sxx;
  fitres.intercept = my - fitres.slope * mx;
  const double ss_res = syy - fitres.slope * sxy;
  // Constant series: the horizontal fit is exact, so report 1 rather than
  // divide by zero.
  fitres.r_squared = (syy == 0.0) ? 1.0 : 1.0 - ss_res / syy;
  return fitres;
}

DecayFit fit_decay_rate(const SweepResult& sweep, std::uint64_t seed) {
  std::vector<std::pair<long, double>> points;
  for (const SweepRow& row : sweep.rows) {
    if (row.seed == seed) points.emplace_back(row.n, row.mean_regret);
  }
  if (points.empty()) {
    throw InsufficientPositivePoints("decay fit: no rows for that seed");
  }
  return fit_decay_rate(points);
}

std::optional<long> zero_regret_burn_in(const SweepResult& sweep,
                                        std::uint64_t seed) {
  std::vector<const SweepRow*> rows;
  for (const SweepRow& row : sweep.rows) {
    if (row.seed == seed) rows.push_back(&row);
  }
  if (rows.empty() || !rows.back()->zero_flag) return std::nullopt;
  long start = rows.back()->n;
  for (auto it = rows.rbegin(); it != rows.rend() && (*it)->zero_flag; ++it) {
    start = (*it)->n;
  }
  return start;
}

std::string sweep_to_csv(const SweepResult& sweep) {
  std::string out = "seed,n,mean_regret,zero_flag\n";
  for (const SweepRow& row : sweep.rows) {
    out += std::to_string(row.seed);
    out += ',';
    out += std::to_string(row.n);
    out += ',';
    out += format_double(row.mean_regret);
    out += ',';
    out += row.zero_flag ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string decay_to_json(const SweepResult& sweep, const OfflineConfig& cfg) {
  std::string out = "{\n  \"schema_version\": 1,\n  \"per_seed\": [";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (i) out += ',';
    out += "\n    {\"seed\": " + std::to_string(cfg.seeds[i]) + ", ";
    try {
      const DecayFit d = fit_decay_rate(sweep, cfg.seeds[i]);
      out += "\"slope\": " + format_double(d.slope) + ", ";
      out += "\"intercept\": " + format_double(d.intercept) + ", ";
      out += "\"r_squared\": " + format_double(d.r_squared) + ", ";
      out += "\"positive_points\": " + std::to_string(d.positive_points);
    } catch (const InsufficientPositivePoints&) {
      out += "\"slope\": null, \"intercept\": null, \"r_squared\": null, "
             "\"positive_points\": null";
    }
    const auto burn = zero_regret_burn_in(sweep, cfg.seeds[i]);
    out += ", \"zero_regret_burn_in\": ";
    out += burn ? std::to_string(*burn) : "null";
    out += "}";
  }
  out += "\n  ]\n}\n";
  return out;
}

}  // namespace persalign
