#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "persalign/errors.hpp"
#include "persalign/instance.hpp"
#include "persalign/offline.hpp"
#include "persalign/score.hpp"

using namespace persalign;

namespace {

ProblemInstance tiny_instance(std::uint64_t seed = 31) {
  InstanceConfig cfg;
  cfg.dim_d = 2;
  cfg.dim_j = 2;
  cfg.num_users = 3;
  cfg.contexts_per_user = 4;
  cfg.actions_per_user = 6;
  cfg.raw_gap_target = 0.05;
  return generate_instance(cfg, seed);
}

// Two actions with rewards +1 and -1 for the single user, so conditioned
// label frequencies have a closed form.
ProblemInstance two_action_instance() {
  ProblemInstance inst;
  inst.dim_d = 1;
  inst.dim_j = 1;
  inst.num_users = 1;
  inst.w_true = {Eigen::MatrixXd::Ones(1, 1)};
  inst.heads_true = Eigen::MatrixXd::Ones(1, 1);
  inst.contexts = {Eigen::MatrixXd::Ones(1, 1)};
  Eigen::MatrixXd acts(2, 1);
  acts << 1.0, -1.0;
  inst.actions = {acts};
  inst.user_dist = {1.0};
  return inst;
}

SweepResult hand_sweep(const std::vector<double>& regrets,
                       std::uint64_t seed = 7) {
  SweepResult sweep;
  long n = 0;
  for (double r : regrets) {
    sweep.rows.push_back({seed, n, r, r == 0.0});
    n += 10;
  }
  return sweep;
}

FitConfig quick_fit() {
  FitConfig f;
  f.max_rep_updates = 10;
  f.max_head_updates = 8;
  return f;
}

}  // namespace

TEST_CASE("checkpoint grids are evenly spaced and pinned at both ends") {
  const std::vector<long> big = checkpoint_sizes(100000, 100);
  REQUIRE(big.size() == 100);
  CHECK(big[0] == 0);
  CHECK(big[1] == 1010);
  CHECK(big[2] == 2020);
  CHECK(big.back() == 100000);
  for (std::size_t i = 1; i < big.size(); ++i) CHECK(big[i] > big[i - 1]);

  const std::vector<long> small = checkpoint_sizes(40, 5);
  CHECK(small == std::vector<long>({0, 10, 20, 30, 40}));
}

TEST_CASE("checkpoint grids reject collisions and bad shapes") {
  CHECK_THROWS_AS(checkpoint_sizes(3, 5), InvalidConfig);
  CHECK_THROWS_AS(checkpoint_sizes(0, 5), InvalidConfig);
  CHECK_THROWS_AS(checkpoint_sizes(100, 1), InvalidConfig);
}

TEST_CASE("logged datasets are reproducible and prefix-nested") {
  const ProblemInstance inst = tiny_instance();
  const PrefDataset a = log_offline_dataset(inst, 100, 2, 5);
  const PrefDataset b = log_offline_dataset(inst, 100, 2, 5);
  const PrefDataset prefix = log_offline_dataset(inst, 40, 2, 5);
  REQUIRE(a.size() == 100);
  REQUIRE(prefix.size() == 40);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].user == b[i].user);
    CHECK(a[i].ctx == b[i].ctx);
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].slate[0] == b[i].slate[0]);
    CHECK(a[i].slate[1] == b[i].slate[1]);
    if (i < prefix.size()) {
      CHECK(a[i].user == prefix[i].user);
      CHECK(a[i].ctx == prefix[i].ctx);
      CHECK(a[i].label == prefix[i].label);
      CHECK(a[i].slate[0] == prefix[i].slate[0]);
      CHECK(a[i].slate[1] == prefix[i].slate[1]);
    }
  }

  const PrefDataset other = log_offline_dataset(inst, 100, 2, 6);
  bool any_diff = false;
  for (std::size_t i = 0; i < other.size() && !any_diff; ++i) {
    any_diff = other[i].user != a[i].user || other[i].ctx != a[i].ctx ||
               other[i].slate[0] != a[i].slate[0] ||
               other[i].label != a[i].label;
  }
  CHECK(any_diff);
}

TEST_CASE("logged labels follow the truth preference model") {
  const ProblemInstance inst = two_action_instance();
  const long n = 20000;
  const PrefDataset data = log_offline_dataset(inst, n, 2, 11);

  // Conditioned on slate (0, 1) the first slot wins with sigmoid(2).
  long m01 = 0, wins01 = 0;
  long m00 = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const PrefRecord& r = data[i];
    if (r.slate[0] == 0 && r.slate[1] == 1) {
      ++m01;
      if (r.label == 0) ++wins01;
    }
    if (r.slate[0] == r.slate[1]) ++m00;
  }
  REQUIRE(m01 > 3000);
  const double p = 1.0 / (1.0 + std::exp(-2.0));
  const double freq = static_cast<double>(wins01) / static_cast<double>(m01);
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(m01));
  CHECK(std::abs(freq - p) < 3.0 * sigma);
  // Uniform independent slots: identical pairs show up about half the time.
  CHECK(m00 > n / 2 - 3 * 71);  // 3 sigma for Binomial(20000, 0.5)
  CHECK(m00 < n / 2 + 3 * 71);
}

TEST_CASE("logged arrivals follow the user marginal") {
  ProblemInstance inst = tiny_instance();
  inst.user_dist = {0.5, 0.3, 0.2};
  const long n = 6000;
  const PrefDataset data = log_offline_dataset(inst, n, 2, 12);
  std::vector<long> counts(3, 0);
  for (std::size_t i = 0; i < data.size(); ++i) ++counts[data[i].user];
  double chi2 = 0.0;
  for (int u = 0; u < 3; ++u) {
    const double expect = inst.user_dist[u] * static_cast<double>(n);
    chi2 += (counts[u] - expect) * (counts[u] - expect) / expect;
  }
  CHECK(chi2 < 9.21);  // df = 2 at the 0.01 level
}

TEST_CASE("log size and slate size are validated") {
  const ProblemInstance inst = tiny_instance();
  CHECK_THROWS_AS(log_offline_dataset(inst, -1, 2, 1), InvalidConfig);
  CHECK_THROWS_AS(log_offline_dataset(inst, 10, 0, 1), InvalidConfig);
  CHECK_THROWS_AS(log_offline_dataset(inst, 10, kMaxSlate + 1, 1),
                  InvalidConfig);
}

TEST_CASE("sweeps start from the zero model and order rows seed-major") {
  const ProblemInstance inst = tiny_instance();
  OfflineConfig cfg;
  cfg.n_total = 300;
  cfg.n_checkpoints = 6;
  cfg.seeds = {3, 1};
  const SweepResult sweep = run_sweep(inst, cfg, quick_fit());
  REQUIRE(sweep.rows.size() == 12);

  const double zero_reg =
      expected_regret(inst, zero_model(inst), cfg.weighting);
  for (int block = 0; block < 2; ++block) {
    const SweepRow& first = sweep.rows[block * 6];
    CHECK(first.seed == cfg.seeds[block]);
    CHECK(first.n == 0);
    CHECK(first.mean_regret == zero_reg);
    long prev = -1;
    for (int k = 0; k < 6; ++k) {
      const SweepRow& row = sweep.rows[block * 6 + k];
      CHECK(row.seed == cfg.seeds[block]);
      CHECK(row.n > prev);
      prev = row.n;
      CHECK(row.zero_flag == (row.mean_regret == 0.0));
      CHECK(row.mean_regret >= 0.0);
    }
  }
  // One fit per positive checkpoint per seed.
  CHECK(sweep.fit_reports.size() == 10);
}

TEST_CASE("sweeps are deterministic and learning beats the zero model") {
  const ProblemInstance inst = tiny_instance(32);
  OfflineConfig cfg;
  cfg.n_total = 400;
  cfg.n_checkpoints = 5;
  cfg.seeds = {2};
  const SweepResult warm = run_sweep(inst, cfg, quick_fit());
  const SweepResult warm2 = run_sweep(inst, cfg, quick_fit());
  CHECK(sweep_to_csv(warm) == sweep_to_csv(warm2));

  cfg.warm_start_across_prefixes = false;
  const SweepResult cold = run_sweep(inst, cfg, quick_fit());
  const SweepResult cold2 = run_sweep(inst, cfg, quick_fit());
  CHECK(sweep_to_csv(cold) == sweep_to_csv(cold2));

  const double zero_reg =
      expected_regret(inst, zero_model(inst), cfg.weighting);
  CHECK(warm.rows.back().mean_regret < zero_reg);
  CHECK(cold.rows.back().mean_regret < zero_reg);
}

TEST_CASE("threaded sweeps return the same rows as sequential ones") {
  const ProblemInstance inst = tiny_instance();
  OfflineConfig cfg;
  cfg.n_total = 200;
  cfg.n_checkpoints = 4;
  cfg.seeds = {1, 2};
  const SweepResult seq = run_sweep(inst, cfg, quick_fit(), 1);
  const SweepResult par = run_sweep(inst, cfg, quick_fit(), 2);
  CHECK(sweep_to_csv(seq) == sweep_to_csv(par));
}

TEST_CASE("sweep configuration is validated") {
  const ProblemInstance inst = tiny_instance();
  OfflineConfig cfg;
  cfg.seeds = {};
  CHECK_THROWS_AS(run_sweep(inst, cfg, quick_fit()), InvalidConfig);
  cfg.seeds = {1};
  CHECK_THROWS_AS(run_sweep(inst, cfg, quick_fit(), 0), InvalidConfig);
}

TEST_CASE("decay fits recover an exact exponential") {
  std::vector<std::pair<long, double>> points;
  const double a = 3.0, c = 5e-4;
  for (long n = 0; n <= 9000; n += 1000) {
    points.emplace_back(n, a * std::exp(-c * static_cast<double>(n)));
  }
  const DecayFit fit = fit_decay_rate(points);
  CHECK(fit.positive_points == 10);
  CHECK(fit.slope == doctest::Approx(-c).epsilon(1e-9));
  CHECK(fit.intercept == doctest::Approx(std::log(a)).epsilon(1e-9));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("constant series fit flat with a perfect r squared") {
  // Regret 1.0 everywhere: the logs are exactly zero, so the horizontal
  // line is an exact fit.
  std::vector<std::pair<long, double>> points;
  for (long n = 100; n <= 600; n += 100) points.emplace_back(n, 1.0);
  const DecayFit fit = fit_decay_rate(points);
  CHECK(fit.slope == 0.0);
  CHECK(fit.r_squared == 1.0);
}

TEST_CASE("decay fits demand five positive checkpoints") {
  std::vector<std::pair<long, double>> points = {
      {0, 3.0}, {10, 1.0}, {20, 0.5}, {30, 0.1}, {40, 0.0}, {50, 0.0}};
  CHECK_THROWS_AS(fit_decay_rate(points), InsufficientPositivePoints);

  const SweepResult sweep = hand_sweep({3.0, 1.0, 0.5, 0.1, 0.0});
  CHECK_THROWS_AS(fit_decay_rate(sweep, 7), InsufficientPositivePoints);
  CHECK_THROWS_AS(fit_decay_rate(sweep, 99), InsufficientPositivePoints);
}

TEST_CASE("burn-in is the start of the trailing zero run") {
  CHECK(zero_regret_burn_in(hand_sweep({3.0, 1.0, 0.0, 0.0, 0.0}), 7) == 20);
  CHECK(zero_regret_burn_in(hand_sweep({3.0, 1.0, 0.0, 1.0, 0.0}), 7) == 40);
  CHECK(!zero_regret_burn_in(hand_sweep({3.0, 1.0, 0.0, 0.0, 0.5}), 7));
  CHECK(!zero_regret_burn_in(hand_sweep({1.0}), 99));  // no rows for the seed
}

TEST_CASE("sweep csv uses the pinned header") {
  const SweepResult sweep = hand_sweep({2.0, 0.0});
  const std::string csv = sweep_to_csv(sweep);
  CHECK(csv.rfind("seed,n,mean_regret,zero_flag\n", 0) == 0);
  CHECK(csv.find("7,0,2,0\n") != std::string::npos);
  CHECK(csv.find("7,10,0,1\n") != std::string::npos);
}

TEST_CASE("decay json reports per-seed fits and burn-in") {
  OfflineConfig cfg;
  cfg.seeds = {7};
  const SweepResult good =
      hand_sweep({3.0, 2.0, 1.5, 1.0, 0.5, 0.25, 0.0, 0.0});
  const std::string json = decay_to_json(good, cfg);
  for (const char* key : {"schema_version", "per_seed", "\"seed\": 7", "slope",
                          "r_squared", "\"zero_regret_burn_in\": 60"}) {
    CAPTURE(key);
    CHECK(json.find(key) != std::string::npos);
  }

  // Too few positive checkpoints: fields go null instead of failing.
  const std::string sparse = decay_to_json(hand_sweep({1.0, 0.0}), cfg);
  CHECK(sparse.find("\"slope\": null") != std::string::npos);
}
