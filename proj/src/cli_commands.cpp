#include "persalign/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "persalign/diversity.hpp"
#include "persalign/instance.hpp"
#include "persalign/io.hpp"
#include "persalign/offline.hpp"
#include "persalign/online.hpp"
#include "persalign/policy.hpp"
#include "persalign/verify.hpp"

namespace persalign {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config validation.  Sections and keys outside these lists are typos until
// proven otherwise; reject them loudly instead of silently ignoring them.

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"instance",
       {"dim_d", "dim_j", "num_users", "contexts_per_user", "actions_per_user",
        "raw_gap_target", "head_scale", "max_retries", "head_rank", "seed",
        "user_dist"}},
      {"fit",
       {"ridge", "max_rep_updates", "max_head_updates", "tolerance",
        "armijo_c", "backtrack_start", "backtrack_factor"}},
      {"online",
       {"instance", "out", "horizon", "eta", "slate_mode", "slate_size",
        "refit_divisor", "warm_start", "run_seed", "eval_cadence", "learner"}},
      {"offline",
       {"instance", "out", "n_total", "n_checkpoints", "slate_size", "seeds",
        "warm_start_across_prefixes", "weighting"}},
  };
  return allowed;
}

void validate_sections(const ConfigFile& cfg) {
  const auto& allowed = allowed_keys();
  for (const auto& [section, keys] : cfg.sections) {
    const auto it = allowed.find(section);
    if (it == allowed.end()) {
      throw InvalidConfig("unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      (void)value;
      if (it->second.count(key) == 0) {
        throw InvalidConfig("unknown config key " + section + "." + key);
      }
    }
  }
}

ConfigFile load_config(const std::string& path) {
  ConfigFile cfg = parse_config_file(path);
  validate_sections(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Scalar list parsing for `seeds` and `user_dist` values.

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text,
                                           const std::string& where) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& part : split_commas(text)) {
    if (part.empty()) {
      throw InvalidConfig(where + ": empty entry in seed list '" + text + "'");
    }
    char* end = nullptr;
    const unsigned long long v = std::strtoull(part.c_str(), &end, 10);
    if (end == part.c_str() || *end != '\0') {
      throw InvalidConfig(where + ": bad seed '" + part + "'");
    }
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  return seeds;
}

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& where) {
  std::vector<double> out;
  for (const std::string& part : split_commas(text)) {
    if (part.empty()) {
      throw InvalidConfig(where + ": empty entry in list '" + text + "'");
    }
    char* end = nullptr;
    const double v = std::strtod(part.c_str(), &end);
    if (end == part.c_str() || *end != '\0') {
      throw InvalidConfig(where + ": bad number '" + part + "'");
    }
    out.push_back(v);
  }
  return out;
}

// PERSALIGN_SEED beats everything, then the explicit flag, then the config.
std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("PERSALIGN_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') {
    throw InvalidConfig(std::string("PERSALIGN_SEED is not an integer: '") +
                        raw + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::uint64_t resolve_seed(const CliOverrides& ov, std::uint64_t config_seed) {
  if (const auto env = env_seed()) return *env;
  if (ov.seed) return *ov.seed;
  return config_seed;
}

// ---------------------------------------------------------------------------
// Section -> struct builders.

InstanceConfig instance_config_from(const ConfigFile& cfg) {
  InstanceConfig ic;
  ic.dim_d = static_cast<int>(cfg.get_long("instance", "dim_d", ic.dim_d));
  ic.dim_j = static_cast<int>(cfg.get_long("instance", "dim_j", ic.dim_j));
  ic.num_users =
      static_cast<int>(cfg.get_long("instance", "num_users", ic.num_users));
  ic.contexts_per_user = static_cast<int>(
      cfg.get_long("instance", "contexts_per_user", ic.contexts_per_user));
  ic.actions_per_user = static_cast<int>(
      cfg.get_long("instance", "actions_per_user", ic.actions_per_user));
  ic.raw_gap_target =
      cfg.get_double("instance", "raw_gap_target", ic.raw_gap_target);
  ic.head_scale = cfg.get_double("instance", "head_scale", ic.head_scale);
  ic.max_retries =
      static_cast<int>(cfg.get_long("instance", "max_retries", ic.max_retries));
  ic.head_rank =
      static_cast<int>(cfg.get_long("instance", "head_rank", ic.head_rank));
  if (cfg.has("instance", "user_dist")) {
    ic.user_dist = parse_double_list(cfg.get("instance", "user_dist", ""),
                                     "instance.user_dist");
  }
  return ic;
}

FitConfig fit_config_from(const ConfigFile& cfg) {
  FitConfig fc;
  fc.ridge = cfg.get_double("fit", "ridge", fc.ridge);
  fc.max_rep_updates = static_cast<int>(
      cfg.get_long("fit", "max_rep_updates", fc.max_rep_updates));
  fc.max_head_updates = static_cast<int>(
      cfg.get_long("fit", "max_head_updates", fc.max_head_updates));
  fc.tolerance = cfg.get_double("fit", "tolerance", fc.tolerance);
  fc.armijo_c = cfg.get_double("fit", "armijo_c", fc.armijo_c);
  fc.backtrack_start =
      cfg.get_double("fit", "backtrack_start", fc.backtrack_start);
  fc.backtrack_factor =
      cfg.get_double("fit", "backtrack_factor", fc.backtrack_factor);
  return fc;
}

LearnerKind learner_from_string(const std::string& s) {
  if (s == "erm") return LearnerKind::kErm;
  if (s == "oracle") return LearnerKind::kOracle;
  if (s == "zero") return LearnerKind::kZero;
  throw InvalidMode("unknown learner '" + s + "' (erm, oracle, zero)");
}

const char* learner_to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::kErm: return "erm";
    case LearnerKind::kOracle: return "oracle";
    case LearnerKind::kZero: return "zero";
  }
  return "erm";
}

PairWeighting weighting_from_string(const std::string& s) {
  if (s == "uniform-pair" || s == "uniform_pair") {
    return PairWeighting::kUniformPair;
  }
  if (s == "user-dist" || s == "user_dist") return PairWeighting::kUserDist;
  throw InvalidMode("unknown weighting '" + s +
                    "' (uniform-pair, user-dist)");
}

const char* weighting_to_string(PairWeighting w) {
  return w == PairWeighting::kUniformPair ? "uniform-pair" : "user-dist";
}

// ---------------------------------------------------------------------------
// Run directory plumbing.

std::string default_out_dir(const std::string& kind) {
  std::string ts = timestamp_utc();
  std::string compact;
  for (char ch : ts) {
    if (ch != ':' && ch != '-') compact.push_back(ch);
  }
  return "runs/" + kind + "-" + compact;
}

std::string resolve_out_dir(const CliOverrides& ov, const ConfigFile& cfg,
                            const std::string& section,
                            const std::string& kind) {
  if (ov.out_dir) return *ov.out_dir;
  if (cfg.has(section, "out")) return cfg.get(section, "out", "");
  return default_out_dir(kind);
}

std::string require_instance_path(const CliOverrides& ov,
                                  const ConfigFile& cfg,
                                  const std::string& section) {
  if (ov.instance_path) return *ov.instance_path;
  if (cfg.has(section, "instance")) return cfg.get(section, "instance", "");
  throw InvalidConfig("no instance file given (flag --instance or key " +
                      section + ".instance)");
}

struct RunDir {
  fs::path root;
  RunManifest manifest;

  explicit RunDir(const std::string& dir, std::string command)
      : root(dir) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) {
      throw RuntimeFailure("cannot create output directory '" + dir +
                           "': " + ec.message());
    }
    manifest.command = std::move(command);
    manifest.started_at = timestamp_utc();
  }

  std::string emit(const std::string& name, const std::string& content) {
    const fs::path path = root / name;
    atomic_write_file(path.string(), content);
    manifest.files.push_back({name, hash_hex(content), content.size()});
    return fs::absolute(path).string();
  }

  void finish() {
    manifest.finished_at = timestamp_utc();
    atomic_write_file((root / "manifest.json").string(),
                      manifest_to_json(manifest));
  }
};

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

// ---------------------------------------------------------------------------

int cmd_gen_instance(const std::string& config_path,
                     const std::string& out_path, const CliOverrides& ov) {
  const ConfigFile cfg =
      config_path.empty() ? ConfigFile{} : load_config(config_path);
  const InstanceConfig ic = instance_config_from(cfg);
  const std::uint64_t seed = resolve_seed(
      ov, static_cast<std::uint64_t>(cfg.get_long("instance", "seed", 1)));

  const ProblemInstance inst = ic.head_rank > 0
                                   ? generate_degenerate_instance(ic, seed)
                                   : generate_instance(ic, seed);
  write_instance(inst, out_path);

  const GapStats gs = gap_stats(inst);
  const DiversityReport div = diversity_report(inst);
  std::cout << "wrote " << out_path << "\n"
            << "accepted_seed=" << inst.seed
            << " retries=" << (inst.seed - seed) << "\n"
            << "min_gap=" << format_double(gs.min_gap)
            << " pct5=" << format_double(gs.pct5_gap)
            << " median=" << format_double(gs.median_gap)
            << " mean=" << format_double(gs.mean_gap) << "\n"
            << "min_eig=" << format_double(div.min_eig)
            << " drd=" << format_double(div.drd)
            << " full_rank=" << bool_text(div.verdict_full_rank) << "\n";
  return kExitOk;
}

int cmd_online(const std::string& config_path, const CliOverrides& ov) {
  const ConfigFile cfg =
      config_path.empty() ? ConfigFile{} : load_config(config_path);
  const std::string instance_path = require_instance_path(ov, cfg, "online");
  const std::string instance_bytes = read_file(instance_path);
  const ProblemInstance inst = instance_from_json(instance_bytes);

  OnlineConfig oc;
  oc.horizon = ov.horizon ? *ov.horizon
                          : cfg.get_long("online", "horizon", oc.horizon);
  oc.eta = ov.eta ? *ov.eta : cfg.get_double("online", "eta", oc.eta);
  oc.slate_mode = slate_mode_from_string(
      ov.slate_mode ? *ov.slate_mode
                    : cfg.get("online", "slate_mode", to_string(oc.slate_mode)));
  oc.slate_size = static_cast<int>(
      cfg.get_long("online", "slate_size", oc.slate_size));
  oc.refit_divisor =
      ov.refit_divisor
          ? *ov.refit_divisor
          : cfg.get_long("online", "refit_divisor", oc.refit_divisor);
  oc.warm_start =
      !ov.cold_start && cfg.get_bool("online", "warm_start", oc.warm_start);
  oc.run_seed = resolve_seed(
      ov, static_cast<std::uint64_t>(cfg.get_long("online", "run_seed", 1)));
  oc.eval_cadence =
      cfg.get_long("online", "eval_cadence", oc.eval_cadence);
  oc.learner = learner_from_string(
      cfg.get("online", "learner", learner_to_string(oc.learner)));
  const FitConfig fc = fit_config_from(cfg);

  RunDir run(resolve_out_dir(ov, cfg, "online", "online"), "online");
  run.manifest.seeds = {oc.run_seed};
  run.manifest.instance_hash = hash_hex(instance_bytes);
  run.manifest.instance_path = run.emit("instance.json", instance_bytes);

  std::ostringstream resolved;
  resolved << "# resolved online run configuration\n"
           << "[online]\n"
           << "instance = " << run.manifest.instance_path << "\n"
           << "horizon = " << oc.horizon << "\n"
           << "eta = " << format_double(oc.eta) << "\n"
           << "slate_mode = " << to_string(oc.slate_mode) << "\n"
           << "slate_size = " << oc.slate_size << "\n"
           << "refit_divisor = " << oc.refit_divisor << "\n"
           << "warm_start = " << bool_text(oc.warm_start) << "\n"
           << "run_seed = " << oc.run_seed << "\n"
           << "eval_cadence = " << oc.eval_cadence << "\n"
           << "learner = " << learner_to_string(oc.learner) << "\n\n"
           << "[fit]\n"
           << "ridge = " << format_double(fc.ridge) << "\n"
           << "max_rep_updates = " << fc.max_rep_updates << "\n"
           << "max_head_updates = " << fc.max_head_updates << "\n"
           << "tolerance = " << format_double(fc.tolerance) << "\n"
           << "armijo_c = " << format_double(fc.armijo_c) << "\n"
           << "backtrack_start = " << format_double(fc.backtrack_start) << "\n"
           << "backtrack_factor = " << format_double(fc.backtrack_factor)
           << "\n";
  run.manifest.config_text = resolved.str();
  run.emit("resolved_config.ini", run.manifest.config_text);

  const OnlineRunResult result = run_online(inst, oc, fc);

  run.emit("trace.csv", trace_to_csv(result.trace));
  run.emit("summary.json", summary_to_json(result.summary));
  run.emit("fit_diagnostics.csv", fit_reports_to_csv(result.fit_reports));
  run.finish();

  const OnlineRunSummary& s = result.summary;
  std::cout << "run dir: " << fs::absolute(run.root).string() << "\n"
            << "cumulative_regret=" << format_double(s.cumulative_regret)
            << " refits=" << s.refit_count
            << " last_positive_round=" << s.last_positive_round
            << " substantial_fraction="
            << format_double(s.substantial_fraction) << "\n";
  return kExitOk;
}

int cmd_offline_sweep(const std::string& config_path, const CliOverrides& ov) {
  const ConfigFile cfg =
      config_path.empty() ? ConfigFile{} : load_config(config_path);
  const std::string instance_path = require_instance_path(ov, cfg, "offline");
  const std::string instance_bytes = read_file(instance_path);
  const ProblemInstance inst = instance_from_json(instance_bytes);

  OfflineConfig oc;
  oc.n_total =
      ov.n_total ? *ov.n_total : cfg.get_long("offline", "n_total", oc.n_total);
  oc.n_checkpoints =
      ov.checkpoints
          ? *ov.checkpoints
          : static_cast<int>(
                cfg.get_long("offline", "n_checkpoints", oc.n_checkpoints));
  oc.slate_size = static_cast<int>(
      cfg.get_long("offline", "slate_size", oc.slate_size));
  if (const auto env = env_seed()) {
    oc.seeds = {*env};
  } else if (ov.seeds) {
    oc.seeds = *ov.seeds;
  } else if (cfg.has("offline", "seeds")) {
    oc.seeds =
        parse_seed_list(cfg.get("offline", "seeds", "1"), "offline.seeds");
  }
  if (oc.seeds.empty()) throw InvalidConfig("offline.seeds must be nonempty");
  oc.warm_start_across_prefixes =
      !ov.cold_start && cfg.get_bool("offline", "warm_start_across_prefixes",
                                     oc.warm_start_across_prefixes);
  oc.weighting = weighting_from_string(cfg.get(
      "offline", "weighting", weighting_to_string(oc.weighting)));
  const FitConfig fc = fit_config_from(cfg);

  RunDir run(resolve_out_dir(ov, cfg, "offline", "offline"), "offline-sweep");
  run.manifest.seeds = oc.seeds;
  run.manifest.instance_hash = hash_hex(instance_bytes);
  run.manifest.instance_path = run.emit("instance.json", instance_bytes);

  std::ostringstream resolved;
  resolved << "# resolved offline sweep configuration\n"
           << "[offline]\n"
           << "instance = " << run.manifest.instance_path << "\n"
           << "n_total = " << oc.n_total << "\n"
           << "n_checkpoints = " << oc.n_checkpoints << "\n"
           << "slate_size = " << oc.slate_size << "\n"
           << "seeds = ";
  for (std::size_t i = 0; i < oc.seeds.size(); ++i) {
    resolved << (i > 0 ? "," : "") << oc.seeds[i];
  }
  resolved << "\n"
           << "warm_start_across_prefixes = "
           << bool_text(oc.warm_start_across_prefixes) << "\n"
           << "weighting = " << weighting_to_string(oc.weighting) << "\n\n"
           << "[fit]\n"
           << "ridge = " << format_double(fc.ridge) << "\n"
           << "max_rep_updates = " << fc.max_rep_updates << "\n"
           << "max_head_updates = " << fc.max_head_updates << "\n"
           << "tolerance = " << format_double(fc.tolerance) << "\n"
           << "armijo_c = " << format_double(fc.armijo_c) << "\n"
           << "backtrack_start = " << format_double(fc.backtrack_start) << "\n"
           << "backtrack_factor = " << format_double(fc.backtrack_factor)
           << "\n";
  run.manifest.config_text = resolved.str();
  run.emit("resolved_config.ini", run.manifest.config_text);

  const SweepResult sweep = run_sweep(inst, oc, fc, ov.jobs);

  run.emit("sweep.csv", sweep_to_csv(sweep));
  run.emit("decay.json", decay_to_json(sweep, oc));
  run.emit("fit_diagnostics.csv", fit_reports_to_csv(sweep.fit_reports));
  run.finish();

  std::cout << "run dir: " << fs::absolute(run.root).string() << "\n";
  for (const std::uint64_t seed : oc.seeds) {
    std::cout << "seed " << seed << ": ";
    try {
      const DecayFit fit = fit_decay_rate(sweep, seed);
      std::cout << "slope=" << format_double(fit.slope)
                << " r2=" << format_double(fit.r_squared);
    } catch (const InsufficientPositivePoints&) {
      std::cout << "slope=n/a (too few positive checkpoints)";
    }
    if (const auto burn = zero_regret_burn_in(sweep, seed)) {
      std::cout << " zero_from_n=" << *burn;
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int cmd_diagnose(const std::string& instance_path,
                 const std::optional<std::string>& out_dir) {
  const std::string instance_bytes = read_file(instance_path);
  const ProblemInstance inst = instance_from_json(instance_bytes);
  const GapStats gs = gap_stats(inst);
  const DiversityReport div = diversity_report(inst);

  std::cout << "users=" << inst.num_users << " dim_d=" << inst.dim_d
            << " dim_j=" << inst.dim_j
            << " head_scale=" << format_double(inst.head_scale) << "\n"
            << "min_gap=" << format_double(gs.min_gap)
            << " pct5=" << format_double(gs.pct5_gap)
            << " median=" << format_double(gs.median_gap)
            << " mean=" << format_double(gs.mean_gap) << "\n"
            << "eigs=";
  for (std::size_t i = 0; i < div.g_lambda_eigs.size(); ++i) {
    std::cout << (i > 0 ? "," : "") << format_double(div.g_lambda_eigs[i]);
  }
  std::cout << "\n"
            << "min_eig=" << format_double(div.min_eig)
            << " numerical_rank=" << div.numerical_rank << "\n"
            << "drd=" << format_double(div.drd)
            << " drd_scale_free=" << format_double(div.drd_scale_free)
            << " hard_fraction=" << format_double(div.hard_fraction) << "\n"
            << "full-rank sufficient condition: "
            << (div.verdict_full_rank ? "PASS" : "FAIL") << "\n";

  if (out_dir) {
    RunDir run(*out_dir, "diagnose");
    run.manifest.instance_hash = hash_hex(instance_bytes);
    run.manifest.instance_path = fs::absolute(instance_path).string();
    run.manifest.config_text = "";
    run.emit("diversity.json", diversity_report_to_json(div));
    run.finish();
    std::cout << "wrote " << (run.root / "diversity.json").string() << "\n";
  }
  return kExitOk;
}

int cmd_verify(std::uint64_t seed) {
  const std::uint64_t effective = env_seed().value_or(seed);
  const std::vector<SuiteResult> results = run_all_suites(effective);
  long failures = 0;
  for (const SuiteResult& r : results) {
    if (r.passed) {
      std::cout << "[PASS] " << r.name << " (" << r.cases << " cases)\n";
    } else {
      ++failures;
      std::cout << "[FAIL] " << r.name << ": " << r.counterexample << "\n";
    }
  }
  std::cout << (failures == 0 ? "all suites passed"
                              : "verification failed")
            << " (" << results.size() - failures << "/" << results.size()
            << ", seed " << effective << ")\n";
  return failures == 0 ? kExitOk : kExitVerification;
}

}  // namespace persalign
