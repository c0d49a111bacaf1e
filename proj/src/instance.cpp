#include "persalign/instance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "persalign/io.hpp"
#include "persalign/rng.hpp"

namespace persalign {
namespace {

void validate_config(const InstanceConfig& cfg) {
  if (cfg.dim_d < 1) throw InvalidConfig("dim_d must be at least 1");
  if (cfg.dim_j < 1) throw InvalidConfig("dim_j must be at least 1");
  if (cfg.num_users < 1) throw InvalidConfig("num_users must be at least 1");
  if (cfg.contexts_per_user < 1) {
    throw InvalidConfig("contexts_per_user must be at least 1");
  }
  if (cfg.actions_per_user < 2) {
    throw InvalidConfig("actions_per_user must be at least 2 (top-two gaps)");
  }
  if (!(cfg.raw_gap_target >= 0.0)) {
    throw InvalidConfig("raw_gap_target must be nonnegative");
  }
  if (!(cfg.head_scale > 0.0)) {
    throw InvalidConfig("head_scale must be positive");
  }
  if (cfg.max_retries < 1) throw InvalidConfig("max_retries must be positive");
  if (cfg.head_rank < 0 || cfg.head_rank > cfg.dim_j) {
    throw InvalidConfig("head_rank must lie in [0, dim_j]");
  }
  if (!cfg.user_dist.empty()) {
    if (static_cast<int>(cfg.user_dist.size()) != cfg.num_users) {
      throw InvalidConfig("user_dist length must equal num_users");
    }
    double total = 0.0;
    for (double p : cfg.user_dist) {
      if (!(p >= 0.0)) throw InvalidConfig("user_dist entries must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw InvalidConfig("user_dist must sum to 1");
    }
  }
}

// One candidate instance from one seed.  Draw order is part of the
// reproducibility contract:
//   1. the shared matrices W_j, j ascending, entries row-major;
//   2. (degenerate only) a dim_j x dim_j Gaussian, row-major, whose
//      sign-fixed QR factor supplies the head subspace basis;
//   3. per user, ascending: context rows, then action rows (both row-major),
//      then that user's raw head coefficients (dim_j of them, or head_rank
//      in the degenerate case).
ProblemInstance draw_candidate(const InstanceConfig& cfg,
                               std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0, stream_id::kInstance);
  const int d = cfg.dim_d, j_dim = cfg.dim_j, users = cfg.num_users;

  ProblemInstance inst;
  inst.dim_d = d;
  inst.dim_j = j_dim;
  inst.num_users = users;
  inst.head_scale = cfg.head_scale;
  inst.seed = seed;
  inst.user_dist = cfg.user_dist;
  if (inst.user_dist.empty()) {
    inst.user_dist.assign(users, 1.0 / users);
  }

  inst.w_true.resize(j_dim);
  for (int j = 0; j < j_dim; ++j) {
    Eigen::MatrixXd w(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) w(r, c) = rng.next_normal();
    }
    inst.w_true[j] = w;
  }

  Eigen::MatrixXd basis;  // dim_j x head_rank, orthonormal columns
  if (cfg.head_rank > 0) {
    Eigen::MatrixXd g(j_dim, j_dim);
    for (int r = 0; r < j_dim; ++r) {
      for (int c = 0; c < j_dim; ++c) g(r, c) = rng.next_normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r_fac = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < j_dim; ++c) {
      if (r_fac(c, c) < 0.0) q.col(c) = -q.col(c);
    }
    basis = q.leftCols(cfg.head_rank);
  }

  inst.heads_true.resize(j_dim, users);
  inst.contexts.resize(users);
  inst.actions.resize(users);
  for (int u = 0; u < users; ++u) {
    Eigen::MatrixXd ctx(cfg.contexts_per_user, d);
    for (int r = 0; r < cfg.contexts_per_user; ++r) {
      for (int c = 0; c < d; ++c) ctx(r, c) = rng.next_normal();
    }
    inst.contexts[u] = ctx;

    Eigen::MatrixXd act(cfg.actions_per_user, d);
    for (int r = 0; r < cfg.actions_per_user; ++r) {
      for (int c = 0; c < d; ++c) act(r, c) = rng.next_normal();
    }
    inst.actions[u] = act;

    if (cfg.head_rank > 0) {
      Eigen::VectorXd coeff(cfg.head_rank);
      for (int k = 0; k < cfg.head_rank; ++k) coeff(k) = rng.next_normal();
      inst.heads_true.col(u) = cfg.head_scale * (basis * coeff);
    } else {
      for (int j = 0; j < j_dim; ++j) {
        inst.heads_true(j, u) = cfg.head_scale * rng.next_normal();
      }
    }
  }
  return inst;
}

struct GapScan {
  std::vector<double> gaps;  // user-major, context-minor
  bool has_tie = false;
  double min_gap = std::numeric_limits<double>::infinity();
};

GapScan scan_gaps(const ProblemInstance& inst) {
  GapScan out;
  out.gaps.reserve(static_cast<std::size_t>(inst.num_users) *
                   inst.num_contexts(0));
  for (int u = 0; u < inst.num_users; ++u) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(inst.dim_d, inst.dim_d);
    for (int j = 0; j < inst.dim_j; ++j) {
      m += inst.heads_true(j, u) * inst.w_true[j];
    }
    const Eigen::MatrixXd& acts = inst.actions[u];
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      Eigen::VectorXd scores = acts * (m.transpose() * inst.contexts[u].row(c).transpose());
      double best = -std::numeric_limits<double>::infinity();
      double second = best;
      for (int a = 0; a < scores.size(); ++a) {
        const double s = scores(a);
        if (s > best) {
          second = best;
          best = s;
        } else if (s > second) {
          // an exact tie at the top lands here and leaves gap == 0
          second = s;
        }
      }
      const double gap = best - second;
      if (gap == 0.0) out.has_tie = true;
      out.gaps.push_back(gap);
      out.min_gap = std::min(out.min_gap, gap);
    }
  }
  return out;
}

// Nearest-rank percentile on an ascending sorted vector: the smallest entry
// whose rank covers fraction q.  Exactly equivariant under positive scaling.
double nearest_rank(const std::vector<double>& sorted, double q) {
  const auto n = static_cast<long>(sorted.size());
  long rank = static_cast<long>(std::ceil(q * static_cast<double>(n)));
  rank = std::max<long>(1, std::min(n, rank));
  return sorted[rank - 1];
}

ProblemInstance search_accepted(const InstanceConfig& cfg,
                                std::uint64_t seed) {
  validate_config(cfg);
  const double target = cfg.raw_gap_target * cfg.head_scale;
  double best_seen = -std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    ProblemInstance inst = draw_candidate(cfg, seed + attempt);
    GapScan scan = scan_gaps(inst);
    if (!scan.has_tie && scan.min_gap >= target && scan.min_gap > 0.0) {
      return inst;
    }
    best_seen = std::max(best_seen, scan.has_tie ? 0.0 : scan.min_gap);
  }
  throw GapUnreachable(cfg.max_retries, best_seen, target);
}

}  // namespace

ProblemInstance generate_instance(const InstanceConfig& cfg,
                                  std::uint64_t seed) {
  return search_accepted(cfg, seed);
}

ProblemInstance generate_degenerate_instance(const InstanceConfig& cfg,
                                             std::uint64_t seed) {
  if (cfg.head_rank < 1) {
    throw InvalidConfig("degenerate instances need head_rank >= 1");
  }
  return search_accepted(cfg, seed);
}

GapStats gap_stats(const ProblemInstance& inst) {
  GapScan scan = scan_gaps(inst);
  std::vector<double> sorted = scan.gaps;
  std::sort(sorted.begin(), sorted.end());
  GapStats stats;
  stats.min_gap = sorted.front();
  stats.pct5_gap = nearest_rank(sorted, 0.05);
  stats.median_gap = nearest_rank(sorted, 0.50);
  double total = 0.0;
  for (double g : sorted) total += g;
  stats.mean_gap = total / static_cast<double>(sorted.size());
  return stats;
}

double max_reward_range(const ProblemInstance& inst) {
  double widest = 0.0;
  for (int u = 0; u < inst.num_users; ++u) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(inst.dim_d, inst.dim_d);
    for (int j = 0; j < inst.dim_j; ++j) {
      m += inst.heads_true(j, u) * inst.w_true[j];
    }
    for (int c = 0; c < inst.num_contexts(u); ++c) {
      Eigen::VectorXd scores =
          inst.actions[u] *
          (m.transpose() * inst.contexts[u].row(c).transpose());
      widest = std::max(widest, scores.maxCoeff() - scores.minCoeff());
    }
  }
  return widest;
}

void scale_heads(ProblemInstance& inst, double c) {
  if (!(c > 0.0)) throw InvalidConfig("head scale factor must be positive");
  inst.heads_true *= c;
  inst.head_scale *= c;
}

namespace {

void append_array(std::string& out, const double* v, int n) {
  out += '[';
  for (int i = 0; i < n; ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  out += ']';
}

void append_matrix(std::string& out, const Eigen::MatrixXd& m) {
  out += '[';
  for (int r = 0; r < m.rows(); ++r) {
    if (r) out += ',';
    out += '[';
    for (int c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += ']';
  }
  out += ']';
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int rows, int cols,
                                 const char* field) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw InvalidConfig(std::string("instance json: bad shape for ") + field);
  }
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw InvalidConfig(std::string("instance json: bad row in ") + field);
    }
    for (int c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

}  // namespace

std::string instance_to_json(const ProblemInstance& inst) {
  std::string out;
  out.reserve(1u << 16);
  out += "{\n";
  out += "  \"schema_version\": 1,\n";
  out += "  \"dim_d\": " + std::to_string(inst.dim_d) + ",\n";
  out += "  \"dim_j\": " + std::to_string(inst.dim_j) + ",\n";
  out += "  \"num_users\": " + std::to_string(inst.num_users) + ",\n";
  out += "  \"head_scale\": " + format_double(inst.head_scale) + ",\n";
  out += "  \"seed\": " + std::to_string(inst.seed) + ",\n";
  out += "  \"user_dist\": ";
  append_array(out, inst.user_dist.data(),
               static_cast<int>(inst.user_dist.size()));
  out += ",\n  \"w_true\": [";
  for (int j = 0; j < inst.dim_j; ++j) {
    if (j) out += ',';
    append_matrix(out, inst.w_true[j]);
  }
  out += "],\n  \"heads_true\": ";
  append_matrix(out, inst.heads_true);
  out += ",\n  \"contexts\": [";
  for (int u = 0; u < inst.num_users; ++u) {
    if (u) out += ',';
    append_matrix(out, inst.contexts[u]);
  }
  out += "],\n  \"actions\": [";
  for (int u = 0; u < inst.num_users; ++u) {
    if (u) out += ',';
    append_matrix(out, inst.actions[u]);
  }
  out += "]\n}\n";
  return out;
}

ProblemInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("instance json: parse error: ") +
                        e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != 1) {
      throw InvalidConfig("instance json: unsupported schema_version");
    }
    ProblemInstance inst;
    inst.dim_d = j.at("dim_d").get<int>();
    inst.dim_j = j.at("dim_j").get<int>();
    inst.num_users = j.at("num_users").get<int>();
    inst.head_scale = j.at("head_scale").get<double>();
    inst.seed = j.at("seed").get<std::uint64_t>();
    if (inst.dim_d < 1 || inst.dim_j < 1 || inst.num_users < 1) {
      throw InvalidConfig("instance json: nonpositive dimensions");
    }
    inst.user_dist = j.at("user_dist").get<std::vector<double>>();
    if (static_cast<int>(inst.user_dist.size()) != inst.num_users) {
      throw InvalidConfig("instance json: user_dist length mismatch");
    }
    const auto& w = j.at("w_true");
    if (static_cast<int>(w.size()) != inst.dim_j) {
      throw InvalidConfig("instance json: w_true length mismatch");
    }
    inst.w_true.resize(inst.dim_j);
    for (int k = 0; k < inst.dim_j; ++k) {
      inst.w_true[k] = matrix_from_json(w[k], inst.dim_d, inst.dim_d, "w_true");
    }
    inst.heads_true = matrix_from_json(j.at("heads_true"), inst.dim_j,
                                       inst.num_users, "heads_true");
    const auto& ctxs = j.at("contexts");
    const auto& acts = j.at("actions");
    if (static_cast<int>(ctxs.size()) != inst.num_users ||
        static_cast<int>(acts.size()) != inst.num_users) {
      throw InvalidConfig("instance json: bank count mismatch");
    }
    inst.contexts.resize(inst.num_users);
    inst.actions.resize(inst.num_users);
    for (int u = 0; u < inst.num_users; ++u) {
      const int n_ctx = static_cast<int>(ctxs[u].size());
      const int n_act = static_cast<int>(acts[u].size());
      if (n_ctx < 1 || n_act < 1) {
        throw InvalidConfig("instance json: empty bank");
      }
      inst.contexts[u] = matrix_from_json(ctxs[u], n_ctx, inst.dim_d,
                                          "contexts");
      inst.actions[u] = matrix_from_json(acts[u], n_act, inst.dim_d,
                                         "actions");
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("instance json: missing field: ") +
                        e.what());
  }
}

void write_instance(const ProblemInstance& inst, const std::string& path) {
  atomic_write_file(path, instance_to_json(inst));
}

ProblemInstance read_instance(const std::string& path) {
  return instance_from_json(read_file(path));
}

}  // namespace persalign
