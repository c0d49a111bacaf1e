#include "persalign/fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "persalign/io.hpp"

namespace persalign {
namespace {

// Flat row-major views of the banks and the model, so the per-record loops
// below touch contiguous memory.  Rebuilt at every entry point; the copies
// are tiny next to one pass over the records.
struct FitView {
  int d = 0, jdim = 0, users = 0;
  std::vector<std::vector<double>> ctx;  // [user], n_ctx * d
  std::vector<std::vector<double>> act;  // [user], n_act * d
};

FitView make_view(const ProblemInstance& inst) {
  FitView v;
  v.d = inst.dim_d;
  v.jdim = inst.dim_j;
  v.users = inst.num_users;
  v.ctx.resize(inst.num_users);
  v.act.resize(inst.num_users);
  for (int u = 0; u < inst.num_users; ++u) {
    const auto& c = inst.contexts[u];
    const auto& a = inst.actions[u];
    v.ctx[u].resize(static_cast<std::size_t>(c.rows()) * v.d);
    v.act[u].resize(static_cast<std::size_t>(a.rows()) * v.d);
    for (int r = 0; r < c.rows(); ++r) {
      for (int k = 0; k < v.d; ++k) v.ctx[u][r * v.d + k] = c(r, k);
    }
    for (int r = 0; r < a.rows(); ++r) {
      for (int k = 0; k < v.d; ++k) v.act[u][r * v.d + k] = a(r, k);
    }
  }
  return v;
}

// Model parameters in the same flat layout: w is jdim blocks of d*d
// row-major doubles, heads is jdim x users column-major (one contiguous
// column per user).
struct FlatModel {
  std::vector<double> w;
  Eigen::MatrixXd heads;
};

FlatModel flatten(const RewardModel& m) {
  FlatModel f;
  const int d = m.dim_d(), j_dim = m.dim_j();
  f.w.resize(static_cast<std::size_t>(j_dim) * d * d);
  for (int j = 0; j < j_dim; ++j) {
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) f.w[(j * d + r) * d + c] = m.w[j](r, c);
    }
  }
  f.heads = m.heads;
  return f;
}

RewardModel unflatten(const FlatModel& f, int d, int j_dim) {
  RewardModel m;
  m.w.resize(j_dim);
  for (int j = 0; j < j_dim; ++j) {
    Eigen::MatrixXd w(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) w(r, c) = f.w[(j * d + r) * d + c];
    }
    m.w[j] = w;
  }
  m.heads = f.heads;
  return m;
}

double sq_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Average MNL loss over the records (no ridge).  Collapses the model to one
// d x d matrix per user first, so each record costs d^2 + slate * d.
double loss_average(const FitView& view, const PrefDataset& data,
                    const FlatModel& f) {
  const int d = view.d, j_dim = view.jdim;
  std::vector<double> m(static_cast<std::size_t>(view.users) * d * d, 0.0);
  for (int u = 0; u < view.users; ++u) {
    double* mu = m.data() + static_cast<std::size_t>(u) * d * d;
    const double* lam = f.heads.col(u).data();
    for (int j = 0; j < j_dim; ++j) {
      const double* wj = f.w.data() + static_cast<std::size_t>(j) * d * d;
      const double l = lam[j];
      for (int i = 0; i < d * d; ++i) mu[i] += l * wj[i];
    }
  }

  std::vector<double> xm(d);
  double v[kMaxSlate];
  double loss_sum = 0.0;
  for (const PrefRecord& r : data.records()) {
    const double* mu = m.data() + static_cast<std::size_t>(r.user) * d * d;
    const double* x = view.ctx[r.user].data() + r.ctx * d;
    for (int c = 0; c < d; ++c) {
      double s = 0.0;
      for (int rr = 0; rr < d; ++rr) s += x[rr] * mu[rr * d + c];
      xm[c] = s;
    }
    const int k_n = r.slate_size;
    double vmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_n; ++k) {
      const double* a = view.act[r.user].data() + r.slate[k] * d;
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += xm[c] * a[c];
      v[k] = s;
      vmax = std::max(vmax, s);
    }
    double z = 0.0;
    for (int k = 0; k < k_n; ++k) z += std::exp(v[k] - vmax);
    loss_sum += std::log(z) + vmax - v[r.label];
  }
  return loss_sum / static_cast<double>(data.size());
}

double full_objective(const FitView& view, const PrefDataset& data,
                      const FlatModel& f, double ridge) {
  const double obj = loss_average(view, data, f) +
                     0.5 * ridge * (sq_norm(f.w) + f.heads.squaredNorm());
  if (!std::isfinite(obj)) {
    throw NumericalFailure("fit objective is not finite");
  }
  return obj;
}

// One full pass computing the average loss and its gradient in both factor
// blocks.  grad_w uses the same flat layout as FlatModel::w.
struct FlatGradient {
  std::vector<double> grad_w;
  Eigen::MatrixXd grad_heads;
  double objective = 0.0;
};

FlatGradient gradient_pass(const FitView& view, const PrefDataset& data,
                           const FlatModel& f, double ridge) {
  const int d = view.d, j_dim = view.jdim;
  const int dd = d * d;
  FlatGradient g;
  g.grad_w.assign(f.w.size(), 0.0);
  g.grad_heads = Eigen::MatrixXd::Zero(j_dim, view.users);

  std::vector<double> xw(static_cast<std::size_t>(j_dim) * d);
  std::vector<double> phi_buf(static_cast<std::size_t>(kMaxSlate) * j_dim);
  std::vector<double> sa_buf(d), e_buf(static_cast<std::size_t>(dd));
  double* const phi = phi_buf.data();
  double* const sa = sa_buf.data();
  double* const e = e_buf.data();
  double v[kMaxSlate], p[kMaxSlate], coef[kMaxSlate];
  double loss_sum = 0.0;

  for (const PrefRecord& r : data.records()) {
    const int u = r.user;
    const double* x = view.ctx[u].data() + r.ctx * d;
    const double* lam = f.heads.col(u).data();
    for (int j = 0; j < j_dim; ++j) {
      const double* wj = f.w.data() + static_cast<std::size_t>(j) * dd;
      for (int c = 0; c < d; ++c) {
        double s = 0.0;
        for (int rr = 0; rr < d; ++rr) s += x[rr] * wj[rr * d + c];
        xw[j * d + c] = s;
      }
    }
    const int k_n = r.slate_size;
    double vmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < k_n; ++k) {
      const double* a = view.act[u].data() + r.slate[k] * d;
      double vk = 0.0;
      for (int j = 0; j < j_dim; ++j) {
        double s = 0.0;
        const double* xwj = xw.data() + j * d;
        for (int c = 0; c < d; ++c) s += xwj[c] * a[c];
        phi[k * j_dim + j] = s;
        vk += lam[j] * s;
      }
      v[k] = vk;
      vmax = std::max(vmax, vk);
    }
    double z = 0.0;
    for (int k = 0; k < k_n; ++k) {
      p[k] = std::exp(v[k] - vmax);
      z += p[k];
    }
    loss_sum += std::log(z) + vmax - v[r.label];
    for (int k = 0; k < k_n; ++k) {
      coef[k] = p[k] / z - (k == r.label ? 1.0 : 0.0);
    }
    for (int c = 0; c < d; ++c) sa[c] = 0.0;
    for (int k = 0; k < k_n; ++k) {
      const double* a = view.act[u].data() + r.slate[k] * d;
      for (int c = 0; c < d; ++c) sa[c] += coef[k] * a[c];
    }
    for (int rr = 0; rr < d; ++rr) {
      for (int c = 0; c < d; ++c) e[rr * d + c] = x[rr] * sa[c];
    }
    double* gh = g.grad_heads.col(u).data();
    for (int j = 0; j < j_dim; ++j) {
      double* gw = g.grad_w.data() + static_cast<std::size_t>(j) * dd;
      const double l = lam[j];
      for (int i = 0; i < dd; ++i) gw[i] += l * e[i];
      double s = 0.0;
      for (int k = 0; k < k_n; ++k) s += coef[k] * phi[k * j_dim + j];
      gh[j] += s;
    }
  }

  const double inv_t = 1.0 / static_cast<double>(data.size());
  for (std::size_t i = 0; i < g.grad_w.size(); ++i) {
    g.grad_w[i] = g.grad_w[i] * inv_t + ridge * f.w[i];
  }
  g.grad_heads = g.grad_heads * inv_t + ridge * f.heads;
  g.objective = loss_sum * inv_t +
                0.5 * ridge * (sq_norm(f.w) + f.heads.squaredNorm());
  if (!std::isfinite(g.objective)) {
    throw NumericalFailure("fit objective is not finite");
  }
  return g;
}

// Armijo backtracking on the shared matrices, heads held fixed.  Returns the
// objective after the accepted step, or the unchanged objective when no step
// passed (gradient numerically zero along this block).
//
// For fixed heads every record score is linear in W, so the whole ray
// W - alpha * G is scored with one pass: per slate entry keep the score v
// under W and the score u under G, then a trial at alpha only needs a
// log-sum-exp over v - alpha * u.  The ridge term is a quadratic in alpha.
double rep_gradient_step(const FitView& view, const PrefDataset& data,
                         FlatModel& f, const FitConfig& cfg,
                         const FlatGradient& g, double f_cur) {
  double g_sq = 0.0;
  for (double x : g.grad_w) g_sq += x * x;
  if (g_sq == 0.0) return f_cur;

  const int d = view.d, j_dim = view.jdim;
  const int dd = d * d;

  // Collapse the current point and the step direction through the heads.
  std::vector<double> m_cur(static_cast<std::size_t>(view.users) * dd, 0.0);
  std::vector<double> m_dir(static_cast<std::size_t>(view.users) * dd, 0.0);
  for (int u = 0; u < view.users; ++u) {
    double* mc = m_cur.data() + static_cast<std::size_t>(u) * dd;
    double* md = m_dir.data() + static_cast<std::size_t>(u) * dd;
    const double* lam = f.heads.col(u).data();
    for (int j = 0; j < j_dim; ++j) {
      const double* wj = f.w.data() + static_cast<std::size_t>(j) * dd;
      const double* gj = g.grad_w.data() + static_cast<std::size_t>(j) * dd;
      const double l = lam[j];
      for (int i = 0; i < dd; ++i) {
        mc[i] += l * wj[i];
        md[i] += l * gj[i];
      }
    }
  }

  // Score the ray: interleaved (v, u) per slate entry, record-major.
  std::vector<double> ray(data.size() * 2 * kMaxSlate);
  std::vector<double> xc(d), xd(d);
  std::size_t off = 0;
  for (const PrefRecord& r : data.records()) {
    const double* mc = m_cur.data() + static_cast<std::size_t>(r.user) * dd;
    const double* md = m_dir.data() + static_cast<std::size_t>(r.user) * dd;
    const double* x = view.ctx[r.user].data() + r.ctx * d;
    for (int c = 0; c < d; ++c) {
      double sc = 0.0, sd = 0.0;
      for (int rr = 0; rr < d; ++rr) {
        sc += x[rr] * mc[rr * d + c];
        sd += x[rr] * md[rr * d + c];
      }
      xc[c] = sc;
      xd[c] = sd;
    }
    for (int k = 0; k < r.slate_size; ++k) {
      const double* a = view.act[r.user].data() + r.slate[k] * d;
      double v = 0.0, u = 0.0;
      for (int c = 0; c < d; ++c) {
        v += xc[c] * a[c];
        u += xd[c] * a[c];
      }
      ray[off + 2 * k] = v;
      ray[off + 2 * k + 1] = u;
    }
    off += 2 * kMaxSlate;
  }

  double w_dot_g = 0.0;
  for (std::size_t i = 0; i < f.w.size(); ++i) w_dot_g += f.w[i] * g.grad_w[i];
  const double w_sq = sq_norm(f.w);
  const double h_sq = f.heads.squaredNorm();
  const double inv_t = 1.0 / static_cast<double>(data.size());

  double alpha = cfg.backtrack_start;
  for (int trial = 0; trial < 60; ++trial) {
    double loss_sum = 0.0;
    off = 0;
    double v[kMaxSlate];
    for (const PrefRecord& r : data.records()) {
      const int k_n = r.slate_size;
      double vmax = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < k_n; ++k) {
        const double s = ray[off + 2 * k] - alpha * ray[off + 2 * k + 1];
        v[k] = s;
        vmax = std::max(vmax, s);
      }
      double z = 0.0;
      for (int k = 0; k < k_n; ++k) z += std::exp(v[k] - vmax);
      loss_sum += std::log(z) + vmax - v[r.label];
      off += 2 * kMaxSlate;
    }
    const double pen =
        w_sq - 2.0 * alpha * w_dot_g + alpha * alpha * g_sq + h_sq;
    const double f_try = loss_sum * inv_t + 0.5 * cfg.ridge * pen;
    if (!std::isfinite(f_try)) {
      throw NumericalFailure("fit objective is not finite");
    }
    if (f_try <= f_cur - cfg.armijo_c * alpha * g_sq) {
      for (std::size_t i = 0; i < f.w.size(); ++i) {
        f.w[i] -= alpha * g.grad_w[i];
      }
      return f_try;
    }
    alpha *= cfg.backtrack_factor;
  }
  return f_cur;
}

// One damped Newton step per user head.  The head subproblems decouple given
// W, so each user's step backtracks against its own partial objective.
// phi values are cached per record so the line search re-scores cheaply.
// Returns the full objective after the pass: the per-user partials already
// cover the data loss and the head ridge, so only the W ridge is added.
double head_newton_pass(const FitView& view, const PrefDataset& data,
                        FlatModel& f, const FitConfig& cfg) {
  const int d = view.d, j_dim = view.jdim;
  const double inv_t = 1.0 / static_cast<double>(data.size());
  std::vector<double> phis;
  std::vector<double> xw(static_cast<std::size_t>(j_dim) * d);
  Eigen::VectorXd grad(j_dim), pphi(j_dim), lam_try(j_dim);
  Eigen::MatrixXd hess(j_dim, j_dim);
  double v[kMaxSlate], p[kMaxSlate];
  double total = 0.0;

  for (int u = 0; u < view.users; ++u) {
    const auto& recs = data.user_records(u);
    if (recs.empty()) {
      total += 0.5 * cfg.ridge * f.heads.col(u).squaredNorm();
      continue;
    }

    // Cache phi for this user's records: slate-size-major per record.
    phis.clear();
    for (std::size_t ridx : recs) {
      const PrefRecord& r = data[ridx];
      const double* x = view.ctx[u].data() + r.ctx * d;
      for (int j = 0; j < j_dim; ++j) {
        const double* wj = f.w.data() + static_cast<std::size_t>(j) * d * d;
        for (int c = 0; c < d; ++c) {
          double s = 0.0;
          for (int rr = 0; rr < d; ++rr) s += x[rr] * wj[rr * d + c];
          xw[j * d + c] = s;
        }
      }
      for (int k = 0; k < r.slate_size; ++k) {
        const double* a = view.act[u].data() + r.slate[k] * d;
        for (int j = 0; j < j_dim; ++j) {
          double s = 0.0;
          const double* xwj = xw.data() + j * d;
          for (int c = 0; c < d; ++c) s += xwj[c] * a[c];
          phis.push_back(s);
        }
      }
    }

    // Partial objective for a candidate head, from the cached phis.
    Eigen::VectorXd lam = f.heads.col(u);
    const auto partial = [&](const Eigen::VectorXd& l) {
      double loss = 0.0;
      std::size_t off = 0;
      for (std::size_t ridx : recs) {
        const PrefRecord& r = data[ridx];
        const int k_n = r.slate_size;
        double vmax = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_n; ++k) {
          double s = 0.0;
          const double* ph = phis.data() + off + k * j_dim;
          for (int j = 0; j < j_dim; ++j) s += l(j) * ph[j];
          v[k] = s;
          vmax = std::max(vmax, s);
        }
        double z = 0.0;
        for (int k = 0; k < k_n; ++k) z += std::exp(v[k] - vmax);
        loss += std::log(z) + vmax - v[r.label];
        off += static_cast<std::size_t>(k_n) * j_dim;
      }
      return loss * inv_t + 0.5 * cfg.ridge * l.squaredNorm();
    };

    // Gradient, Hessian, and loss of the partial objective at the current
    // head, in one pass over the cached phis.
    grad.setZero();
    hess.setZero();
    double loss_here = 0.0;
    std::size_t off = 0;
    for (std::size_t ridx : recs) {
      const PrefRecord& r = data[ridx];
      const int k_n = r.slate_size;
      double vmax = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < k_n; ++k) {
        double s = 0.0;
        const double* ph = phis.data() + off + k * j_dim;
        for (int j = 0; j < j_dim; ++j) s += lam(j) * ph[j];
        v[k] = s;
        vmax = std::max(vmax, s);
      }
      double z = 0.0;
      for (int k = 0; k < k_n; ++k) {
        p[k] = std::exp(v[k] - vmax);
        z += p[k];
      }
      loss_here += std::log(z) + vmax - v[r.label];
      pphi.setZero();
      for (int k = 0; k < k_n; ++k) {
        p[k] /= z;
        const double c = p[k] - (k == r.label ? 1.0 : 0.0);
        Eigen::Map<const Eigen::VectorXd> ph(phis.data() + off + k * j_dim,
                                             j_dim);
        grad += c * ph;
        hess.selfadjointView<Eigen::Lower>().rankUpdate(ph, p[k]);
        pphi += p[k] * ph;
      }
      hess.selfadjointView<Eigen::Lower>().rankUpdate(pphi, -1.0);
      off += static_cast<std::size_t>(k_n) * j_dim;
    }
    const double f_old = loss_here * inv_t + 0.5 * cfg.ridge * lam.squaredNorm();
    grad = grad * inv_t + cfg.ridge * lam;
    Eigen::MatrixXd hfull = hess.selfadjointView<Eigen::Lower>();
    hfull *= inv_t;
    hfull.diagonal().array() += cfg.ridge;

    const Eigen::VectorXd delta =
        -Eigen::LDLT<Eigen::MatrixXd>(hfull).solve(grad);
    double f_accepted = f_old;
    if (delta.allFinite()) {
      double alpha = 1.0;
      for (int trial = 0; trial < 40; ++trial) {
        lam_try = lam + alpha * delta;
        const double f_try = partial(lam_try);
        if (f_try <= f_old) {
          f.heads.col(u) = lam_try;
          f_accepted = f_try;
          break;
        }
        alpha *= 0.5;
      }
    }
    total += f_accepted;
  }
  return total + 0.5 * cfg.ridge * sq_norm(f.w);
}

void check_shapes(const RewardModel& m, const PrefDataset& data,
                  const ProblemInstance& inst) {
  if (m.dim_j() != inst.dim_j || m.dim_d() != inst.dim_d ||
      m.num_users() != inst.num_users) {
    throw DimensionMismatch("fit: model does not match instance shapes");
  }
  if (data.empty()) throw EmptyDataset("fit: no preference records");
  if (data.num_users() != inst.num_users) {
    throw DimensionMismatch("fit: dataset user count mismatch");
  }
}

}  // namespace

double empirical_loss(const RewardModel& m, const PrefDataset& data,
                      const ProblemInstance& inst, double ridge) {
  check_shapes(m, data, inst);
  const FitView view = make_view(inst);
  const FlatModel f = flatten(m);
  return full_objective(view, data, f, ridge);
}

LossGradient loss_gradient(const RewardModel& m, const PrefDataset& data,
                           const ProblemInstance& inst, double ridge) {
  check_shapes(m, data, inst);
  const FitView view = make_view(inst);
  const FlatModel f = flatten(m);
  FlatGradient g = gradient_pass(view, data, f, ridge);
  LossGradient out;
  out.grad_heads = g.grad_heads;
  out.objective = g.objective;
  out.grad_w.resize(inst.dim_j);
  const int d = inst.dim_d;
  for (int j = 0; j < inst.dim_j; ++j) {
    Eigen::MatrixXd gw(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) gw(r, c) = g.grad_w[(j * d + r) * d + c];
    }
    out.grad_w[j] = gw;
  }
  return out;
}

RewardModel init_gradient_svd(const PrefDataset& data,
                              const ProblemInstance& inst) {
  if (data.empty()) throw EmptyDataset("init_gradient_svd: no records");
  const int d = inst.dim_d, j_dim = inst.dim_j, users = inst.num_users;
  const double inv_t = 1.0 / static_cast<double>(data.size());

  // Per-user gradient of the average loss at the all-zero model, taken with
  // respect to an unconstrained d x d score matrix.  At zero scores the
  // choice probabilities are uniform over the slate.
  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(users, d * d);
  for (const PrefRecord& r : data.records()) {
    const double unif = 1.0 / static_cast<double>(r.slate_size);
    const auto x = inst.contexts[r.user].row(r.ctx);
    for (int k = 0; k < r.slate_size; ++k) {
      const double c = (unif - (k == r.label ? 1.0 : 0.0)) * inv_t;
      const auto a = inst.actions[r.user].row(r.slate[k]);
      for (int rr = 0; rr < d; ++rr) {
        for (int cc = 0; cc < d; ++cc) {
          stacked(r.user, rr * d + cc) += c * x(rr) * a(cc);
        }
      }
    }
  }

  // Factor the steepest-descent direction (the negated gradient); left
  // factors scaled by singular values become heads, right factors become
  // the shared matrices.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(-stacked,
                                        Eigen::ComputeThinU |
                                            Eigen::ComputeThinV);
  const int rank_cols = static_cast<int>(svd.singularValues().size());
  const int take = std::min(j_dim, rank_cols);
  const double sigma_max = rank_cols > 0 ? svd.singularValues()(0) : 0.0;

  RewardModel m;
  m.w.assign(j_dim, Eigen::MatrixXd::Zero(d, d));
  m.heads = Eigen::MatrixXd::Zero(j_dim, users);
  // A gradient that cancels outright offers no descent direction at all;
  // hand back the zero model so the caller knows to re-init on later data.
  if (sigma_max == 0.0) return m;
  // Trailing components of a rank-deficient gradient keep their arbitrary
  // right-singular directions on purpose.  A unit W with a near-zero head
  // exits the per-component saddle in a single head pass; a zeroed pair has
  // no gradient in either factor block and would never move again.
  for (int j = 0; j < take; ++j) {
    const double sigma = svd.singularValues()(j);
    for (int u = 0; u < users; ++u) {
      m.heads(j, u) = sigma * svd.matrixU()(u, j);
    }
    Eigen::MatrixXd w(d, d);
    for (int rr = 0; rr < d; ++rr) {
      for (int cc = 0; cc < d; ++cc) w(rr, cc) = svd.matrixV()(rr * d + cc, j);
    }
    m.w[j] = w;
  }
  return m;
}

// Rescales each pair (W_j, heads row j) to equal norms.  Scores only see
// the product, so this gauge move leaves every prediction fixed while
// minimizing the ridge term over the rescaling; the likelihood exerts no
// force along that direction, which otherwise leaves the alternation stuck
// a penalty's width away from the optimum.  Returns the exact objective
// decrease so callers can adjust a cached value without a data pass.
double gauge_rebalance(FlatModel& f, int d, int jdim, double ridge) {
  if (ridge <= 0.0) return 0.0;
  const int dd = d * d;
  double gained = 0.0;
  for (int j = 0; j < jdim; ++j) {
    double sw2 = 0.0;
    for (int k = 0; k < dd; ++k) {
      const double x = f.w[static_cast<std::size_t>(j) * dd + k];
      sw2 += x * x;
    }
    const double sh2 = f.heads.row(j).squaredNorm();
    if (sw2 <= 0.0 || sh2 <= 0.0) continue;
    const double sw = std::sqrt(sw2), sh = std::sqrt(sh2);
    // A severely lopsided pair is mid-escape from the zero saddle, where
    // the large factor is what gives the small one a usable gradient.
    // Collapsing both to the geometric mean would stall that escape, so
    // balance only factors already within an order of magnitude.
    if (sw > 10.0 * sh || sh > 10.0 * sw) continue;
    const double s = std::sqrt(sw / sh);
    if (!std::isfinite(s) || s == 1.0) continue;
    for (int k = 0; k < dd; ++k) {
      f.w[static_cast<std::size_t>(j) * dd + k] /= s;
    }
    f.heads.row(j) *= s;
    gained += ridge * (0.5 * (sw2 + sh2) - sw * sh);
  }
  return gained;
}

FitReport fit(RewardModel& start, const PrefDataset& data,
              const ProblemInstance& inst, const FitConfig& cfg) {
  check_shapes(start, data, inst);
  if (!(cfg.ridge >= 0.0) || !(cfg.tolerance >= 0.0)) {
    throw InvalidConfig("fit: ridge and tolerance must be nonnegative");
  }
  const FitView view = make_view(inst);
  FlatModel f = flatten(start);

  FitReport report;
  // Entry objective: taken from the first gradient pass when there is one,
  // so the common path never needs a separate evaluation.
  double f_prev = cfg.max_rep_updates >= 1
                      ? std::numeric_limits<double>::quiet_NaN()
                      : full_objective(view, data, f, cfg.ridge);
  const int max_iters = std::max(cfg.max_rep_updates, cfg.max_head_updates);
  for (int it = 1; it <= max_iters; ++it) {
    double f_iter = f_prev;
    if (it <= cfg.max_rep_updates) {
      const FlatGradient g = gradient_pass(view, data, f, cfg.ridge);
      // g.objective is the objective at the exact point the gradient was
      // taken, which is what the Armijo condition must reference.
      if (std::isnan(f_prev)) f_prev = g.objective;
      f_iter = rep_gradient_step(view, data, f, cfg, g, g.objective);
    }
    if (it <= cfg.max_head_updates) {
      f_iter = head_newton_pass(view, data, f, cfg);
      if (!std::isfinite(f_iter)) {
        throw NumericalFailure("fit objective is not finite");
      }
    }
    // Gauge move only while both blocks are in play; a frozen block must
    // come back with the exact parameters the caller passed in.
    if (it <= cfg.max_rep_updates && it <= cfg.max_head_updates) {
      f_iter -= gauge_rebalance(f, view.d, view.jdim, cfg.ridge);
    }
    ++report.iterations_used;
    const double rel = (f_prev - f_iter) / std::max(std::abs(f_prev), 1e-12);
    f_prev = f_iter;
    if (rel < cfg.tolerance) {
      report.converged = true;
      break;
    }
  }

  const FlatGradient g_exit = gradient_pass(view, data, f, cfg.ridge);
  double g_sq = g_exit.grad_heads.squaredNorm();
  for (double x : g_exit.grad_w) g_sq += x * x;
  report.grad_norm = std::sqrt(g_sq);
  report.final_objective = f_prev;

  start = unflatten(f, view.d, view.jdim);
  return report;
}

GaugeFixResult gauge_fix(const RewardModel& m) {
  const int d = m.dim_d(), j_dim = m.dim_j();
  const int dd = d * d;
  Eigen::MatrixXd stacked_t(dd, j_dim);  // columns are vec(W_j), row-major
  for (int j = 0; j < j_dim; ++j) {
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) stacked_t(r * d + c, j) = m.w[j](r, c);
    }
  }
  const int rank_max = std::min(dd, j_dim);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked_t);
  Eigen::MatrixXd q_thin =
      qr.householderQ() * Eigen::MatrixXd::Identity(dd, rank_max);
  Eigen::MatrixXd r_trap = qr.matrixQR()
                               .topRows(rank_max)
                               .triangularView<Eigen::Upper>();

  GaugeFixResult out;
  out.model.w.assign(j_dim, Eigen::MatrixXd::Zero(d, d));
  for (int j = 0; j < rank_max; ++j) {
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) out.model.w[j](r, c) = q_thin(r * d + c, j);
    }
  }
  out.model.heads = Eigen::MatrixXd::Zero(j_dim, m.num_users());
  out.model.heads.topRows(rank_max) = r_trap * m.heads;

  double max_diag = 0.0;
  for (int k = 0; k < rank_max; ++k) {
    max_diag = std::max(max_diag, std::abs(r_trap(k, k)));
  }
  out.rank_deficient = (rank_max < j_dim) || (max_diag == 0.0);
  for (int k = 0; k < rank_max && !out.rank_deficient; ++k) {
    if (std::abs(r_trap(k, k)) <= 1e-12 * max_diag) out.rank_deficient = true;
  }
  return out;
}

std::string fit_reports_to_csv(const std::vector<FitReport>& reports) {
  std::string out = "round,iterations_used,final_objective,grad_norm,converged\n";
  for (const FitReport& r : reports) {
    out += std::to_string(r.round);
    out += ',';
    out += std::to_string(r.iterations_used);
    out += ',';
    out += format_double(r.final_objective);
    out += ',';
    out += format_double(r.grad_norm);
    out += ',';
    out += r.converged ? '1' : '0';
    out += '\n';
  }
  return out;
}

}  // namespace persalign
