#include "persalign/policy.hpp"

#include <cmath>

namespace persalign {

SlateMode slate_mode_from_string(const std::string& s) {
  if (s == "paper-bt" || s == "paper_bt") return SlateMode::kPaperBt;
  if (s == "iid-tilted" || s == "iid_tilted") return SlateMode::kIidTilted;
  throw InvalidMode("unknown slate mode: " + s);
}

std::string to_string(SlateMode mode) {
  return mode == SlateMode::kPaperBt ? "paper-bt" : "iid-tilted";
}

Eigen::VectorXd tilted_weights(const Eigen::VectorXd& scores, double eta) {
  if (scores.size() == 0) throw EmptyBank("tilted_weights: empty bank");
  // Uniform reference times exp(eta * score), normalized.  The uniform
  // factor and the max shift both cancel in the normalization.
  const Eigen::ArrayXd shifted = eta * scores.array();
  Eigen::ArrayXd w = (shifted - shifted.maxCoeff()).exp();
  return w / w.sum();
}

TiltedPolicy::TiltedPolicy(const ProblemInstance& inst,
                           const RewardModel& model, double eta)
    : inst_(inst),
      model_(model),
      eta_(eta),
      user_matrices_(inst.num_users),
      user_ready_(inst.num_users, false),
      cache_(inst.num_users),
      ready_(inst.num_users) {
  for (int u = 0; u < inst.num_users; ++u) {
    cache_[u].resize(inst.num_contexts(u));
    ready_[u].assign(inst.num_contexts(u), false);
  }
}

const Eigen::VectorXd& TiltedPolicy::weights(int user, int ctx) {
  if (user < 0 || user >= inst_.num_users) {
    throw IndexOutOfRange("tilted policy: user out of range");
  }
  if (ctx < 0 || ctx >= inst_.num_contexts(user)) {
    throw IndexOutOfRange("tilted policy: context out of range");
  }
  if (!ready_[user][ctx]) {
    if (!user_ready_[user]) {
      user_matrices_[user] = user_score_matrix(model_, user);
      user_ready_[user] = true;
    }
    const Eigen::VectorXd scores =
        inst_.actions[user] * (user_matrices_[user].transpose() *
                               inst_.contexts[user].row(ctx).transpose());
    cache_[user][ctx] = tilted_weights(scores, eta_);
    ready_[user][ctx] = true;
  }
  return cache_[user][ctx];
}

std::vector<int> sample_slate(const Eigen::VectorXd& policy_weights,
                              SlateMode mode, int slate_size, Rng& rng) {
  const int n = static_cast<int>(policy_weights.size());
  if (n == 0) throw EmptyBank("sample_slate: empty bank");
  if (slate_size < 1 || slate_size > kMaxSlate) {
    throw InvalidConfig("sample_slate: slate size out of range");
  }
  std::vector<int> slate(slate_size);
  switch (mode) {
    case SlateMode::kPaperBt:
      if (slate_size != 2) {
        throw InvalidConfig("paper-bt slates have exactly two slots");
      }
      slate[0] = rng.next_categorical(policy_weights.data(), n);
      slate[1] = static_cast<int>(rng.next_below(n));
      break;
    case SlateMode::kIidTilted:
      for (int k = 0; k < slate_size; ++k) {
        slate[k] = rng.next_categorical(policy_weights.data(), n);
      }
      break;
  }
  return slate;
}

int sample_choice(const Eigen::VectorXd& truth_scores_on_slate, Rng& rng) {
  const int k_n = static_cast<int>(truth_scores_on_slate.size());
  if (k_n == 0) throw EmptyBank("sample_choice: empty slate");
  // MNL law: P(k) proportional to exp(score_k), max-shifted for safety.
  const double vmax = truth_scores_on_slate.maxCoeff();
  double w[kMaxSlate];
  if (k_n > kMaxSlate) throw InvalidConfig("sample_choice: slate too large");
  for (int k = 0; k < k_n; ++k) {
    w[k] = std::exp(truth_scores_on_slate(k) - vmax);
  }
  return rng.next_categorical(w, k_n);
}

}  // namespace persalign
