#pragma once

// Exploration policies and the preference channel.
//
// The reference policy is uniform over the user's action bank.  The tilted
// policy reweights it by exp(eta * score) under the current fitted model;
// eta touches only which actions get shown, never how a shown slate is
// labeled (labels always come from the truth scores).

#include <cstdint>
#include <vector>

#include "persalign/dataset.hpp"
#include "persalign/instance.hpp"
#include "persalign/rng.hpp"
#include "persalign/score.hpp"

namespace persalign {

enum class SlateMode {
  kPaperBt,    // two slots: first from the tilted policy, second uniform
  kIidTilted,  // all slots i.i.d. from the tilted policy
};

SlateMode slate_mode_from_string(const std::string& s);  // throws InvalidMode
std::string to_string(SlateMode mode);

// Normalized weights proportional to uniform * exp(eta * score), computed
// with max subtraction so huge scores cannot overflow.
Eigen::VectorXd tilted_weights(const Eigen::VectorXd& scores, double eta);

// Per-(user, context) tilted weights under a fixed model snapshot, computed
// lazily and cached.  Build a fresh one after every refit; between refits
// repeated arrivals hit the cache.
class TiltedPolicy {
 public:
  TiltedPolicy(const ProblemInstance& inst, const RewardModel& model,
               double eta);

  const Eigen::VectorXd& weights(int user, int ctx);

 private:
  const ProblemInstance& inst_;
  const RewardModel& model_;
  double eta_;
  std::vector<Eigen::MatrixXd> user_matrices_;  // lazily filled M_i
  std::vector<bool> user_ready_;
  std::vector<std::vector<Eigen::VectorXd>> cache_;   // [user][ctx]
  std::vector<std::vector<bool>> ready_;
};

// Draws a slate of `slate_size` action indices, with replacement.
// kPaperBt requires slate_size == 2.
std::vector<int> sample_slate(const Eigen::VectorXd& policy_weights,
                              SlateMode mode, int slate_size, Rng& rng);

// Chooses a slate position from the MNL law induced by the given truth
// scores on the slate.
int sample_choice(const Eigen::VectorXd& truth_scores_on_slate, Rng& rng);

}  // namespace persalign
