#pragma once

#include <stdexcept>
#include <string>

namespace persalign {

// Configuration problems: the run cannot start.  The CLI maps these to
// exit code 2 so scripted sweeps can tell a bad config from a failed run.
struct InvalidConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mode string that is not one of the documented choices.
struct InvalidMode : InvalidConfig {
  using InvalidConfig::InvalidConfig;
};

// Instance search exhausted its retry budget without hitting the gap target.
struct GapUnreachable : InvalidConfig {
  GapUnreachable(int attempts_, double best_min_gap_, double target_)
      : InvalidConfig("gap target " + std::to_string(target_) +
                      " unreachable after " + std::to_string(attempts_) +
                      " seeds; best min gap " + std::to_string(best_min_gap_)),
        attempts(attempts_),
        best_min_gap(best_min_gap_),
        target(target_) {}
  int attempts;
  double best_min_gap;
  double target;
};

// Runtime failures: the inputs were well-formed but the computation cannot
// proceed.  The CLI maps these to exit code 1.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

struct EmptyBank : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

struct IndexOutOfRange : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

struct EmptyDataset : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

// NaN or Inf showed up in an objective or gradient during fitting.
struct NumericalFailure : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

// Diversity diagnostics need at least two distinct actions per bank.
struct DegenerateBank : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

// Decay-rate regression needs at least five positive checkpoints.
struct InsufficientPositivePoints : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace persalign
