#pragma once

// Property suites for the mathematical identities the simulator relies on.
// Each suite hammers one inequality or invariance with randomized inputs and
// reports the first counterexample it finds.  The CLI `verify` subcommand
// runs all of them; the unit tests and the acceptance harness reuse them.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace persalign {

struct SuiteResult {
  std::string name;
  bool passed = false;
  long cases = 0;
  std::string counterexample;  // empty when passed
};

using SuiteFn = std::function<SuiteResult(std::uint64_t seed)>;

struct Suite {
  std::string name;
  SuiteFn run;
};

// The full registry, in a stable order.
const std::vector<Suite>& verification_suites();

// Runs every suite with deterministic per-suite seeds; returns the results.
std::vector<SuiteResult> run_all_suites(std::uint64_t seed);

}  // namespace persalign
