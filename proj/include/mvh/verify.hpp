#pragma once
// Randomized identity suite: generates deterministic random markets, runs
// the full analysis on random claims, and aggregates the worst deviation
// seen for every check across all runs. Passing means every check passed on
// every generated (market, claim) pair and no run was refused.

#include <cstdint>
#include <ostream>

#include "mvh/analysis.hpp"

namespace mvh {

struct VerifyOptions {
  uint64_t seed = 7;
  int count = 25;     // generated trees; two claims (call + random payoff) each
  int depth = 3;      // per-tree depth drawn from [2, depth]
  int branching = 3;  // per-family width cap drawn from [2, branching]
  int assets = 2;     // per-tree asset count drawn from [1, assets]
  double jump_scale = 0.3;
  AnalysisOptions analysis;
};

struct CheckSummary {
  std::string id;
  double worst = 0.0;  // worst deviation over the runs that graded the check
  double tol = 0.0;
  int runs = 0;
  int failures = 0;
  std::string worst_run;  // tag of the run attaining the worst deviation
};

struct VerifySummary {
  std::vector<CheckSummary> checks;
  int trees = 0;
  int runs = 0;             // (tree, claim) pairs analyzed
  int equivalent_runs = 0;  // strictly positive optimal density
  int signed_runs = 0;      // optimal density with negative states
  int refused_runs = 0;
  std::vector<std::string> refusals;
  bool all_pass = false;
};

VerifySummary run_verification(const VerifyOptions& options);

// Fixed-width table of checks (worst deviation vs tolerance) and run counts.
void print_summary(std::ostream& os, const VerifySummary& summary);

}  // namespace mvh
