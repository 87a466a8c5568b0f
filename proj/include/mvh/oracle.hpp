#pragma once
// Independent reference implementation for cross-checks: assembles the full
// path-space design by brute-force enumeration and solves everything as one
// dense SVD-based block least squares. Shares no recursion or factorization
// route with the production pipeline; intended for test-scale trees only.

#include <Eigen/Dense>

#include "mvh/tree.hpp"

namespace mvh {

struct OracleResult {
  Eigen::VectorXd gstar;          // variance-optimal signed density, per terminal
  double second_moment = 0.0;     // E[gstar^2]
  Eigen::VectorXd hedge_coefficients;  // min-norm, per (interior node, asset)
  double alpha = 0.0;             // loading of the claim on gstar
  double objective = 0.0;         // minimal expected squared hedging error
};

OracleResult oracle_full_solve(const EventTree& tree, const Claim& claim,
                               int terminal_cap = 3000);

}  // namespace mvh
