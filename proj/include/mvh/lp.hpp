#pragma once
// Per-family feasibility subproblem: over child weights q >= 0 with sum 1 and
// zero weighted price increment per asset, maximize the smallest weight.
// The optimum is the family's "equivalence margin": positive iff some strictly
// positive one-step martingale weighting exists.

#include <Eigen/Dense>

namespace mvh::detail {

struct MaxMinResult {
  bool feasible = false;      // nonnegative weights exist at all
  double margin = 0.0;        // optimal min weight (0 when infeasible)
  Eigen::VectorXd weights;    // arg max, one entry per child
};

// `increments`: one row per child, one column per asset.
MaxMinResult max_min_weights(const Eigen::MatrixXd& increments);

}  // namespace mvh::detail
