#pragma once
// Weighted least squares on the terminal atoms. The gains basis collects the
// elementary strategies (hold one unit of one asset over one family's step);
// its span is the set of attainable terminal trading gains. Projections are
// onto that span in L2 of the reference measure; solutions are min-norm via a
// rank-revealing complete orthogonal decomposition.

#include <Eigen/Dense>
#include <Eigen/QR>

#include "mvh/tree.hpp"

namespace mvh {

inline constexpr double kRankThreshold = 1e-11;  // relative to largest pivot
// Relative agreement two backward-stable solvers can resolve per unit of
// condition number of the shared problem.
inline constexpr double kCondResolution = 1e-14;

struct GainsBasis {
  std::vector<std::pair<int, int>> columns;  // (interior node index, asset)
  Eigen::MatrixXd terminal_gains;            // one row per terminal slot
  Eigen::VectorXd sqrt_weights;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> factorization;  // of scaled matrix
  Eigen::Index rank = 0;

  int column(const EventTree& tree, int node_index, int asset) const {
    return tree.interior_slot(node_index) * tree.assets() + asset;
  }
};

GainsBasis gains_basis(const EventTree& tree);

// Ratio of the largest to the smallest kept pivot of the factorization: how
// strongly the projection amplifies rounding, hence the resolution at which
// two independent solves of the same problem can be compared.
double basis_condition(const GainsBasis& basis);

struct ProjectionResult {
  Eigen::VectorXd coefficients;  // min-norm, one per basis column
  Eigen::VectorXd fitted;
  Eigen::VectorXd residual;      // target - fitted, orthogonal to the span
};

ProjectionResult project(const GainsBasis& basis, const Eigen::VectorXd& target);

Strategy coefficients_to_strategy(const EventTree& tree, const Eigen::VectorXd& coefficients);
Eigen::VectorXd strategy_to_coefficients(const EventTree& tree, const Strategy& theta);

// One regression per family: fit the one-step increments of `target` against
// the one-step increments of the `regressors` columns under the given edge
// measure. Coefficients are min-norm; the residual process accumulates the
// unexplained increments from 0 at the root, so it is a measure-martingale
// with increments orthogonal to every regressor increment.
struct NodewiseRegression {
  Strategy coefficients;    // per interior node, dim = number of regressors
  ScalarProcess residual;   // accumulated, 0 at the root
};

NodewiseRegression nodewise_regression(const EventTree& tree, const ScalarProcess& target,
                                       const VectorProcess& regressors,
                                       const EdgeMeasure& measure);

}  // namespace mvh
