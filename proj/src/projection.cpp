#include "mvh/projection.hpp"

#include <cmath>

namespace mvh {

GainsBasis gains_basis(const EventTree& tree) {
  GainsBasis b;
  const int d = tree.assets();
  const int m = tree.terminal_count();
  const int k = tree.interior_count() * d;
  b.columns.reserve(k);
  for (int n : tree.interior())
    for (int i = 0; i < d; ++i) b.columns.emplace_back(n, i);

  b.terminal_gains = Eigen::MatrixXd::Zero(m, k);
  for (int t = 0; t < m; ++t) {
    // Walk the path back to the root; each step fills the d columns of the
    // family it leaves.
    int child = tree.terminals()[t];
    while (child != tree.root()) {
      const int parent = tree.node(child).parent;
      const Eigen::VectorXd step = tree.node(child).price - tree.node(parent).price;
      const int base = tree.interior_slot(parent) * d;
      for (int i = 0; i < d; ++i) b.terminal_gains(t, base + i) = step[i];
      child = parent;
    }
  }

  b.sqrt_weights = tree.path_weights().cwiseSqrt();
  Eigen::MatrixXd scaled = b.sqrt_weights.asDiagonal() * b.terminal_gains;
  b.factorization.setThreshold(kRankThreshold);
  b.factorization.compute(scaled);
  b.rank = b.factorization.rank();
  return b;
}

double basis_condition(const GainsBasis& basis) {
  if (basis.rank == 0) return 1.0;
  const Eigen::MatrixXd t = basis.factorization.matrixT();
  double smallest = std::abs(t(0, 0));
  for (Eigen::Index i = 1; i < basis.rank; ++i)
    smallest = std::min(smallest, std::abs(t(i, i)));
  if (!(smallest > 0.0)) return 1.0 / kRankThreshold;
  return std::max(1.0, basis.factorization.maxPivot() / smallest);
}

ProjectionResult project(const GainsBasis& basis, const Eigen::VectorXd& target) {
  ProjectionResult r;
  const Eigen::VectorXd scaled_target = basis.sqrt_weights.cwiseProduct(target);
  r.coefficients = basis.factorization.solve(scaled_target);
  r.fitted = basis.terminal_gains * r.coefficients;
  r.residual = target - r.fitted;
  return r;
}

Strategy coefficients_to_strategy(const EventTree& tree, const Eigen::VectorXd& coefficients) {
  const int d = tree.assets();
  Strategy theta(tree.size());
  for (int n : tree.interior())
    theta[n] = coefficients.segment(static_cast<Eigen::Index>(tree.interior_slot(n)) * d, d);
  return theta;
}

Eigen::VectorXd strategy_to_coefficients(const EventTree& tree, const Strategy& theta) {
  const int d = tree.assets();
  Eigen::VectorXd c(static_cast<Eigen::Index>(tree.interior_count()) * d);
  for (int n : tree.interior())
    c.segment(static_cast<Eigen::Index>(tree.interior_slot(n)) * d, d) = theta[n];
  return c;
}

NodewiseRegression nodewise_regression(const EventTree& tree, const ScalarProcess& target,
                                       const VectorProcess& regressors,
                                       const EdgeMeasure& measure) {
  NodewiseRegression out;
  out.coefficients.resize(tree.size());
  out.residual.assign(tree.size(), 0.0);
  const Eigen::Index r = regressors[tree.root()].size();
  for (int n : tree.interior()) {
    const auto& children = tree.node(n).children;
    const int k = static_cast<int>(children.size());
    Eigen::MatrixXd design(k, r);
    Eigen::VectorXd rhs(k);
    for (int j = 0; j < k; ++j) {
      const int c = children[j];
      const double sw = std::sqrt(measure.prob[c]);
      design.row(j) = sw * (regressors[c] - regressors[n]).transpose();
      rhs[j] = sw * (target[c] - target[n]);
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(kRankThreshold);
    cod.compute(design);
    out.coefficients[n] = cod.solve(rhs);
  }
  for (int i = 1; i < tree.size(); ++i) {
    const int p = tree.node(i).parent;
    const double step = (target[i] - target[p]) -
                        out.coefficients[p].dot(regressors[i] - regressors[p]);
    out.residual[i] = out.residual[p] + step;
  }
  return out;
}

}  // namespace mvh
