#include "mvh/oracle.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace mvh {

namespace {

Eigen::VectorXd svd_min_norm_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-11);
  return svd.solve(b);
}

}  // namespace

OracleResult oracle_full_solve(const EventTree& tree, const Claim& claim, int terminal_cap) {
  const int m = tree.terminal_count();
  if (m > terminal_cap)
    throw std::invalid_argument("oracle_full_solve: tree has " + std::to_string(m) +
                                " terminal nodes, cap is " + std::to_string(terminal_cap));
  const int d = tree.assets();
  const int cols = tree.interior_count() * d;

  // Path weights and design rows assembled by walking every terminal's path
  // on its own (deliberately not reusing the pipeline's sweeps).
  Eigen::VectorXd w(m);
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(m, cols);
  for (int t = 0; t < m; ++t) {
    double prob = 1.0;
    int node = tree.terminals()[t];
    while (node != tree.root()) {
      prob *= tree.node(node).prob;
      const int parent = tree.node(node).parent;
      for (int i = 0; i < d; ++i)
        design(t, tree.interior_slot(parent) * d + i) =
            tree.node(node).price[i] - tree.node(parent).price[i];
      node = parent;
    }
    w[t] = prob;
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd scaled = sw.asDiagonal() * design;

  OracleResult res;
  // Optimal signed density: normalized residual of the constant 1 against
  // the attainable gains.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  const Eigen::VectorXd beta = svd_min_norm_solve(scaled, sw.cwiseProduct(ones));
  const Eigen::VectorXd resid = ones - design * beta;
  const double mean_resid = w.dot(resid);
  if (!(mean_resid > 0.0))
    throw std::runtime_error("oracle_full_solve: constants are attainable gains");
  res.gstar = resid / mean_resid;
  res.second_moment = w.dot(res.gstar.cwiseAbs2());

  // One block solve of the claim against [gains span | gstar]: the two parts
  // are orthogonal, so the block coefficients are the hedge and the loading.
  Eigen::MatrixXd block(m, cols + 1);
  block.leftCols(cols) = scaled;
  block.col(cols) = sw.cwiseProduct(res.gstar);
  const Eigen::VectorXd sol = svd_min_norm_solve(block, sw.cwiseProduct(claim.payoff));
  res.hedge_coefficients = sol.head(cols);
  res.alpha = sol[cols];
  const Eigen::VectorXd hedge_error = claim.payoff - design * res.hedge_coefficients;
  res.objective = w.dot(hedge_error.cwiseAbs2());
  return res;
}

}  // namespace mvh
