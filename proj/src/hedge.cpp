#include "mvh/hedge.hpp"

#include <cmath>

namespace mvh {

HedgeDecomposition solve_mvh(const EventTree& tree, const GainsBasis& basis,
                             const VsmmBundle& bundle, const Claim& claim) {
  HedgeDecomposition h;
  const ProjectionResult fit = project(basis, claim.payoff);
  h.theta = coefficients_to_strategy(tree, fit.coefficients);
  h.gains_terminal = fit.fitted;
  h.alpha = inner(tree, claim.payoff, bundle.gstar) / bundle.second_moment;
  h.orthogonal = fit.residual - h.alpha * bundle.gstar;
  h.objective = inner(tree, fit.residual, fit.residual);
  h.objective_split =
      h.alpha * h.alpha * bundle.second_moment + inner(tree, h.orthogonal, h.orthogonal);
  return h;
}

double hedging_error(const EventTree& tree, const Claim& claim, const Strategy& theta,
                     double x0) {
  const ScalarProcess g = gains(tree, theta);
  double acc = 0.0;
  for (int t = 0; t < tree.terminal_count(); ++t) {
    const double e = claim.payoff[t] - x0 - g[tree.terminals()[t]];
    acc += tree.path_weights()[t] * e * e;
  }
  return acc;
}

MembershipCheck strategy_membership(const EventTree& tree, const Strategy& theta,
                                    const VsmmBundle& bundle,
                                    const Eigen::MatrixXd& complement, double tol) {
  MembershipCheck out;
  const ScalarProcess g = gains(tree, theta);
  const EdgeMeasure ref = tree.reference_measure();

  auto product_gap = [&](const Eigen::VectorXd& density) {
    const ScalarProcess z = conditional_expectation(tree, density, ref);
    return martingale_gap(tree, multiply(g, z), ref);
  };

  out.max_gap_value = product_gap(bundle.gstar);
  out.value_compatible = out.max_gap_value <= tol;

  out.max_gap_admissible = out.max_gap_value;
  for (Eigen::Index j = 0; j < complement.cols(); ++j) {
    const Eigen::VectorXd g_perturbed = bundle.gstar + complement.col(j);
    out.max_gap_admissible = std::max(out.max_gap_admissible, product_gap(g_perturbed));
  }
  out.admissible = out.max_gap_admissible <= tol;
  return out;
}

}  // namespace mvh
