#include "mvh/vsmm.hpp"

#include <cmath>

#include "mvh/lp.hpp"

namespace mvh {

FeasibilityResult equivalent_measure_feasibility(const EventTree& tree) {
  FeasibilityResult res;
  res.witness.prob.assign(tree.size(), 1.0);
  res.margin = 1.0;
  for (int n : tree.interior()) {
    const auto& children = tree.node(n).children;
    Eigen::MatrixXd inc(children.size(), tree.assets());
    for (size_t j = 0; j < children.size(); ++j)
      inc.row(static_cast<Eigen::Index>(j)) =
          (tree.node(children[j]).price - tree.node(n).price).transpose();
    const detail::MaxMinResult lp = detail::max_min_weights(inc);
    const double margin = lp.feasible ? lp.margin : 0.0;
    res.margin = std::min(res.margin, margin);
    if (margin <= kFeasibilityMargin) {
      res.defects.push_back("family at node '" + tree.node(n).id +
                            "' admits no strictly positive martingale weights");
      continue;
    }
    for (size_t j = 0; j < children.size(); ++j) res.witness.prob[children[j]] = lp.weights[j];
  }
  res.feasible = res.defects.empty() && res.margin > kFeasibilityMargin;
  if (res.feasible) {
    const Eigen::VectorXd wq = terminal_weights(tree, res.witness);
    res.witness_density = wq.cwiseQuotient(tree.path_weights());
  }
  return res;
}

VsmmBundle solve_vsmm(const EventTree& tree, const GainsBasis& basis) {
  VsmmBundle b;
  b.feasibility = equivalent_measure_feasibility(tree);
  if (!b.feasibility.feasible) {
    std::string what = "no equivalent martingale measure (margin " +
                       std::to_string(b.feasibility.margin) + ")";
    for (const std::string& d : b.feasibility.defects) what += "; " + d;
    throw PipelineRefusal("no_equivalent_martingale_measure", what);
  }
  b.flags.feasible_equivalent = true;
  b.flags.margin = b.feasibility.margin;

  const ProjectionResult unit = project(basis, Eigen::VectorXd::Ones(tree.terminal_count()));
  const double mean_resid = expect(tree, unit.residual);
  if (!(mean_resid > 0.0))
    throw PipelineRefusal("constants_attainable",
                          "constant payoffs are attainable gains; no signed martingale measure");
  b.gstar = unit.residual / mean_resid;
  b.second_moment = inner(tree, b.gstar, b.gstar);
  b.moment_consistency = std::abs(b.second_moment * mean_resid - 1.0);
  b.mean_dev = std::abs(expect(tree, b.gstar) - 1.0);

  // Affine representation: gstar - E[gstar^2] is an attainable gain; fit it
  // afresh (exactness of the fit is a reported diagnostic).
  const Eigen::VectorXd affine_target =
      b.gstar - Eigen::VectorXd::Constant(tree.terminal_count(), b.second_moment);
  const ProjectionResult rep = project(basis, affine_target);
  b.theta_star = coefficients_to_strategy(tree, rep.coefficients);
  const double scale = std::max(1.0, b.gstar.lpNorm<Eigen::Infinity>());
  b.theta_residual = rep.residual.lpNorm<Eigen::Infinity>() / scale;

  b.z_star = conditional_expectation(tree, b.gstar, tree.reference_measure());
  const ScalarProcess g = gains(tree, b.theta_star);
  b.z_tilde.assign(tree.size(), 0.0);
  for (int i = 0; i < tree.size(); ++i) b.z_tilde[i] = b.second_moment + g[i];
  const ScalarProcess witness_route =
      conditional_expectation(tree, b.gstar, b.feasibility.witness);
  b.route_gap = process_distance(b.z_tilde, witness_route);

  const double gmax = b.gstar.lpNorm<Eigen::Infinity>();
  const double vanish = kVanishThreshold * std::max(1.0, gmax);
  b.flags.nonvanishing = b.gstar.cwiseAbs().minCoeff() > vanish;
  b.flags.equivalent_optimum = b.flags.nonvanishing && b.gstar.minCoeff() > 0.0;

  // A nonvanishing density must also be numerically usable: the one-step
  // ratios of the value/density product renormalize to one in exact
  // arithmetic, so a visible defect means the product sits below its own
  // rounding noise and nothing certified downstream would be meaningful.
  if (b.flags.nonvanishing) {
    const ScalarProcess zz = multiply(b.z_tilde, b.z_star);
    for (int n : tree.interior()) {
      double sum = 0.0;
      for (int c : tree.node(n).children) sum += tree.node(c).prob * zz[c] / zz[n];
      if (!(std::abs(sum - 1.0) <= kRowNormGuard))
        throw PipelineRefusal(
            "vanishing_density",
            "optimal density is numerically indistinguishable from a vanishing one: "
            "value/density product ratios at node '" + tree.node(n).id +
                "' do not renormalize");
    }
  }
  return b;
}

Eigen::MatrixXd complement_basis(const EventTree& tree, const GainsBasis& basis) {
  const int m = tree.terminal_count();
  Eigen::MatrixXd span(m, basis.terminal_gains.cols() + 1);
  span.leftCols(basis.terminal_gains.cols()) =
      basis.sqrt_weights.asDiagonal() * basis.terminal_gains;
  span.col(basis.terminal_gains.cols()) = basis.sqrt_weights;  // the constant 1, scaled
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  qr.setThreshold(kRankThreshold);
  qr.compute(span);
  const Eigen::Index rank = qr.rank();
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd comp = q.rightCols(m - rank);
  // Undo the sqrt-weight scaling: columns stay orthonormal in the
  // reference-measure inner product.
  return basis.sqrt_weights.cwiseInverse().asDiagonal() * comp;
}

double density_product_martingale_gap(const EventTree& tree, const ScalarProcess& z_tilde,
                                      const Eigen::VectorXd& g) {
  const ScalarProcess zg = conditional_expectation(tree, g, tree.reference_measure());
  return martingale_gap(tree, multiply(z_tilde, zg), tree.reference_measure());
}

PositivityCheck product_positivity(const EventTree& tree, const VsmmBundle& bundle) {
  PositivityCheck out;
  const ScalarProcess zz = multiply(bundle.z_tilde, bundle.z_star);
  const double scale = std::max(1.0, process_max(zz));
  double min_scaled = zz[0] / scale;
  for (double v : zz) min_scaled = std::min(min_scaled, v / scale);
  out.min_product = min_scaled;
  out.sign_ok = min_scaled >= -1e-12;
  // The product is the conditional second moment of the optimal density, so a
  // density bounded away from zero bounds it below by the square of that
  // bound: the strict-positivity floor is the square of the vanishing floor.
  const double gmax = bundle.gstar.lpNorm<Eigen::Infinity>();
  const double floor = kVanishThreshold * std::max(1.0, gmax);
  out.positive_everywhere = true;
  out.absorption_ok = true;
  for (int i = 0; i < tree.size(); ++i) {
    out.positive_everywhere = out.positive_everywhere && zz[i] > floor * floor;
    if (std::abs(zz[i]) <= floor * floor)
      for (int c : tree.node(i).children)
        if (std::abs(zz[c]) > floor * floor) out.absorption_ok = false;
  }
  return out;
}

}  // namespace mvh
