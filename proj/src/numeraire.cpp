#include "mvh/numeraire.hpp"

#include <cmath>
#include <random>

namespace mvh {

namespace {

// Deterministic uniforms for the construction-time probe checks.
class ProbeRng {
 public:
  explicit ProbeRng(uint64_t seed) : eng_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace

NumeraireFrame build_frame(const EventTree& tree, const VsmmBundle& bundle) {
  if (!bundle.flags.nonvanishing)
    throw PipelineRefusal("vanishing_density",
                          "numeraire change unavailable: optimal density has a zero state, the "
                          "value/density product is not positive everywhere");
  NumeraireFrame f;
  const int d = tree.assets();
  const ScalarProcess zz = multiply(bundle.z_tilde, bundle.z_star);
  for (int i = 0; i < tree.size(); ++i)
    if (!(zz[i] > 0.0))
      throw PipelineRefusal("vanishing_density",
                            "numeraire change unavailable: value/density product is not positive "
                            "at node '" + tree.node(i).id + "'");

  f.deflated.resize(tree.size());
  f.density.assign(tree.size(), 0.0);
  f.measure.prob.assign(tree.size(), 1.0);
  for (int i = 0; i < tree.size(); ++i) {
    Eigen::VectorXd y(d + 1);
    y[0] = 1.0 / bundle.z_tilde[i];
    y.tail(d) = tree.node(i).price / bundle.z_tilde[i];
    f.deflated[i] = std::move(y);
    f.density[i] = zz[i] / bundle.second_moment;
    if (i > 0) f.measure.prob[i] = tree.node(i).prob * zz[i] / zz[tree.node(i).parent];
  }

  f.norm_check = norm_transfer_probes(tree, f, bundle.second_moment);
  return f;
}

double norm_transfer_probes(const EventTree& tree, const NumeraireFrame& frame,
                            double second_moment) {
  // Expected squared hedging error under the reference measure must equal
  // E[gstar^2] times the deflated squared error under the frame measure.
  const int d = tree.assets();
  ProbeRng rng(0x5eedf00d + static_cast<uint64_t>(tree.size()));
  const Eigen::VectorXd frame_weights = terminal_weights(tree, frame.measure);
  double worst = 0.0;
  for (int probe = 0; probe < 5; ++probe) {
    Eigen::VectorXd payoff(tree.terminal_count());
    for (int t = 0; t < tree.terminal_count(); ++t) payoff[t] = rng.uniform(-2.0, 2.0);
    Strategy theta = zero_strategy(tree, d);
    for (int n : tree.interior())
      for (int i = 0; i < d; ++i) theta[n][i] = rng.uniform(-1.0, 1.0);

    const ScalarProcess g = gains(tree, theta);
    double lhs = 0.0;
    for (int t = 0; t < tree.terminal_count(); ++t) {
      const double e = payoff[t] - g[tree.terminals()[t]];
      lhs += tree.path_weights()[t] * e * e;
    }
    const Strategy psi = to_deflated_strategy(tree, theta);
    const ScalarProcess a = stochastic_integral(tree, frame.deflated, psi);
    // Magnitude the integral is accumulated through: its steps can be large
    // and cancel, so the final values understate the rounding the sum carries.
    ScalarProcess acc(tree.size(), 0.0);
    for (int i = 1; i < tree.size(); ++i) {
      const int p = tree.node(i).parent;
      acc[i] = acc[p] + psi[p].cwiseAbs().dot((frame.deflated[i] - frame.deflated[p]).cwiseAbs());
    }
    double rhs = 0.0, mass = 0.0;
    for (int t = 0; t < tree.terminal_count(); ++t) {
      const int node = tree.terminals()[t];
      // deflated[0] is 1/z_tilde at the node.
      const double p = payoff[t] * frame.deflated[node][0];
      const double e = p - a[node];
      rhs += frame_weights[t] * e * e;
      // The deflated route squares differences of these magnitudes; the
      // comparison cannot resolve below the rounding noise of that sum.
      const double m = std::abs(p) + acc[node];
      mass += frame_weights[t] * m * m;
    }
    rhs *= second_moment;
    mass *= second_moment;
    worst = std::max(worst, std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), mass}));
  }
  return worst;
}

double deflated_claim_level(const EventTree& tree, const Claim& claim,
                            const ScalarProcess& z_tilde) {
  double level = 1.0;
  for (int t = 0; t < tree.terminal_count(); ++t)
    level = std::max(level, std::abs(claim.payoff[t] / z_tilde[tree.terminals()[t]]));
  return level;
}

DeflatedGkw gkw_deflated(const EventTree& tree, const Claim& claim,
                         const NumeraireFrame& frame, const VsmmBundle& bundle) {
  DeflatedGkw out;
  Eigen::VectorXd deflated_payoff(tree.terminal_count());
  for (int t = 0; t < tree.terminal_count(); ++t)
    deflated_payoff[t] = claim.payoff[t] / bundle.z_tilde[tree.terminals()[t]];
  out.deflated_value = conditional_expectation(tree, deflated_payoff, frame.measure);
  const NodewiseRegression reg =
      nodewise_regression(tree, out.deflated_value, frame.deflated, frame.measure);
  out.psi = reg.coefficients;
  out.residual = reg.residual;
  out.mean = out.deflated_value[tree.root()];
  return out;
}

Strategy to_market_strategy(const EventTree& tree, const NumeraireFrame& frame,
                            const Strategy& psi, const VsmmBundle& bundle) {
  const int d = tree.assets();
  const ScalarProcess position = stochastic_integral(tree, frame.deflated, psi);
  Strategy theta(tree.size());
  for (int n : tree.interior()) {
    const double feedback = position[n] - psi[n].dot(frame.deflated[n]);
    theta[n] = psi[n].tail(d) + feedback * bundle.theta_star[n];
  }
  return theta;
}

Strategy to_deflated_strategy(const EventTree& tree, const Strategy& theta) {
  const int d = tree.assets();
  const ScalarProcess g = gains(tree, theta);
  Strategy psi(tree.size());
  for (int n : tree.interior()) {
    Eigen::VectorXd v(d + 1);
    v[0] = g[n] - theta[n].dot(tree.node(n).price);
    v.tail(d) = theta[n];
    psi[n] = std::move(v);
  }
  return psi;
}

HedgeGkwRelation verify_hedge_gkw_relation(const EventTree& tree, const VsmmBundle& bundle,
                                           const HedgeDecomposition& hedge,
                                           const NumeraireFrame& frame,
                                           const DeflatedGkw& gkw, double floor) {
  HedgeGkwRelation rel;
  const Strategy mapped = to_market_strategy(tree, frame, gkw.psi, bundle);
  rel.gains_gap = process_distance(gains(tree, mapped), gains(tree, hedge.theta), floor);

  double scale = std::max(1.0, floor), worst = 0.0;
  for (int t = 0; t < tree.terminal_count(); ++t) {
    const double lhs = hedge.orthogonal[t];
    const double rhs = gkw.residual[tree.terminals()[t]] * bundle.gstar[t];
    scale = std::max({scale, std::abs(lhs), std::abs(rhs)});
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  rel.residual_density_gap = worst / scale;
  return rel;
}

}  // namespace mvh
