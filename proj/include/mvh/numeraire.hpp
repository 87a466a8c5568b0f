#pragma once
// Change of numeraire built from the optimal-density value process: deflated
// prices (1, price)/z_tilde are martingales under the squared-density measure,
// and quadratic hedging of the deflated claim there reduces to an orthogonal
// martingale decomposition computed family by family. The strategy maps
// translate between deflated-world integrands (d+1 components, the 0th on the
// deflated cash leg) and market holdings (d components, self-financed).

#include "mvh/hedge.hpp"
#include "mvh/vsmm.hpp"

namespace mvh {

struct NumeraireFrame {
  VectorProcess deflated;   // (1/z_tilde, price/z_tilde) per node
  EdgeMeasure measure;      // squared-density one-step weights
  ScalarProcess density;    // z_tilde * z_star / E[gstar^2]
  double norm_check = 0.0;  // worst probe deviation of the norm-transfer identity
};

// Requires a nonvanishing optimal density; refuses otherwise.
NumeraireFrame build_frame(const EventTree& tree, const VsmmBundle& bundle);

// Worst relative deviation, over a few deterministic random (payoff, strategy)
// pairs, of the reference-measure squared hedging error against second_moment
// times the deflated squared error under the frame measure.
double norm_transfer_probes(const EventTree& tree, const NumeraireFrame& frame,
                            double second_moment);

// Sup-norm of the deflated payoff, floored at one. Every deflated-frame
// regression works at this magnitude, so residuals computed there carry
// rounding noise proportional to it; covariance checks treat it as the
// resolution below which a residual increment cannot be told from zero.
double deflated_claim_level(const EventTree& tree, const Claim& claim,
                            const ScalarProcess& z_tilde);

struct DeflatedGkw {
  Strategy psi;                 // d+1 per interior node, min-norm
  ScalarProcess residual;       // orthogonal martingale part, 0 at the root
  double mean = 0.0;            // equals the claim's loading on gstar
  ScalarProcess deflated_value; // conditional expectations of the deflated claim
};

DeflatedGkw gkw_deflated(const EventTree& tree, const Claim& claim,
                         const NumeraireFrame& frame, const VsmmBundle& bundle);

// Backward map: deflated integrand -> market holdings (adds the feedback of
// the deflated position on the optimal-density strategy).
Strategy to_market_strategy(const EventTree& tree, const NumeraireFrame& frame,
                            const Strategy& psi, const VsmmBundle& bundle);

// Forward map: market holdings -> deflated integrand (0th component is wealth
// minus position value at the family node).
Strategy to_deflated_strategy(const EventTree& tree, const Strategy& theta);

struct HedgeGkwRelation {
  double gains_gap = 0.0;             // hedge gains vs mapped deflated integrand gains
  double residual_density_gap = 0.0;  // density-difference part vs residual * gstar
};

// `floor` is the magnitude the residual-times-density product is computed
// through (deflated claim level times the density sup-norm); the comparison
// cannot resolve differences below the rounding noise of that construction.
HedgeGkwRelation verify_hedge_gkw_relation(const EventTree& tree, const VsmmBundle& bundle,
                                           const HedgeDecomposition& hedge,
                                           const NumeraireFrame& frame,
                                           const DeflatedGkw& gkw, double floor = 1.0);

}  // namespace mvh
