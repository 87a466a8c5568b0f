#pragma once
// Quadratic hedging of a terminal claim: the claim splits orthogonally into
// attainable gains, a loading on the optimal density, and a remainder that is
// itself the difference of two signed densities. The gains part is the
// variance-minimizing hedge; the other two parts price and bound it.

#include "mvh/vsmm.hpp"

namespace mvh {

struct HedgeDecomposition {
  Strategy theta;                 // variance-optimal holdings
  Eigen::VectorXd gains_terminal; // attainable part, per terminal slot
  double alpha = 0.0;             // E[H gstar] / E[gstar^2]
  Eigen::VectorXd orthogonal;     // density-difference part, per terminal slot
  double objective = 0.0;         // E[(H - terminal gains)^2]
  double objective_split = 0.0;   // alpha^2 E[gstar^2] + |orthogonal|^2 route
};

// Requires a bundle from solve_vsmm (the feasibility refusal happens there).
HedgeDecomposition solve_mvh(const EventTree& tree, const GainsBasis& basis,
                             const VsmmBundle& bundle, const Claim& claim);

// E[(H - x0 - terminal gains of theta)^2].
double hedging_error(const EventTree& tree, const Claim& claim, const Strategy& theta,
                     double x0);

// Node-wise martingale checks of gains(theta) * E[g|.] for g running through
// the optimal density and its complement-basis perturbations (the admissible
// class), and against z_star alone (the narrower class). On finite trees
// both hold for every strategy; the verdicts should coincide.
struct MembershipCheck {
  bool admissible = false;        // all signed densities
  bool value_compatible = false;  // optimal density only
  double max_gap_admissible = 0.0;
  double max_gap_value = 0.0;
};

MembershipCheck strategy_membership(const EventTree& tree, const Strategy& theta,
                                    const VsmmBundle& bundle,
                                    const Eigen::MatrixXd& complement, double tol = 1e-9);

}  // namespace mvh
