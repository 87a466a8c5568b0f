#pragma once
// Variance-optimal signed martingale measure on the event tree.
//
// Signed densities g with E[g]=1 that kill every attainable gain form an
// affine subspace; the variance-optimal one (minimal E[g^2]) is the scaled
// residual of the constant 1 against the gains span. It decomposes as
//   gstar = E[gstar^2] + terminal gains of theta_star,
// which also defines the value process z_tilde; z_star is the conditional
// expectation of gstar under the reference measure. Both are carried as
// node-indexed processes together with the hypothesis flags downstream
// stages depend on.

#include <string>

#include "mvh/projection.hpp"
#include "mvh/tree.hpp"

namespace mvh {

// Raised when a stage's standing hypothesis fails (no equivalent martingale
// measure, vanishing optimal density, signed optimal measure where an
// equivalent one is required).
struct PipelineRefusal : std::runtime_error {
  std::string code;
  PipelineRefusal(std::string code_, const std::string& message)
      : std::runtime_error(message), code(std::move(code_)) {}
};

inline constexpr double kFeasibilityMargin = 1e-10;  // min acceptable LP margin
inline constexpr double kVanishThreshold = 1e-12;    // relative zero test on densities
// One-step weights made from ratios of the value/density product must
// renormalize to one; a larger defect means the product is below its own
// rounding noise somewhere, i.e. the density is numerically vanishing.
inline constexpr double kRowNormGuard = 1e-10;

struct FeasibilityResult {
  bool feasible = false;
  double margin = 0.0;            // min over families of the max-min weight
  EdgeMeasure witness;            // strictly positive martingale edge weights
  Eigen::VectorXd witness_density;  // terminal density of the witness measure
  std::vector<std::string> defects;  // families with no positive weighting
};

// Solves the max-min weight LP family by family.
FeasibilityResult equivalent_measure_feasibility(const EventTree& tree);

struct HypothesisFlags {
  bool feasible_equivalent = false;  // some equivalent martingale measure exists
  double margin = 0.0;
  bool nonvanishing = false;         // optimal density has no zero state
  bool equivalent_optimum = false;   // optimal density strictly positive
};

struct VsmmBundle {
  Eigen::VectorXd gstar;       // per terminal slot
  double second_moment = 0.0;  // E[gstar^2] = 1 / E[residual of 1]
  Strategy theta_star;
  ScalarProcess z_star;        // E[gstar | node]
  ScalarProcess z_tilde;       // second_moment + gains(theta_star)
  HypothesisFlags flags;
  FeasibilityResult feasibility;

  // Construction diagnostics (all should sit at round-off):
  double mean_dev = 0.0;            // |E[gstar] - 1|
  double moment_consistency = 0.0;  // second moment vs reciprocal-residual route
  double theta_residual = 0.0;      // exactness of the affine representation fit
  double route_gap = 0.0;           // z_tilde forward route vs witness-measure route
};

// Throws PipelineRefusal("no_equivalent_martingale_measure", ...) when the
// feasibility margin is below kFeasibilityMargin.
VsmmBundle solve_vsmm(const EventTree& tree, const GainsBasis& basis);

// Orthonormal basis (reference-measure inner product) of the orthogonal
// complement of span(gains) + constants; one column per dimension. Adding a
// combination of these columns to gstar stays inside the signed density set.
Eigen::MatrixXd complement_basis(const EventTree& tree, const GainsBasis& basis);

// Max one-step martingale defect of z_tilde * E[g|.] under the reference
// measure; zero for every signed density g in exact arithmetic.
double density_product_martingale_gap(const EventTree& tree, const ScalarProcess& z_tilde,
                                      const Eigen::VectorXd& g);

struct PositivityCheck {
  double min_product = 0.0;     // min over nodes of z_tilde*z_star, scaled
  bool sign_ok = false;         // no materially negative node
  bool absorption_ok = false;   // once ~0, the whole subtree stays ~0
  bool positive_everywhere = false;
};

PositivityCheck product_positivity(const EventTree& tree, const VsmmBundle& bundle);

}  // namespace mvh
