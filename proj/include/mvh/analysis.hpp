#pragma once
// Pipeline driver and invariant grader. analyze() runs every stage on one
// (tree, claim) pair and grades the results against the identities they must
// satisfy; each check becomes a Verdict carrying the measured deviation and
// the tolerance it was judged at. Checks are deliberately functions of the
// node tables alone (PipelineData) plus the model, never of solver
// internals, so a serialized report can be re-graded after a round trip and
// must reproduce every verdict exactly.

#include <string>
#include <vector>

#include "mvh/hedge.hpp"
#include "mvh/numeraire.hpp"
#include "mvh/qstar.hpp"
#include "mvh/vsmm.hpp"

namespace mvh {

struct Verdict {
  std::string id;
  std::string description;
  double deviation = 0.0;
  double tol = 0.0;
  bool pass = false;
  bool available = true;  // false: prerequisite hypothesis absent (see note)
  std::string note;
};

struct AnalysisOptions {
  double tol = 1e-9;         // relative tolerance for identity checks
  double oracle_tol = 1e-8;  // pipeline vs dense-reference agreement
  bool with_oracle = true;
  int oracle_cap = 3000;  // skip the dense reference beyond this many terminals
};

// Exactly the numbers a serialized report carries. Every verdict is a
// deterministic function of (tree, claim, this struct); anything else a
// check needs — gains, conditional expectations, the feasibility witness,
// the dense reference solve — is recomputed on the fly.
struct PipelineData {
  HypothesisFlags flags;
  bool frame_ok = false;     // deflation/value stages present (needs nonvanishing density)
  bool feedback_ok = false;  // optimal-measure stages present (needs strict positivity)
  bool jump_predicate = false;
  std::string frame_note;     // why the deflation stages are absent, if they are
  std::string feedback_note;  // why the optimal-measure stages are absent, if they are

  double second_moment = 0.0;
  double alpha = 0.0;
  double gkw_mean = 0.0;  // mean of the deflated claim under the frame measure
  double initial = 0.0;   // value process at the root
  double objective = 0.0;
  double objective_split = 0.0;

  Eigen::VectorXd gstar;       // per terminal slot
  Eigen::VectorXd orthogonal;  // per terminal slot
  ScalarProcess z_star, z_tilde;
  ScalarProcess value, residual, cost;  // deflation/value stages only
  Strategy theta_star, theta;
  Strategy phi;                      // value stage
  Strategy psi;                      // d+1 components, deflation stage
  Strategy eta_value, eta_residual;  // optimal-measure stages only
};

std::vector<Verdict> evaluate_verdicts(const EventTree& tree, const Claim& claim,
                                       const PipelineData& data, const AnalysisOptions& opt);

struct Analysis {
  bool refused = false;
  std::string refusal_code;
  std::string refusal_reason;

  GainsBasis basis;
  VsmmBundle bundle;
  HedgeDecomposition hedge;
  NumeraireFrame frame;
  DeflatedGkw gkw;
  ValueDecomposition vdec;
  EdgeMeasure qstar;
  OptimalGkw value_gkw, residual_gkw;
  ScalarProcess compensated;
  JumpOrthogonality jump;

  PipelineData data;
  std::vector<Verdict> verdicts;
  bool all_pass = false;  // refusal or any available verdict failing clears this
};

// Runs every stage, collecting objects, tables and verdicts. Hypothesis
// failures surface as refused=true with code/reason rather than exceptions;
// verdicts evaluable before the refusal point are still graded.
Analysis analyze(const EventTree& tree, const Claim& claim, const AnalysisOptions& opt = {});

}  // namespace mvh
