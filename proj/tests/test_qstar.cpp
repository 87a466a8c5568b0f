#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mvh/analysis.hpp"
#include "mvh/generate.hpp"
#include "mvh/qstar.hpp"

using namespace mvh;

namespace {

struct Full {
  GainsBasis basis;
  VsmmBundle bundle;
  HedgeDecomposition hedge;
  NumeraireFrame frame;
  DeflatedGkw gkw;
  ValueDecomposition vdec;
};

Full run(const EventTree& tree, const Claim& claim) {
  Full x;
  x.basis = gains_basis(tree);
  x.bundle = solve_vsmm(tree, x.basis);
  x.hedge = solve_mvh(tree, x.basis, x.bundle, claim);
  x.frame = build_frame(tree, x.bundle);
  x.gkw = gkw_deflated(tree, claim, x.frame, x.bundle);
  x.vdec = decompose_value(tree, claim, x.bundle, x.hedge, x.gkw);
  return x;
}

}  // namespace

TEST_CASE("value process on fixture A prices the claim at 1") {
  Fixture f = builtin_fixture("A");
  Full x = run(f.tree, f.claims[0]);
  CHECK(x.vdec.value[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x.vdec.value[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(x.vdec.value[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(x.vdec.initial == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x.vdec.phi[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  for (double k : x.vdec.k_conditional) CHECK(std::abs(k) < 1e-12);
  for (double k : x.vdec.k_product) CHECK(std::abs(k) < 1e-12);
  for (double k : x.vdec.k_direct) CHECK(std::abs(k) < 1e-12);
}

TEST_CASE("value process on fixture B prices at the density-weighted mean") {
  test::FixtureBValues fb;
  Fixture f = builtin_fixture("B");
  Full x = run(f.tree, f.claims[0]);
  CHECK(x.vdec.initial == doctest::Approx(fb.initial()).epsilon(1e-12));
  CHECK(x.vdec.value[0] == doctest::Approx(fb.initial()).epsilon(1e-12));
  // phi folds the density loading into the hedge holdings.
  CHECK(x.vdec.phi[0][0] == doctest::Approx(x.hedge.theta[0][0] +
                                            x.hedge.alpha * x.bundle.theta_star[0][0])
                                .epsilon(1e-12));
}

TEST_CASE("three cost constructions coincide and capture the shortfall") {
  for (const char* name : {"A", "B", "C"}) {
    Fixture f = builtin_fixture(name);
    Full x = run(f.tree, f.claims[0]);
    CHECK(process_distance(x.vdec.k_conditional, x.vdec.k_product) < 1e-12);
    CHECK(process_distance(x.vdec.k_conditional, x.vdec.k_direct) < 1e-12);
    // value = initial + gains(phi) + cost, node by node.
    ScalarProcess g = gains(f.tree, x.vdec.phi);
    for (int i = 0; i < f.tree.size(); ++i)
      CHECK(x.vdec.value[i] ==
            doctest::Approx(x.vdec.initial + g[i] + x.vdec.k_product[i]).epsilon(1e-11));
    // Cost times conditional density is a reference-measure martingale.
    CHECK(martingale_gap(f.tree, multiply(x.vdec.k_product, x.bundle.z_star),
                         f.tree.reference_measure()) < 1e-12);
  }
}

TEST_CASE("normalized optimal measure on fixture A matches the feasibility witness") {
  Fixture f = builtin_fixture("A");
  Full x = run(f.tree, f.claims[0]);
  EdgeMeasure q = optimal_measure(f.tree, x.bundle);
  CHECK(q.prob[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(q.prob[2] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  // Prices are martingales under it.
  ScalarProcess s0(f.tree.size());
  for (int i = 0; i < f.tree.size(); ++i) s0[i] = f.tree.node(i).price[0];
  CHECK(martingale_gap(f.tree, s0, q) < 1e-13);
}

TEST_CASE("signed optimal density refuses the optimal-measure stage") {
  Fixture f = builtin_fixture("B");
  Full x = run(f.tree, f.claims[0]);
  try {
    optimal_measure(f.tree, x.bundle);
    FAIL("expected a refusal");
  } catch (const PipelineRefusal& r) {
    CHECK(r.code == "signed_optimal_measure");
    CHECK(std::string(r.what()).find("signed") != std::string::npos);
  }
}

TEST_CASE("compensated residual: both assemblies agree and are martingales") {
  Fixture f = builtin_fixture("C");
  Full x = run(f.tree, f.claims[0]);
  EdgeMeasure q = optimal_measure(f.tree, x.bundle);
  ScalarProcess j = compensated_residual(f.tree, x.gkw.residual, x.bundle.z_tilde);
  ScalarProcess jraw = compensated_residual_raw(f.tree, x.gkw.residual, x.bundle.z_tilde);
  CHECK(process_distance(j, jraw) < 1e-13);
  CHECK(j[0] == 0.0);
  CHECK(martingale_gap(f.tree, j, q) < 1e-12);
  CHECK(martingale_gap(f.tree, x.vdec.value, q) < 1e-12);
}

TEST_CASE("feedback representation on fixture A: 0.6 = 0.5 + 0.1") {
  Fixture f = builtin_fixture("A");
  Full x = run(f.tree, f.claims[0]);
  EdgeMeasure q = optimal_measure(f.tree, x.bundle);
  OptimalGkw vg = gkw_under_optimal(f.tree, x.vdec.value, q);
  ScalarProcess j = compensated_residual(f.tree, x.gkw.residual, x.bundle.z_tilde);
  OptimalGkw jg = gkw_under_optimal(f.tree, j, q);
  CHECK(vg.eta[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(jg.eta[0][0]) < 1e-12);
  // theta(root) = eta_V - eta_J - (theta*/z_tilde) (V - G) with V - G = 1 at the root.
  const double feedback =
      -x.bundle.theta_star[0][0] / x.bundle.z_tilde[0] * (x.vdec.value[0] - 0.0);
  CHECK(feedback == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(x.hedge.theta[0][0] == doctest::Approx(vg.eta[0][0] - jg.eta[0][0] + feedback)
                                   .epsilon(1e-12));
  FeedbackChecks fc = verify_feedback(f.tree, x.bundle, x.hedge, x.gkw, x.vdec, vg, jg, j);
  CHECK(fc.representation_gap < 1e-12);
  CHECK(fc.integrand_gap < 1e-12);
  CHECK(fc.feedback_gap < 1e-12);
  CHECK(fc.proof_identity_gap < 1e-12);
  CHECK(fc.closure_gap < 1e-12);
  CHECK(fc.residual_match_gap < 1e-12);
}

TEST_CASE("feedback gaps vanish on every equivalent-optimum fixture") {
  for (const char* name : {"A", "C"}) {
    Fixture f = builtin_fixture(name);
    Full x = run(f.tree, f.claims[0]);
    EdgeMeasure q = optimal_measure(f.tree, x.bundle);
    OptimalGkw vg = gkw_under_optimal(f.tree, x.vdec.value, q);
    ScalarProcess j = compensated_residual(f.tree, x.gkw.residual, x.bundle.z_tilde);
    OptimalGkw jg = gkw_under_optimal(f.tree, j, q);
    FeedbackChecks fc = verify_feedback(f.tree, x.bundle, x.hedge, x.gkw, x.vdec, vg, jg, j);
    CHECK(fc.representation_gap < 1e-12);
    CHECK(fc.integrand_gap < 1e-12);
    CHECK(fc.feedback_gap < 1e-12);
    CHECK(fc.proof_identity_gap < 1e-12);
    CHECK(fc.closure_gap < 1e-12);
    CHECK(fc.residual_match_gap < 1e-12);
    // The proof identity in the raw: z_tilde (alpha + L) = V - G(theta).
    ScalarProcess g = gains(f.tree, x.hedge.theta);
    for (int i = 0; i < f.tree.size(); ++i)
      CHECK(x.bundle.z_tilde[i] * (x.hedge.alpha + x.gkw.residual[i]) ==
            doctest::Approx(x.vdec.value[i] - g[i]).epsilon(1e-11));
  }
}

TEST_CASE("orthogonal jumps: trivial residual satisfies the criterion") {
  Fixture f = builtin_fixture("A");
  Full x = run(f.tree, f.claims[0]);
  EdgeMeasure q = optimal_measure(f.tree, x.bundle);
  OptimalGkw vg = gkw_under_optimal(f.tree, x.vdec.value, q);
  ScalarProcess j = compensated_residual(f.tree, x.gkw.residual, x.bundle.z_tilde);
  OptimalGkw jg = gkw_under_optimal(f.tree, j, q);
  JumpOrthogonality jo =
      jump_orthogonality(f.tree, x.bundle, x.hedge, x.gkw, x.vdec, vg, jg, q,
                         deflated_claim_level(f.tree, f.claims[0], x.bundle.z_tilde));
  CHECK(jo.predicate);
  CHECK(jo.biconditional_ok);
  CHECK(jo.eta_j_size < 1e-12);
  CHECK(jo.simplified_gap < 1e-12);
}

TEST_CASE("orthogonal jumps: a generated market where the criterion bites") {
  GeneratorConfig cfg;
  cfg.seed = 1;
  cfg.depth = 2;
  cfg.max_branching = 3;  // root forced to 3 children with one asset
  Rng rng(cfg.seed ^ 0xc1a1135eedULL);
  EventTree t = generate_random_tree(cfg);
  Claim h = random_call_claim(t, rng, "call");
  Full x = run(t, h);
  REQUIRE(x.bundle.flags.equivalent_optimum);
  EdgeMeasure q = optimal_measure(t, x.bundle);
  OptimalGkw vg = gkw_under_optimal(t, x.vdec.value, q);
  ScalarProcess j = compensated_residual(t, x.gkw.residual, x.bundle.z_tilde);
  OptimalGkw jg = gkw_under_optimal(t, j, q);
  JumpOrthogonality jo = jump_orthogonality(t, x.bundle, x.hedge, x.gkw, x.vdec, vg, jg, q,
                                            deflated_claim_level(t, h, x.bundle.z_tilde));
  CHECK_FALSE(jo.predicate);  // generic market: the triple products do not vanish
  CHECK(jo.biconditional_ok);
  CHECK(jo.eta_j_size > 1e-12);
  // The feedback identity still holds with the residual term included.
  FeedbackChecks fc = verify_feedback(t, x.bundle, x.hedge, x.gkw, x.vdec, vg, jg, j);
  CHECK(fc.feedback_gap < 1e-12);
}

TEST_CASE("residual/price covariation vanishes for the pipeline residual only") {
  GeneratorConfig cfg;
  cfg.seed = 1;
  cfg.depth = 2;
  cfg.max_branching = 3;
  Rng rng(cfg.seed ^ 0xc1a1135eedULL);
  EventTree t = generate_random_tree(cfg);
  Claim h = random_call_claim(t, rng, "call");
  Full x = run(t, h);
  EdgeMeasure q = optimal_measure(t, x.bundle);
  const double level = deflated_claim_level(t, h, x.bundle.z_tilde);
  CHECK(residual_price_covariation(t, x.gkw.residual, q, level) < 1e-12);
  // Perturbing the residual at one terminal breaks it by a visible margin.
  ScalarProcess broken = x.gkw.residual;
  broken[t.terminals()[0]] += 0.1;
  CHECK(residual_price_covariation(t, broken, q, level) > 1e-6);
}
