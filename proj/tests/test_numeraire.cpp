#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mvh/numeraire.hpp"

using namespace mvh;

namespace {

struct Deflation {
  GainsBasis basis;
  VsmmBundle bundle;
  HedgeDecomposition hedge;
  NumeraireFrame frame;
  DeflatedGkw gkw;
};

Deflation deflate(const EventTree& tree, const Claim& claim) {
  Deflation d;
  d.basis = gains_basis(tree);
  d.bundle = solve_vsmm(tree, d.basis);
  d.hedge = solve_mvh(tree, d.basis, d.bundle, claim);
  d.frame = build_frame(tree, d.bundle);
  d.gkw = gkw_deflated(tree, claim, d.frame, d.bundle);
  return d;
}

}  // namespace

TEST_CASE("squared-density measure on fixture A is (0.2, 0.8)") {
  Fixture f = builtin_fixture("A");
  Deflation d = deflate(f.tree, f.claims[0]);
  CHECK(d.frame.measure.prob[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(d.frame.measure.prob[2] == doctest::Approx(0.8).epsilon(1e-12));
  // Density process of the measure change: mean one, martingale.
  CHECK(d.frame.density[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.frame.density[1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(d.frame.density[2] == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(martingale_gap(f.tree, d.frame.density, f.tree.reference_measure()) < 1e-13);
  // Deflated cash and price legs.
  CHECK(d.frame.deflated[0][0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(d.frame.deflated[0][1] == doctest::Approx(3.6).epsilon(1e-12));
  CHECK(d.frame.deflated[1][0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(d.frame.deflated[1][1] == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(d.frame.deflated[2][0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(d.frame.deflated[2][1] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("squared-density measure weights scale with the density squares") {
  test::FixtureBValues fb;
  Fixture f = builtin_fixture("B");
  Deflation d = deflate(f.tree, f.claims[0]);
  const double g2[3] = {fb.gstar(12) * fb.gstar(12), fb.gstar(2) * fb.gstar(2),
                        fb.gstar(-1) * fb.gstar(-1)};
  const double norm = 0.1 * g2[0] + 0.45 * g2[1] + 0.45 * g2[2];
  CHECK(d.frame.measure.prob[1] == doctest::Approx(0.1 * g2[0] / norm).epsilon(1e-12));
  CHECK(d.frame.measure.prob[2] == doctest::Approx(0.45 * g2[1] / norm).epsilon(1e-12));
  CHECK(d.frame.measure.prob[3] == doctest::Approx(0.45 * g2[2] / norm).epsilon(1e-12));
  CHECK(norm == doctest::Approx(fb.second_moment()).epsilon(1e-12));
}

TEST_CASE("deflated prices are martingales under the frame measure") {
  for (const char* name : {"A", "B", "C"}) {
    Fixture f = builtin_fixture(name);
    Deflation d = deflate(f.tree, f.claims[0]);
    for (int k = 0; k <= f.tree.assets(); ++k) {
      ScalarProcess leg(f.tree.size());
      for (int i = 0; i < f.tree.size(); ++i) leg[i] = d.frame.deflated[i][k];
      CHECK(martingale_gap(f.tree, leg, d.frame.measure) < 1e-12);
    }
  }
}

TEST_CASE("norm transfer probes stay at round-off") {
  for (const char* name : {"A", "B", "C"}) {
    Fixture f = builtin_fixture(name);
    Deflation d = deflate(f.tree, f.claims[0]);
    CHECK(d.frame.norm_check < 1e-12);
    CHECK(norm_transfer_probes(f.tree, d.frame, d.bundle.second_moment) ==
          doctest::Approx(d.frame.norm_check).epsilon(1e-15));
  }
}

TEST_CASE("deflated decomposition on fixture A: mean 0.9, no orthogonal part") {
  Fixture f = builtin_fixture("A");
  Deflation d = deflate(f.tree, f.claims[0]);
  CHECK(d.gkw.mean == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(d.gkw.mean == doctest::Approx(d.hedge.alpha).epsilon(1e-12));
  // Deflated claim: H / z_tilde at terminals, expectations under the frame.
  CHECK(d.gkw.deflated_value[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(d.gkw.deflated_value[1] == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(d.gkw.deflated_value[2] == doctest::Approx(0.0).epsilon(1e-12));
  for (double v : d.gkw.residual) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("deflated decomposition reassembles the deflated claim") {
  for (const char* name : {"B", "C"}) {
    Fixture f = builtin_fixture(name);
    Deflation d = deflate(f.tree, f.claims[0]);
    ScalarProcess igains = stochastic_integral(f.tree, d.frame.deflated, d.gkw.psi);
    for (int t = 0; t < f.tree.terminal_count(); ++t) {
      int node = f.tree.terminals()[t];
      double deflated = f.claims[0].payoff[t] / d.bundle.z_tilde[node];
      CHECK(d.gkw.mean + igains[node] + d.gkw.residual[node] ==
            doctest::Approx(deflated).epsilon(1e-12));
    }
    // Residual: martingale under the frame, increments orthogonal to the legs.
    CHECK(martingale_gap(f.tree, d.gkw.residual, d.frame.measure) < 1e-12);
    for (int n : f.tree.interior()) {
      Eigen::VectorXd cov = Eigen::VectorXd::Zero(f.tree.assets() + 1);
      for (int c : f.tree.node(n).children)
        cov += d.frame.measure.prob[c] * (d.gkw.residual[c] - d.gkw.residual[n]) *
               (d.frame.deflated[c] - d.frame.deflated[n]);
      CHECK(cov.cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("strategy maps invert each other") {
  Fixture f = builtin_fixture("C");
  Deflation d = deflate(f.tree, f.claims[0]);
  std::mt19937_64 eng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Strategy theta = zero_strategy(f.tree, 1);
  for (int n : f.tree.interior()) theta[n][0] = u(eng);
  Strategy back =
      to_market_strategy(f.tree, d.frame, to_deflated_strategy(f.tree, theta), d.bundle);
  CHECK(strategy_distance(f.tree, back, theta) < 1e-12);
  // The deflated image finances the deflated gains: (psi . Y) = G(theta)/z_tilde.
  Strategy psi = to_deflated_strategy(f.tree, theta);
  ScalarProcess lhs = stochastic_integral(f.tree, d.frame.deflated, psi);
  ScalarProcess g = gains(f.tree, theta);
  for (int i = 0; i < f.tree.size(); ++i)
    CHECK(lhs[i] == doctest::Approx(g[i] / d.bundle.z_tilde[i]).epsilon(1e-12));
  // Zero deflated integrand maps to zero holdings.
  Strategy zero = to_market_strategy(f.tree, d.frame, zero_strategy(f.tree, 2), d.bundle);
  CHECK(strategy_distance(f.tree, zero, zero_strategy(f.tree, 1)) == 0.0);
}

TEST_CASE("deflated integrand maps onto the market hedge") {
  for (const char* name : {"A", "B", "C"}) {
    Fixture f = builtin_fixture(name);
    Deflation d = deflate(f.tree, f.claims[0]);
    HedgeGkwRelation rel = verify_hedge_gkw_relation(f.tree, d.bundle, d.hedge, d.frame, d.gkw);
    CHECK(rel.gains_gap < 1e-12);
    CHECK(rel.residual_density_gap < 1e-12);
    // The mapped strategy agrees with the hedge holdings vector-wise here.
    Strategy mapped = to_market_strategy(f.tree, d.frame, d.gkw.psi, d.bundle);
    CHECK(strategy_distance(f.tree, mapped, d.hedge.theta) < 1e-11);
  }
}

TEST_CASE("manufactured deflated integrand: integral recovered exactly") {
  Fixture f = builtin_fixture("C");
  GainsBasis basis = gains_basis(f.tree);
  VsmmBundle bundle = solve_vsmm(f.tree, basis);
  NumeraireFrame frame = build_frame(f.tree, bundle);
  std::mt19937_64 eng(57);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Strategy psi0 = zero_strategy(f.tree, 2);
  for (int n : f.tree.interior())
    for (int k = 0; k < 2; ++k) psi0[n][k] = u(eng);
  const double mean0 = 0.7;
  ScalarProcess m = stochastic_integral(f.tree, frame.deflated, psi0);
  Claim h{"made", Eigen::VectorXd(f.tree.terminal_count())};
  for (int t = 0; t < f.tree.terminal_count(); ++t) {
    int node = f.tree.terminals()[t];
    h.payoff[t] = (mean0 + m[node]) * bundle.z_tilde[node];
  }
  DeflatedGkw g = gkw_deflated(f.tree, h, frame, bundle);
  CHECK(g.mean == doctest::Approx(mean0).epsilon(1e-12));
  for (double v : g.residual) CHECK(std::abs(v) < 1e-11);
  ScalarProcess got = stochastic_integral(f.tree, frame.deflated, g.psi);
  CHECK(process_distance(got, m) < 1e-12);
}

TEST_CASE("vanishing density refuses the deflation stage") {
  EventTree t = test::vanishing_density_tree();
  GainsBasis basis = gains_basis(t);
  VsmmBundle bundle = solve_vsmm(t, basis);
  try {
    build_frame(t, bundle);
    FAIL("expected a refusal");
  } catch (const PipelineRefusal& r) {
    CHECK(r.code == "vanishing_density");
    CHECK(std::string(r.what()).find("optimal density") != std::string::npos);
  }
}
