#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "mvh/tree.hpp"

using namespace mvh;

TEST_CASE("fixture A structure and weights") {
  Fixture f = builtin_fixture("A");
  const EventTree& t = f.tree;
  CHECK(t.size() == 3);
  CHECK(t.assets() == 1);
  CHECK(t.horizon() == 1);
  CHECK(t.terminal_count() == 2);
  CHECK(t.interior_count() == 1);
  CHECK(t.root() == 0);
  CHECK(t.is_terminal(1));
  CHECK(t.is_terminal(2));
  CHECK(t.interior_slot(0) == 0);
  CHECK(t.terminal_slot(1) == 0);
  CHECK(t.terminal_slot(2) == 1);
  CHECK(t.path_weights()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.path_weights()[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(validate(t).ok);
}

TEST_CASE("fixture C path weights multiply along paths") {
  Fixture f = builtin_fixture("C");
  const EventTree& t = f.tree;
  CHECK(t.size() == 10);
  CHECK(t.terminal_count() == 6);
  CHECK(validate(t).ok);
  // Terminal order (uu, ud, mu, md, du, dd).
  const double expected[] = {0.2 * 0.6, 0.2 * 0.4, 0.5 * 0.5, 0.5 * 0.5, 0.3 * 0.4, 0.3 * 0.6};
  for (int i = 0; i < 6; ++i)
    CHECK(t.path_weights()[i] == doctest::Approx(expected[i]).epsilon(1e-15));
  CHECK(t.path_weights().sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("validation catches bad probabilities and ragged horizons") {
  using test::link_up;
  using test::plain_node;
  {
    std::vector<Node> nodes;
    nodes.push_back(plain_node("r", -1, 1.0, 1.0, 0));
    nodes.push_back(plain_node("a", 0, 0.6, 2.0, 1));
    nodes.push_back(plain_node("b", 0, 0.6, 3.0, 1));
    link_up(nodes);
    CHECK_FALSE(validate(EventTree(std::move(nodes), 1, 1)).ok);
  }
  {
    std::vector<Node> nodes;
    nodes.push_back(plain_node("r", -1, 1.0, 1.0, 0));
    nodes.push_back(plain_node("a", 0, -0.5, 2.0, 1));
    nodes.push_back(plain_node("b", 0, 1.5, 3.0, 1));
    link_up(nodes);
    CHECK_FALSE(validate(EventTree(std::move(nodes), 1, 1)).ok);
  }
  {
    // Leaf "a" sits at time 1 while the declared horizon is 2.
    std::vector<Node> nodes;
    nodes.push_back(plain_node("r", -1, 1.0, 1.0, 0));
    nodes.push_back(plain_node("a", 0, 0.5, 2.0, 1));
    nodes.push_back(plain_node("b", 0, 0.5, 3.0, 1));
    nodes.push_back(plain_node("ba", 2, 1.0, 3.0, 2));
    link_up(nodes);
    CHECK_FALSE(validate(EventTree(std::move(nodes), 1, 2)).ok);
  }
}

TEST_CASE("conditional expectation is a martingale that ends at the data") {
  Fixture f = builtin_fixture("C");
  const EventTree& t = f.tree;
  const Claim& h = f.claims[0];
  ScalarProcess v = conditional_expectation(t, h.payoff, t.reference_measure());
  CHECK(martingale_gap(t, v, t.reference_measure()) < 1e-14);
  Eigen::VectorXd back = terminal_values(t, v);
  for (int i = 0; i < 6; ++i) CHECK(back[i] == doctest::Approx(h.payoff[i]).epsilon(1e-15));
  // Root value: E[payoff] directly.
  CHECK(v[0] == doctest::Approx(expect(t, h.payoff)).epsilon(1e-15));
  CHECK(v[0] == doctest::Approx(0.12 * 21 + 0.25 * 10).epsilon(1e-14));
}

TEST_CASE("gains accumulate parent holdings times price increments") {
  Fixture f = builtin_fixture("A");
  const EventTree& t = f.tree;
  Strategy theta = zero_strategy(t, 1);
  theta[0][0] = 1.0;
  ScalarProcess g = gains(t, theta);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(g[2] == doctest::Approx(-2.0).epsilon(1e-15));
  // Generic integral against the price process agrees.
  ScalarProcess g2 = stochastic_integral(t, t.price_process(), theta);
  CHECK(process_distance(g, g2) == 0.0);
}

TEST_CASE("expectation and inner product use the path weights") {
  Fixture f = builtin_fixture("B");
  const EventTree& t = f.tree;
  Eigen::VectorXd a(3), b(3);
  a << 1, 2, 3;
  b << 4, 5, 6;
  CHECK(expect(t, a) == doctest::Approx(0.1 * 1 + 0.45 * 2 + 0.45 * 3).epsilon(1e-15));
  CHECK(inner(t, a, b) == doctest::Approx(0.1 * 4 + 0.45 * 10 + 0.45 * 18).epsilon(1e-15));
}

TEST_CASE("terminal weights under a reweighted measure") {
  Fixture f = builtin_fixture("C");
  const EventTree& t = f.tree;
  EdgeMeasure m = t.reference_measure();
  // Flip the root family to (0.3, 0.5, 0.2).
  m.prob[1] = 0.3;
  m.prob[3] = 0.2;
  Eigen::VectorXd w = terminal_weights(t, m);
  CHECK(w[0] == doctest::Approx(0.3 * 0.6).epsilon(1e-15));
  CHECK(w[5] == doctest::Approx(0.2 * 0.6).epsilon(1e-15));
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("distance helpers scale by magnitude, not twice") {
  ScalarProcess a{1e6, 2e6}, b{1e6, 2e6 + 1.0};
  CHECK(process_distance(a, b) == doctest::Approx(1.0 / (2e6 + 1.0)).epsilon(1e-12));
  ScalarProcess c{0.0, 0.5}, d{0.0, 0.25};
  CHECK(process_distance(c, d) == doctest::Approx(0.25).epsilon(1e-15));  // max(1,.) floor
  CHECK(process_max(ScalarProcess{-3.0, 2.0}) == 3.0);
}

TEST_CASE("claim validation flags wrong payoff length") {
  Fixture f = builtin_fixture("A");
  Claim bad{"H", Eigen::VectorXd::Zero(3)};
  ValidationReport r;
  validate_claim(f.tree, bad, r);
  CHECK_FALSE(r.ok);
}

TEST_CASE("unknown fixture name throws") {
  CHECK_THROWS_AS(builtin_fixture("Z"), std::invalid_argument);
}
