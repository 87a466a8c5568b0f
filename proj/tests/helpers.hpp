#pragma once
// Shared test helpers: fixture paths, closed-form constants of the built-in
// one-period fixtures, and small tree builders used across the test binaries.

#include <cmath>
#include <string>

#include "mvh/tree.hpp"

namespace mvh::test {

inline std::string model_path(const std::string& name) {
  return std::string(MVH_MODELS_DIR) + "/" + name;
}

// Fixture B in closed form: one period, increments (12, 2, -1) with weights
// (0.1, 0.45, 0.45). The optimal density is (m2 - m1 dS) / (m2 - m1^2).
struct FixtureBValues {
  double m1 = 0.1 * 12 + 0.45 * 2 + 0.45 * (-1);    // 1.65
  double m2 = 0.1 * 144 + 0.45 * 4 + 0.45 * 1;      // 16.65
  double denom = m2 - m1 * m1;                      // 13.9275
  double gstar(double ds) const { return (m2 - m1 * ds) / denom; }
  double second_moment() const { return m2 / denom; }
  double theta_star() const { return -m1 / denom; }
  double initial() const {  // E[H gstar] for the payoff (12, 2, 0)
    return 0.1 * 12 * gstar(12) + 0.45 * 2 * gstar(2);
  }
};

inline Node plain_node(std::string id, int parent, double prob, double price, int time) {
  Node n;
  n.id = std::move(id);
  n.parent = parent;
  n.prob = prob;
  n.price = Eigen::VectorXd::Constant(1, price);
  n.time = time;
  return n;
}

inline void link_up(std::vector<Node>& nodes) {
  for (int i = 1; i < static_cast<int>(nodes.size()); ++i)
    nodes[nodes[i].parent].children.push_back(i);
}

// One period, increments (5, 2, -1), uniform weights: the optimal density is
// (0, 1, 2), so it has a vanishing state while a positive martingale
// weighting still exists.
inline EventTree vanishing_density_tree() {
  std::vector<Node> nodes;
  nodes.push_back(plain_node("root", -1, 1.0, 10.0, 0));
  nodes.push_back(plain_node("a", 0, 1.0 / 3, 15.0, 1));
  nodes.push_back(plain_node("b", 0, 1.0 / 3, 12.0, 1));
  nodes.push_back(plain_node("c", 0, 1.0 / 3, 9.0, 1));
  link_up(nodes);
  return EventTree(std::move(nodes), 1, 1);
}

// One period with strictly positive increments (1, 2): no martingale measure.
inline EventTree arbitrage_tree() {
  std::vector<Node> nodes;
  nodes.push_back(plain_node("root", -1, 1.0, 1.0, 0));
  nodes.push_back(plain_node("a", 0, 0.5, 2.0, 1));
  nodes.push_back(plain_node("b", 0, 0.5, 3.0, 1));
  link_up(nodes);
  return EventTree(std::move(nodes), 1, 1);
}

// Two-period binomial with per-family up/down factors (u, d) and physical up
// probability p: complete, so the optimal density is the unique martingale
// density, a product of one-step ratios.
inline EventTree binomial_tree(double s0, double u, double d, double p) {
  std::vector<Node> nodes;
  nodes.push_back(plain_node("r", -1, 1.0, s0, 0));
  nodes.push_back(plain_node("u", 0, p, s0 * u, 1));
  nodes.push_back(plain_node("d", 0, 1 - p, s0 * d, 1));
  nodes.push_back(plain_node("uu", 1, p, s0 * u * u, 2));
  nodes.push_back(plain_node("ud", 1, 1 - p, s0 * u * d, 2));
  nodes.push_back(plain_node("du", 2, p, s0 * d * u, 2));
  nodes.push_back(plain_node("dd", 2, 1 - p, s0 * d * d, 2));
  link_up(nodes);
  return EventTree(std::move(nodes), 1, 2);
}

}  // namespace mvh::test
