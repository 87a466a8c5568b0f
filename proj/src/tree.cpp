#include "mvh/tree.hpp"

#include <cmath>
#include <limits>

namespace mvh {

EventTree::EventTree(std::vector<Node> nodes, int assets, int horizon)
    : nodes_(std::move(nodes)), assets_(assets), horizon_(horizon) {
  if (nodes_.empty()) throw std::invalid_argument("event tree needs at least a root node");
  const int n = size();
  terminal_slot_.assign(n, -1);
  interior_slot_.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    const Node& nd = nodes_[i];
    if (i == 0) {
      if (nd.parent != -1) throw std::invalid_argument("node 0 must be the root");
    } else if (nd.parent < 0 || nd.parent >= i) {
      throw std::invalid_argument("nodes must be topologically sorted (parent before child)");
    }
    if (nd.children.empty()) {
      terminal_slot_[i] = static_cast<int>(terminals_.size());
      terminals_.push_back(i);
    } else {
      interior_slot_[i] = static_cast<int>(interior_.size());
      interior_.push_back(i);
    }
  }
  path_weights_ = terminal_weights(*this, reference_measure());
}

EdgeMeasure EventTree::reference_measure() const {
  EdgeMeasure m;
  m.prob.resize(nodes_.size());
  for (size_t i = 0; i < nodes_.size(); ++i) m.prob[i] = nodes_[i].prob;
  return m;
}

VectorProcess EventTree::price_process() const {
  VectorProcess s(nodes_.size());
  for (size_t i = 0; i < nodes_.size(); ++i) s[i] = nodes_[i].price;
  return s;
}

ValidationReport validate(const EventTree& tree) {
  ValidationReport report;
  const double kProbTol = 1e-12;
  if (tree.horizon() < 1) report.fail("horizon must be at least 1");
  if (tree.assets() < 1) report.fail("model needs at least one asset");
  if (std::abs(tree.node(0).prob - 1.0) > kProbTol)
    report.fail("root probability must be 1 (node '" + tree.node(0).id + "')");
  for (int i = 0; i < tree.size(); ++i) {
    const Node& nd = tree.node(i);
    if (nd.price.size() != tree.assets())
      report.fail("node '" + nd.id + "': price dimension " + std::to_string(nd.price.size()) +
                  " != d=" + std::to_string(tree.assets()));
    for (Eigen::Index k = 0; k < nd.price.size(); ++k)
      if (!std::isfinite(nd.price[k])) report.fail("node '" + nd.id + "': non-finite price");
    if (i > 0 && !(nd.prob > 0.0))
      report.fail("node '" + nd.id + "': one-step probability must be positive");
    if (!std::isfinite(nd.prob)) report.fail("node '" + nd.id + "': non-finite probability");
    if (nd.children.empty()) {
      if (nd.time != tree.horizon())
        report.fail("node '" + nd.id + "' is a leaf at time " + std::to_string(nd.time) +
                    " != horizon " + std::to_string(tree.horizon()));
    } else {
      double sum = 0.0;
      for (int c : nd.children) sum += tree.node(c).prob;
      if (std::abs(sum - 1.0) > kProbTol)
        report.fail("node '" + nd.id + "': child probabilities sum to " + std::to_string(sum));
      for (int c : nd.children)
        if (tree.node(c).time != nd.time + 1)
          report.fail("node '" + tree.node(c).id + "': time is not parent time + 1");
    }
  }
  const double total = tree.path_weights().sum();
  if (std::abs(total - 1.0) > kProbTol)
    report.fail("terminal path probabilities sum to " + std::to_string(total));
  return report;
}

void validate_claim(const EventTree& tree, const Claim& claim, ValidationReport& report) {
  if (claim.payoff.size() != tree.terminal_count()) {
    report.fail("claim '" + claim.label + "': payoff has " + std::to_string(claim.payoff.size()) +
                " entries for " + std::to_string(tree.terminal_count()) + " terminal nodes");
    return;
  }
  for (Eigen::Index i = 0; i < claim.payoff.size(); ++i)
    if (!std::isfinite(claim.payoff[i]))
      report.fail("claim '" + claim.label + "': non-finite payoff at terminal '" +
                  tree.node(tree.terminals()[i]).id + "'");
}

Eigen::VectorXd terminal_weights(const EventTree& tree, const EdgeMeasure& measure) {
  // One forward sweep: the node order guarantees parents are done first.
  std::vector<double> w(tree.size(), 0.0);
  w[0] = 1.0;
  for (int i = 1; i < tree.size(); ++i) w[i] = w[tree.node(i).parent] * measure.prob[i];
  Eigen::VectorXd out(tree.terminal_count());
  for (int t = 0; t < tree.terminal_count(); ++t) out[t] = w[tree.terminals()[t]];
  return out;
}

ScalarProcess conditional_expectation(const EventTree& tree,
                                      const Eigen::VectorXd& terminal_values,
                                      const EdgeMeasure& measure) {
  if (terminal_values.size() != tree.terminal_count())
    throw std::invalid_argument("terminal value vector has wrong length");
  ScalarProcess x(tree.size(), 0.0);
  for (int i = tree.size() - 1; i >= 0; --i) {
    const Node& nd = tree.node(i);
    if (nd.children.empty()) {
      x[i] = terminal_values[tree.terminal_slot(i)];
    } else {
      double acc = 0.0;
      for (int c : nd.children) acc += measure.prob[c] * x[c];
      x[i] = acc;
    }
  }
  return x;
}

ScalarProcess stochastic_integral(const EventTree& tree, const VectorProcess& x,
                                  const Strategy& coeff) {
  ScalarProcess g(tree.size(), 0.0);
  for (int i = 1; i < tree.size(); ++i) {
    const int p = tree.node(i).parent;
    g[i] = g[p] + coeff[p].dot(x[i] - x[p]);
  }
  return g;
}

ScalarProcess gains(const EventTree& tree, const Strategy& theta) {
  ScalarProcess g(tree.size(), 0.0);
  for (int i = 1; i < tree.size(); ++i) {
    const int p = tree.node(i).parent;
    g[i] = g[p] + theta[p].dot(tree.node(i).price - tree.node(p).price);
  }
  return g;
}

double expect(const EventTree& tree, const Eigen::VectorXd& terminal_values) {
  return tree.path_weights().dot(terminal_values);
}

double inner(const EventTree& tree, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return tree.path_weights().cwiseProduct(a).dot(b);
}

double martingale_gap(const EventTree& tree, const ScalarProcess& x,
                      const EdgeMeasure& measure, double floor) {
  double scale = std::max(1.0, floor);
  for (double v : x) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (int n : tree.interior()) {
    double acc = 0.0;
    for (int c : tree.node(n).children) acc += measure.prob[c] * x[c];
    worst = std::max(worst, std::abs(acc - x[n]));
  }
  return worst / scale;
}

ScalarProcess multiply(const ScalarProcess& a, const ScalarProcess& b) {
  ScalarProcess out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Eigen::VectorXd terminal_values(const EventTree& tree, const ScalarProcess& x) {
  Eigen::VectorXd out(tree.terminal_count());
  for (int t = 0; t < tree.terminal_count(); ++t) out[t] = x[tree.terminals()[t]];
  return out;
}

Strategy zero_strategy(const EventTree& tree, int dim) {
  Strategy theta(tree.size());
  for (int n : tree.interior()) theta[n] = Eigen::VectorXd::Zero(dim);
  return theta;
}

double strategy_distance(const EventTree& tree, const Strategy& a, const Strategy& b,
                         double floor) {
  double scale = std::max(1.0, floor), worst = 0.0;
  for (int n : tree.interior()) {
    scale = std::max({scale, a[n].lpNorm<Eigen::Infinity>(), b[n].lpNorm<Eigen::Infinity>()});
    worst = std::max(worst, (a[n] - b[n]).lpNorm<Eigen::Infinity>());
  }
  return worst / scale;
}

double process_distance(const ScalarProcess& a, const ScalarProcess& b, double floor) {
  double scale = std::max(1.0, floor), worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst / scale;
}

double process_max(const ScalarProcess& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double process_level(const ScalarProcess& x) {
  double level = 1.0;
  for (double v : x) level = std::max(level, std::abs(v));
  return level;
}

namespace {

Node make_node(std::string id, int parent, double prob, std::initializer_list<double> price,
               int time) {
  Node n;
  n.id = std::move(id);
  n.parent = parent;
  n.prob = prob;
  n.price = Eigen::Map<const Eigen::VectorXd>(price.begin(), static_cast<Eigen::Index>(price.size()));
  n.time = time;
  return n;
}

void link_children(std::vector<Node>& nodes) {
  for (int i = 1; i < static_cast<int>(nodes.size()); ++i)
    nodes[nodes[i].parent].children.push_back(i);
}

Fixture fixture_a() {
  std::vector<Node> nodes;
  nodes.push_back(make_node("root", -1, 1.0, {4.0}, 0));
  nodes.push_back(make_node("u", 0, 0.5, {8.0}, 1));
  nodes.push_back(make_node("d", 0, 0.5, {2.0}, 1));
  link_children(nodes);
  Fixture f{EventTree(std::move(nodes), 1, 1), {}};
  Eigen::VectorXd h(2);
  h << 3.0, 0.0;
  f.claims.push_back({"H", h});
  return f;
}

Fixture fixture_b() {
  std::vector<Node> nodes;
  nodes.push_back(make_node("root", -1, 1.0, {10.0}, 0));
  nodes.push_back(make_node("hi", 0, 0.10, {22.0}, 1));
  nodes.push_back(make_node("mid", 0, 0.45, {12.0}, 1));
  nodes.push_back(make_node("lo", 0, 0.45, {9.0}, 1));
  link_children(nodes);
  Fixture f{EventTree(std::move(nodes), 1, 1), {}};
  Eigen::VectorXd h(3);
  h << 12.0, 2.0, 0.0;
  f.claims.push_back({"H", h});
  return f;
}

Fixture fixture_c() {
  std::vector<Node> nodes;
  nodes.push_back(make_node("root", -1, 1.0, {100.0}, 0));
  nodes.push_back(make_node("u", 0, 0.2, {110.0}, 1));
  nodes.push_back(make_node("m", 0, 0.5, {100.0}, 1));
  nodes.push_back(make_node("d", 0, 0.3, {90.0}, 1));
  nodes.push_back(make_node("uu", 1, 0.6, {121.0}, 2));
  nodes.push_back(make_node("ud", 1, 0.4, {99.0}, 2));
  nodes.push_back(make_node("mu", 2, 0.5, {110.0}, 2));
  nodes.push_back(make_node("md", 2, 0.5, {90.0}, 2));
  nodes.push_back(make_node("du", 3, 0.4, {99.0}, 2));
  nodes.push_back(make_node("dd", 3, 0.6, {81.0}, 2));
  link_children(nodes);
  Fixture f{EventTree(std::move(nodes), 1, 2), {}};
  Eigen::VectorXd h(6);
  h << 21.0, 0.0, 10.0, 0.0, 0.0, 0.0;  // call at 100 on terminal prices (121,99,110,90,99,81)
  f.claims.push_back({"call100", h});
  return f;
}

}  // namespace

Fixture builtin_fixture(const std::string& name) {
  if (name == "A" || name == "a") return fixture_a();
  if (name == "B" || name == "b") return fixture_b();
  if (name == "C" || name == "c") return fixture_c();
  throw std::invalid_argument("unknown fixture '" + name + "' (expected A, B or C)");
}

}  // namespace mvh
