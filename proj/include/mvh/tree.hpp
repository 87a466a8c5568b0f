#pragma once
// Finite event tree market model: nodes are the atoms of a filtration on a
// finite probability space, edges carry one-step transition probabilities,
// and every node quotes a vector of risky asset prices. Trading strategies
// are predictable: the holding over a one-step edge is chosen at the parent
// node. All processes are stored node-indexed; node indices are topological
// (parent < child) with the root at index 0.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvh {

struct Node {
  std::string id;
  int parent = -1;  // -1 for the root
  std::vector<int> children;
  double prob = 1.0;  // one-step probability of reaching this node from its parent
  Eigen::VectorXd price;
  int time = 0;
};

// One value / one vector per node, indexed by node index.
using ScalarProcess = std::vector<double>;
using VectorProcess = std::vector<Eigen::VectorXd>;

// Holdings chosen at each non-terminal node (entries at terminals unused).
using Strategy = std::vector<Eigen::VectorXd>;

// One-step transition weights in the same layout as Node::prob. Used for the
// reference measure and for reweighted measures (feasibility witness,
// squared-density measure, normalized optimal-density measure).
struct EdgeMeasure {
  std::vector<double> prob;
};

struct Claim {
  std::string label;
  Eigen::VectorXd payoff;  // indexed by terminal slot
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;

  void fail(const std::string& what) {
    ok = false;
    violations.push_back(what);
  }
};

class EventTree {
 public:
  // `nodes` must already be topologically sorted (parent before child) with
  // consistent children lists; use build_tree()/load_model for raw input.
  EventTree(std::vector<Node> nodes, int assets, int horizon);

  int size() const { return static_cast<int>(nodes_.size()); }
  int assets() const { return assets_; }
  int horizon() const { return horizon_; }
  const Node& node(int i) const { return nodes_[i]; }
  int root() const { return 0; }
  bool is_terminal(int i) const { return nodes_[i].children.empty(); }

  const std::vector<int>& terminals() const { return terminals_; }
  const std::vector<int>& interior() const { return interior_; }
  int terminal_count() const { return static_cast<int>(terminals_.size()); }
  int interior_count() const { return static_cast<int>(interior_.size()); }

  // Slot = position in terminals()/interior(); -1 when not of that kind.
  int terminal_slot(int node_index) const { return terminal_slot_[node_index]; }
  int interior_slot(int node_index) const { return interior_slot_[node_index]; }

  // Path probabilities of the terminal atoms under the reference measure.
  const Eigen::VectorXd& path_weights() const { return path_weights_; }

  EdgeMeasure reference_measure() const;
  VectorProcess price_process() const;

 private:
  std::vector<Node> nodes_;
  int assets_ = 0;
  int horizon_ = 0;
  std::vector<int> terminals_;
  std::vector<int> interior_;
  std::vector<int> terminal_slot_;
  std::vector<int> interior_slot_;
  Eigen::VectorXd path_weights_;
};

// Numeric sanity of the model: probabilities positive and summing to one per
// family, path probabilities summing to one, every leaf at the declared
// horizon, finite prices, positive horizon.
ValidationReport validate(const EventTree& tree);
void validate_claim(const EventTree& tree, const Claim& claim, ValidationReport& report);

// Path probabilities of the terminal atoms under an arbitrary edge measure.
Eigen::VectorXd terminal_weights(const EventTree& tree, const EdgeMeasure& measure);

// Backward recursion: value at a node = measure-weighted sum over children.
// Terminal values are taken from `terminal_values` (indexed by slot).
ScalarProcess conditional_expectation(const EventTree& tree,
                                      const Eigen::VectorXd& terminal_values,
                                      const EdgeMeasure& measure);

// Cumulative trading gains of a predictable strategy, 0 at the root.
ScalarProcess gains(const EventTree& tree, const Strategy& theta);

// Generic discrete integral sum_{edges} coeff(parent)^T (X(child) - X(parent)).
ScalarProcess stochastic_integral(const EventTree& tree, const VectorProcess& x,
                                  const Strategy& coeff);

// Expectations over terminal atoms under the reference measure.
double expect(const EventTree& tree, const Eigen::VectorXd& terminal_values);
double inner(const EventTree& tree, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Max one-step martingale defect of X under `measure`, scaled by
// max(1, floor, max|X|): zero iff X is a martingale for the edge measure.
// `floor` is the magnitude of the quantities X was assembled from; a process
// built by cancellation of large terms carries rounding noise at that scale
// even where its own values are small, and grading such noise against the
// small values would report spurious defects.
double martingale_gap(const EventTree& tree, const ScalarProcess& x,
                      const EdgeMeasure& measure, double floor = 1.0);

ScalarProcess multiply(const ScalarProcess& a, const ScalarProcess& b);
Eigen::VectorXd terminal_values(const EventTree& tree, const ScalarProcess& x);
Strategy zero_strategy(const EventTree& tree, int dim);

// Strategies equal up to one-step gains can differ at degenerate nodes; this
// is plain max-norm distance on interior nodes, for the cases where vector
// equality is the right notion. `floor` as in martingale_gap.
double strategy_distance(const EventTree& tree, const Strategy& a, const Strategy& b,
                         double floor = 1.0);

double process_distance(const ScalarProcess& a, const ScalarProcess& b, double floor = 1.0);
double process_max(const ScalarProcess& a);

// Sup-norm of a process floored at one; the scale its rounding noise lives at.
double process_level(const ScalarProcess& x);

// Built-in desk fixtures:
//   "A": one period, two states, one asset (complete).
//   "B": one period, three states, one asset (incomplete, signed optimum).
//   "C": two periods, trinomial root then binomial families, one asset.
struct Fixture {
  EventTree tree;
  std::vector<Claim> claims;
};
Fixture builtin_fixture(const std::string& name);

}  // namespace mvh
