#include "mvh/generate.hpp"

#include <cmath>
#include <stdexcept>

namespace mvh {

EventTree generate_random_tree(const GeneratorConfig& config) {
  if (config.depth < 1 || config.max_branching < 2 || config.assets < 1)
    throw std::invalid_argument("generator needs depth >= 1, branching >= 2, assets >= 1");
  Rng rng(config.seed);
  const int d = config.assets;
  const double tilt = config.tilt >= 0.0 ? config.tilt : rng.uniform(0.0, 3.0);

  std::vector<Node> nodes;
  Node root;
  root.id = "n0";
  root.parent = -1;
  root.prob = 1.0;
  root.time = 0;
  root.price.resize(d);
  for (int i = 0; i < d; ++i) root.price[i] = 10.0 * std::exp(rng.uniform(-0.25, 0.25));
  nodes.push_back(std::move(root));

  size_t level_begin = 0, level_end = 1;
  for (int t = 0; t < config.depth; ++t) {
    for (size_t n = level_begin; n < level_end; ++n) {
      int k = rng.uniform_int(2, config.max_branching);
      if (n == 0 && config.max_branching >= d + 2 && k <= d + 1) k = d + 2;

      // Hidden positive martingale weights for this family.
      std::vector<double> q(k);
      double qsum = 0.0;
      for (int c = 0; c < k; ++c) qsum += q[c] = 0.08 + rng.uniform();
      for (double& v : q) v /= qsum;

      // Price factors, normalized to q-mean 1 per asset.
      Eigen::MatrixXd f(k, d);
      for (int i = 0; i < d; ++i) {
        double mean = 0.0;
        for (int c = 0; c < k; ++c)
          mean += q[c] * (f(c, i) = std::exp(config.jump_scale * rng.uniform(-1.0, 1.0)));
        f.col(i) /= mean;
      }

      // Physical probabilities: hidden weights tilted along the first asset's
      // move. Strong tilts create drift, and drifts strong enough relative to
      // the move sizes make the optimal density signed on some trees.
      std::vector<double> p(k);
      double psum = 0.0;
      for (int c = 0; c < k; ++c) psum += p[c] = q[c] * std::exp(tilt * (f(c, 0) - 1.0));
      for (double& v : p) v /= psum;

      for (int c = 0; c < k; ++c) {
        Node child;
        child.id = "n" + std::to_string(nodes.size());
        child.parent = static_cast<int>(n);
        child.prob = p[c];
        child.time = t + 1;
        child.price = nodes[n].price.cwiseProduct(f.row(c).transpose());
        nodes[n].children.push_back(static_cast<int>(nodes.size()));
        nodes.push_back(std::move(child));
      }
    }
    level_begin = level_end;
    level_end = nodes.size();
  }
  return EventTree(std::move(nodes), d, config.depth);
}

Claim call_claim(const EventTree& tree, int asset, double strike, const std::string& label) {
  Claim c;
  c.label = label;
  c.payoff.resize(tree.terminal_count());
  for (int t = 0; t < tree.terminal_count(); ++t)
    c.payoff[t] = std::max(tree.node(tree.terminals()[t]).price[asset] - strike, 0.0);
  return c;
}

Claim random_payoff_claim(const EventTree& tree, Rng& rng, const std::string& label) {
  Claim c;
  c.label = label;
  c.payoff.resize(tree.terminal_count());
  for (int t = 0; t < tree.terminal_count(); ++t) c.payoff[t] = rng.uniform(-5.0, 10.0);
  return c;
}

Claim random_call_claim(const EventTree& tree, Rng& rng, const std::string& label) {
  const double strike = tree.node(tree.root()).price[0] * rng.uniform(0.85, 1.15);
  return call_claim(tree, 0, strike, label);
}

}  // namespace mvh
