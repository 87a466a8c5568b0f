#pragma once
// Deterministic random market generator. Each family is built around a hidden
// strictly positive martingale weighting (child price factors are normalized
// against it), so every generated model passes the feasibility check by
// construction; the physical edge probabilities are an exponential tilt of
// the hidden weighting, which controls how far the optimal density drifts
// from 1. Same seed, same bytes.

#include <cstdint>
#include <random>

#include "mvh/tree.hpp"

namespace mvh {

// Thin layer over std::mt19937_64 mapping raw draws to uniforms directly:
// the engine is fully specified by the standard, while the std distributions
// are not, and generated models must be reproducible byte-for-byte.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform() * (hi - lo + 1.0)) % (hi - lo + 1);
  }

 private:
  std::mt19937_64 eng_;
};

struct GeneratorConfig {
  uint64_t seed = 1;
  int depth = 3;          // every leaf sits at this time
  int max_branching = 3;  // children per family drawn from [2, max_branching]
  int assets = 1;
  double jump_scale = 0.3;  // log-scale of one-step price factors
  double tilt = -1.0;       // physical-vs-hidden-weights tilt; < 0: sampled per tree
};

// When max_branching >= assets + 2 the root family is forced that wide, so
// the generated market is never complete.
EventTree generate_random_tree(const GeneratorConfig& config);

Claim call_claim(const EventTree& tree, int asset, double strike, const std::string& label);
Claim random_payoff_claim(const EventTree& tree, Rng& rng, const std::string& label);
Claim random_call_claim(const EventTree& tree, Rng& rng, const std::string& label);

}  // namespace mvh
