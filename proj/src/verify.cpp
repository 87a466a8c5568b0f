#include "mvh/verify.hpp"

#include <algorithm>
#include <iomanip>
#include <map>

#include "mvh/generate.hpp"

namespace mvh {

VerifySummary run_verification(const VerifyOptions& options) {
  VerifySummary sum;
  std::map<std::string, size_t> index;

  auto record = [&](const std::vector<Verdict>& verdicts, const std::string& tag) {
    for (const Verdict& v : verdicts) {
      auto [it, fresh] = index.emplace(v.id, sum.checks.size());
      if (fresh) {
        CheckSummary c;
        c.id = v.id;
        sum.checks.push_back(std::move(c));
      }
      CheckSummary& c = sum.checks[it->second];
      if (!v.available) continue;
      c.runs += 1;
      c.tol = v.tol;
      if (!v.pass) c.failures += 1;
      if (v.deviation >= c.worst) {
        c.worst = v.deviation;
        c.worst_run = tag;
      }
    }
  };

  Rng shape(options.seed ^ 0x7ee5eedbadc0ffeeULL);
  for (int i = 0; i < options.count; ++i) {
    GeneratorConfig cfg;
    cfg.seed = options.seed + 0x1000ULL * static_cast<uint64_t>(i) + 1;
    cfg.depth = options.depth <= 2 ? options.depth : shape.uniform_int(2, options.depth);
    cfg.max_branching =
        options.branching <= 2 ? options.branching : shape.uniform_int(2, options.branching);
    cfg.assets = options.assets <= 1 ? options.assets : shape.uniform_int(1, options.assets);
    cfg.jump_scale = options.jump_scale;
    const EventTree tree = generate_random_tree(cfg);
    sum.trees += 1;

    Rng claim_rng(cfg.seed ^ 0xc1a1135eedULL);
    std::vector<Claim> claims;
    claims.push_back(random_call_claim(tree, claim_rng, "call"));
    claims.push_back(random_payoff_claim(tree, claim_rng, "payoff"));

    for (const Claim& claim : claims) {
      const std::string tag =
          "seed=" + std::to_string(cfg.seed) + " claim=" + claim.label;
      const Analysis a = analyze(tree, claim, options.analysis);
      sum.runs += 1;
      if (a.refused) {
        sum.refused_runs += 1;
        sum.refusals.push_back(tag + ": " + a.refusal_code + " (" + a.refusal_reason + ")");
        continue;
      }
      if (a.bundle.flags.equivalent_optimum)
        sum.equivalent_runs += 1;
      else
        sum.signed_runs += 1;
      record(a.verdicts, tag);
    }
  }

  sum.all_pass = sum.refused_runs == 0;
  for (const CheckSummary& c : sum.checks)
    if (c.failures > 0) sum.all_pass = false;
  return sum;
}

void print_summary(std::ostream& os, const VerifySummary& summary) {
  os << "runs: " << summary.runs << " over " << summary.trees << " trees ("
     << summary.equivalent_runs << " equivalent, " << summary.signed_runs << " signed, "
     << summary.refused_runs << " refused)\n";
  for (const std::string& r : summary.refusals) os << "refused: " << r << "\n";

  size_t width = 8;
  for (const CheckSummary& c : summary.checks) width = std::max(width, c.id.size());
  os << std::left << std::setw(static_cast<int>(width) + 2) << "check"
     << std::setw(6) << "runs" << std::setw(6) << "fail"
     << std::setw(14) << "worst" << std::setw(12) << "tol" << "worst at\n";
  const std::ios::fmtflags flags = os.flags();
  for (const CheckSummary& c : summary.checks) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << c.id
       << std::setw(6) << c.runs << std::setw(6) << c.failures
       << std::setw(14) << std::setprecision(3) << std::scientific << c.worst;
    os.flags(flags);
    os << std::left << std::setw(12) << std::setprecision(1) << std::scientific << c.tol;
    os.flags(flags);
    os << (c.failures > 0 ? c.worst_run : std::string()) << "\n";
  }
  os << (summary.all_pass ? "all checks passed" : "CHECK FAILURES PRESENT") << "\n";
}

}  // namespace mvh
