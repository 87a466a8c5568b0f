// Command-line front end. Exit codes: 0 success / all verdicts pass,
// 1 verdict failure, 2 invalid model content, 3 unreadable file,
// 4 pipeline refusal (no equivalent martingale measure / vanishing density).

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mvh/analysis.hpp"
#include "mvh/generate.hpp"
#include "mvh/model_io.hpp"
#include "mvh/report.hpp"
#include "mvh/verify.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitVerdictFail = 1;
constexpr int kExitInvalidModel = 2;
constexpr int kExitUnreadable = 3;
constexpr int kExitRefused = 4;

int load_or_fail(const std::string& path, std::optional<mvh::Model>& model) {
  mvh::ModelLoad load;
  try {
    load = mvh::load_model_file(path);
  } catch (const mvh::IoError& e) {
    std::cerr << e.what() << "\n";
    return kExitUnreadable;
  }
  if (!load.report.ok || !load.model) {
    for (const std::string& v : load.report.violations) std::cerr << v << "\n";
    return kExitInvalidModel;
  }
  model = std::move(load.model);
  return kExitPass;
}

int cmd_validate(const std::string& path) {
  std::optional<mvh::Model> model;
  const int rc = load_or_fail(path, model);
  if (rc != kExitPass) return rc;
  std::cout << "valid: " << model->tree.size() << " nodes, "
            << model->tree.terminal_count() << " terminal, " << model->tree.assets()
            << " asset(s), horizon " << model->tree.horizon() << ", "
            << model->claims.size() << " claim(s)\n";
  return kExitPass;
}

int cmd_analyze(const std::string& path, std::string claim_label, const std::string& out,
                const mvh::AnalysisOptions& opt) {
  std::optional<mvh::Model> model;
  const int rc = load_or_fail(path, model);
  if (rc != kExitPass) return rc;

  if (claim_label.empty()) {
    if (model->claims.empty()) {
      std::cerr << "model defines no claims\n";
      return kExitInvalidModel;
    }
    claim_label = model->claims.front().label;
  }
  const mvh::Claim* claim = nullptr;
  try {
    claim = &model->claim(claim_label);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitInvalidModel;
  }

  const mvh::Analysis analysis = mvh::analyze(model->tree, *claim, opt);
  const std::string text = mvh::report_to_string(*model, claim_label, analysis, opt);
  if (out.empty()) {
    std::cout << text;
  } else {
    try {
      mvh::save_report_file(out, text);
    } catch (const mvh::IoError& e) {
      std::cerr << e.what() << "\n";
      return kExitUnreadable;
    }
  }
  if (analysis.refused) {
    std::cerr << "refused: " << analysis.refusal_reason << "\n";
    return kExitRefused;
  }
  if (!analysis.all_pass) {
    for (const mvh::Verdict& v : analysis.verdicts)
      if (v.available && !v.pass)
        std::cerr << "failed: " << v.id << " (deviation " << v.deviation << ", tol "
                  << v.tol << ")\n";
    return kExitVerdictFail;
  }
  return kExitPass;
}

int cmd_generate(const mvh::GeneratorConfig& cfg, const std::string& out) {
  const mvh::EventTree tree = mvh::generate_random_tree(cfg);
  mvh::Rng claim_rng(cfg.seed ^ 0xc1a1135eedULL);
  std::vector<mvh::Claim> claims;
  claims.push_back(mvh::random_call_claim(tree, claim_rng, "call"));
  claims.push_back(mvh::random_payoff_claim(tree, claim_rng, "payoff"));
  if (out.empty()) {
    std::cout << mvh::model_to_string(tree, claims);
  } else {
    try {
      mvh::save_model_file(out, tree, claims);
    } catch (const mvh::IoError& e) {
      std::cerr << e.what() << "\n";
      return kExitUnreadable;
    }
  }
  return kExitPass;
}

int cmd_verify(const mvh::VerifyOptions& options) {
  const mvh::VerifySummary summary = mvh::run_verification(options);
  mvh::print_summary(std::cout, summary);
  return summary.all_pass ? kExitPass : kExitVerdictFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-variance hedging on finite event-tree market models"};
  app.require_subcommand(1);

  std::string model_path, claim_label, out_path;
  mvh::AnalysisOptions aopt;
  mvh::GeneratorConfig gcfg;
  mvh::VerifyOptions vopt;

  CLI::App* validate = app.add_subcommand("validate", "check a model file");
  validate->add_option("model", model_path, "model JSON file")->required();

  CLI::App* analyze = app.add_subcommand("analyze", "run the full pipeline on one claim");
  analyze->add_option("model", model_path, "model JSON file")->required();
  analyze->add_option("--claim", claim_label, "claim label (default: first claim)");
  analyze->add_option("--out", out_path, "write the report here (default: stdout)");
  analyze->add_option("--tol", aopt.tol, "identity tolerance")
      ->envname("MVH_TOL")
      ->capture_default_str();
  analyze->add_option("--oracle-tol", aopt.oracle_tol, "dense-reference tolerance")
      ->capture_default_str();
  analyze->add_flag("--no-oracle", [&aopt](int64_t) { aopt.with_oracle = false; },
                    "skip the dense reference solve");

  CLI::App* generate = app.add_subcommand("generate", "emit a random model with two claims");
  generate->add_option("--seed", gcfg.seed, "generator seed")->capture_default_str();
  generate->add_option("--depth", gcfg.depth, "tree depth")->capture_default_str();
  generate->add_option("--branching", gcfg.max_branching, "max children per family")
      ->capture_default_str();
  generate->add_option("--assets", gcfg.assets, "number of risky assets")
      ->capture_default_str();
  generate->add_option("--jump-scale", gcfg.jump_scale, "log scale of one-step price moves")
      ->capture_default_str();
  generate->add_option("--out", out_path, "write the model here (default: stdout)");

  CLI::App* verify = app.add_subcommand("verify", "randomized identity suite");
  verify->add_option("--seed", vopt.seed, "suite seed")->capture_default_str();
  verify->add_option("--count", vopt.count, "number of trees")->capture_default_str();
  verify->add_option("--depth", vopt.depth, "depth cap")->capture_default_str();
  verify->add_option("--branching", vopt.branching, "branching cap")->capture_default_str();
  verify->add_option("--assets", vopt.assets, "asset-count cap")->capture_default_str();
  verify->add_option("--jump-scale", vopt.jump_scale, "log scale of one-step price moves")
      ->capture_default_str();
  verify->add_option("--tol", vopt.analysis.tol, "identity tolerance")
      ->envname("MVH_TOL")
      ->capture_default_str();
  verify->add_flag("--no-oracle", [&vopt](int64_t) { vopt.analysis.with_oracle = false; },
                   "skip the dense reference solve");

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return cmd_validate(model_path);
  if (analyze->parsed()) return cmd_analyze(model_path, claim_label, out_path, aopt);
  if (generate->parsed()) return cmd_generate(gcfg, out_path);
  if (verify->parsed()) return cmd_verify(vopt);
  return kExitPass;
}
