#pragma once
// JSON report of one analysis and its replay. The report carries the model
// digest, hypothesis flags, scalars, every per-node table, and the graded
// verdicts; together with the model file it is self-contained: reverify
// rebuilds the tables from the text and re-runs every check, and must
// reproduce each stored verdict exactly. Serialization is canonical, so
// identical inputs give byte-identical reports.

#include <string>
#include <vector>

#include "mvh/analysis.hpp"
#include "mvh/model_io.hpp"

namespace mvh {

std::string report_to_string(const Model& model, const std::string& claim_label,
                             const Analysis& analysis, const AnalysisOptions& opt);

void save_report_file(const std::string& path, const std::string& report_text);

struct ReverifyResult {
  bool ok = false;                  // parsed, matched the model, verdicts reproduced
  std::vector<std::string> issues;  // every discrepancy found
  std::vector<Verdict> recomputed;
};

// Re-grades a written report against the model it was produced from.
ReverifyResult reverify_report(const std::string& report_text, const Model& model);

}  // namespace mvh
