#include "mvh/report.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace mvh {

using json = nlohmann::ordered_json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json process_to_json(const ScalarProcess& p) {
  json a = json::array();
  for (double x : p) a.push_back(x);
  return a;
}

// One row per interior node, in interior-slot order.
json strategy_to_json(const EventTree& tree, const Strategy& s) {
  json a = json::array();
  for (int n : tree.interior()) a.push_back(vector_to_json(s[n]));
  return a;
}

json verdict_to_json(const Verdict& v) {
  json o;
  o["id"] = v.id;
  o["description"] = v.description;
  o["available"] = v.available;
  if (v.available) {
    o["deviation"] = v.deviation;
    o["tol"] = v.tol;
    o["pass"] = v.pass;
  }
  o["note"] = v.note;
  return o;
}

bool read_vector(const json& a, Eigen::Index expected, Eigen::VectorXd& out) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != expected) return false;
  out.resize(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    if (!a[static_cast<size_t>(i)].is_number()) return false;
    out[i] = a[static_cast<size_t>(i)].get<double>();
  }
  return true;
}

bool read_process(const json& a, size_t expected, ScalarProcess& out) {
  if (!a.is_array() || a.size() != expected) return false;
  out.resize(expected);
  for (size_t i = 0; i < expected; ++i) {
    if (!a[i].is_number()) return false;
    out[i] = a[i].get<double>();
  }
  return true;
}

bool read_strategy(const json& a, const EventTree& tree, Eigen::Index dim, Strategy& out) {
  if (!a.is_array() || a.size() != static_cast<size_t>(tree.interior_count())) return false;
  out.assign(tree.size(), Eigen::VectorXd());
  for (size_t slot = 0; slot < a.size(); ++slot) {
    Eigen::VectorXd row;
    if (!read_vector(a[slot], dim, row)) return false;
    out[tree.interior()[static_cast<int>(slot)]] = std::move(row);
  }
  return true;
}

std::string verdict_line(const Verdict& v) {
  return "verdict '" + v.id + "'";
}

}  // namespace

std::string report_to_string(const Model& model, const std::string& claim_label,
                             const Analysis& analysis, const AnalysisOptions& opt) {
  const EventTree& tree = model.tree;
  const Claim& claim = model.claim(claim_label);
  const PipelineData& data = analysis.data;
  const bool solved = !analysis.refused || data.frame_note.size() > 0;
  // solved: the density stage completed (a later stage may still have refused)

  json doc;
  doc["format"] = "mvh-report-v1";
  json m;
  m["digest"] = model_digest(tree, model.claims);
  m["nodes"] = tree.size();
  m["terminals"] = tree.terminal_count();
  m["interior"] = tree.interior_count();
  m["assets"] = tree.assets();
  m["horizon"] = tree.horizon();
  doc["model"] = m;

  json c;
  c["label"] = claim.label;
  c["payoff"] = vector_to_json(claim.payoff);
  doc["claim"] = c;

  json t;
  t["identity"] = opt.tol;
  t["oracle"] = opt.oracle_tol;
  t["oracle_enabled"] = opt.with_oracle;
  t["oracle_cap"] = opt.oracle_cap;
  doc["tolerances"] = t;

  json h;
  h["martingale_measure_exists"] = data.flags.feasible_equivalent;
  h["feasibility_margin"] = data.flags.margin;
  h["density_nonvanishing"] = data.flags.nonvanishing;
  h["optimal_measure_equivalent"] = data.flags.equivalent_optimum;
  if (data.feedback_ok)
    h["orthogonal_jump_predicate"] = data.jump_predicate;
  else
    h["orthogonal_jump_predicate"] = nullptr;
  doc["hypotheses"] = h;

  if (analysis.refused) {
    json r;
    r["code"] = analysis.refusal_code;
    r["reason"] = analysis.refusal_reason;
    doc["refusal"] = r;
  } else {
    doc["refusal"] = nullptr;
  }

  json stages;
  stages["deflation"] = data.frame_ok;
  stages["deflation_note"] = data.frame_note;
  stages["feedback"] = data.feedback_ok;
  stages["feedback_note"] = data.feedback_note;
  doc["stages"] = stages;

  if (solved) {
    json ids = json::array();
    for (int i = 0; i < tree.size(); ++i) ids.push_back(tree.node(i).id);
    doc["node_ids"] = ids;
    json tids = json::array();
    for (int n : tree.terminals()) tids.push_back(tree.node(n).id);
    doc["terminal_ids"] = tids;
    json iids = json::array();
    for (int n : tree.interior()) iids.push_back(tree.node(n).id);
    doc["interior_ids"] = iids;

    json s;
    s["second_moment"] = data.second_moment;
    s["alpha"] = data.alpha;
    s["objective"] = data.objective;
    s["objective_split"] = data.objective_split;
    if (data.frame_ok) {
      s["gkw_mean"] = data.gkw_mean;
      s["initial_value"] = data.initial;
    } else {
      s["gkw_mean"] = nullptr;
      s["initial_value"] = nullptr;
    }
    doc["scalars"] = s;

    json tt;
    tt["gstar"] = vector_to_json(data.gstar);
    tt["orthogonal"] = vector_to_json(data.orthogonal);
    doc["terminal_tables"] = tt;

    json pr;
    pr["z_star"] = process_to_json(data.z_star);
    pr["z_tilde"] = process_to_json(data.z_tilde);
    pr["value"] = data.frame_ok ? process_to_json(data.value) : json(nullptr);
    pr["residual"] = data.frame_ok ? process_to_json(data.residual) : json(nullptr);
    pr["cost"] = data.frame_ok ? process_to_json(data.cost) : json(nullptr);
    doc["processes"] = pr;

    json st;
    st["theta_star"] = strategy_to_json(tree, data.theta_star);
    st["theta"] = strategy_to_json(tree, data.theta);
    st["phi"] = data.frame_ok ? strategy_to_json(tree, data.phi) : json(nullptr);
    st["psi"] = data.frame_ok ? strategy_to_json(tree, data.psi) : json(nullptr);
    st["eta_value"] =
        data.feedback_ok ? strategy_to_json(tree, data.eta_value) : json(nullptr);
    st["eta_residual"] =
        data.feedback_ok ? strategy_to_json(tree, data.eta_residual) : json(nullptr);
    doc["strategies"] = st;
  } else {
    doc["scalars"] = nullptr;
    doc["terminal_tables"] = nullptr;
    doc["processes"] = nullptr;
    doc["strategies"] = nullptr;
  }

  json verdicts = json::array();
  for (const Verdict& v : analysis.verdicts) verdicts.push_back(verdict_to_json(v));
  doc["verdicts"] = verdicts;
  doc["all_pass"] = analysis.all_pass;

  return doc.dump(2) + "\n";
}

void save_report_file(const std::string& path, const std::string& report_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << report_text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

ReverifyResult reverify_report(const std::string& report_text, const Model& model) {
  ReverifyResult res;
  json doc = json::parse(report_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    res.issues.push_back("report is not valid JSON");
    return res;
  }
  const EventTree& tree = model.tree;
  const int d = tree.assets();

  auto issue = [&res](const std::string& what) { res.issues.push_back(what); };

  try {
    if (doc.value("format", std::string()) != "mvh-report-v1")
      issue("unknown report format");
    const std::string digest = model_digest(tree, model.claims);
    if (doc.at("model").at("digest").get<std::string>() != digest)
      issue("model digest mismatch: report was produced from a different model");

    const std::string label = doc.at("claim").at("label").get<std::string>();
    const Claim& claim = model.claim(label);
    Eigen::VectorXd payoff;
    if (!read_vector(doc.at("claim").at("payoff"), tree.terminal_count(), payoff) ||
        (payoff - claim.payoff).lpNorm<Eigen::Infinity>() != 0.0)
      issue("claim payoff in the report does not match the model");

    AnalysisOptions opt;
    opt.tol = doc.at("tolerances").at("identity").get<double>();
    opt.oracle_tol = doc.at("tolerances").at("oracle").get<double>();
    opt.with_oracle = doc.at("tolerances").at("oracle_enabled").get<bool>();
    opt.oracle_cap = doc.at("tolerances").at("oracle_cap").get<int>();

    PipelineData data;
    const json& h = doc.at("hypotheses");
    data.flags.feasible_equivalent = h.at("martingale_measure_exists").get<bool>();
    data.flags.margin = h.at("feasibility_margin").get<double>();
    data.flags.nonvanishing = h.at("density_nonvanishing").get<bool>();
    data.flags.equivalent_optimum = h.at("optimal_measure_equivalent").get<bool>();
    data.frame_ok = doc.at("stages").at("deflation").get<bool>();
    data.frame_note = doc.at("stages").at("deflation_note").get<std::string>();
    data.feedback_ok = doc.at("stages").at("feedback").get<bool>();
    data.feedback_note = doc.at("stages").at("feedback_note").get<std::string>();
    if (data.feedback_ok) data.jump_predicate = h.at("orthogonal_jump_predicate").get<bool>();

    if (!doc.at("refusal").is_null() && doc.at("scalars").is_null()) {
      // Refused before the density stage: nothing to re-grade beyond the
      // refusal itself, which must still be justified by the model.
      if (doc.at("refusal").at("code").get<std::string>() == "no_equivalent_martingale_measure" &&
          equivalent_measure_feasibility(tree).feasible)
        issue("report refuses for infeasibility but the model admits an equivalent "
              "martingale measure");
      if (!doc.at("verdicts").empty()) issue("refused report carries verdicts");
      res.ok = res.issues.empty();
      return res;
    }

    const json& s = doc.at("scalars");
    data.second_moment = s.at("second_moment").get<double>();
    data.alpha = s.at("alpha").get<double>();
    data.objective = s.at("objective").get<double>();
    data.objective_split = s.at("objective_split").get<double>();

    bool tables_ok = true;
    tables_ok &= read_vector(doc.at("terminal_tables").at("gstar"), tree.terminal_count(), data.gstar);
    tables_ok &=
        read_vector(doc.at("terminal_tables").at("orthogonal"), tree.terminal_count(), data.orthogonal);
    const size_t n = static_cast<size_t>(tree.size());
    tables_ok &= read_process(doc.at("processes").at("z_star"), n, data.z_star);
    tables_ok &= read_process(doc.at("processes").at("z_tilde"), n, data.z_tilde);
    tables_ok &= read_strategy(doc.at("strategies").at("theta_star"), tree, d, data.theta_star);
    tables_ok &= read_strategy(doc.at("strategies").at("theta"), tree, d, data.theta);
    if (data.frame_ok) {
      data.gkw_mean = s.at("gkw_mean").get<double>();
      data.initial = s.at("initial_value").get<double>();
      tables_ok &= read_process(doc.at("processes").at("value"), n, data.value);
      tables_ok &= read_process(doc.at("processes").at("residual"), n, data.residual);
      tables_ok &= read_process(doc.at("processes").at("cost"), n, data.cost);
      tables_ok &= read_strategy(doc.at("strategies").at("phi"), tree, d, data.phi);
      tables_ok &= read_strategy(doc.at("strategies").at("psi"), tree, d + 1, data.psi);
    }
    if (data.feedback_ok) {
      tables_ok &= read_strategy(doc.at("strategies").at("eta_value"), tree, d, data.eta_value);
      tables_ok &= read_strategy(doc.at("strategies").at("eta_residual"), tree, d, data.eta_residual);
    }
    if (!tables_ok) {
      issue("tables are missing or sized inconsistently with the model");
      return res;
    }

    res.recomputed = evaluate_verdicts(tree, claim, data, opt);

    const json& stored = doc.at("verdicts");
    if (stored.size() != res.recomputed.size()) {
      issue("verdict count differs: stored " + std::to_string(stored.size()) +
            ", recomputed " + std::to_string(res.recomputed.size()));
    } else {
      for (size_t i = 0; i < res.recomputed.size(); ++i) {
        const Verdict& mine = res.recomputed[i];
        const json& theirs = stored[i];
        if (theirs.at("id").get<std::string>() != mine.id) {
          issue(verdict_line(mine) + ": id mismatch against '" +
                theirs.at("id").get<std::string>() + "'");
          continue;
        }
        if (theirs.at("available").get<bool>() != mine.available) {
          issue(verdict_line(mine) + ": availability differs");
          continue;
        }
        if (!mine.available) continue;
        if (theirs.at("pass").get<bool>() != mine.pass)
          issue(verdict_line(mine) + ": pass flag differs");
        if (theirs.at("deviation").get<double>() != mine.deviation)
          issue(verdict_line(mine) + ": deviation differs (stored " +
                std::to_string(theirs.at("deviation").get<double>()) + ", recomputed " +
                std::to_string(mine.deviation) + ")");
        if (theirs.at("tol").get<double>() != mine.tol)
          issue(verdict_line(mine) + ": tolerance differs");
      }
    }

    bool all = doc.at("refusal").is_null();
    for (const Verdict& v : res.recomputed)
      if (v.available && !v.pass) all = false;
    if (doc.at("all_pass").get<bool>() != all) issue("all_pass flag differs");
  } catch (const json::exception& e) {
    issue(std::string("report structure error: ") + e.what());
    return res;
  }

  res.ok = res.issues.empty();
  return res;
}

}  // namespace mvh
