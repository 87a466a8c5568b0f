#include "mvh/model_io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace mvh {

using json = nlohmann::ordered_json;

const Claim& Model::claim(const std::string& label) const {
  for (const Claim& c : claims)
    if (c.label == label) return c;
  throw std::invalid_argument("model has no claim labelled '" + label + "'");
}

namespace {

struct RawNode {
  std::string id;
  std::optional<std::string> parent;
  double prob = 1.0;
  Eigen::VectorXd price;
};

// Reorders raw nodes breadth-first from the root; reports every structural
// defect it can see instead of stopping at the first.
std::optional<EventTree> build_tree(const std::vector<RawNode>& raw, int d, int horizon,
                                    ValidationReport& report) {
  std::map<std::string, int> index;
  bool structural_ok = true;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!index.emplace(raw[i].id, static_cast<int>(i)).second) {
      report.fail("duplicate node id '" + raw[i].id + "'");
      structural_ok = false;
    }
  }
  int root = -1;
  std::vector<std::vector<int>> children(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!raw[i].parent) {
      if (root >= 0) {
        report.fail("multiple roots: '" + raw[root].id + "' and '" + raw[i].id + "'");
        structural_ok = false;
      }
      root = static_cast<int>(i);
      continue;
    }
    auto it = index.find(*raw[i].parent);
    if (it == index.end()) {
      report.fail("node '" + raw[i].id + "': unknown parent '" + *raw[i].parent + "'");
      structural_ok = false;
    } else {
      children[it->second].push_back(static_cast<int>(i));
    }
  }
  if (root < 0) {
    report.fail("no root node (exactly one node must have parent null)");
    structural_ok = false;
  }
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].price.size() != d) {
      report.fail("node '" + raw[i].id + "': price has " + std::to_string(raw[i].price.size()) +
                  " entries, expected d=" + std::to_string(d));
      structural_ok = false;
    }
  }
  if (!structural_ok) return std::nullopt;

  // Breadth-first renumbering; anything not reached is not part of the tree.
  std::vector<int> order;
  std::vector<int> new_index(raw.size(), -1);
  order.push_back(root);
  new_index[root] = 0;
  for (size_t head = 0; head < order.size(); ++head) {
    for (int c : children[order[head]]) {
      new_index[c] = static_cast<int>(order.size());
      order.push_back(c);
    }
  }
  if (order.size() != raw.size()) {
    for (size_t i = 0; i < raw.size(); ++i)
      if (new_index[i] < 0)
        report.fail("node '" + raw[i].id + "' is not reachable from the root");
    return std::nullopt;
  }

  std::vector<Node> nodes(raw.size());
  for (size_t pos = 0; pos < order.size(); ++pos) {
    const RawNode& r = raw[order[pos]];
    Node& n = nodes[pos];
    n.id = r.id;
    n.prob = r.prob;
    n.price = r.price;
    n.parent = r.parent ? new_index[index[*r.parent]] : -1;
    n.time = n.parent < 0 ? 0 : nodes[n.parent].time + 1;
    if (n.parent >= 0) nodes[n.parent].children.push_back(static_cast<int>(pos));
  }
  return EventTree(std::move(nodes), d, horizon);
}

}  // namespace

ModelLoad parse_model(const std::string& text) {
  ModelLoad out;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    out.report.fail(std::string("not valid JSON: ") + e.what());
    return out;
  }
  try {
    if (!doc.is_object() || !doc.contains("d") || !doc.contains("T") || !doc.contains("nodes")) {
      out.report.fail("model must be an object with fields d, T, nodes");
      return out;
    }
    const int d = doc["d"].get<int>();
    const int horizon = doc["T"].get<int>();
    std::vector<RawNode> raw;
    for (const auto& jn : doc["nodes"]) {
      RawNode r;
      r.id = jn.at("id").get<std::string>();
      if (!jn.at("parent").is_null()) r.parent = jn["parent"].get<std::string>();
      r.prob = jn.at("p").get<double>();
      const auto& jp = jn.at("price");
      r.price.resize(static_cast<Eigen::Index>(jp.size()));
      for (size_t k = 0; k < jp.size(); ++k) r.price[static_cast<Eigen::Index>(k)] = jp[k].get<double>();
      raw.push_back(std::move(r));
    }
    auto tree = build_tree(raw, d, horizon, out.report);
    if (!tree) return out;

    std::vector<Claim> claims;
    if (doc.contains("claims")) {
      for (const auto& jc : doc["claims"]) {
        Claim c;
        c.label = jc.at("label").get<std::string>();
        c.payoff = Eigen::VectorXd::Zero(tree->terminal_count());
        std::vector<bool> seen(tree->terminal_count(), false);
        for (const auto& [id, value] : jc.at("payoff").items()) {
          int idx = -1;
          for (int t = 0; t < tree->terminal_count(); ++t)
            if (tree->node(tree->terminals()[t]).id == id) idx = t;
          if (idx < 0) {
            out.report.fail("claim '" + c.label + "': '" + id + "' is not a terminal node");
            continue;
          }
          c.payoff[idx] = value.get<double>();
          seen[idx] = true;
        }
        for (int t = 0; t < tree->terminal_count(); ++t)
          if (!seen[t])
            out.report.fail("claim '" + c.label + "': missing payoff for terminal '" +
                            tree->node(tree->terminals()[t]).id + "'");
        validate_claim(*tree, c, out.report);
        claims.push_back(std::move(c));
      }
    }

    ValidationReport numeric = validate(*tree);
    for (const std::string& v : numeric.violations) out.report.fail(v);
    out.model = Model{std::move(*tree), std::move(claims)};
  } catch (const std::exception& e) {
    out.report.fail(std::string("malformed model: ") + e.what());
  }
  return out;
}

ModelLoad load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  return parse_model(buf.str());
}

std::string model_to_string(const EventTree& tree, const std::vector<Claim>& claims) {
  json doc;
  doc["d"] = tree.assets();
  doc["T"] = tree.horizon();
  doc["nodes"] = json::array();
  for (int i = 0; i < tree.size(); ++i) {
    const Node& n = tree.node(i);
    json jn;
    jn["id"] = n.id;
    if (n.parent < 0)
      jn["parent"] = nullptr;
    else
      jn["parent"] = tree.node(n.parent).id;
    jn["p"] = n.prob;
    jn["price"] = std::vector<double>(n.price.data(), n.price.data() + n.price.size());
    doc["nodes"].push_back(std::move(jn));
  }
  doc["claims"] = json::array();
  for (const Claim& c : claims) {
    json jc;
    jc["label"] = c.label;
    json payoff;
    for (int t = 0; t < tree.terminal_count(); ++t)
      payoff[tree.node(tree.terminals()[t]).id] = c.payoff[t];
    jc["payoff"] = std::move(payoff);
    doc["claims"].push_back(std::move(jc));
  }
  return doc.dump(2) + "\n";
}

void save_model_file(const std::string& path, const EventTree& tree,
                     const std::vector<Claim>& claims) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << model_to_string(tree, claims);
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string model_digest(const EventTree& tree, const std::vector<Claim>& claims) {
  const std::string bytes = model_to_string(tree, claims);
  uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

}  // namespace mvh
