#pragma once
// Model file format (JSON):
//   {
//     "d": 1, "T": 2,
//     "nodes": [ {"id": "root", "parent": null, "p": 1.0, "price": [100.0]}, ... ],
//     "claims": [ {"label": "H", "payoff": {"<terminal id>": 3.0, ...}}, ... ]
//   }
// Node order in the file is free as long as the structure is a tree; nodes
// are re-ordered breadth-first from the root (children in file order), which
// also fixes the terminal ordering used everywhere else.

#include <optional>
#include <string>

#include "mvh/tree.hpp"

namespace mvh {

// File could not be opened / read at all (distinct from invalid content).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Model {
  EventTree tree;
  std::vector<Claim> claims;

  const Claim& claim(const std::string& label) const;
};

struct ModelLoad {
  std::optional<Model> model;  // present only when the structure is a valid tree
  ValidationReport report;     // structural AND numeric violations
};

ModelLoad parse_model(const std::string& text);
ModelLoad load_model_file(const std::string& path);  // throws IoError if unreadable

// Canonical serialization (2-space indent, nodes in internal order); two
// models that load equal serialize byte-identically.
std::string model_to_string(const EventTree& tree, const std::vector<Claim>& claims);
void save_model_file(const std::string& path, const EventTree& tree,
                     const std::vector<Claim>& claims);

// FNV-1a over the canonical serialization; stable across formatting of the
// input file.
std::string model_digest(const EventTree& tree, const std::vector<Claim>& claims);

}  // namespace mvh
