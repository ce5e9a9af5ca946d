#pragma once

#include <map>
#include <string>
#include <vector>

#include "arraykit/container.hpp"

namespace arraykit {

using Params = std::map<std::string, std::string>;

/// Node of the instantiation graph. Object nodes carry the content hash of
/// a stored object (or of a set of input files); operation nodes link input
/// objects to the object they produced.
struct ProvNode {
  int id = 0;
  std::string kind;         // "object" or "operation"
  std::string label;        // object: stored kind or "files"; operation: op name
  Params params;            // operation: canonical parameters; object "files": name -> hash
  std::vector<int> inputIds;
  int outputId = -1;
  std::string inputHash;    // operation: hash of the first input object
  std::string outputHash;   // operation: hash of its output; object: its own hash
  std::string toolVersion;
  std::string timestamp;
  bool operator==(const ProvNode &) const = default;
};

struct ProvenanceGraph {
  std::vector<ProvNode> nodes;  // ids are 1-based and sequential
  int head = 0;                 // object node of the current object

  const ProvNode &node(int id) const;
  int add_object(const std::string &label, const std::string &hash, Params files = {});
  /// Appends an operation node. Inputs and output must exist, the output
  /// must be an object node not yet produced by another operation, and the
  /// new edge must not close a cycle.
  int record(const std::string &opName, const Params &params, const std::vector<int> &inputIds, int outputId);
  /// Operation nodes in id order, which is a topological order.
  std::vector<const ProvNode *> operations() const;
  bool operator==(const ProvenanceGraph &) const = default;
};

Json to_json(const ProvenanceGraph &g);
ProvenanceGraph provenance_from_json(const Json &j);

/// Hash-scope view: node structure, params and hashes without timestamps
/// or tool versions.
std::string provenance_fingerprint(const ProvenanceGraph &g);

std::string tool_version();
/// UTC ISO-8601 time; SOURCE_DATE_EPOCH overrides the clock.
std::string current_timestamp();

}  // namespace arraykit
