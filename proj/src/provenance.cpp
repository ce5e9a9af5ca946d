#include "arraykit/provenance.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <set>

#include "arraykit/error.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

const ProvNode &ProvenanceGraph::node(int id) const {
  if (id < 1 || std::size_t(id) > nodes.size()) throw DataError("provenance: unknown node id " + std::to_string(id));
  return nodes[std::size_t(id) - 1];
}

int ProvenanceGraph::add_object(const std::string &label, const std::string &hash, Params files) {
  ProvNode n;
  n.id = int(nodes.size()) + 1;
  n.kind = "object";
  n.label = label;
  n.outputHash = hash;
  n.params = std::move(files);
  n.toolVersion = tool_version();
  n.timestamp = current_timestamp();
  nodes.push_back(std::move(n));
  return nodes.back().id;
}

int ProvenanceGraph::record(const std::string &opName, const Params &params, const std::vector<int> &inputIds,
                            int outputId) {
  if (inputIds.empty()) throw DataError("provenance: operation '" + opName + "' has no input");
  for (int id : inputIds)
    if (node(id).kind != "object") throw DataError("provenance: input " + std::to_string(id) + " is not an object");
  const auto &out = node(outputId);
  if (out.kind != "object") throw DataError("provenance: output " + std::to_string(outputId) + " is not an object");
  for (const auto &n : nodes)
    if (n.kind == "operation" && n.outputId == outputId)
      throw DataError("provenance: object " + std::to_string(outputId) + " already has a producer");
  // The new operation closes a cycle iff its output is an ancestor of an input.
  std::set<int> seen;
  std::function<bool(int)> reaches = [&](int id) {
    if (id == outputId) return true;
    if (!seen.insert(id).second) return false;
    for (const auto &n : nodes)
      if (n.kind == "operation" && n.outputId == id)
        for (int in : n.inputIds)
          if (reaches(in)) return true;
    return false;
  };
  for (int id : inputIds)
    if (reaches(id)) throw DataError("provenance: recording '" + opName + "' would create a cycle");
  ProvNode n;
  n.id = int(nodes.size()) + 1;
  n.kind = "operation";
  n.label = opName;
  n.params = params;
  n.inputIds = inputIds;
  n.outputId = outputId;
  n.inputHash = node(inputIds.front()).outputHash;
  n.outputHash = out.outputHash;
  n.toolVersion = tool_version();
  n.timestamp = current_timestamp();
  nodes.push_back(std::move(n));
  return nodes.back().id;
}

std::vector<const ProvNode *> ProvenanceGraph::operations() const {
  std::vector<const ProvNode *> ops;
  for (const auto &n : nodes)
    if (n.kind == "operation") ops.push_back(&n);
  return ops;
}

namespace {

Json node_json(const ProvNode &n, bool withVolatile) {
  Json j;
  j["id"] = n.id;
  j["kind"] = n.kind;
  j["label"] = n.label;
  j["params"] = Json(n.params);
  j["inputIds"] = n.inputIds;
  j["outputId"] = n.outputId;
  j["inputHash"] = n.inputHash;
  j["outputHash"] = n.outputHash;
  if (withVolatile) {
    j["toolVersion"] = n.toolVersion;
    j["timestamp"] = n.timestamp;
  }
  return j;
}

}  // namespace

Json to_json(const ProvenanceGraph &g) {
  Json nodes = Json::array();
  for (const auto &n : g.nodes) nodes.push_back(node_json(n, true));
  return Json{{"head", g.head}, {"nodes", nodes}};
}

ProvenanceGraph provenance_from_json(const Json &j) {
  ProvenanceGraph g;
  try {
    g.head = j.at("head").get<int>();
    for (const auto &jn : j.at("nodes")) {
      ProvNode n;
      n.id = jn.at("id").get<int>();
      n.kind = jn.at("kind").get<std::string>();
      n.label = jn.at("label").get<std::string>();
      n.params = jn.at("params").get<Params>();
      n.inputIds = jn.at("inputIds").get<std::vector<int>>();
      n.outputId = jn.at("outputId").get<int>();
      n.inputHash = jn.at("inputHash").get<std::string>();
      n.outputHash = jn.at("outputHash").get<std::string>();
      n.toolVersion = jn.value("toolVersion", "");
      n.timestamp = jn.value("timestamp", "");
      if (n.id != int(g.nodes.size()) + 1) throw DataError("provenance: node ids must be sequential from 1");
      if (n.kind != "object" && n.kind != "operation") throw DataError("provenance: bad node kind '" + n.kind + "'");
      g.nodes.push_back(std::move(n));
    }
  } catch (const Json::exception &e) {
    throw DataError(std::string("provenance: malformed graph: ") + e.what());
  }
  for (const auto &n : g.nodes)
    if (n.kind == "operation") {
      for (int in : n.inputIds)
        if (in >= n.id) throw DataError("provenance: node " + std::to_string(n.id) + " reads a later node");
      g.node(n.outputId);
    }
  return g;
}

std::string provenance_fingerprint(const ProvenanceGraph &g) {
  Json nodes = Json::array();
  for (const auto &n : g.nodes) nodes.push_back(node_json(n, false));
  return sha256_hex(canonical_json(Json{{"head", g.head}, {"nodes", nodes}}));
}

std::string tool_version() { return "arraykit 1.0.0"; }

std::string current_timestamp() {
  std::time_t t;
  if (const char *sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
    auto v = text::parse_int(sde);
    if (!v) throw UsageError("SOURCE_DATE_EPOCH is not an integer");
    t = std::time_t(*v);
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace arraykit
