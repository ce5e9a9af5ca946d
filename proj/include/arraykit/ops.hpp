#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "arraykit/classify.hpp"
#include "arraykit/cluster.hpp"
#include "arraykit/container.hpp"
#include "arraykit/diffexpr.hpp"
#include "arraykit/ingest.hpp"
#include "arraykit/netmod.hpp"
#include "arraykit/normalize.hpp"
#include "arraykit/provenance.hpp"

namespace arraykit {

struct ClusterResult {
  std::string algorithm;  // hier, kmeans or som
  ClusterOn on = ClusterOn::genes;
  MatrixD data;           // item x feature input actually clustered
  std::vector<std::string> labels;
  std::vector<std::string> featureLabels;
  std::optional<Dendrogram> tree;
  std::optional<Partition> partition;
  std::vector<std::string> warnings;
  bool operator==(const ClusterResult &o) const;
};

using Artifact = std::variant<RawDataset, NormalizedDataset, DEResult, ClusterResult, ClassifierResult, RelNet,
                              ModuleResult, NetScore>;

std::string artifact_kind(const Artifact &a);
Container to_container(const Artifact &a);
Artifact from_container(const Container &c);
/// Content hash of the stored form of `a`.
std::string artifact_hash(const Artifact &a);

struct OptionSpec {
  enum class Kind { text, integer, real, flag };
  std::string name;  // flag name without dashes; also the parameter key
  Kind kind = Kind::text;
  std::string fallback;  // default value ("" for none)
  std::string help;
  std::vector<std::string> choices;  // empty = free
  bool recorded = true;              // false for output paths and display-only options
};

struct OpSpec {
  std::string name;
  std::string help;
  bool needsInput = true;
  std::vector<OptionSpec> options;
};

const std::vector<OpSpec> &op_specs();
const OpSpec &op_spec(const std::string &name);

/// Fills defaults and normalizes the values of the recorded options (numbers
/// in shortest round-trip form, flags as true/false). Throws UsageError on
/// unknown keys, malformed numbers or values outside `choices`.
Params canonical_params(const OpSpec &spec, const std::map<std::string, std::string> &given);

struct OpResult {
  Artifact artifact;
  Params inputFiles;  // load only: file name -> SHA-256
  std::vector<std::string> messages;
};

/// Runs one operation. Relative paths in the parameters resolve against
/// `baseDir`.
OpResult run_op(const std::string &name, const Params &params, const Artifact *input,
                const std::filesystem::path &baseDir = {});

struct ReplayNode {
  int opId = 0;
  std::string opName;
  std::string status;  // match, mismatch, downstream
  std::string recordedHash, replayedHash;
  std::string detail;
};

struct ReplayReport {
  std::vector<ReplayNode> nodes;
  std::string script;
  bool allMatch() const;
};

/// Re-executes every operation of `g` in id order from its recorded
/// parameters and compares each output hash with the recorded one.
/// When `keepDir` is set every reproduced object is also written there as
/// obj<N>.bin.
ReplayReport replay(const ProvenanceGraph &g, const std::filesystem::path &baseDir = {},
                    const std::filesystem::path &keepDir = {});

/// Shell script running the graph's operations through the command-line tool.
std::string replay_script(const ProvenanceGraph &g);

}  // namespace arraykit
