#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "arraykit/matrix.hpp"
#include "arraykit/normalize.hpp"
#include "arraykit/stats.hpp"

namespace arraykit {

enum class CorKind { pearson, robust, mi };
CorKind parse_cor_kind(const std::string &s);
std::string to_string(CorKind k);

struct RelNet {
  struct Edge {
    std::size_t i, j;  // i < j, positions in geneIds
    double value;      // r (single condition) or delta Z (two conditions)
    double p;
    bool operator==(const Edge &) const = default;
  };
  std::vector<std::string> geneIds;
  std::vector<std::size_t> rows;          // dataset rows of the pool
  std::string sampleLabelId;
  std::vector<std::string> conditions;    // 1 or 2
  CorKind kind = CorKind::pearson;
  double cutPval = 0.05;
  MatrixD cor;                            // gene x gene: r, or MI in nats
  MatrixD p;
  std::vector<Edge> edges;                // ascending (i, j)
  MatrixD rA, rB, dZ;                     // two-condition mode only
  std::vector<MatrixD> data;              // per condition: gene x sample W
  std::vector<std::string> notes;

  bool two_condition() const { return conditions.size() == 2; }
  bool operator==(const RelNet &o) const;
};

struct RelNetOptions {
  std::string sampleLabel;
  CorKind kind = CorKind::pearson;
  double cutPval = 0.05;
  int permutations = 999;  // MI permutation test
  int miNeighbours = 3;
  std::uint64_t seed = 1;
  std::string geneIdLabel;
};

/// All-pairs association among `poolRows` over the samples of `condition`.
/// Pairs are computed over the samples where both genes are finite; fewer
/// than 4 such samples leaves r missing and p = 1.
RelNet relnet_single(const NormalizedDataset &ds, const std::string &condition,
                     const std::vector<std::size_t> &poolRows, const RelNetOptions &opt);

/// Per pair, Pearson r in each condition and the Fisher-Z comparison p.
RelNet relnet_diff(const NormalizedDataset &ds, const std::string &conditionA, const std::string &conditionB,
                   const std::vector<std::size_t> &poolRows, const RelNetOptions &opt);

enum class ModuleMode { byCondition, bySample };
ModuleMode parse_module_mode(const std::string &s);
std::string to_string(ModuleMode m);

struct ModuleResult {
  std::vector<std::string> groups;
  std::vector<std::string> columns;      // conditions or samples
  Matrix<int> state;                     // +1 induced, -1 repressed, 0 inactive
  MatrixD pInduced, pRepressed, pValue;  // pValue: direction with the smaller p
  MatrixD score;                         // signed -log10 p, 0 when inactive
  Matrix<std::int64_t> universe;         // genes with data per column
  double cutExp = 1, cutPhiper = 0.05;
  ModuleMode mode = ModuleMode::byCondition;
  stats::PAdjust adjust = stats::PAdjust::none;
  std::string sampleLabelId;
  bool operator==(const ModuleResult &o) const;
};

struct ModuleOptions {
  std::string sampleLabel;
  double cutExp = 1;
  double cutPhiper = 0.05;
  ModuleMode mode = ModuleMode::byCondition;
  stats::PAdjust adjust = stats::PAdjust::none;  // none or BH
};

/// Hypergeometric overlap of every gene group with the induced and the
/// repressed gene sets of each condition (or sample).
ModuleResult active_modules(const NormalizedDataset &ds, const ModuleOptions &opt);

/// Fisher's combination: S = sum(-2 ln p), p from chi-square with 2m df.
std::pair<double, double> fisher_combine(std::span<const double> p);

struct NetScore {
  std::vector<std::string> networks;
  std::vector<std::string> conditions;
  MatrixD statistic, pValue;
  Matrix<std::int64_t> edgeCount;
  std::string sampleLabelId;
  std::vector<std::string> notes;
  bool operator==(const NetScore &o) const;
};

/// Scores each loaded network in each condition by combining the
/// zero-correlation p of its edges; edges treated as independent.
NetScore active_net(const NormalizedDataset &ds, const std::string &sampleLabel);

struct GenePairCondition {
  std::string condition;
  std::vector<double> x, y;
  double slope = 0, intercept = 0, r = 0;
  bool degenerate = false;  // a constant coordinate: r undefined
};

/// Per-condition scatter and least-squares line of geneY on geneX.
std::vector<GenePairCondition> gene_pair_data(const RelNet &net, const std::string &geneX, const std::string &geneY);

}  // namespace arraykit
