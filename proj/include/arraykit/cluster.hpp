#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arraykit/diffexpr.hpp"
#include "arraykit/matrix.hpp"

namespace arraykit {

enum class DistanceKind { euclidean, oneMinusCor, oneMinusAbsCor };
DistanceKind parse_distance(const std::string &s);
std::string to_string(DistanceKind k);

/// Item x item distances between the rows of `M`. Missing features are
/// skipped pairwise; correlation kinds need >= 3 shared finite features.
MatrixD distance_matrix(const MatrixD &M, DistanceKind kind);

enum class Linkage { single, complete, average };
Linkage parse_linkage(const std::string &s);
std::string to_string(Linkage l);

/// Leaves are clusters 0..n-1; the cluster formed by merge k is n + k.
struct Dendrogram {
  struct Merge {
    std::size_t a, b;  // a < b
    double height;
    bool operator==(const Merge &) const = default;
  };
  std::vector<Merge> merges;
  std::vector<std::string> leafLabels;
  Linkage linkage = Linkage::average;
  DistanceKind distance = DistanceKind::euclidean;

  /// Leaves left to right; at each merge the child holding the smaller
  /// leaf index is drawn first.
  std::vector<std::size_t> leaf_order() const;
  bool operator==(const Dendrogram &) const = default;
};

/// Agglomerative clustering with Lance-Williams updates. Ties go to the pair
/// of active clusters with the smallest (lower index, higher index), where a
/// merged cluster takes the lower index of its two parts.
Dendrogram hier_cluster(const MatrixD &D, Linkage linkage, std::vector<std::string> labels = {});

enum class SomTopology { rect, hex };
SomTopology parse_topology(const std::string &s);
std::string to_string(SomTopology t);

struct Partition {
  std::vector<std::size_t> assignment;  // item -> cluster
  MatrixD centers;                      // cluster x feature (SOM: codebook, unit-major)
  double inertia = 0;                   // within-cluster sum of squares
  double quantizationError = 0;         // mean distance to the assigned center
  std::vector<double> inertiaHistory;   // k-means: after every Lloyd iteration
  int xdim = 0, ydim = 0;               // SOM grid, 0 for k-means
  SomTopology topology = SomTopology::rect;
  std::vector<std::string> itemLabels;
  std::vector<std::string> warnings;

  std::size_t clusters() const { return centers.rows(); }
  bool operator==(const Partition &o) const;
};

/// Replaces missing cells by their feature (column) mean; returns the number
/// of replaced cells.
std::size_t impute_feature_means(MatrixD &M);

/// k-means++ seeding followed by Lloyd iterations (to a fixed point or 300
/// iterations); the restart with the lowest inertia wins, ties to the
/// earlier restart.
Partition kmeans(MatrixD M, std::size_t k, int restarts, std::uint64_t seed);

struct SomOptions {
  int xdim = 2, ydim = 1;
  SomTopology topology = SomTopology::rect;
  long long steps = -1;       // single-item updates; -1 means 100 * items
  double alpha0 = 0.05;       // decays linearly to 0.01
  double radius0 = -1;        // decays linearly to 0; -1 means max(xdim, ydim) / 2
  std::uint64_t seed = 1;
};

/// Online self-organizing map with a Gaussian neighbourhood on grid distance
/// (radius 0 updates only the best-matching unit).
Partition som(MatrixD M, const SomOptions &opt);

enum class ClusterOn { genes, samples };
ClusterOn parse_cluster_on(const std::string &s);

struct ClusterInput {
  MatrixD data;  // item x feature
  std::vector<std::string> labels;
  std::vector<std::string> warnings;
};

/// Picks the nDE genes with the smallest adjusted p (re-adjusting raw p
/// with `adjust`), or every gene with adjusted p <= pCut when nDE = 0, and
/// lays out their W rows for clustering genes or samples.
ClusterInput select_de_matrix(const DEResult &res, stats::PAdjust adjust, std::size_t nDE, double pCut,
                              ClusterOn on, std::size_t family = 0);

}  // namespace arraykit
