#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace arraykit {

/// Array layout: a gridR x gridC meta-grid of print-tip blocks, each block
/// printTipR x printTipC spots. Spots are numbered block-major (blocks in
/// row-major meta-grid order), row-major within a block.
struct GridGeometry {
  int gridR = 1;
  int gridC = 1;
  int printTipR = 1;
  int printTipC = 1;

  struct Position {
    int gridRow, gridCol, tipRow, tipCol;
    bool operator==(const Position &) const = default;
  };

  std::size_t spots() const { return std::size_t(gridR) * gridC * printTipR * printTipC; }
  std::size_t blocks() const { return std::size_t(gridR) * gridC; }
  std::size_t spots_per_block() const { return std::size_t(printTipR) * printTipC; }

  Position position(std::size_t spot) const;
  std::size_t index(const Position &p) const;
  std::size_t block_of(std::size_t spot) const { return spot / spots_per_block(); }

  /// Row/column of the spot on the physical chip image
  /// (gridR*printTipR rows by gridC*printTipC columns).
  std::size_t layout_row(std::size_t spot) const;
  std::size_t layout_col(std::size_t spot) const;

  bool operator==(const GridGeometry &) const = default;
};

/// Named text columns, one row per spot (gene map) or per chip (sample sheet).
struct LabelTable {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;

  std::size_t size() const { return rows.size(); }
  std::optional<std::size_t> index_of(const std::string &name) const;
  /// Throws DataError for an undeclared label.
  std::size_t require(const std::string &name) const;
  std::vector<std::string> column(const std::string &name) const;
  const std::string &at(std::size_t row, const std::string &name) const;

  bool operator==(const LabelTable &) const = default;
};

enum class Channel { ch1, ch2 };

struct SampleSheet {
  std::vector<std::string> fileNames;
  std::vector<Channel> interest;
  LabelTable labels;

  std::size_t size() const { return fileNames.size(); }
  bool operator==(const SampleSheet &) const = default;
};

struct GeneGroup {
  std::string name;
  std::string labelId;
  std::vector<std::string> members;

  bool operator==(const GeneGroup &) const = default;
};

/// Undirected edges, stored with each pair ordered (a < b) and deduplicated.
struct GeneNetwork {
  std::string name;
  std::string labelId;
  std::vector<std::pair<std::string, std::string>> edges;

  bool operator==(const GeneNetwork &) const = default;
};

/// Outcome of mapping labels onto rows of a gene map.
struct Resolution {
  std::vector<std::size_t> rows;         // ascending, unique
  std::vector<std::string> unresolved;   // members with no matching row
};

Resolution resolve_members(const LabelTable &genes, const std::string &labelId,
                           const std::vector<std::string> &members);

/// Annotation state shared by raw and normalized datasets.
struct Annotations {
  std::string datasetId;
  LabelTable genes;
  SampleSheet samples;
  std::vector<GeneGroup> groups;
  std::vector<GeneNetwork> networks;
  std::vector<std::string> notes;

  const GeneGroup &group(const std::string &nameOrIndex) const;
  const GeneNetwork &network(const std::string &nameOrIndex) const;

  bool operator==(const Annotations &) const = default;
};

/// Levels of a sample label. Empty and "NA" values mark a sample as
/// unlabeled (level -1).
struct LevelIndex {
  std::vector<std::string> levels;  // sorted lexicographically
  std::vector<int> levelOf;         // per sample
  std::vector<std::size_t> members(int level) const;
};

LevelIndex level_index(const SampleSheet &samples, const std::string &labelId);

/// Row identifiers for result tables: the values of `labelId`, or of the
/// first gene-map column when `labelId` is empty, or "spotN".
std::vector<std::string> gene_ids(const LabelTable &genes, const std::string &labelId);

/// Adds a group; duplicate names and empty member lists are errors.
/// Unresolved members are kept and listed in `notes`.
void add_gene_group(Annotations &a, const std::string &name, std::vector<std::string> members,
                    const std::string &labelId);
void add_network(Annotations &a, const std::string &name,
                 const std::vector<std::pair<std::string, std::string>> &edges,
                 const std::string &labelId);

}  // namespace arraykit
