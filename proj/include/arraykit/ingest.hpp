#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arraykit/dataset.hpp"
#include "arraykit/matrix.hpp"

namespace arraykit {

/// Declarative load configuration (key = value lines).
struct LoadConfig {
  std::string dataDir;
  std::optional<std::string> ext;
  std::string sampleFile;
  std::string datasetId;
  std::string geneMap;
  /// ch1 foreground, ch1 background, ch2 foreground, ch2 background, flags.
  std::array<std::string, 5> headers;
  int skip = 0;
  char sep = ',';
  GridGeometry grid;

  bool operator==(const LoadConfig &) const = default;
};

/// Parses the config dialect: `key = value` where a value is a quoted
/// string, an integer, NULL, or a `c('a', "b")` vector. `#` starts a comment.
/// The legacy key `dridC` is accepted for `gridC`.
LoadConfig parse_config(std::string_view text);

/// Per-spot raw intensities for both channels across chips.
struct RawDataset {
  MatrixD ch1Fg, ch1Bg, ch2Fg, ch2Bg;      // spot x chip
  Matrix<std::int64_t> flags;              // spot x chip
  MatrixB useSpot;                         // spot x chip, normalization inclusion
  std::vector<char> badSpot;               // per spot
  GridGeometry grid;
  Annotations annot;

  std::size_t spots() const { return ch1Fg.rows(); }
  std::size_t chips() const { return ch1Fg.cols(); }

  bool operator==(const RawDataset &o) const;
};

/// Reads the sample sheet, gene map and every quantification table named in
/// `cfg`. Relative `dataDir` is resolved against `baseDir`; the other files
/// live in `dataDir`. Every table is validated before any matrix is built;
/// failures name the file, line and column.
RawDataset load_dataset(const LoadConfig &cfg, const std::filesystem::path &baseDir = {});

/// One label per line, `#` comments and blank lines ignored.
std::vector<std::string> read_group_file(const std::string &path);
/// Two labels per line (whitespace, tab or comma separated).
std::vector<std::pair<std::string, std::string>> read_network_file(const std::string &path);

RawDataset add_gene_groups(RawDataset ds, const std::string &name, std::vector<std::string> members,
                           const std::string &labelId);
RawDataset add_network(RawDataset ds, const std::string &name,
                       const std::vector<std::pair<std::string, std::string>> &edges,
                       const std::string &labelId);

struct SpotSelection {
  double sigNoise = 0.0;
  std::vector<std::int64_t> rmFlags;
  std::vector<std::string> removeNames;
  std::string labelId;
};

/// Recomputes useSpot per chip: both channels' fg/bg >= sigNoise (bg = 0
/// counts as an infinite ratio), flag not in rmFlags, label not in
/// removeNames, spot not bad.
RawDataset select_spots(RawDataset ds, const SpotSelection &sel);

/// Marks spots bad; they are dropped from useSpot immediately and by every
/// later selection.
RawDataset mark_bad_spots(RawDataset ds, const std::vector<std::size_t> &spots);

}  // namespace arraykit
