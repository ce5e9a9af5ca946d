#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arraykit/dataset.hpp"
#include "arraykit/ingest.hpp"
#include "arraykit/matrix.hpp"

namespace arraykit {

/// Log-ratio (W = log2 I - log2 C, interest over reference) and mean
/// log-intensity (A) per spot and chip, in log2 units. NaN marks missing.
struct NormalizedDataset {
  MatrixD W, A;
  std::optional<MatrixD> SW, Wlo, Whi;  // repeated-loess uncertainty
  MatrixB useSpot;
  std::vector<char> badSpot;
  std::optional<GridGeometry> grid;     // dropped once spots are summarized
  Annotations annot;
  std::vector<std::string> log;         // one record per processing step

  std::size_t rows() const { return W.rows(); }
  std::size_t cols() const { return W.cols(); }

  bool operator==(const NormalizedDataset &o) const;
};

enum class BkgMethod { none, subtract, minimumPositive };
BkgMethod parse_bkg(const std::string &s);
std::string to_string(BkgMethod m);

struct CorrectedChannels {
  MatrixD ch1, ch2;  // NaN where the corrected intensity is not positive
};

CorrectedChannels background_correct(const RawDataset &raw, BkgMethod method);

NormalizedDataset compute_wa(const RawDataset &raw, BkgMethod method);

enum class LoessScope { global, printTip };
LoessScope parse_loess_scope(const std::string &s);
std::string to_string(LoessScope s);

struct LoessOptions {
  double span = 0.4;
  LoessScope scope = LoessScope::global;
  int iterations = 2;
};

/// Fits W on A over the usable cells of every chip (or print-tip block) and
/// subtracts the fitted curve from all spots of that unit.
NormalizedDataset normalize_loess(NormalizedDataset ds, const LoessOptions &opt);

enum class MadScope { printTipMAD, globalMAD };
MadScope parse_mad_scope(const std::string &s);
std::string to_string(MadScope s);

/// Median absolute deviation (consistency constant 1.4826) of the finite values.
double mad(std::vector<double> values);

/// Divides each unit's W by (unit MAD / geometric mean of the unit MADs), so
/// the product of all scale factors is 1.
NormalizedDataset normalize_scale_mad(NormalizedDataset ds, MadScope scope);

struct RepeatedLoessOptions {
  LoessOptions loess;
  int repeats = 30;
  double fraction = 0.7;
  double alpha = 0.05;
  std::uint64_t seed = 1;
};

/// Refits the loess curve `repeats` times on random subsets of the usable
/// spots; W becomes the mean normalized value, SW its standard deviation
/// and [Wlo, Whi] the normal-quantile interval.
NormalizedDataset normalize_repeated_loess(NormalizedDataset ds, const RepeatedLoessOptions &opt);

enum class Summary { mean, median, none };
Summary parse_summary(const std::string &s);
std::string to_string(Summary s);

struct SummarizeOptions {
  std::string geneLabel;
  std::string sampleLabel;
  Summary spots = Summary::median;
  Summary samples = Summary::mean;
  bool keepEmpty = false;
  bool rmBad = false;
};

/// Collapses replicate spots (same gene label) and replicate chips (same
/// sample label). Missing values are skipped; SW and the interval are dropped.
NormalizedDataset summarize_replicates(const NormalizedDataset &ds, const SummarizeOptions &opt);

}  // namespace arraykit
