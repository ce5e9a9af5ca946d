#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arraykit/dataset.hpp"
#include "arraykit/matrix.hpp"
#include "arraykit/normalize.hpp"
#include "arraykit/stats.hpp"

namespace arraykit {

/// Gene-wise test results. Every matrix has one row per tested gene; the
/// statistic families are the columns of `statistic`, `rawP` and `adjP`
/// (one family for two-group tests and F tests, one per contrast otherwise).
struct DEResult {
  std::vector<std::string> geneIds;
  std::vector<std::size_t> sourceRows;  // row of each gene in the input dataset
  LabelTable genes;                     // gene-map rows of the tested genes
  std::string sampleLabelId;
  std::vector<std::string> levels;      // condition names, lexicographic
  std::vector<std::string> families;
  MatrixD statistic, rawP, adjP;        // gene x family
  MatrixD groupMeans;                   // gene x level
  std::vector<double> foldChange;       // log2 units
  stats::TestMethod method = stats::TestMethod::welchT;
  stats::PAdjust adjust = stats::PAdjust::BH;
  MatrixD W;                            // gene x sample, tested samples only
  std::vector<std::string> sampleNames;
  std::vector<int> sampleLevel;         // index into `levels`
  std::vector<std::string> skipped;     // one report line per skipped gene

  std::size_t size() const { return geneIds.size(); }
  bool operator==(const DEResult &o) const;
};

enum class TwoGroupTest { t, wilcox, bootT };
TwoGroupTest parse_two_group_test(const std::string &s);
std::string to_string(TwoGroupTest t);

struct TwoGroupOptions {
  std::string sampleLabel;
  TwoGroupTest test = TwoGroupTest::t;
  bool pooled = false;       // equal-variance t instead of Welch
  bool exact = false;        // force the exact Wilcoxon null when there are no ties
  stats::PAdjust adjust = stats::PAdjust::BH;
  int bootB = 999;
  std::uint64_t seed = 1;
  std::string geneIdLabel;
};

/// foldChange and the statistic are oriented as level 2 minus level 1.
DEResult de_two_groups(const NormalizedDataset &ds, const TwoGroupOptions &opt);

enum class ContrastKind { pairwise, baseline };
ContrastKind parse_contrast_kind(const std::string &s);
std::string to_string(ContrastKind c);

struct AnovaDesign {
  MatrixD design;                            // sample x coefficient
  MatrixD contrasts;                         // coefficient x contrast
  std::vector<std::string> factorLabelIds;
  std::vector<std::vector<std::string>> levelNames;  // per factor, lexicographic
  std::vector<std::string> coefficientNames;
  std::vector<std::string> contrastNames;
  std::vector<std::size_t> samples;          // dataset columns in the design
};

/// Treatment coding: intercept plus one indicator per non-baseline level of
/// each factor, the first lexicographic level being the baseline. Samples
/// with a missing value in any factor are left out.
AnovaDesign design_anova(const NormalizedDataset &ds, const std::vector<std::string> &factors,
                         ContrastKind contrasts = ContrastKind::pairwise);

struct AnovaOptions {
  bool returnF = false;
  stats::PAdjust adjust = stats::PAdjust::BH;
  std::string geneIdLabel;
};

/// Gene-wise least squares on the samples with finite W. The F statistic
/// tests all non-intercept coefficients; otherwise one t per contrast.
DEResult fit_anova(const NormalizedDataset &ds, const AnovaDesign &design, const AnovaOptions &opt);

enum class TableFormat { csv, html };
TableFormat parse_table_format(const std::string &s);

/// Rows sorted by adjusted p, raw p, then gene id (smallest over families
/// when there are several). topN = 0 keeps every row.
std::string de_table(const DEResult &res, TableFormat format, std::size_t topN = 0);

struct VolcanoPoint {
  std::string geneId;
  double x;  // fold change
  double y;  // -log10 raw p
};

/// One point per tested gene for statistic family `family`. p = 0 maps to
/// the largest finite -log10 p in the set plus 1.
std::vector<VolcanoPoint> volcano_data(const DEResult &res, std::size_t family = 0);

}  // namespace arraykit
