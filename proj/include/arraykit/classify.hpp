#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arraykit/diffexpr.hpp"
#include "arraykit/matrix.hpp"
#include "arraykit/normalize.hpp"

namespace arraykit {

enum class ClassMethod { lda, knn };
ClassMethod parse_class_method(const std::string &s);
std::string to_string(ClassMethod m);

struct LoocvResult {
  double accuracy = 0;
  std::vector<int> predictions;  // predicted class per held-out sample
};

/// Fisher discriminant, refitted without each sample in turn. Classes are 0
/// and 1; the pooled within-class covariance gets a ridge of
/// 1e-6 * trace / dim and the threshold is the midpoint of the projected
/// class means (ties predict class 0).
LoocvResult lda_loocv(const MatrixD &X, const std::vector<int> &labels);

/// Euclidean k-nearest-neighbour vote. Neighbours are ordered by distance
/// then sample index; tied votes go to the class with the smaller summed
/// neighbour distance, then to class 0.
LoocvResult knn_loocv(const MatrixD &X, const std::vector<int> &labels, int k);

struct GeneSubset {
  std::vector<std::size_t> rows;  // dataset rows, ascending
  std::vector<std::string> geneIds;
  double accuracy = 0;
  std::vector<int> predictions;
  bool operator==(const GeneSubset &) const = default;
};

struct ClassifierResult {
  std::vector<GeneSubset> subsets;  // ranked
  ClassMethod method = ClassMethod::lda;
  int k = 0;
  std::uint64_t searchSpaceSize = 0;
  std::string sampleLabelId;
  std::vector<std::string> levels;
  std::vector<std::string> sampleNames;
  std::vector<int> sampleClass;
  bool heuristic = false;                  // search-and-choose
  std::vector<std::string> pool;           // gene ids actually searched
  std::vector<std::string> excluded;       // pool genes dropped for missing values
  bool operator==(const ClassifierResult &) const = default;
};

struct ClassifierOptions {
  std::string sampleLabel;
  ClassMethod method = ClassMethod::lda;
  int k = 3;
  int nGenes = 3;
  std::size_t topK = 50;
  std::string geneIdLabel;
};

/// Number of k-subsets of n items; throws when it does not fit in 64 bits.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Scores every nGenes-subset of `poolRows` by LOOCV accuracy and keeps the
/// best topK, ranked by accuracy, then smaller summed row index, then the
/// row tuple. Pool genes with a missing value in a labeled sample are left out.
ClassifierResult exhaustive_search(const NormalizedDataset &ds, const ClassifierOptions &opt,
                                   const std::vector<std::size_t> &poolRows);

enum class Prerank { cv, de };
Prerank parse_prerank(const std::string &s);

/// Ranks single genes (by 1-gene LOOCV accuracy, ties by |Welch t| and row,
/// or by |Welch t| alone), keeps the best poolSize and searches exhaustively
/// among them.
ClassifierResult search_and_choose(const NormalizedDataset &ds, const ClassifierOptions &opt,
                                   const std::vector<std::size_t> &poolRows, std::size_t poolSize,
                                   Prerank prerank = Prerank::cv);

std::string class_table(const ClassifierResult &res, TableFormat format);

}  // namespace arraykit
