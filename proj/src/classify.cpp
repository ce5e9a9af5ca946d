#include "arraykit/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

ClassMethod parse_class_method(const std::string &s) {
  if (s == "lda") return ClassMethod::lda;
  if (s == "knn") return ClassMethod::knn;
  throw UsageError("unknown classifier '" + s + "' (lda, knn)");
}

std::string to_string(ClassMethod m) { return m == ClassMethod::lda ? "lda" : "knn"; }

Prerank parse_prerank(const std::string &s) {
  if (s == "cv") return Prerank::cv;
  if (s == "de") return Prerank::de;
  throw UsageError("unknown pre-ranking '" + s + "' (cv, de)");
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > UINT64_MAX) throw DataError("binomial coefficient overflows 64 bits");
  }
  return std::uint64_t(r);
}

namespace {

void check_labels(const MatrixD &X, const std::vector<int> &labels) {
  if (labels.size() != X.rows()) throw DataError("classifier: one label per sample required");
  for (int l : labels)
    if (l != 0 && l != 1) throw DataError("classifier: labels must be 0 or 1");
}

// Solves A x = b in place by Gaussian elimination with partial pivoting.
bool solve(std::vector<double> &A, std::vector<double> &b, std::size_t d) {
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r)
      if (std::abs(A[r * d + c]) > std::abs(A[piv * d + c])) piv = r;
    if (A[piv * d + c] == 0) return false;
    if (piv != c) {
      for (std::size_t k = 0; k < d; ++k) std::swap(A[c * d + k], A[piv * d + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < d; ++r) {
      const double f = A[r * d + c] / A[c * d + c];
      if (f == 0) continue;
      for (std::size_t k = c; k < d; ++k) A[r * d + k] -= f * A[c * d + k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = d; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < d; ++k) s -= A[c * d + k] * b[k];
    b[c] = s / A[c * d + c];
  }
  return true;
}

}  // namespace

LoocvResult lda_loocv(const MatrixD &X, const std::vector<int> &labels) {
  check_labels(X, labels);
  const std::size_t n = X.rows(), d = X.cols();
  LoocvResult res;
  res.predictions.resize(n);
  std::vector<double> mu[2] = {std::vector<double>(d), std::vector<double>(d)};
  std::vector<double> A(d * d), w(d), diff(d);
  std::size_t correct = 0;
  for (std::size_t out = 0; out < n; ++out) {
    std::size_t cnt[2] = {0, 0};
    std::fill(mu[0].begin(), mu[0].end(), 0.0);
    std::fill(mu[1].begin(), mu[1].end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == out) continue;
      ++cnt[labels[i]];
      for (std::size_t f = 0; f < d; ++f) mu[labels[i]][f] += X(i, f);
    }
    if (cnt[0] == 0 || cnt[1] == 0) throw DataError("LDA: a training fold has an empty class");
    for (int c = 0; c < 2; ++c)
      for (auto &v : mu[c]) v /= double(cnt[c]);
    std::fill(A.begin(), A.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == out) continue;
      for (std::size_t a = 0; a < d; ++a) {
        const double da = X(i, a) - mu[labels[i]][a];
        for (std::size_t b = a; b < d; ++b) A[a * d + b] += da * (X(i, b) - mu[labels[i]][b]);
      }
    }
    const double denom = double(std::max<std::size_t>(1, cnt[0] + cnt[1] - 2));
    double trace = 0;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) {
        A[a * d + b] /= denom;
        A[b * d + a] = A[a * d + b];
      }
      trace += A[a * d + a];
    }
    const double ridge = trace > 0 ? 1e-6 * trace / double(d) : 1.0;
    for (std::size_t a = 0; a < d; ++a) A[a * d + a] += ridge;
    for (std::size_t f = 0; f < d; ++f) w[f] = diff[f] = mu[0][f] - mu[1][f];
    if (!solve(A, w, d)) throw DataError("LDA: singular covariance");
    double score = 0;
    for (std::size_t f = 0; f < d; ++f) score += w[f] * (X(out, f) - (mu[0][f] + mu[1][f]) / 2);
    const int pred = score >= 0 ? 0 : 1;
    res.predictions[out] = pred;
    if (pred == labels[out]) ++correct;
  }
  res.accuracy = double(correct) / double(n);
  return res;
}

LoocvResult knn_loocv(const MatrixD &X, const std::vector<int> &labels, int k) {
  check_labels(X, labels);
  const std::size_t n = X.rows();
  if (k < 1 || std::size_t(k) >= n) throw DataError("kNN: k must be in [1, samples - 1]");
  MatrixD D(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0;
      for (std::size_t f = 0; f < X.cols(); ++f) {
        const double t = X(i, f) - X(j, f);
        s += t * t;
      }
      D(i, j) = D(j, i) = std::sqrt(s);
    }
  LoocvResult res;
  res.predictions.resize(n);
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t out = 0; out < n; ++out) {
    idx.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (i != out) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return D(out, a) < D(out, b); });
    int votes[2] = {0, 0};
    double dist[2] = {0, 0};
    for (int t = 0; t < k; ++t) {
      ++votes[labels[idx[t]]];
      dist[labels[idx[t]]] += D(out, idx[t]);
    }
    int pred;
    if (votes[0] != votes[1])
      pred = votes[0] > votes[1] ? 0 : 1;
    else
      pred = dist[1] < dist[0] ? 1 : 0;
    res.predictions[out] = pred;
    if (pred == labels[out]) ++correct;
  }
  res.accuracy = double(correct) / double(n);
  return res;
}

namespace {

struct Problem {
  std::vector<std::size_t> samples;  // labeled dataset columns
  std::vector<int> labels;
  std::vector<std::string> levels;
  std::vector<std::size_t> pool;     // usable rows, ascending
  std::vector<std::string> excluded;
  std::vector<std::string> ids;
};

Problem setup(const NormalizedDataset &ds, const ClassifierOptions &opt, const std::vector<std::size_t> &poolRows) {
  if (opt.sampleLabel.empty()) throw UsageError("a sample label is required");
  if (opt.nGenes < 1) throw DataError("subset size must be >= 1");
  Problem pb;
  const auto idx = level_index(ds.annot.samples, opt.sampleLabel);
  if (idx.levels.size() != 2)
    throw DataError("label '" + opt.sampleLabel + "' has " + std::to_string(idx.levels.size()) +
                    " levels; classification needs exactly 2");
  pb.levels = idx.levels;
  for (std::size_t j = 0; j < idx.levelOf.size(); ++j)
    if (idx.levelOf[j] >= 0) {
      pb.samples.push_back(j);
      pb.labels.push_back(idx.levelOf[j]);
    }
  for (int c = 0; c < 2; ++c)
    if (std::count(pb.labels.begin(), pb.labels.end(), c) < 2)
      throw DataError("class '" + idx.levels[std::size_t(c)] + "' has fewer than 2 samples");
  pb.ids = gene_ids(ds.annot.genes, opt.geneIdLabel);
  std::vector<std::size_t> rows = poolRows;
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  for (auto r : rows) {
    if (r >= ds.rows()) throw DataError("pool row out of range");
    bool ok = true;
    for (auto j : pb.samples) ok = ok && std::isfinite(ds.W(r, j));
    if (ok)
      pb.pool.push_back(r);
    else
      pb.excluded.push_back(pb.ids[r]);
  }
  if (pb.pool.size() < std::size_t(opt.nGenes))
    throw DataError("the gene pool has " + std::to_string(pb.pool.size()) + " usable genes, fewer than the subset size " +
                    std::to_string(opt.nGenes));
  return pb;
}

MatrixD subset_matrix(const NormalizedDataset &ds, const Problem &pb, const std::vector<std::size_t> &rows) {
  MatrixD X(pb.samples.size(), rows.size());
  for (std::size_t s = 0; s < pb.samples.size(); ++s)
    for (std::size_t g = 0; g < rows.size(); ++g) X(s, g) = ds.W(rows[g], pb.samples[s]);
  return X;
}

LoocvResult evaluate(const MatrixD &X, const std::vector<int> &labels, const ClassifierOptions &opt) {
  return opt.method == ClassMethod::lda ? lda_loocv(X, labels) : knn_loocv(X, labels, opt.k);
}

struct Scored {
  std::vector<std::size_t> rows;
  double accuracy;
  std::size_t sum;
};

bool better(const Scored &a, const Scored &b) {
  if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
  if (a.sum != b.sum) return a.sum < b.sum;
  return a.rows < b.rows;
}

ClassifierResult search(const NormalizedDataset &ds, const ClassifierOptions &opt, const Problem &pb,
                        const std::vector<std::size_t> &pool) {
  const std::size_t m = pool.size(), r = std::size_t(opt.nGenes);
  ClassifierResult res;
  res.method = opt.method;
  res.k = opt.method == ClassMethod::knn ? opt.k : 0;
  res.searchSpaceSize = binomial(m, r);
  res.sampleLabelId = opt.sampleLabel;
  res.levels = pb.levels;
  for (auto j : pb.samples) res.sampleNames.push_back(ds.annot.samples.fileNames[j]);
  res.sampleClass = pb.labels;
  for (auto row : pool) res.pool.push_back(pb.ids[row]);
  res.excluded = pb.excluded;

  std::vector<Scored> top;
  std::vector<std::size_t> comb(r);
  std::iota(comb.begin(), comb.end(), 0);
  bool more = true;
  constexpr std::size_t kChunk = 1 << 14;
  std::vector<Scored> chunk;
  while (more) {
    chunk.clear();
    while (more && chunk.size() < kChunk) {
      Scored s{{}, 0, 0};
      for (auto c : comb) {
        s.rows.push_back(pool[c]);
        s.sum += pool[c];
      }
      chunk.push_back(std::move(s));
      // next combination in lexicographic order
      std::size_t i = r;
      while (i > 0 && comb[i - 1] == m - r + i - 1) --i;
      if (i == 0) {
        more = false;
      } else {
        ++comb[i - 1];
        for (std::size_t j = i; j < r; ++j) comb[j] = comb[j - 1] + 1;
      }
    }
    parallel_for(chunk.size(), [&](std::size_t c) {
      chunk[c].accuracy = evaluate(subset_matrix(ds, pb, chunk[c].rows), pb.labels, opt).accuracy;
    });
    top.insert(top.end(), chunk.begin(), chunk.end());
    const std::size_t keep = std::min(top.size(), opt.topK == 0 ? top.size() : opt.topK);
    std::partial_sort(top.begin(), top.begin() + std::ptrdiff_t(keep), top.end(), better);
    top.resize(keep);
  }
  for (const auto &s : top) {
    GeneSubset g;
    g.rows = s.rows;
    for (auto row : s.rows) g.geneIds.push_back(pb.ids[row]);
    const auto cv = evaluate(subset_matrix(ds, pb, s.rows), pb.labels, opt);
    g.accuracy = cv.accuracy;
    g.predictions = cv.predictions;
    res.subsets.push_back(std::move(g));
  }
  return res;
}

}  // namespace

ClassifierResult exhaustive_search(const NormalizedDataset &ds, const ClassifierOptions &opt,
                                   const std::vector<std::size_t> &poolRows) {
  const Problem pb = setup(ds, opt, poolRows);
  return search(ds, opt, pb, pb.pool);
}

ClassifierResult search_and_choose(const NormalizedDataset &ds, const ClassifierOptions &opt,
                                   const std::vector<std::size_t> &poolRows, std::size_t poolSize, Prerank prerank) {
  const Problem pb = setup(ds, opt, poolRows);
  if (poolSize < std::size_t(opt.nGenes)) throw DataError("search-and-choose pool size is smaller than the subset size");
  const std::size_t m = pb.pool.size();
  std::vector<double> acc(m, 0), absT(m, 0);
  parallel_for(m, [&](std::size_t g) {
    const auto X = subset_matrix(ds, pb, {pb.pool[g]});
    std::vector<double> a, b;
    for (std::size_t s = 0; s < X.rows(); ++s) (pb.labels[s] == 0 ? a : b).push_back(X(s, 0));
    try {
      absT[g] = std::abs(stats::welch_t(b, a).statistic);
    } catch (const DataError &) {
      absT[g] = 0;
    }
    if (prerank == Prerank::cv) acc[g] = evaluate(X, pb.labels, opt).accuracy;
  });
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (acc[a] != acc[b]) return acc[a] > acc[b];
    if (absT[a] != absT[b]) return absT[a] > absT[b];
    return a < b;
  });
  order.resize(std::min(poolSize, m));
  std::vector<std::size_t> reduced;
  for (auto g : order) reduced.push_back(pb.pool[g]);
  std::sort(reduced.begin(), reduced.end());
  auto res = search(ds, opt, pb, reduced);
  res.heuristic = true;
  return res;
}

std::string class_table(const ClassifierResult &res, TableFormat format) {
  std::vector<std::string> header = {"rank"};
  const std::size_t width = res.subsets.empty() ? 0 : res.subsets.front().geneIds.size();
  for (std::size_t g = 0; g < width; ++g) header.push_back("gene" + std::to_string(g + 1));
  header.push_back("cvAccuracy");
  header.push_back("method");
  std::vector<std::vector<std::string>> body;
  const std::string method = res.method == ClassMethod::knn ? "knn(k=" + std::to_string(res.k) + ")" : "lda";
  for (std::size_t i = 0; i < res.subsets.size(); ++i) {
    std::vector<std::string> row = {std::to_string(i + 1)};
    for (const auto &id : res.subsets[i].geneIds) row.push_back(id);
    row.push_back(text::format_double(res.subsets[i].accuracy));
    row.push_back(method);
    body.push_back(std::move(row));
  }
  if (format == TableFormat::csv) return text::csv_document(header, body);
  return text::html_document("Classifiers of " + std::to_string(width) + " genes (" +
                                 std::to_string(res.searchSpaceSize) + " evaluated" +
                                 (res.heuristic ? ", search and choose" : "") + "), label " + res.sampleLabelId,
                             header, body);
}

}  // namespace arraykit
