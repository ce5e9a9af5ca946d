#include "arraykit/diffexpr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/rng.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

bool DEResult::operator==(const DEResult &o) const {
  auto same = [](const std::vector<double> &a, const std::vector<double> &b) {
    return bitwise_equal(MatrixD(a.size(), 1, a), MatrixD(b.size(), 1, b));
  };
  return geneIds == o.geneIds && sourceRows == o.sourceRows && genes == o.genes &&
         sampleLabelId == o.sampleLabelId && levels == o.levels && families == o.families &&
         bitwise_equal(statistic, o.statistic) && bitwise_equal(rawP, o.rawP) && bitwise_equal(adjP, o.adjP) &&
         bitwise_equal(groupMeans, o.groupMeans) && same(foldChange, o.foldChange) && method == o.method &&
         adjust == o.adjust && bitwise_equal(W, o.W) && sampleNames == o.sampleNames &&
         sampleLevel == o.sampleLevel && skipped == o.skipped;
}

TwoGroupTest parse_two_group_test(const std::string &s) {
  if (s == "t") return TwoGroupTest::t;
  if (s == "wilcox") return TwoGroupTest::wilcox;
  if (s == "bootT") return TwoGroupTest::bootT;
  throw UsageError("unknown test '" + s + "' (t, wilcox, bootT)");
}

std::string to_string(TwoGroupTest t) {
  switch (t) {
    case TwoGroupTest::t: return "t";
    case TwoGroupTest::wilcox: return "wilcox";
    case TwoGroupTest::bootT: return "bootT";
  }
  return "?";
}

ContrastKind parse_contrast_kind(const std::string &s) {
  if (s == "pairwise") return ContrastKind::pairwise;
  if (s == "baseline") return ContrastKind::baseline;
  throw UsageError("unknown contrast set '" + s + "' (pairwise, baseline)");
}

std::string to_string(ContrastKind c) { return c == ContrastKind::pairwise ? "pairwise" : "baseline"; }

TableFormat parse_table_format(const std::string &s) {
  if (s == "csv") return TableFormat::csv;
  if (s == "html") return TableFormat::html;
  throw UsageError("unknown table format '" + s + "' (csv, html)");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fills the columns shared by every analysis; rows are the genes in `kept`.
DEResult make_result(const NormalizedDataset &ds, const std::vector<std::size_t> &kept,
                     const std::vector<std::string> &ids, const std::vector<std::size_t> &samples) {
  DEResult res;
  for (auto i : kept) {
    res.geneIds.push_back(ids[i]);
    res.sourceRows.push_back(i);
    res.genes.rows.push_back(ds.annot.genes.rows[i]);
  }
  res.genes.names = ds.annot.genes.names;
  res.W = MatrixD(kept.size(), samples.size());
  for (std::size_t g = 0; g < kept.size(); ++g)
    for (std::size_t s = 0; s < samples.size(); ++s) res.W(g, s) = ds.W(kept[g], samples[s]);
  for (auto j : samples) res.sampleNames.push_back(ds.annot.samples.fileNames[j]);
  return res;
}

void adjust_families(DEResult &res) {
  res.adjP = MatrixD(res.rawP.rows(), res.rawP.cols());
  for (std::size_t f = 0; f < res.rawP.cols(); ++f) res.adjP.set_col(f, stats::adjust_pvalues(res.rawP.col(f), res.adjust));
}

}  // namespace

DEResult de_two_groups(const NormalizedDataset &ds, const TwoGroupOptions &opt) {
  if (opt.sampleLabel.empty()) throw UsageError("a sample label is required");
  const auto idx = level_index(ds.annot.samples, opt.sampleLabel);
  if (idx.levels.size() != 2)
    throw DataError("label '" + opt.sampleLabel + "' has " + std::to_string(idx.levels.size()) +
                    " levels; a two-group test needs exactly 2 (levels: " + text::join(idx.levels, ", ") + ")");
  if (opt.test == TwoGroupTest::bootT && opt.bootB < 100) throw DataError("bootT needs at least 100 resamples");
  const auto ids = gene_ids(ds.annot.genes, opt.geneIdLabel);
  const auto g1 = idx.members(0), g2 = idx.members(1);

  struct Row {
    stats::TestResult r;
    double m1 = kNaN, m2 = kNaN;
    std::string skip;
  };
  std::vector<Row> rows(ds.rows());
  parallel_for(ds.rows(), [&](std::size_t i) {
    std::vector<double> x, y;  // level 2, level 1
    for (auto j : g2)
      if (std::isfinite(ds.W(i, j))) x.push_back(ds.W(i, j));
    for (auto j : g1)
      if (std::isfinite(ds.W(i, j))) y.push_back(ds.W(i, j));
    Row &row = rows[i];
    if (x.size() < 2 || y.size() < 2) {
      row.skip = ids[i] + ": fewer than 2 finite values in a group (" + idx.levels[0] + ": " +
                 std::to_string(y.size()) + ", " + idx.levels[1] + ": " + std::to_string(x.size()) + ")";
      return;
    }
    try {
      switch (opt.test) {
        case TwoGroupTest::t: row.r = opt.pooled ? stats::pooled_t(x, y) : stats::welch_t(x, y); break;
        case TwoGroupTest::wilcox: row.r = stats::wilcoxon_rank_sum(x, y, opt.exact); break;
        case TwoGroupTest::bootT: row.r = stats::bootstrap_t(x, y, opt.bootB, stream_seed(opt.seed, {i})); break;
      }
    } catch (const DataError &e) {
      row.skip = ids[i] + ": " + e.what();
      return;
    }
    row.m1 = stats::mean(y);
    row.m2 = stats::mean(x);
  });

  std::vector<std::size_t> kept;
  std::vector<std::string> skipped;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].skip.empty())
      kept.push_back(i);
    else
      skipped.push_back(rows[i].skip);
  }
  std::vector<std::size_t> samples = g1;
  samples.insert(samples.end(), g2.begin(), g2.end());
  std::sort(samples.begin(), samples.end());
  DEResult res = make_result(ds, kept, ids, samples);
  for (auto j : samples) res.sampleLevel.push_back(idx.levelOf[j]);
  res.skipped = std::move(skipped);
  res.sampleLabelId = opt.sampleLabel;
  res.levels = idx.levels;
  res.families = {idx.levels[1] + "-" + idx.levels[0]};
  res.adjust = opt.adjust;
  res.statistic = MatrixD(kept.size(), 1);
  res.rawP = MatrixD(kept.size(), 1);
  res.groupMeans = MatrixD(kept.size(), 2);
  res.foldChange.resize(kept.size());
  res.method = kept.empty() ? stats::TestMethod::welchT : rows[kept.front()].r.method;
  for (std::size_t g = 0; g < kept.size(); ++g) {
    const Row &row = rows[kept[g]];
    res.statistic(g, 0) = row.r.statistic;
    res.rawP(g, 0) = row.r.pValue;
    res.groupMeans(g, 0) = row.m1;
    res.groupMeans(g, 1) = row.m2;
    res.foldChange[g] = row.m2 - row.m1;
  }
  adjust_families(res);
  return res;
}

AnovaDesign design_anova(const NormalizedDataset &ds, const std::vector<std::string> &factors, ContrastKind kind) {
  if (factors.empty()) throw UsageError("at least one factor label is required");
  AnovaDesign d;
  d.factorLabelIds = factors;
  std::vector<LevelIndex> idx;
  for (const auto &f : factors) {
    idx.push_back(level_index(ds.annot.samples, f));
    if (idx.back().levels.size() < 2)
      throw DataError("factor '" + f + "' has fewer than 2 levels");
    d.levelNames.push_back(idx.back().levels);
  }
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    bool ok = true;
    for (const auto &x : idx) ok = ok && x.levelOf[j] >= 0;
    if (ok) d.samples.push_back(j);
  }
  // coefficient layout: intercept, then levels 1.. of each factor
  d.coefficientNames = {"(Intercept)"};
  std::vector<std::size_t> offset;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    offset.push_back(d.coefficientNames.size());
    for (std::size_t l = 1; l < d.levelNames[f].size(); ++l)
      d.coefficientNames.push_back(factors.size() == 1 ? d.levelNames[f][l] : factors[f] + ":" + d.levelNames[f][l]);
  }
  const std::size_t p = d.coefficientNames.size();
  d.design = MatrixD(d.samples.size(), p, 0.0);
  for (std::size_t s = 0; s < d.samples.size(); ++s) {
    d.design(s, 0) = 1;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      const int l = idx[f].levelOf[d.samples[s]];
      if (l > 0) d.design(s, offset[f] + std::size_t(l) - 1) = 1;
    }
  }
  for (std::size_t f = 0; f < factors.size(); ++f)
    for (std::size_t l = 0; l < d.levelNames[f].size(); ++l)
      if (idx[f].members(int(l)).empty()) throw DataError("factor '" + factors[f] + "' level has no samples");

  Eigen::MatrixXd X(d.design.rows(), p);
  for (std::size_t s = 0; s < d.design.rows(); ++s)
    for (std::size_t c = 0; c < p; ++c) X(Eigen::Index(s), Eigen::Index(c)) = d.design(s, c);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (std::size_t(qr.rank()) < p) throw DataError("rank-deficient design (confounded factors)");
  if (d.samples.size() <= p) throw DataError("zero residual degrees of freedom in the design");

  // contrasts between level effects; the baseline level's effect is 0
  std::vector<std::vector<double>> cols;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const auto &lv = d.levelNames[f];
    auto effect = [&](std::size_t l, double sign, std::vector<double> &c) {
      if (l > 0) c[offset[f] + l - 1] += sign;
    };
    const std::string prefix = factors.size() == 1 ? "" : factors[f] + ":";
    for (std::size_t a = 0; a < lv.size(); ++a) {
      for (std::size_t b = a + 1; b < lv.size(); ++b) {
        if (kind == ContrastKind::baseline && a != 0) continue;
        std::vector<double> c(p, 0.0);
        effect(b, 1, c);
        effect(a, -1, c);
        cols.push_back(std::move(c));
        d.contrastNames.push_back(prefix + lv[b] + "-" + lv[a]);
      }
    }
  }
  d.contrasts = MatrixD(p, cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) d.contrasts.set_col(k, cols[k]);
  return d;
}

DEResult fit_anova(const NormalizedDataset &ds, const AnovaDesign &d, const AnovaOptions &opt) {
  const std::size_t n = d.samples.size(), p = d.design.cols();
  if (n <= p) throw DataError("zero residual degrees of freedom");
  const auto ids = gene_ids(ds.annot.genes, opt.geneIdLabel);
  const std::size_t nFam = opt.returnF ? 1 : d.contrasts.cols();
  const auto firstFactor = level_index(ds.annot.samples, d.factorLabelIds.front());
  const std::size_t nLevels = d.levelNames.front().size();

  struct Row {
    std::vector<double> stat, pv, means;
    std::string skip;
  };
  std::vector<Row> rows(ds.rows());
  parallel_for(ds.rows(), [&](std::size_t i) {
    Row &row = rows[i];
    std::vector<std::size_t> use;
    for (std::size_t s = 0; s < n; ++s)
      if (std::isfinite(ds.W(i, d.samples[s]))) use.push_back(s);
    Eigen::MatrixXd X(use.size(), p);
    Eigen::VectorXd y(use.size());
    for (std::size_t r = 0; r < use.size(); ++r) {
      for (std::size_t c = 0; c < p; ++c) X(Eigen::Index(r), Eigen::Index(c)) = d.design(use[r], c);
      y(Eigen::Index(r)) = ds.W(i, d.samples[use[r]]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (use.size() <= p || std::size_t(qr.rank()) < p) {
      row.skip = ids[i] + ": too few finite values for the design (" + std::to_string(use.size()) + ")";
      return;
    }
    const Eigen::VectorXd beta = qr.solve(y);
    const double rss = (y - X * beta).squaredNorm();
    const double dfRes = double(use.size() - p);
    const double sigma2 = rss / dfRes;
    const double ybar = y.mean();
    const double rss0 = (y.array() - ybar).matrix().squaredNorm();
    // Treat sums of squares at rounding level of the data as exact zeros.
    const double tiny = 1e-24 * std::max(1.0, y.squaredNorm());
    if (opt.returnF) {
      double F, pv;
      if (rss0 <= tiny) {
        F = 0;
        pv = 1;
      } else if (rss <= tiny) {
        F = std::numeric_limits<double>::infinity();
        pv = 0;
      } else {
        F = std::max(0.0, (rss0 - rss) / double(p - 1)) / sigma2;
        pv = stats::f_sf(F, double(p - 1), dfRes);
      }
      row.stat = {F};
      row.pv = {pv};
    } else {
      const Eigen::MatrixXd xtxInv = (X.transpose() * X).inverse();
      for (std::size_t k = 0; k < d.contrasts.cols(); ++k) {
        Eigen::VectorXd c(p);
        for (std::size_t r = 0; r < p; ++r) c(Eigen::Index(r)) = d.contrasts(r, k);
        const double est = c.dot(beta);
        const double se2 = sigma2 * c.dot(xtxInv * c);
        double t, pv;
        if (se2 <= 0) {
          t = std::abs(est) <= 1e-12 * std::max(1.0, std::abs(ybar)) ? 0.0 : std::copysign(HUGE_VAL, est);
          pv = t == 0 ? 1.0 : 0.0;
        } else {
          t = est / std::sqrt(se2);
          pv = stats::t_two_sided(t, dfRes);
        }
        row.stat.push_back(t);
        row.pv.push_back(pv);
      }
    }
    row.means.assign(nLevels, kNaN);
    for (std::size_t l = 0; l < nLevels; ++l) {
      std::vector<double> v;
      for (auto s : use)
        if (firstFactor.levelOf[d.samples[s]] == int(l)) v.push_back(ds.W(i, d.samples[s]));
      if (!v.empty()) row.means[l] = stats::mean(v);
    }
  });

  std::vector<std::size_t> kept;
  std::vector<std::string> skipped;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].skip.empty())
      kept.push_back(i);
    else
      skipped.push_back(rows[i].skip);
  }
  DEResult res = make_result(ds, kept, ids, d.samples);
  for (auto j : d.samples) res.sampleLevel.push_back(firstFactor.levelOf[j]);
  res.skipped = std::move(skipped);
  res.sampleLabelId = text::join(d.factorLabelIds, "+");
  res.levels = d.levelNames.front();
  res.families = opt.returnF ? std::vector<std::string>{"F"} : d.contrastNames;
  res.method = opt.returnF ? stats::TestMethod::anovaF : stats::TestMethod::contrastT;
  res.adjust = opt.adjust;
  res.statistic = MatrixD(kept.size(), nFam);
  res.rawP = MatrixD(kept.size(), nFam);
  res.groupMeans = MatrixD(kept.size(), nLevels);
  res.foldChange.resize(kept.size());
  for (std::size_t g = 0; g < kept.size(); ++g) {
    const Row &row = rows[kept[g]];
    for (std::size_t f = 0; f < nFam; ++f) {
      res.statistic(g, f) = row.stat[f];
      res.rawP(g, f) = row.pv[f];
    }
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (std::size_t l = 0; l < nLevels; ++l) {
      res.groupMeans(g, l) = row.means[l];
      if (std::isfinite(row.means[l])) {
        lo = std::min(lo, row.means[l]);
        hi = std::max(hi, row.means[l]);
      }
    }
    res.foldChange[g] = nLevels == 2 ? row.means[1] - row.means[0] : hi - lo;
  }
  adjust_families(res);
  return res;
}

namespace {

std::vector<std::size_t> table_order(const DEResult &res) {
  const std::size_t n = res.size();
  std::vector<double> bestAdj(n, HUGE_VAL), bestRaw(n, HUGE_VAL);
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t f = 0; f < res.families.size(); ++f) {
      bestAdj[g] = std::min(bestAdj[g], res.adjP(g, f));
      bestRaw[g] = std::min(bestRaw[g], res.rawP(g, f));
    }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (bestAdj[a] != bestAdj[b]) return bestAdj[a] < bestAdj[b];
    if (bestRaw[a] != bestRaw[b]) return bestRaw[a] < bestRaw[b];
    return res.geneIds[a] < res.geneIds[b];
  });
  return order;
}

}  // namespace

std::string de_table(const DEResult &res, TableFormat format, std::size_t topN) {
  std::vector<std::string> header = {"geneId"};
  for (const auto &n : res.genes.names) header.push_back(n);
  for (const auto &l : res.levels) header.push_back("mean." + l);
  header.push_back("foldChange");
  const bool single = res.families.size() == 1;
  for (const auto &f : res.families) {
    const std::string suffix = single ? "" : "." + f;
    header.push_back("statistic" + suffix);
    header.push_back("rawP" + suffix);
    header.push_back("adjP" + suffix);
  }
  auto order = table_order(res);
  if (topN > 0 && topN < order.size()) order.resize(topN);

  std::vector<std::vector<std::string>> body;
  for (auto g : order) {
    std::vector<std::string> row = {res.geneIds[g]};
    for (const auto &v : res.genes.rows[g]) row.push_back(v);
    for (std::size_t l = 0; l < res.levels.size(); ++l) row.push_back(text::format_double(res.groupMeans(g, l)));
    row.push_back(text::format_double(res.foldChange[g]));
    for (std::size_t f = 0; f < res.families.size(); ++f) {
      row.push_back(text::format_double(res.statistic(g, f)));
      row.push_back(text::format_double(res.rawP(g, f)));
      row.push_back(text::format_double(res.adjP(g, f)));
    }
    body.push_back(std::move(row));
  }
  if (format == TableFormat::csv) return text::csv_document(header, body);
  const std::string title = "Differential expression: " + stats::to_string(res.method) + ", label " +
                            res.sampleLabelId + ", adjustment " + stats::to_string(res.adjust);
  return text::html_document(title, header, body);
}

std::vector<VolcanoPoint> volcano_data(const DEResult &res, std::size_t family) {
  if (family >= res.families.size()) throw DataError("volcano: no statistic family " + std::to_string(family));
  std::vector<VolcanoPoint> pts;
  double maxFinite = 0;
  for (std::size_t g = 0; g < res.size(); ++g) {
    const double p = res.rawP(g, family);
    const double y = p > 0 ? -std::log10(p) : kNaN;
    if (std::isfinite(y)) maxFinite = std::max(maxFinite, y);
    pts.push_back({res.geneIds[g], res.foldChange[g], y});
  }
  for (auto &pt : pts)
    if (!std::isfinite(pt.y)) pt.y = maxFinite + 1;
  for (auto &pt : pts)
    if (pt.y == 0) pt.y = 0;  // -log10(1) is -0
  return pts;
}

}  // namespace arraykit
