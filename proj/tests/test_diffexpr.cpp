#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <set>

#include "arraykit/diffexpr.hpp"
#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/text.hpp"
#include "helpers.hpp"

using namespace arraykit;
using namespace testing_support;

namespace {

double mean_of(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double var_of(const std::vector<double> &v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

std::vector<double> row_values(const MatrixD &W, std::size_t r, const std::vector<std::size_t> &cols) {
  std::vector<double> v;
  for (auto c : cols)
    if (std::isfinite(W(r, c))) v.push_back(W(r, c));
  return v;
}

// Welch t of x - y and its Satterthwaite df, from the textbook formulas.
std::pair<double, double> welch_oracle(const std::vector<double> &x, const std::vector<double> &y) {
  const double a = var_of(x) / double(x.size()), b = var_of(y) / double(y.size());
  const double t = (mean_of(x) - mean_of(y)) / std::sqrt(a + b);
  const double df = (a + b) * (a + b) / (a * a / double(x.size() - 1) + b * b / double(y.size() - 1));
  return {t, df};
}

double pooled_oracle(const std::vector<double> &x, const std::vector<double> &y) {
  const double nx = double(x.size()), ny = double(y.size());
  const double sp = ((nx - 1) * var_of(x) + (ny - 1) * var_of(y)) / (nx + ny - 2);
  return (mean_of(x) - mean_of(y)) / std::sqrt(sp * (1 / nx + 1 / ny));
}

std::vector<std::size_t> iota_vec(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

TEST(TwoGroup, WelchMatchesTextbookFormula) {
  auto rng = make_rng(11);
  MatrixD W = noise(20, 9, rng);
  W(3, 2) = kMissing;
  // Type: A on columns 0..3, B on 4..8
  auto ds = make_dataset(W, {{"Type", {"A", "A", "A", "A", "B", "B", "B", "B", "B"}}});
  TwoGroupOptions opt;
  opt.sampleLabel = "Type";
  const auto res = de_two_groups(ds, opt);
  ASSERT_EQ(res.size(), 20u);
  EXPECT_EQ(res.families, std::vector<std::string>{"B-A"});
  for (std::size_t g = 0; g < 20; ++g) {
    const auto x = row_values(W, g, iota_vec(4, 9)), y = row_values(W, g, iota_vec(0, 4));
    const auto [t, df] = welch_oracle(x, y);
    EXPECT_NEAR(res.statistic(g, 0), t, 1e-10);
    EXPECT_NEAR(res.rawP(g, 0), stats::t_two_sided(t, df), 1e-12);
    EXPECT_NEAR(res.foldChange[g], mean_of(x) - mean_of(y), 1e-12);
    EXPECT_NEAR(res.groupMeans(g, 0), mean_of(y), 1e-12);
  }
}

TEST(TwoGroup, PooledAndAdjustment) {
  auto rng = make_rng(12);
  MatrixD W = noise(30, 8, rng);
  auto ds = make_dataset(W, {{"Type", blocks({"N", "T"}, 4)}});
  TwoGroupOptions opt;
  opt.sampleLabel = "Type";
  opt.pooled = true;
  const auto res = de_two_groups(ds, opt);
  std::vector<double> raw;
  for (std::size_t g = 0; g < 30; ++g) {
    const auto x = row_values(W, g, iota_vec(4, 8)), y = row_values(W, g, iota_vec(0, 4));
    const double t = pooled_oracle(x, y);
    EXPECT_NEAR(res.statistic(g, 0), t, 1e-10);
    EXPECT_NEAR(res.rawP(g, 0), stats::t_two_sided(t, 6), 1e-12);
    raw.push_back(res.rawP(g, 0));
  }
  // BH by the step-up definition: min over k >= rank of p_(k) * n / k
  std::vector<std::size_t> ord(30);
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](auto a, auto b) { return raw[a] < raw[b]; });
  for (std::size_t r = 0; r < 30; ++r) {
    double best = 1;
    for (std::size_t k = r; k < 30; ++k) best = std::min(best, raw[ord[k]] * 30.0 / double(k + 1));
    EXPECT_NEAR(res.adjP(ord[r], 0), best, 1e-14);
  }
}

TEST(TwoGroup, ThreeLevelsIsADataError) {
  auto rng = make_rng(13);
  auto ds = make_dataset(noise(5, 6, rng), {{"Tissue", {"a", "a", "b", "b", "c", "c"}}});
  TwoGroupOptions opt;
  opt.sampleLabel = "Tissue";
  try {
    de_two_groups(ds, opt);
    FAIL() << "expected DataError";
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("3 levels"), std::string::npos);
  }
}

TEST(TwoGroup, UnlabelledSamplesAndSkippedGenes) {
  auto rng = make_rng(14);
  MatrixD W = noise(4, 7, rng);
  W(1, 0) = kMissing;
  W(1, 1) = kMissing;  // only one finite value left in group A
  auto ds = make_dataset(W, {{"Type", {"A", "A", "A", "NA", "B", "B", "B"}}});
  TwoGroupOptions opt;
  opt.sampleLabel = "Type";
  const auto res = de_two_groups(ds, opt);
  EXPECT_EQ(res.size(), 3u);
  ASSERT_EQ(res.skipped.size(), 1u);
  EXPECT_EQ(res.skipped[0].rfind("g2:", 0), 0u);
  EXPECT_EQ(res.sampleNames, (std::vector<std::string>{"s1", "s2", "s3", "s5", "s6", "s7"}));
  EXPECT_EQ(res.W.cols(), 6u);
}

TEST(TwoGroup, WilcoxonExactOnSeparatedGroups) {
  // complete separation of 4 vs 4: exact two-sided p = 2 / C(8,4)
  MatrixD W(1, 8);
  for (std::size_t j = 0; j < 8; ++j) W(0, j) = double(j) + 0.1 * double(j % 3);
  auto ds = make_dataset(W, {{"Type", blocks({"A", "B"}, 4)}});
  TwoGroupOptions opt;
  opt.sampleLabel = "Type";
  opt.test = TwoGroupTest::wilcox;
  const auto res = de_two_groups(ds, opt);
  EXPECT_NEAR(res.rawP(0, 0), 2.0 / 70.0, 1e-12);
  EXPECT_EQ(res.method, stats::TestMethod::wilcoxonExact);
}

TEST(TwoGroup, BootstrapIsSeededAndThreadInvariant) {
  auto rng = make_rng(15);
  auto ds = make_dataset(noise(12, 10, rng), {{"Type", blocks({"A", "B"}, 5)}});
  TwoGroupOptions opt;
  opt.sampleLabel = "Type";
  opt.test = TwoGroupTest::bootT;
  opt.bootB = 199;
  opt.seed = 5;
  set_thread_count(1);
  const auto a = de_two_groups(ds, opt);
  set_thread_count(4);
  const auto b = de_two_groups(ds, opt);
  set_thread_count(1);
  EXPECT_TRUE(a == b);
  for (std::size_t g = 0; g < a.size(); ++g) {
    // p = (c + 1) / (B + 1) is a multiple of 1/200
    const double c = a.rawP(g, 0) * 200.0;
    EXPECT_NEAR(c, std::round(c), 1e-9);
    EXPECT_GE(a.rawP(g, 0), 1.0 / 200.0);
  }
  opt.bootB = 50;
  EXPECT_THROW(de_two_groups(ds, opt), DataError);
}

TEST(TwoGroup, PlantedGenesAreRecovered) {
  auto rng = make_rng(16);
  MatrixD W = noise(100, 12, rng, 0.3);
  for (std::size_t g = 0; g < 10; ++g)
    for (std::size_t j = 6; j < 12; ++j) W(g, j) += 2.0;
  auto ds = make_dataset(W, {{"Type", blocks({"N", "T"}, 6)}});
  TwoGroupOptions opt;
  opt.sampleLabel = "Type";
  const auto res = de_two_groups(ds, opt);
  std::set<std::string> hits;
  for (std::size_t g = 0; g < res.size(); ++g)
    if (res.adjP(g, 0) < 0.05) hits.insert(res.geneIds[g]);
  for (std::size_t g = 1; g <= 10; ++g) EXPECT_TRUE(hits.count("g" + std::to_string(g))) << g;
  std::vector<std::size_t> ord(res.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::sort(ord.begin(), ord.end(), [&](auto a, auto b) { return res.rawP(a, 0) < res.rawP(b, 0); });
  std::set<std::string> top;
  for (std::size_t r = 0; r < 10; ++r) top.insert(res.geneIds[ord[r]]);
  for (std::size_t g = 1; g <= 10; ++g) EXPECT_TRUE(top.count("g" + std::to_string(g))) << g;
}

TEST(Anova, TwoLevelFIsSquaredPooledT) {
  auto rng = make_rng(21);
  MatrixD W = noise(25, 10, rng);
  W(4, 7) = kMissing;
  auto ds = make_dataset(W, {{"Type", {"A", "B", "A", "B", "A", "B", "A", "B", "B", "A"}}});
  const auto d = design_anova(ds, {"Type"});
  AnovaOptions opt;
  opt.returnF = true;
  const auto f = fit_anova(ds, d, opt);
  TwoGroupOptions t2;
  t2.sampleLabel = "Type";
  t2.pooled = true;
  const auto t = de_two_groups(ds, t2);
  ASSERT_EQ(f.size(), t.size());
  for (std::size_t g = 0; g < f.size(); ++g) {
    const double tt = t.statistic(g, 0) * t.statistic(g, 0);
    EXPECT_NEAR(f.statistic(g, 0), tt, 1e-9 * std::max(1.0, tt));
    EXPECT_NEAR(f.rawP(g, 0), t.rawP(g, 0), 1e-9);
  }
  // the contrast t equals the pooled t for a single two-level factor
  opt.returnF = false;
  const auto c = fit_anova(ds, d, opt);
  EXPECT_EQ(c.families, std::vector<std::string>{"B-A"});
  for (std::size_t g = 0; g < c.size(); ++g) EXPECT_NEAR(c.statistic(g, 0), t.statistic(g, 0), 1e-9);
}

TEST(Anova, OneWayFAndPairwiseContrasts) {
  auto rng = make_rng(22);
  MatrixD W = noise(15, 12, rng);
  const std::vector<std::string> tissue = {"c", "a", "b", "a", "c", "b", "a", "b", "c", "a", "b", "c"};
  auto ds = make_dataset(W, {{"Tissue", tissue}});
  const auto d = design_anova(ds, {"Tissue"});
  EXPECT_EQ(d.contrastNames, (std::vector<std::string>{"b-a", "c-a", "c-b"}));
  AnovaOptions opt;
  opt.returnF = true;
  const auto f = fit_anova(ds, d, opt);
  opt.returnF = false;
  const auto c = fit_anova(ds, d, opt);
  const std::vector<std::string> lv = {"a", "b", "c"};
  for (std::size_t g = 0; g < 15; ++g) {
    std::vector<std::vector<double>> groups(3);
    for (std::size_t j = 0; j < 12; ++j)
      groups[std::size_t(std::find(lv.begin(), lv.end(), tissue[j]) - lv.begin())].push_back(W(g, j));
    std::vector<double> all(W.row(g).begin(), W.row(g).end());
    const double grand = mean_of(all);
    double ssb = 0, ssw = 0;
    for (const auto &v : groups) {
      const double m = mean_of(v);
      ssb += double(v.size()) * (m - grand) * (m - grand);
      for (double x : v) ssw += (x - m) * (x - m);
    }
    const double mse = ssw / 9.0;
    EXPECT_NEAR(f.statistic(g, 0), (ssb / 2.0) / mse, 1e-9);
    EXPECT_NEAR(f.rawP(g, 0), stats::f_sf((ssb / 2.0) / mse, 2, 9), 1e-10);
    const std::pair<int, int> pairs[] = {{1, 0}, {2, 0}, {2, 1}};
    for (std::size_t k = 0; k < 3; ++k) {
      const auto &hi = groups[std::size_t(pairs[k].first)], &lo = groups[std::size_t(pairs[k].second)];
      const double t = (mean_of(hi) - mean_of(lo)) / std::sqrt(mse * (1.0 / double(hi.size()) + 1.0 / double(lo.size())));
      EXPECT_NEAR(c.statistic(g, k), t, 1e-9);
    }
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const auto &v : groups) {
      lo = std::min(lo, mean_of(v));
      hi = std::max(hi, mean_of(v));
    }
    EXPECT_NEAR(c.foldChange[g], hi - lo, 1e-12);
  }
  const auto base = design_anova(ds, {"Tissue"}, ContrastKind::baseline);
  EXPECT_EQ(base.contrastNames, (std::vector<std::string>{"b-a", "c-a"}));
}

TEST(Anova, BalancedTwoFactorAdditiveF) {
  // 2 x 3 crossed, 2 replicates per cell: additive fitted values are
  // row mean + column mean - grand mean.
  auto rng = make_rng(23);
  MatrixD W = noise(8, 12, rng);
  std::vector<std::string> type, tissue;
  for (std::size_t j = 0; j < 12; ++j) {
    type.push_back(j % 2 ? "T" : "N");
    tissue.push_back(std::string(1, char('a' + (j / 2) % 3)));
  }
  auto ds = make_dataset(W, {{"Type", type}, {"Tissue", tissue}});
  const auto d = design_anova(ds, {"Type", "Tissue"});
  EXPECT_EQ(d.coefficientNames, (std::vector<std::string>{"(Intercept)", "Type:T", "Tissue:b", "Tissue:c"}));
  AnovaOptions opt;
  opt.returnF = true;
  const auto f = fit_anova(ds, d, opt);
  for (std::size_t g = 0; g < 8; ++g) {
    std::vector<double> all(W.row(g).begin(), W.row(g).end());
    const double grand = mean_of(all);
    std::map<std::string, std::vector<double>> byType, byTissue;
    for (std::size_t j = 0; j < 12; ++j) {
      byType[type[j]].push_back(W(g, j));
      byTissue[tissue[j]].push_back(W(g, j));
    }
    double rss = 0, tss = 0;
    for (std::size_t j = 0; j < 12; ++j) {
      const double fit = mean_of(byType[type[j]]) + mean_of(byTissue[tissue[j]]) - grand;
      rss += (W(g, j) - fit) * (W(g, j) - fit);
      tss += (W(g, j) - grand) * (W(g, j) - grand);
    }
    const double F = ((tss - rss) / 3.0) / (rss / 8.0);
    EXPECT_NEAR(f.statistic(g, 0), F, 1e-9 * std::max(1.0, F));
  }
}

TEST(Anova, ConfoundedFactorsAreRejected) {
  auto rng = make_rng(24);
  auto ds = make_dataset(noise(3, 6, rng), {{"X", blocks({"p", "q"}, 3)}, {"Y", blocks({"u", "v"}, 3)}});
  try {
    design_anova(ds, {"X", "Y"});
    FAIL() << "expected DataError";
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("rank-deficient"), std::string::npos);
  }
  EXPECT_THROW(design_anova(ds, {}), UsageError);
}

TEST(Tables, SortedByAdjustedPThenRawThenId) {
  DEResult r;
  r.geneIds = {"z", "b", "a", "c"};
  r.genes.names = {"Gene"};
  r.genes.rows = {{"z"}, {"b"}, {"a"}, {"c"}};
  r.levels = {"A", "B"};
  r.families = {"B-A"};
  r.statistic = MatrixD(4, 1, 1.0);
  r.rawP = MatrixD(4, 1);
  r.adjP = MatrixD(4, 1);
  const double raw[] = {0.01, 0.2, 0.2, 0.03}, adj[] = {0.04, 0.3, 0.3, 0.04};
  for (std::size_t g = 0; g < 4; ++g) {
    r.rawP(g, 0) = raw[g];
    r.adjP(g, 0) = adj[g];
  }
  r.groupMeans = MatrixD(4, 2, 0.0);
  r.foldChange = {1, 2, 3, 4};
  const auto csv = de_table(r, TableFormat::csv);
  const auto rows = text::parse_csv(csv);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0][0], "geneId");
  std::vector<std::string> order;
  for (std::size_t i = 1; i < rows.size(); ++i) order.push_back(rows[i][0]);
  EXPECT_EQ(order, (std::vector<std::string>{"z", "c", "a", "b"}));
  EXPECT_EQ(text::parse_csv(de_table(r, TableFormat::csv, 2)).size(), 3u);
  EXPECT_NE(de_table(r, TableFormat::html).find("<table"), std::string::npos);

  r.rawP(0, 0) = 0;
  const auto v = volcano_data(r);
  EXPECT_NEAR(v[0].y, -std::log10(0.03) + 1, 1e-12);
  EXPECT_NEAR(v[3].y, -std::log10(0.03), 1e-12);
  EXPECT_THROW(volcano_data(r, 1), DataError);
}
