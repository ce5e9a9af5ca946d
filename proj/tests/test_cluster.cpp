#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "arraykit/cluster.hpp"
#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "helpers.hpp"

using namespace arraykit;
using namespace testing_support;

namespace {

double pearson(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Two blobs in 5 dimensions, centers 10 apart; items alternate blob 0 / 1.
MatrixD blobs(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  MatrixD M = noise(n, 5, rng, 0.5);
  for (std::size_t i = 0; i < n; ++i)
    if (i % 2) M(i, 0) += 10;
  return M;
}

// True when two partitions agree up to relabelling.
bool same_partition(const std::vector<std::size_t> &a, const std::vector<std::size_t> &b) {
  if (a.size() != b.size()) return false;
  std::map<std::size_t, std::size_t> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it, fresh] = ab.emplace(a[i], b[i]);
    auto [jt, fresh2] = ba.emplace(b[i], a[i]);
    if (it->second != b[i] || jt->second != a[i]) return false;
  }
  return true;
}

double inertia_of(const MatrixD &M, const std::vector<std::size_t> &assign, std::size_t k) {
  MatrixD c(k, M.cols(), 0.0);
  std::vector<double> cnt(k, 0);
  for (std::size_t i = 0; i < M.rows(); ++i) {
    ++cnt[assign[i]];
    for (std::size_t f = 0; f < M.cols(); ++f) c(assign[i], f) += M(i, f);
  }
  double s = 0;
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t f = 0; f < M.cols(); ++f) {
      const double d = M(i, f) - c(assign[i], f) / cnt[assign[i]];
      s += d * d;
    }
  return s;
}

}  // namespace

TEST(Distance, EuclideanAndCorrelationOracles) {
  auto rng = make_rng(31);
  MatrixD M = noise(6, 8, rng);
  M(2, 3) = kMissing;
  const auto E = distance_matrix(M, DistanceKind::euclidean);
  const auto C = distance_matrix(M, DistanceKind::oneMinusCor);
  const auto A = distance_matrix(M, DistanceKind::oneMinusAbsCor);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(E(i, i), 0.0);
    for (std::size_t j = 0; j < 6; ++j) {
      std::vector<double> x, y;
      double ss = 0;
      for (std::size_t f = 0; f < 8; ++f) {
        if (!std::isfinite(M(i, f)) || !std::isfinite(M(j, f))) continue;
        x.push_back(M(i, f));
        y.push_back(M(j, f));
        ss += (M(i, f) - M(j, f)) * (M(i, f) - M(j, f));
      }
      EXPECT_EQ(E(i, j), E(j, i));
      if (i == j) continue;
      EXPECT_NEAR(E(i, j), std::sqrt(ss), 1e-12);
      EXPECT_NEAR(C(i, j), 1 - pearson(x, y), 1e-12);
      EXPECT_NEAR(A(i, j), 1 - std::abs(pearson(x, y)), 1e-12);
    }
  }
}

TEST(Hier, HandWorkedLinkages) {
  // points on a line: 0, 1, 4, 9
  MatrixD M(4, 1);
  const double pts[] = {0, 1, 4, 9};
  for (std::size_t i = 0; i < 4; ++i) M(i, 0) = pts[i];
  const auto D = distance_matrix(M, DistanceKind::euclidean);
  const auto s = hier_cluster(D, Linkage::single);
  ASSERT_EQ(s.merges.size(), 3u);
  EXPECT_EQ(s.merges[0], (Dendrogram::Merge{0, 1, 1.0}));
  EXPECT_EQ(s.merges[1], (Dendrogram::Merge{2, 4, 3.0}));
  EXPECT_EQ(s.merges[2], (Dendrogram::Merge{3, 5, 5.0}));
  const auto c = hier_cluster(D, Linkage::complete);
  EXPECT_DOUBLE_EQ(c.merges[1].height, 4.0);
  EXPECT_DOUBLE_EQ(c.merges[2].height, 9.0);
  const auto a = hier_cluster(D, Linkage::average);
  EXPECT_DOUBLE_EQ(a.merges[1].height, 3.5);                  // (4 + 3) / 2
  EXPECT_DOUBLE_EQ(a.merges[2].height, (9.0 + 8.0 + 5.0) / 3.0);
  EXPECT_EQ(a.leaf_order(), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Hier, AverageLinkageMatchesBruteForce) {
  // property: each merge height equals the mean pairwise distance between
  // the two merged leaf sets, and heights never decrease
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto rng = make_rng(seed);
    const std::size_t n = 4 + seed % 7;
    MatrixD M = noise(n, 3, rng);
    const auto D = distance_matrix(M, DistanceKind::euclidean);
    const auto d = hier_cluster(D, Linkage::average);
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[i] = {i};
    double last = -1;
    for (const auto &m : d.merges) {
      double sum = 0;
      for (auto i : members[m.a])
        for (auto j : members[m.b]) sum += D(i, j);
      const double expect = sum / double(members[m.a].size() * members[m.b].size());
      EXPECT_NEAR(m.height, expect, 1e-12);
      EXPECT_GE(m.height, last - 1e-12);
      last = m.height;
      auto merged = members[m.a];
      merged.insert(merged.end(), members[m.b].begin(), members[m.b].end());
      members.push_back(merged);
    }
    auto order = d.leaf_order();
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(order[i], i);
  }
}

TEST(KMeans, MatchesBruteForceOptimum) {
  // 8 points, k = 2: enumerate every 2-way split
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto rng = make_rng(100 + seed);
    MatrixD M = noise(8, 2, rng);
    for (std::size_t i = 0; i < 4; ++i) M(i, 0) += 3;
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < 255; ++mask) {
      std::vector<std::size_t> a(8);
      for (std::size_t i = 0; i < 8; ++i) a[i] = (mask >> i) & 1u;
      best = std::min(best, inertia_of(M, a, 2));
    }
    const auto p = kmeans(M, 2, 10, seed);
    EXPECT_NEAR(p.inertia, best, 1e-9) << seed;
    EXPECT_NEAR(p.inertia, inertia_of(M, p.assignment, 2), 1e-9);
    for (std::size_t h = 1; h < p.inertiaHistory.size(); ++h)
      EXPECT_LE(p.inertiaHistory[h], p.inertiaHistory[h - 1] + 1e-12);
  }
}

TEST(KMeans, SeededAndThreadInvariant) {
  const MatrixD M = blobs(40, 3);
  set_thread_count(1);
  const auto a = kmeans(M, 3, 5, 9);
  set_thread_count(4);
  const auto b = kmeans(M, 3, 5, 9);
  set_thread_count(1);
  EXPECT_TRUE(a == b);
  EXPECT_THROW(kmeans(M, 3, 0, 9), DataError);
}

TEST(Som, TwoByOneMatchesKMeansTwoOnBlobs) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MatrixD M = blobs(30, seed);
    const auto km = kmeans(M, 2, 5, seed);
    SomOptions o;
    o.xdim = 2;
    o.ydim = 1;
    o.seed = seed;
    const auto s = som(M, o);
    EXPECT_TRUE(same_partition(km.assignment, s.assignment)) << seed;
    std::vector<std::size_t> truth(30);
    for (std::size_t i = 0; i < 30; ++i) truth[i] = i % 2;
    EXPECT_TRUE(same_partition(truth, s.assignment)) << seed;
    EXPECT_EQ(s.clusters(), 2u);
  }
}

TEST(Som, DeterministicAndGridShaped) {
  const MatrixD M = blobs(24, 4);
  SomOptions o;
  o.xdim = 3;
  o.ydim = 2;
  o.topology = SomTopology::hex;
  o.seed = 11;
  const auto a = som(M, o);
  set_thread_count(4);
  const auto b = som(M, o);
  set_thread_count(1);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.centers.rows(), 6u);
  EXPECT_EQ(a.xdim, 3);
  for (auto u : a.assignment) EXPECT_LT(u, 6u);
}

TEST(Impute, FeatureMeans) {
  MatrixD M(3, 2);
  M(0, 0) = 1;
  M(1, 0) = kMissing;
  M(2, 0) = 3;
  M(0, 1) = 5;
  M(1, 1) = 6;
  M(2, 1) = 7;
  EXPECT_EQ(impute_feature_means(M), 1u);
  EXPECT_DOUBLE_EQ(M(1, 0), 2.0);
}

TEST(SelectDe, TopGenesAndOrientation) {
  auto rng = make_rng(41);
  MatrixD W = noise(20, 8, rng, 0.3);
  for (std::size_t g = 0; g < 4; ++g)
    for (std::size_t j = 4; j < 8; ++j) W(g, j) += 3;
  auto ds = make_dataset(W, {{"Type", blocks({"A", "B"}, 4)}});
  TwoGroupOptions opt;
  opt.sampleLabel = "Type";
  const auto res = de_two_groups(ds, opt);
  const auto genes = select_de_matrix(res, stats::PAdjust::BH, 4, 0.05, ClusterOn::genes);
  ASSERT_EQ(genes.data.rows(), 4u);
  EXPECT_EQ(genes.data.cols(), 8u);
  std::vector<std::string> lbl = genes.labels;
  std::sort(lbl.begin(), lbl.end());
  EXPECT_EQ(lbl, (std::vector<std::string>{"g1", "g2", "g3", "g4"}));
  const auto samples = select_de_matrix(res, stats::PAdjust::BH, 4, 0.05, ClusterOn::samples);
  EXPECT_EQ(samples.data.rows(), 8u);
  EXPECT_EQ(samples.data.cols(), 4u);
  EXPECT_EQ(samples.labels.front(), "s1");
}
