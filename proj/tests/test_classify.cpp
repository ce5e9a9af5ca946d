#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arraykit/classify.hpp"
#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "helpers.hpp"

using namespace arraykit;
using namespace testing_support;

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// 1-D nearest-class-mean LOOCV; ties predict class 0.
double nearest_mean_loocv(const std::vector<double> &x, const std::vector<int> &y) {
  int correct = 0;
  for (std::size_t h = 0; h < x.size(); ++h) {
    double s[2] = {0, 0}, c[2] = {0, 0};
    for (std::size_t i = 0; i < x.size(); ++i)
      if (i != h) {
        s[y[i]] += x[i];
        ++c[y[i]];
      }
    const double d0 = std::abs(x[h] - s[0] / c[0]), d1 = std::abs(x[h] - s[1] / c[1]);
    correct += (d1 < d0 ? 1 : 0) == y[h];
  }
  return double(correct) / double(x.size());
}

}  // namespace

TEST(Binomial, SmallValuesAndPascal) {
  EXPECT_EQ(binomial(8, 3), 56u);
  EXPECT_EQ(binomial(5, 0), 1u);
  EXPECT_EQ(binomial(3, 5), 0u);
  for (std::uint64_t n = 1; n < 40; ++n)
    for (std::uint64_t k = 1; k <= n; ++k) EXPECT_EQ(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
  EXPECT_EQ(binomial(67, 33), 14226520737620288370ull);
  EXPECT_THROW(binomial(200, 100), DataError);
}

TEST(Lda, OneGeneAgreesWithNearestMean) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto rng = make_rng(seed);
    MatrixD X(10, 1);
    std::vector<int> y(10);
    std::vector<double> x(10);
    for (std::size_t i = 0; i < 10; ++i) {
      y[i] = int(i % 2);
      x[i] = normal(rng) + 1.2 * y[i];
      X(i, 0) = x[i];
    }
    EXPECT_NEAR(lda_loocv(X, y).accuracy, nearest_mean_loocv(x, y), 1e-12) << seed;
  }
}

TEST(Knn, NeighbourOrderAndTies) {
  // 1-D samples; k = 2 gives a tied vote broken by summed distance
  MatrixD X(5, 1);
  const double xs[] = {0.0, 1.0, 1.5, 3.0, 3.2};
  const std::vector<int> y = {0, 0, 1, 1, 1};
  for (std::size_t i = 0; i < 5; ++i) X(i, 0) = xs[i];
  const auto r = knn_loocv(X, y, 2);
  // sample 1: neighbours 1.5 (class 1, d .5) and 0 (class 0, d 1) -> class 1
  // sample 2: neighbours 1 (class 0, d .5) and 3 (class 1, d 1.5) -> class 0
  EXPECT_EQ(r.predictions, (std::vector<int>{0, 1, 0, 1, 1}));
  EXPECT_DOUBLE_EQ(r.accuracy, 3.0 / 5.0);
  // equal distances on both sides: tie goes to class 0
  MatrixD Z(3, 1);
  Z(0, 0) = -1;
  Z(1, 0) = 0;
  Z(2, 0) = 1;
  EXPECT_EQ(knn_loocv(Z, {0, 1, 1}, 2).predictions[1], 0);
}

TEST(Search, EightGenePoolHasFiftySixTriples) {
  auto rng = make_rng(51);
  auto ds = make_dataset(noise(8, 10, rng), {{"Type", blocks({"A", "B"}, 5)}});
  ClassifierOptions opt;
  opt.sampleLabel = "Type";
  opt.topK = 100;
  const auto res = exhaustive_search(ds, opt, all_rows(8));
  EXPECT_EQ(res.searchSpaceSize, 56u);
  EXPECT_EQ(res.subsets.size(), 56u);
  for (std::size_t i = 1; i < res.subsets.size(); ++i) EXPECT_GE(res.subsets[i - 1].accuracy, res.subsets[i].accuracy);
}

TEST(Search, FullPoolSearchAndChooseEqualsExhaustive) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto rng = make_rng(60 + seed);
    auto ds = make_dataset(noise(9, 12, rng), {{"Type", blocks({"A", "B"}, 6)}});
    for (auto method : {ClassMethod::lda, ClassMethod::knn}) {
      ClassifierOptions opt;
      opt.sampleLabel = "Type";
      opt.method = method;
      opt.topK = 20;
      const auto ex = exhaustive_search(ds, opt, all_rows(9));
      for (auto pr : {Prerank::cv, Prerank::de}) {
        const auto sc = search_and_choose(ds, opt, all_rows(9), 9, pr);
        EXPECT_TRUE(sc.heuristic);
        EXPECT_EQ(sc.searchSpaceSize, ex.searchSpaceSize);
        EXPECT_EQ(sc.subsets, ex.subsets) << seed;
      }
    }
  }
}

TEST(Search, PlantedTrioRanksFirst) {
  // Rows 2, 5 and 9 share large canceling noise: only their sum separates
  // the classes, so no pair (and no other triple) reaches full accuracy.
  auto rng = make_rng(71);
  MatrixD W = noise(12, 20, rng);
  for (std::size_t j = 0; j < 20; ++j) {
    const double s = j < 10 ? -1.0 : 1.0;
    const double z1 = 3 * normal(rng), z2 = 3 * normal(rng);
    W(2, j) = z1 + s;
    W(5, j) = z2 + s;
    W(9, j) = -(z1 + z2) + s + 0.1 * normal(rng);
  }
  auto ds = make_dataset(W, {{"Type", blocks({"A", "B"}, 10)}});
  ClassifierOptions opt;
  opt.sampleLabel = "Type";
  const auto res = exhaustive_search(ds, opt, all_rows(12));
  ASSERT_GE(res.subsets.size(), 2u);
  EXPECT_EQ(res.subsets[0].rows, (std::vector<std::size_t>{2, 5, 9}));
  EXPECT_DOUBLE_EQ(res.subsets[0].accuracy, 1.0);
  EXPECT_LT(res.subsets[1].accuracy, 1.0);
}

TEST(Search, MissingPoolGenesExcludedAndThreadInvariant) {
  auto rng = make_rng(81);
  MatrixD W = noise(7, 10, rng);
  W(3, 4) = kMissing;
  auto ds = make_dataset(W, {{"Type", blocks({"A", "B"}, 5)}});
  ClassifierOptions opt;
  opt.sampleLabel = "Type";
  opt.method = ClassMethod::knn;
  set_thread_count(1);
  const auto a = exhaustive_search(ds, opt, all_rows(7));
  set_thread_count(4);
  const auto b = exhaustive_search(ds, opt, all_rows(7));
  set_thread_count(1);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.excluded, std::vector<std::string>{"g4"});
  EXPECT_EQ(a.searchSpaceSize, 20u);
}
