#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "arraykit/error.hpp"
#include "arraykit/loess.hpp"
#include "arraykit/normalize.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/stats.hpp"
#include "helpers.hpp"

using namespace arraykit;
using testing_support::make_raw;
using testing_support::negated_bitwise;
using testing_support::normal;

namespace {

std::vector<double> finite_column(const MatrixD &m, std::size_t j) {
  std::vector<double> v;
  for (std::size_t i = 0; i < m.rows(); ++i)
    if (std::isfinite(m(i, j))) v.push_back(m(i, j));
  return v;
}

}  // namespace

TEST(Background, Methods) {
  RawDataset raw = make_raw({1, 1, 2, 2}, 1, 1);
  raw.ch1Fg(0, 0) = 40;
  raw.ch1Bg(0, 0) = 50;
  const auto sub = background_correct(raw, BkgMethod::subtract);
  EXPECT_TRUE(std::isnan(sub.ch1(0, 0)));
  EXPECT_EQ(sub.ch2(1, 0), raw.ch2Fg(1, 0) - raw.ch2Bg(1, 0));
  const auto none = background_correct(raw, BkgMethod::none);
  EXPECT_EQ(none.ch1(0, 0), 40);
  // minimumPositive: non-positive values become half the smallest positive
  // corrected value of that channel on that chip
  const auto mp = background_correct(raw, BkgMethod::minimumPositive);
  double minPos = HUGE_VAL;
  for (std::size_t i = 0; i < 4; ++i)
    if (sub.ch1(i, 0) > 0) minPos = std::min(minPos, sub.ch1(i, 0));
  EXPECT_EQ(mp.ch1(0, 0), minPos / 2);
  EXPECT_EQ(mp.ch1(1, 0), sub.ch1(1, 0));
}

TEST(ComputeWA, DefinitionAndInterestChannel) {
  RawDataset raw = make_raw({1, 1, 3, 3}, 1, 2);
  raw.annot.samples.interest[1] = Channel::ch2;
  const auto ds = compute_wa(raw, BkgMethod::subtract);
  for (std::size_t i = 0; i < raw.spots(); ++i) {
    const double c1 = raw.ch1Fg(i, 0) - raw.ch1Bg(i, 0), c2 = raw.ch2Fg(i, 0) - raw.ch2Bg(i, 0);
    EXPECT_NEAR(ds.W(i, 0), std::log2(c1) - std::log2(c2), 1e-12);
    EXPECT_NEAR(ds.A(i, 0), (std::log2(c1) + std::log2(c2)) / 2, 1e-12);
    // chip 1 carries the same sample with swapped dyes and interest in ch2
    EXPECT_NEAR(ds.W(i, 1), ds.W(i, 0), 1e-12);
  }
}

TEST(Loess, RemovesExactlyLinearTrend) {
  auto rng = make_rng(3);
  std::vector<double> x(300), y(300);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = 6 + 8 * uniform01(rng);
    y[i] = 0.7 - 0.25 * x[i];
  }
  const auto fit = loess_fit(x, y, x, 0.4, 2);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(fit[i], y[i], 1e-9);
}

TEST(Loess, MatchesDirectWeightedFitWithoutRobustness) {
  // One local fit computed directly from the tricube definition.
  auto rng = make_rng(4);
  const std::size_t n = 50;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = double(i) + 0.5 * uniform01(rng);
    y[i] = std::sin(x[i] / 7) + 0.1 * normal(rng);
  }
  const double span = 0.4, x0 = 20.3;
  const std::size_t q = std::size_t(std::floor(span * n));
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = std::abs(x[i] - x0);
  auto sorted = d;
  std::sort(sorted.begin(), sorted.end());
  const double h = sorted[q - 1];
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = d[i] / h;
    const double w = u < 1 ? std::pow(1 - u * u * u, 3) : 0;
    sw += w, sx += w * x[i], sy += w * y[i], sxx += w * x[i] * x[i], sxy += w * x[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  const double slope = (sxy - sw * mx * my) / (sxx - sw * mx * mx);
  const double expected = my + slope * (x0 - mx);
  const std::vector<double> at{x0};
  EXPECT_NEAR(loess_fit(x, y, at, span, 0)[0], expected, 1e-10);
}

TEST(Loess, DeltaInterpolatesBetweenAnchorFits) {
  auto rng = make_rng(5);
  std::vector<double> x(2000), y(2000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = 6 + 8 * uniform01(rng);
    y[i] = 0.5 * std::sin(x[i]) + 0.2 * normal(rng);
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const std::vector<double> ends{*lo, *hi};
  // without robustness passes the anchors at both ends are exact local fits
  const auto exactEnds = loess_fit(x, y, ends, 0.4, 0);
  const auto deltaEnds = loess_fit(x, y, ends, 0.4, 0, 0.01);
  EXPECT_DOUBLE_EQ(deltaEnds[0], exactEnds[0]);
  EXPECT_DOUBLE_EQ(deltaEnds[1], exactEnds[1]);
  const auto exact = loess_fit(x, y, x, 0.4, 2);
  const auto fast = loess_fit(x, y, x, 0.4, 2, 0.01);
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(exact[i] - fast[i]));
  EXPECT_LT(worst, 5e-3);
  // a straight line stays exact under interpolation
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1 - 0.3 * x[i];
  const auto line = loess_fit(x, y, x, 0.4, 2, 0.01);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(line[i], y[i], 1e-9);
  EXPECT_THROW(loess_fit(x, y, x, 0.4, 2, -1), DataError);
}

TEST(Normalize, LinearBiasIsRemoved) {
  auto ds = compute_wa(make_raw({2, 2, 8, 8}, 2, 5), BkgMethod::subtract);
  // replace W by an exact linear function of A per chip
  for (std::size_t j = 0; j < ds.cols(); ++j)
    for (std::size_t i = 0; i < ds.rows(); ++i) ds.W(i, j) = 0.3 + 0.2 * double(j) - 0.15 * ds.A(i, j);
  for (auto scope : {LoessScope::global, LoessScope::printTip}) {
    const auto out = normalize_loess(ds, {0.4, scope, 2});
    for (double w : out.W.data()) EXPECT_LT(std::abs(w), 1e-8);
  }
}

TEST(Normalize, DyeSwapAntisymmetryBitwise) {
  const auto raw = make_raw({2, 2, 6, 6}, 3, 6);
  for (auto bkg : {BkgMethod::subtract, BkgMethod::none}) {
    auto ds = compute_wa(raw, bkg);
    for (auto scope : {LoessScope::global, LoessScope::printTip}) {
      const auto a = normalize_loess(ds, {0.4, scope, 2});
      const auto b = normalize_scale_mad(a, scope == LoessScope::global ? MadScope::globalMAD : MadScope::printTipMAD);
      for (const MatrixD *m : std::vector<const MatrixD *>{&ds.W, &a.W, &b.W})
        for (std::size_t p = 0; p < 3; ++p)
          for (std::size_t i = 0; i < m->rows(); ++i)
            ASSERT_TRUE(negated_bitwise((*m)(i, 2 * p), (*m)(i, 2 * p + 1))) << "spot " << i << " pair " << p;
    }
  }
}

TEST(Normalize, GlobalMadEqualizesChips) {
  auto ds = compute_wa(make_raw({2, 2, 8, 8}, 3, 7), BkgMethod::subtract);
  for (std::size_t i = 0; i < ds.rows(); ++i) ds.W(i, 2) *= 3.0;  // one noisy chip
  ds = normalize_loess(std::move(ds), {});
  const auto out = normalize_scale_mad(ds, MadScope::globalMAD);
  const double m0 = mad(finite_column(out.W, 0));
  double logSum = 0, prodCheck = 0;
  for (std::size_t j = 0; j < out.cols(); ++j) {
    EXPECT_NEAR(mad(finite_column(out.W, j)) / m0, 1.0, 1e-9);
    logSum += std::log(mad(finite_column(ds.W, j)));
    prodCheck += std::log(mad(finite_column(out.W, j)));
  }
  // the scale factors multiply to 1, so the geometric mean of the MADs is kept
  EXPECT_NEAR(logSum, prodCheck, 1e-9);
}

TEST(Normalize, PrintTipMadEqualizesBlocksWithinChip) {
  auto ds = compute_wa(make_raw({2, 2, 8, 8}, 1, 8), BkgMethod::subtract);
  ds = normalize_loess(std::move(ds), {0.4, LoessScope::printTip, 2});
  const auto out = normalize_scale_mad(ds, MadScope::printTipMAD);
  const auto &g = *out.grid;
  for (std::size_t j = 0; j < out.cols(); ++j) {
    std::vector<double> blockMad;
    for (std::size_t b = 0; b < g.blocks(); ++b) {
      std::vector<double> v;
      for (std::size_t i = b * g.spots_per_block(); i < (b + 1) * g.spots_per_block(); ++i) v.push_back(out.W(i, j));
      blockMad.push_back(mad(v));
    }
    for (double m : blockMad) EXPECT_NEAR(m / blockMad[0], 1.0, 1e-9);
  }
}

TEST(Normalize, ExcludedSpotsNeverInfluenceOthers) {
  auto ds = compute_wa(make_raw({2, 2, 8, 8}, 2, 9), BkgMethod::subtract);
  auto rng = make_rng(10);
  for (auto &u : ds.useSpot.data()) u = uniform01(rng) < 0.8;
  for (auto scope : {LoessScope::global, LoessScope::printTip}) {
    const auto base = normalize_scale_mad(normalize_loess(ds, {0.4, scope, 2}), MadScope::globalMAD);
    for (int rep = 0; rep < 5; ++rep) {
      auto toggled = ds;
      std::size_t i, j;
      do {
        i = uniform_index(rng, ds.rows());
        j = uniform_index(rng, ds.cols());
      } while (ds.useSpot(i, j));
      toggled.W(i, j) += 50;
      const auto out = normalize_scale_mad(normalize_loess(toggled, {0.4, scope, 2}), MadScope::globalMAD);
      for (std::size_t r = 0; r < ds.rows(); ++r)
        for (std::size_t c = 0; c < ds.cols(); ++c)
          if (r != i || c != j) ASSERT_EQ(out.W(r, c), base.W(r, c));
    }
  }
}

TEST(Normalize, TooFewPointsNamesTheUnit) {
  auto ds = compute_wa(make_raw({1, 2, 3, 3}, 1, 11), BkgMethod::subtract);
  try {
    normalize_loess(ds, {0.4, LoessScope::printTip, 2});
    FAIL();
  } catch (const DataError &e) {
    EXPECT_NE(std::string(e.what()).find("block"), std::string::npos) << e.what();
  }
}

TEST(Normalize, RepeatedLoessBracketsW) {
  auto ds = compute_wa(make_raw({2, 2, 8, 8}, 2, 12), BkgMethod::subtract);
  RepeatedLoessOptions o;
  o.repeats = 20;
  o.seed = 4;
  const auto out = normalize_repeated_loess(ds, o);
  ASSERT_TRUE(out.SW && out.Wlo && out.Whi);
  for (std::size_t k = 0; k < out.W.size(); ++k) {
    const double w = out.W.data()[k];
    if (!std::isfinite(w)) continue;
    EXPECT_LE(out.Wlo->data()[k], w);
    EXPECT_GE(out.Whi->data()[k], w);
    EXPECT_GE(out.SW->data()[k], 0);
  }
  EXPECT_EQ(normalize_repeated_loess(ds, o), out);
  // thread count does not matter
  set_thread_count(1);
  const auto serial = normalize_repeated_loess(ds, o);
  set_thread_count(0);
  EXPECT_EQ(serial, out);
}

TEST(Summarize, SpotsThenSamples) {
  MatrixD W(4, 4, std::vector<double>{1, 2, 3, 4,  //
                                      3, 4, 5, kMissing,  //
                                      7, 7, 7, 7,  //
                                      -1, -2, -3, -4});
  auto ds = testing_support::make_dataset(W, {{"Sample", {"a", "a", "b", "b"}}}, {"x", "x", "y", ""});
  SummarizeOptions o;
  o.geneLabel = "Gene";
  o.sampleLabel = "Sample";
  o.spots = Summary::median;
  o.samples = Summary::mean;
  const auto out = summarize_replicates(ds, o);
  ASSERT_EQ(out.rows(), 2u);  // empty label dropped
  ASSERT_EQ(out.cols(), 2u);
  // x: per chip median of (1,3),(2,4),(3,5),(4,NA) = 2,3,4,4 ; means over chips 2.5, 4
  EXPECT_EQ(out.W(0, 0), 2.5);
  EXPECT_EQ(out.W(0, 1), 4);
  EXPECT_EQ(out.W(1, 0), 7);
  EXPECT_FALSE(out.grid.has_value());
  o.keepEmpty = true;
  EXPECT_EQ(summarize_replicates(ds, o).rows(), 3u);
  // duplicated labels with neither summary requested are ambiguous
  o.spots = Summary::none;
  EXPECT_EQ(summarize_replicates(ds, o).rows(), 4u);
  o.samples = Summary::none;
  EXPECT_THROW(summarize_replicates(ds, o), DataError);
}

TEST(Summarize, RmBadDropsSpots) {
  MatrixD W(3, 2, std::vector<double>{1, 1, 100, 100, 3, 3});
  auto ds = testing_support::make_dataset(W, {}, {"x", "x", "x"});
  ds.badSpot[1] = 1;
  SummarizeOptions o;
  o.geneLabel = "Gene";
  o.spots = Summary::mean;
  o.samples = Summary::none;
  EXPECT_EQ(summarize_replicates(ds, o).W(0, 0), 104.0 / 3);
  o.rmBad = true;
  EXPECT_EQ(summarize_replicates(ds, o).W(0, 0), 2);
}

TEST(Mad, ConsistencyConstant) {
  EXPECT_NEAR(mad({1, 2, 3, 4, 100}), 1.4826, 1e-12);
  EXPECT_NEAR(mad({kMissing, 5, 5, 6}), 0.0, 0);
}
