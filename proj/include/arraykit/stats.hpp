#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace arraykit::stats {

// Distributions ---------------------------------------------------------

double log_gamma(double x);
double digamma(double x);
double norm_cdf(double z);
/// Upper tail 1 - Phi(z), accurate far into the tail.
double norm_sf(double z);
double norm_quantile(double p);
double t_cdf(double t, double df);
/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double t_two_sided(double t, double df);
double chi_sq_cdf(double x, double k);
/// 1 - chi_sq_cdf(x, k) without cancellation.
double chi_sq_sf(double x, double k);
/// P(F >= f) for the F(d1, d2) distribution.
double f_sf(double f, double d1, double d2);
/// log C(n, k).
double log_choose(double n, double k);
/// P(X >= k) for X ~ Hypergeometric(population N, K successes, n draws),
/// summed in log space.
double hypergeom_tail(std::int64_t k, std::int64_t N, std::int64_t K, std::int64_t n);

// Tests -----------------------------------------------------------------

enum class TestMethod {
  welchT,
  pooledT,
  wilcoxonExact,
  wilcoxonNormal,
  permutationT,
  bootstrapT,
  fisherZ,
  anovaF,
  contrastT,
};

std::string to_string(TestMethod m);

struct TestResult {
  double statistic = 0;
  double df = 0;   // NaN when not applicable
  double df2 = 0;  // second df of F tests, NaN otherwise
  double pValue = 1;
  TestMethod method = TestMethod::welchT;
};

/// Welch t with Satterthwaite df. Throws DataError when both variances are 0.
TestResult welch_t(std::span<const double> x, std::span<const double> y);
/// Equal-variance two-sample t with n1 + n2 - 2 df.
TestResult pooled_t(std::span<const double> x, std::span<const double> y);

/// Rank-sum test; the statistic is W = (rank sum of x) - nx(nx+1)/2. The
/// exact null distribution is used when there are no ties and either
/// `exact` is requested or nx + ny <= 20; otherwise the tie-corrected
/// normal approximation with continuity correction.
TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, bool exact = false);

enum class ResampleMode {
  permutation,         // relabel the pooled sample, group sizes preserved
  centeredBootstrap,   // resample each mean-centred group with replacement
};

/// Welch t compared against B resampled statistics;
/// p = (#{|t*| >= |t_obs|} + 1) / (B + 1).
TestResult bootstrap_t(std::span<const double> x, std::span<const double> y, int B, std::uint64_t seed,
                       ResampleMode mode = ResampleMode::permutation);

/// Relative slack used when comparing resampled |t| against the observed
/// value, so mirror-image relabelings count as "at least as extreme".
inline constexpr double kResampleTieTolerance = 1e-12;

// Association -----------------------------------------------------------

struct CorrelationEstimate {
  double r = 0;
  std::size_t n = 0;
  std::optional<std::size_t> removedIndex;  // 0-based
  double pZero = 1;
};

/// Two-sided p of the zero-correlation t test (df = n - 2); |r| = 1 gives 0.
double correlation_p(double r, std::size_t n);

CorrelationEstimate pearson(std::span<const double> x, std::span<const double> y);

/// Drops the single most influential point (largest |r_-i - r|, lowest index
/// on ties) and reports the correlation of the remaining n - 1 points.
CorrelationEstimate robust_cor(std::span<const double> x, std::span<const double> y);

/// Z = (atanh rA - atanh rB) / sqrt(1/(nA-3) + 1/(nB-3)), two-sided normal p.
TestResult fisher_z_compare(double rA, std::size_t nA, double rB, std::size_t nB);

/// Kraskov-Stoegbauer-Grassberger estimator 1 (max-norm, k neighbours) in
/// nats. Each margin is first replaced by normal scores of its ranks, with
/// ties broken by seeded jitter of 1e-10 * range; the estimate is therefore
/// invariant under strictly monotone transforms of either margin. Not clamped.
double kraskov_mi(std::span<const double> x, std::span<const double> y, int k, std::uint64_t seed);

// Multiplicity ----------------------------------------------------------

enum class PAdjust { none, bonferroni, holm, BH, BY };
PAdjust parse_padjust(const std::string &s);
std::string to_string(PAdjust m);

/// Adjusted p-values in input order, clamped to [0, 1].
std::vector<double> adjust_pvalues(std::span<const double> p, PAdjust method);

// Small helpers ---------------------------------------------------------

double mean(std::span<const double> v);
/// Sample variance (n - 1 denominator).
double variance(std::span<const double> v);
double median(std::vector<double> v);
/// Midranks (1-based) of `v`.
std::vector<double> ranks(std::span<const double> v);

}  // namespace arraykit::stats
