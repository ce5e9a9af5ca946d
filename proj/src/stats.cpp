#include "arraykit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/rng.hpp"

namespace arraykit::stats {

double mean(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / double(v.size() - 1);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::vector<double> ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double mid = (double(i) + double(j)) / 2 + 1;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = mid;
    i = j + 1;
  }
  return r;
}

std::string to_string(TestMethod m) {
  switch (m) {
    case TestMethod::welchT: return "Welch t";
    case TestMethod::pooledT: return "pooled t";
    case TestMethod::wilcoxonExact: return "Wilcoxon rank-sum (exact)";
    case TestMethod::wilcoxonNormal: return "Wilcoxon rank-sum (normal approximation)";
    case TestMethod::permutationT: return "permutation t";
    case TestMethod::bootstrapT: return "centred bootstrap t";
    case TestMethod::fisherZ: return "Fisher Z";
    case TestMethod::anovaF: return "ANOVA F";
    case TestMethod::contrastT: return "ANOVA contrast t";
  }
  return "?";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_size(std::span<const double> v, std::size_t n, const char *what) {
  if (v.size() < n)
    throw DataError(std::string(what) + ": each sample needs at least " + std::to_string(n) + " values");
}

struct Moments {
  double mean, var;
};

Moments moments(std::span<const double> v) { return {mean(v), variance(v)}; }

// Welch statistic; +-inf when both variances vanish but the means differ,
// 0 when everything is equal.
double welch_statistic(std::span<const double> x, std::span<const double> y) {
  const auto mx = moments(x), my = moments(y);
  const double se2 = mx.var / double(x.size()) + my.var / double(y.size());
  const double diff = mx.mean - my.mean;
  if (se2 <= 0) return diff == 0 ? 0.0 : std::copysign(HUGE_VAL, diff);
  return diff / std::sqrt(se2);
}

}  // namespace

TestResult welch_t(std::span<const double> x, std::span<const double> y) {
  require_size(x, 2, "welch_t");
  require_size(y, 2, "welch_t");
  const auto mx = moments(x), my = moments(y);
  if (mx.var == 0 && my.var == 0) throw DataError("welch_t: zero variance in both samples");
  const double nx = double(x.size()), ny = double(y.size());
  const double ax = mx.var / nx, ay = my.var / ny;
  const double t = (mx.mean - my.mean) / std::sqrt(ax + ay);
  const double df = (ax + ay) * (ax + ay) / (ax * ax / (nx - 1) + ay * ay / (ny - 1));
  return {t, df, kNaN, t_two_sided(t, df), TestMethod::welchT};
}

TestResult pooled_t(std::span<const double> x, std::span<const double> y) {
  require_size(x, 2, "pooled_t");
  require_size(y, 2, "pooled_t");
  const auto mx = moments(x), my = moments(y);
  const double nx = double(x.size()), ny = double(y.size());
  const double df = nx + ny - 2;
  const double sp2 = ((nx - 1) * mx.var + (ny - 1) * my.var) / df;
  if (sp2 == 0) throw DataError("pooled_t: zero pooled variance");
  const double t = (mx.mean - my.mean) / std::sqrt(sp2 * (1 / nx + 1 / ny));
  return {t, df, kNaN, t_two_sided(t, df), TestMethod::pooledT};
}

TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, bool exact) {
  require_size(x, 1, "wilcoxon_rank_sum");
  require_size(y, 1, "wilcoxon_rank_sum");
  const std::size_t nx = x.size(), ny = y.size(), N = nx + ny;
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto r = ranks(pooled);
  double rx = 0;
  for (std::size_t i = 0; i < nx; ++i) rx += r[i];
  const double W = rx - double(nx) * double(nx + 1) / 2;

  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  const bool ties = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();

  if (!ties && (exact || N <= 20)) {
    // counts[k][s]: subsets of size k from ranks seen so far with rank sum s,
    // expressed through U = s - k(k+1)/2 at the end.
    const std::size_t maxU = nx * ny;
    std::vector<std::vector<double>> counts(nx + 1, std::vector<double>(maxU + 1, 0.0));
    counts[0][0] = 1;
    // Adding rank v (1..N) to a subset of size k-1 increases U by v - k.
    for (std::size_t v = 1; v <= N; ++v) {
      for (std::size_t k = std::min(v, nx); k >= 1; --k) {
        const std::size_t inc = v - k;
        if (inc > maxU) continue;
        for (std::size_t u = maxU - inc + 1; u-- > 0;) counts[k][u + inc] += counts[k - 1][u];
      }
    }
    const auto &dist = counts[nx];
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    const auto w = std::size_t(std::llround(W));
    double lower = 0, upper = 0;
    for (std::size_t u = 0; u <= maxU; ++u) {
      if (u <= w) lower += dist[u];
      if (u >= w) upper += dist[u];
    }
    const double p = std::min(1.0, 2 * std::min(lower, upper) / total);
    return {W, kNaN, kNaN, p, TestMethod::wilcoxonExact};
  }

  double tieSum = 0;
  for (std::size_t i = 0; i < N;) {
    std::size_t j = i;
    while (j + 1 < N && sorted[j + 1] == sorted[i]) ++j;
    const double t = double(j - i + 1);
    tieSum += t * t * t - t;
    i = j + 1;
  }
  const double dnx = double(nx), dny = double(ny), dN = double(N);
  const double sigma = std::sqrt(dnx * dny / 12 * ((dN + 1) - tieSum / (dN * (dN - 1))));
  if (sigma == 0) return {W, kNaN, kNaN, 1.0, TestMethod::wilcoxonNormal};
  double z = W - dnx * dny / 2;
  const double correction = z > 0 ? 0.5 : z < 0 ? -0.5 : 0.0;
  z = (z - correction) / sigma;
  const double p = std::min(1.0, 2 * std::min(norm_cdf(z), norm_sf(z)));
  return {W, kNaN, kNaN, p, TestMethod::wilcoxonNormal};
}

TestResult bootstrap_t(std::span<const double> x, std::span<const double> y, int B, std::uint64_t seed,
                       ResampleMode mode) {
  require_size(x, 2, "bootstrap_t");
  require_size(y, 2, "bootstrap_t");
  if (B < 100) throw DataError("bootstrap_t: B must be >= 100");
  std::vector<double> pooled(x.begin(), x.end());
  pooled.insert(pooled.end(), y.begin(), y.end());
  if (variance(pooled) == 0) throw DataError("bootstrap_t: zero pooled variance");

  const double tObs = welch_statistic(x, y);
  const double threshold = std::abs(tObs) * (1 - kResampleTieTolerance);
  const std::size_t nx = x.size(), ny = y.size();
  Rng rng = make_rng(seed);
  std::size_t extreme = 0;
  std::vector<double> xs(nx), ys(ny);

  if (mode == ResampleMode::permutation) {
    std::vector<double> work = pooled;
    for (int b = 0; b < B; ++b) {
      shuffle(work.begin(), work.end(), rng);
      const double t = welch_statistic(std::span(work).first(nx), std::span(work).subspan(nx));
      if (std::abs(t) >= threshold) ++extreme;
    }
  } else {
    const double mx = mean(x), my = mean(y);
    for (int b = 0; b < B; ++b) {
      for (auto &v : xs) v = x[uniform_index(rng, nx)] - mx;
      for (auto &v : ys) v = y[uniform_index(rng, ny)] - my;
      const double t = welch_statistic(xs, ys);
      if (std::abs(t) >= threshold) ++extreme;
    }
  }
  const double p = double(extreme + 1) / double(B + 1);
  return {tObs, kNaN, kNaN, p,
          mode == ResampleMode::permutation ? TestMethod::permutationT : TestMethod::bootstrapT};
}

double correlation_p(double r, std::size_t n) {
  if (n < 3) throw DataError("correlation test needs n >= 3");
  if (std::abs(r) >= 1) return 0.0;
  const double t = r * std::sqrt(double(n) - 2) / std::sqrt(1 - r * r);
  return t_two_sided(t, double(n) - 2);
}

namespace {

double pearson_r(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0 || syy == 0) throw DataError("correlation: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

CorrelationEstimate pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: samples differ in length");
  if (x.size() < 3) throw DataError("pearson: need n >= 3");
  const double r = pearson_r(x, y);
  return {r, x.size(), std::nullopt, correlation_p(r, x.size())};
}

CorrelationEstimate robust_cor(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("robust_cor: samples differ in length");
  const std::size_t n = x.size();
  if (n < 4) throw DataError("robust_cor: need n >= 4");
  const double full = pearson_r(x, y);
  std::vector<double> xs(n - 1), ys(n - 1);
  std::size_t best = 0;
  double bestDelta = -1, bestR = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0, t = 0; j < n; ++j) {
      if (j == i) continue;
      xs[t] = x[j];
      ys[t] = y[j];
      ++t;
    }
    const double r = pearson_r(xs, ys);
    const double delta = std::abs(r - full);
    if (delta > bestDelta) {
      bestDelta = delta;
      best = i;
      bestR = r;
    }
  }
  return {bestR, n - 1, best, correlation_p(bestR, n - 1)};
}

TestResult fisher_z_compare(double rA, std::size_t nA, double rB, std::size_t nB) {
  if (nA <= 3 || nB <= 3) throw DataError("fisher_z_compare: need n >= 4 in both conditions");
  if (!(std::abs(rA) < 1 && std::abs(rB) < 1)) throw DataError("fisher_z_compare: |r| must be < 1");
  const double z = (std::atanh(rA) - std::atanh(rB)) / std::sqrt(1.0 / double(nA - 3) + 1.0 / double(nB - 3));
  return {z, kNaN, kNaN, std::min(1.0, 2 * norm_sf(std::abs(z))), TestMethod::fisherZ};
}

namespace {

std::vector<double> normal_scores(std::span<const double> v, Rng rng) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double range = *hi - *lo;
  if (!(range > 0)) throw DataError("kraskov_mi: constant input");
  std::vector<double> jittered(v.begin(), v.end());
  for (auto &x : jittered) x += (2 * uniform01(rng) - 1) * 1e-10 * range;
  auto r = ranks(jittered);
  const double n1 = double(v.size() + 1);
  for (auto &x : r) x = norm_quantile(x / n1);
  return r;
}

}  // namespace

double kraskov_mi(std::span<const double> x, std::span<const double> y, int k, std::uint64_t seed) {
  if (x.size() != y.size()) throw DataError("kraskov_mi: samples differ in length");
  const std::size_t n = x.size();
  if (k < 1 || std::size_t(k) >= n) throw DataError("kraskov_mi: need n > k >= 1");
  const auto sx = normal_scores(x, make_rng(seed, {0}));
  const auto sy = normal_scores(y, make_rng(seed, {1}));

  std::vector<double> term(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.push_back(std::max(std::abs(sx[i] - sx[j]), std::abs(sy[i] - sy[j])));
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    const double eps = d[std::size_t(k - 1)];
    std::size_t nx = 0, ny = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (std::abs(sx[i] - sx[j]) < eps) ++nx;
      if (std::abs(sy[i] - sy[j]) < eps) ++ny;
    }
    term[i] = digamma(double(nx) + 1) + digamma(double(ny) + 1);
  });
  double avg = 0;
  for (double t : term) avg += t;
  avg /= double(n);
  return digamma(double(k)) + digamma(double(n)) - avg;
}

PAdjust parse_padjust(const std::string &s) {
  if (s == "none") return PAdjust::none;
  if (s == "bonferroni") return PAdjust::bonferroni;
  if (s == "holm") return PAdjust::holm;
  if (s == "BH" || s == "fdr") return PAdjust::BH;
  if (s == "BY") return PAdjust::BY;
  throw UsageError("unknown p-value adjustment '" + s + "' (none, bonferroni, holm, BH, BY)");
}

std::string to_string(PAdjust m) {
  switch (m) {
    case PAdjust::none: return "none";
    case PAdjust::bonferroni: return "bonferroni";
    case PAdjust::holm: return "holm";
    case PAdjust::BH: return "BH";
    case PAdjust::BY: return "BY";
  }
  return "?";
}

std::vector<double> adjust_pvalues(std::span<const double> p, PAdjust method) {
  for (double v : p)
    if (!(v >= 0 && v <= 1)) throw DataError("adjust_pvalues: p-value outside [0, 1]");
  const std::size_t m = p.size();
  std::vector<double> out(p.begin(), p.end());
  if (m == 0 || method == PAdjust::none) return out;
  const double dm = double(m);
  if (method == PAdjust::bonferroni) {
    for (auto &v : out) v = std::min(1.0, v * dm);
    return out;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  if (method == PAdjust::holm) {
    double running = 0;
    for (std::size_t i = 0; i < m; ++i) {
      running = std::max(running, (dm - double(i)) * p[order[i]]);
      out[order[i]] = std::min(1.0, running);
    }
    return out;
  }
  double q = 1;
  if (method == PAdjust::BY) {
    q = 0;
    for (std::size_t i = 1; i <= m; ++i) q += 1.0 / double(i);
  }
  double running = 1;
  for (std::size_t i = m; i-- > 0;) {
    running = std::min(running, q * dm / double(i + 1) * p[order[i]]);
    out[order[i]] = std::min(1.0, running);
  }
  return out;
}

}  // namespace arraykit::stats
