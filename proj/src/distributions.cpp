#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "arraykit/error.hpp"
#include "arraykit/stats.hpp"

namespace arraykit::stats {

namespace bm = boost::math;

double log_gamma(double x) {
  if (!(x > 0)) throw DataError("log_gamma: x must be > 0");
  return std::lgamma(x);
}

double digamma(double x) {
  if (!(x > 0)) throw DataError("digamma: x must be > 0");
  return bm::digamma(x);
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double norm_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double norm_quantile(double p) {
  if (!(p > 0 && p < 1)) throw DataError("norm_quantile: p must be in (0, 1)");
  return bm::quantile(bm::normal_distribution<double>(), p);
}

double t_cdf(double t, double df) {
  if (!(df > 0)) throw DataError("t_cdf: df must be > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  return bm::cdf(bm::students_t_distribution<double>(df), t);
}

double t_two_sided(double t, double df) {
  if (!(df > 0)) throw DataError("t_two_sided: df must be > 0");
  if (std::isinf(t)) return 0.0;
  const double p = 2.0 * bm::cdf(bm::complement(bm::students_t_distribution<double>(df), std::abs(t)));
  return std::min(1.0, p);
}

double chi_sq_cdf(double x, double k) {
  if (!(k > 0)) throw DataError("chi_sq_cdf: k must be > 0");
  if (x <= 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return bm::gamma_p(k / 2, x / 2);
}

double chi_sq_sf(double x, double k) {
  if (!(k > 0)) throw DataError("chi_sq_sf: k must be > 0");
  if (x <= 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return bm::gamma_q(k / 2, x / 2);
}

double f_sf(double f, double d1, double d2) {
  if (!(d1 > 0 && d2 > 0)) throw DataError("f_sf: degrees of freedom must be > 0");
  if (f <= 0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return bm::cdf(bm::complement(bm::fisher_f_distribution<double>(d1, d2), f));
}

double log_choose(double n, double k) {
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

double hypergeom_tail(std::int64_t k, std::int64_t N, std::int64_t K, std::int64_t n) {
  if (N < 0 || K < 0 || n < 0 || K > N || n > N) throw DataError("hypergeom_tail: need 0 <= K, n <= N");
  const std::int64_t lo = std::max<std::int64_t>(0, n - (N - K));
  const std::int64_t hi = std::min(K, n);
  if (k <= lo) return 1.0;
  if (k > hi) return 0.0;
  const double denom = log_choose(double(N), double(n));
  // log-sum-exp over the upper tail terms
  std::vector<double> terms;
  for (std::int64_t i = k; i <= hi; ++i)
    terms.push_back(log_choose(double(K), double(i)) + log_choose(double(N - K), double(n - i)) - denom);
  double mx = -std::numeric_limits<double>::infinity();
  for (double t : terms) mx = std::max(mx, t);
  double s = 0;
  for (double t : terms) s += std::exp(t - mx);
  return std::min(1.0, std::exp(mx + std::log(s)));
}

}  // namespace arraykit::stats
