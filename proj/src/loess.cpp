#include "arraykit/loess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arraykit/error.hpp"

namespace arraykit {

namespace {

struct Sorted {
  std::vector<double> x, y, robust;
};

// Weighted local-linear estimate at x0 over the q nearest sorted points.
double local_fit(const Sorted &s, double x0, std::size_t q) {
  const std::size_t n = s.x.size();
  // Window [lo, hi) of the q nearest points, grown from the insertion point.
  std::size_t hi = std::size_t(std::lower_bound(s.x.begin(), s.x.end(), x0) - s.x.begin());
  std::size_t lo = hi;
  while (hi - lo < q) {
    if (lo == 0) {
      ++hi;
    } else if (hi == n) {
      --lo;
    } else if (x0 - s.x[lo - 1] <= s.x[hi] - x0) {
      --lo;
    } else {
      ++hi;
    }
  }
  double h = std::max(x0 - s.x[lo], s.x[hi - 1] - x0);
  // Points tied with the boundary distance are included.
  while (lo > 0 && x0 - s.x[lo - 1] <= h) --lo;
  while (hi < n && s.x[hi] - x0 <= h) ++hi;

  const double hInner = 0.001 * h;
  const double hOuter = 0.999 * h;
  double sw = 0, swx = 0, swy = 0;
  std::vector<double> w(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) {
    const double d = std::abs(s.x[i] - x0);
    double wi;
    if (h <= 0 || d <= hInner) {
      wi = 1.0;
    } else if (d > hOuter) {
      wi = 0.0;
    } else {
      const double u = d / h;
      const double t = 1.0 - u * u * u;
      wi = t * t * t;
    }
    wi *= s.robust[i];
    w[i - lo] = wi;
    sw += wi;
    swx += wi * s.x[i];
    swy += wi * s.y[i];
  }
  if (sw <= 0) {
    // All neighbours rejected by the robustness weights: fall back to the
    // unweighted local mean.
    double m = 0;
    for (std::size_t i = lo; i < hi; ++i) m += s.y[i];
    return m / double(hi - lo);
  }
  const double mx = swx / sw;
  const double my = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    const double dx = s.x[i] - mx;
    sxx += w[i - lo] * dx * dx;
    sxy += w[i - lo] * dx * (s.y[i] - my);
  }
  const double range = s.x.back() - s.x.front();
  if (sxx <= sw * 1e-14 * range * range || sxx <= 0) return my;
  return my + (sxy / sxx) * (x0 - mx);
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double m = v[n / 2];
  if (n % 2 == 0) m = (m + *std::max_element(v.begin(), v.begin() + n / 2)) / 2;
  return m;
}

}  // namespace

std::vector<double> loess_fit(std::span<const double> x, std::span<const double> y,
                              std::span<const double> xEval, double span, int iterations, double delta) {
  if (!(span > 0 && span <= 1)) throw DataError("loess span must be in (0, 1]");
  if (!(delta >= 0)) throw DataError("loess delta must be >= 0");
  if (x.size() != y.size()) throw DataError("loess: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw DataError("loess: fewer than 2 points");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  Sorted s;
  s.x.resize(n);
  s.y.resize(n);
  s.robust.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.x[i] = x[order[i]];
    s.y[i] = y[order[i]];
  }
  const std::size_t q = std::clamp<std::size_t>(std::size_t(span * double(n) + 1e-7), 2, n);

  // Anchors: every point when delta = 0; otherwise the last point within
  // delta of the previous anchor (at least one step on), plus the maximum.
  const double step = delta * (s.x.back() - s.x.front());
  std::vector<std::size_t> anchors;
  if (step > 0) {
    std::size_t a = 0;
    anchors.push_back(0);
    while (a + 1 < n) {
      const auto within = std::size_t(std::upper_bound(s.x.begin(), s.x.end(), s.x[a] + step) - s.x.begin());
      a = std::max(a + 1, within - 1);
      anchors.push_back(a);
    }
  }
  std::vector<double> ax, af;  // anchor x and fitted value
  auto fit_anchors = [&] {
    ax.clear();
    af.clear();
    for (auto a : anchors) {
      if (!ax.empty() && s.x[a] == ax.back()) continue;
      ax.push_back(s.x[a]);
      af.push_back(local_fit(s, s.x[a], q));
    }
  };
  // Linear interpolation of the anchor fits; x0 within [ax.front(), ax.back()].
  auto interpolate = [&](double x0) {
    const auto k = std::size_t(std::lower_bound(ax.begin(), ax.end(), x0) - ax.begin());
    if (ax[k] == x0) return af[k];
    const double t = (x0 - ax[k - 1]) / (ax[k] - ax[k - 1]);
    return af[k - 1] + (af[k] - af[k - 1]) * t;
  };

  std::vector<double> residual(n);
  for (int it = 0; it < iterations; ++it) {
    if (anchors.empty()) {
      for (std::size_t i = 0; i < n; ++i) residual[i] = s.y[i] - local_fit(s, s.x[i], q);
    } else {
      fit_anchors();
      for (std::size_t i = 0; i < n; ++i) residual[i] = s.y[i] - interpolate(s.x[i]);
    }
    std::vector<double> absRes(n);
    for (std::size_t i = 0; i < n; ++i) absRes[i] = std::abs(residual[i]);
    const double scale = 6.0 * median_of(absRes);
    double meanAbsY = 0;
    for (double v : s.y) meanAbsY += std::abs(v);
    meanAbsY /= double(n);
    if (scale <= 6e-7 * meanAbsY || scale <= 0) break;  // exact fit, nothing to downweight
    for (std::size_t i = 0; i < n; ++i) {
      const double u = residual[i] / scale;
      s.robust[i] = std::abs(u) < 1 ? (1 - u * u) * (1 - u * u) : 0.0;
    }
  }
  std::vector<double> out(xEval.size());
  if (!anchors.empty()) fit_anchors();
  for (std::size_t i = 0; i < xEval.size(); ++i) {
    const double x0 = xEval[i];
    out[i] = anchors.empty() || x0 < s.x.front() || x0 > s.x.back() ? local_fit(s, x0, q) : interpolate(x0);
  }
  return out;
}

}  // namespace arraykit
