#include "arraykit/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/rng.hpp"

namespace arraykit {

DistanceKind parse_distance(const std::string &s) {
  if (s == "euclidean") return DistanceKind::euclidean;
  if (s == "oneMinusCor" || s == "cor") return DistanceKind::oneMinusCor;
  if (s == "oneMinusAbsCor" || s == "abscor") return DistanceKind::oneMinusAbsCor;
  throw UsageError("unknown distance '" + s + "' (euclidean, oneMinusCor, oneMinusAbsCor)");
}

std::string to_string(DistanceKind k) {
  switch (k) {
    case DistanceKind::euclidean: return "euclidean";
    case DistanceKind::oneMinusCor: return "oneMinusCor";
    case DistanceKind::oneMinusAbsCor: return "oneMinusAbsCor";
  }
  return "?";
}

Linkage parse_linkage(const std::string &s) {
  if (s == "single") return Linkage::single;
  if (s == "complete") return Linkage::complete;
  if (s == "average") return Linkage::average;
  throw UsageError("unknown linkage '" + s + "' (single, complete, average)");
}

std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
  }
  return "?";
}

SomTopology parse_topology(const std::string &s) {
  if (s == "rect") return SomTopology::rect;
  if (s == "hex" || s == "hexa") return SomTopology::hex;
  throw UsageError("unknown SOM topology '" + s + "' (rect, hex)");
}

std::string to_string(SomTopology t) { return t == SomTopology::rect ? "rect" : "hex"; }

ClusterOn parse_cluster_on(const std::string &s) {
  if (s == "genes") return ClusterOn::genes;
  if (s == "samples") return ClusterOn::samples;
  throw UsageError("unknown clustering target '" + s + "' (genes, samples)");
}

bool Partition::operator==(const Partition &o) const {
  auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
  return assignment == o.assignment && bitwise_equal(centers, o.centers) && same(inertia, o.inertia) &&
         same(quantizationError, o.quantizationError) && inertiaHistory == o.inertiaHistory && xdim == o.xdim &&
         ydim == o.ydim && topology == o.topology && itemLabels == o.itemLabels && warnings == o.warnings;
}

namespace {

double pair_distance(std::span<const double> a, std::span<const double> b, DistanceKind kind, std::size_t i,
                     std::size_t j) {
  std::size_t n = 0;
  if (kind == DistanceKind::euclidean) {
    double ss = 0;
    for (std::size_t f = 0; f < a.size(); ++f) {
      if (!std::isfinite(a[f]) || !std::isfinite(b[f])) continue;
      const double d = a[f] - b[f];
      ss += d * d;
      ++n;
    }
    if (n == 0) throw DataError("distance: items " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                " share no finite feature");
    return std::sqrt(ss);
  }
  double sa = 0, sb = 0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (!std::isfinite(a[f]) || !std::isfinite(b[f])) continue;
    sa += a[f];
    sb += b[f];
    ++n;
  }
  if (n < 3)
    throw DataError("distance: items " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " share only " +
                    std::to_string(n) + " finite features (need 3)");
  const double ma = sa / double(n), mb = sb / double(n);
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (!std::isfinite(a[f]) || !std::isfinite(b[f])) continue;
    const double da = a[f] - ma, db = b[f] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0 || sbb == 0)
    throw DataError("distance: item " + std::to_string((saa == 0 ? i : j) + 1) + " is constant");
  const double r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
  return kind == DistanceKind::oneMinusCor ? 1 - r : 1 - std::abs(r);
}

}  // namespace

MatrixD distance_matrix(const MatrixD &M, DistanceKind kind) {
  const std::size_t n = M.rows();
  if (n < 2) throw DataError("distance: need at least 2 items");
  MatrixD D(n, n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) D(i, j) = pair_distance(M.row(i), M.row(j), kind, i, j);
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) D(j, i) = D(i, j);
  return D;
}

std::vector<std::size_t> Dendrogram::leaf_order() const {
  const std::size_t n = merges.size() + 1;
  std::vector<std::vector<std::size_t>> members(n + merges.size());
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  for (std::size_t k = 0; k < merges.size(); ++k) {
    auto left = members[merges[k].a], right = members[merges[k].b];
    const auto minL = *std::min_element(left.begin(), left.end());
    const auto minR = *std::min_element(right.begin(), right.end());
    if (minR < minL) std::swap(left, right);
    left.insert(left.end(), right.begin(), right.end());
    members[n + k] = std::move(left);
  }
  return merges.empty() ? std::vector<std::size_t>{0} : members.back();
}

Dendrogram hier_cluster(const MatrixD &D, Linkage linkage, std::vector<std::string> labels) {
  const std::size_t n = D.rows();
  if (n < 2 || D.cols() != n) throw DataError("hierarchical clustering: need a square distance matrix of >= 2 items");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(D(i, j))) throw DataError("hierarchical clustering: non-finite distance");
  if (labels.empty())
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i + 1));
  Dendrogram dg;
  dg.leafLabels = std::move(labels);
  dg.linkage = linkage;
  MatrixD d = D;
  std::vector<char> active(n, 1);
  std::vector<std::size_t> id(n), size(n, 1);
  std::iota(id.begin(), id.end(), 0);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0, bj = 0;
    double best = HUGE_VAL;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    dg.merges.push_back({std::min(id[bi], id[bj]), std::max(id[bi], id[bj]), best});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      double v = 0;
      switch (linkage) {
        case Linkage::single: v = std::min(d(bi, k), d(bj, k)); break;
        case Linkage::complete: v = std::max(d(bi, k), d(bj, k)); break;
        case Linkage::average:
          v = (double(size[bi]) * d(bi, k) + double(size[bj]) * d(bj, k)) / double(size[bi] + size[bj]);
          break;
      }
      d(bi, k) = d(k, bi) = v;
    }
    active[bj] = 0;
    size[bi] += size[bj];
    id[bi] = n + step;
  }
  return dg;
}

std::size_t impute_feature_means(MatrixD &M) {
  std::size_t replaced = 0;
  for (std::size_t f = 0; f < M.cols(); ++f) {
    double s = 0;
    std::size_t c = 0;
    for (std::size_t i = 0; i < M.rows(); ++i)
      if (std::isfinite(M(i, f))) {
        s += M(i, f);
        ++c;
      }
    if (c == 0) throw DataError("feature " + std::to_string(f + 1) + " has no finite value to impute from");
    for (std::size_t i = 0; i < M.rows(); ++i)
      if (!std::isfinite(M(i, f))) {
        M(i, f) = s / double(c);
        ++replaced;
      }
  }
  return replaced;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    const double d = a[f] - b[f];
    s += d * d;
  }
  return s;
}

std::size_t nearest(const MatrixD &centers, std::span<const double> x, double *dist = nullptr) {
  std::size_t best = 0;
  double bd = HUGE_VAL;
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = sq_dist(centers.row(c), x);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  if (dist) *dist = bd;
  return best;
}

void finish(Partition &p, const MatrixD &M) {
  p.inertia = 0;
  p.quantizationError = 0;
  for (std::size_t i = 0; i < M.rows(); ++i) {
    const double d = sq_dist(M.row(i), p.centers.row(p.assignment[i]));
    p.inertia += d;
    p.quantizationError += std::sqrt(d);
  }
  p.quantizationError /= double(M.rows());
}

std::vector<std::string> impute_with_warning(MatrixD &M) {
  const auto replaced = impute_feature_means(M);
  if (replaced == 0) return {};
  return {std::to_string(replaced) + " missing cells replaced by feature means"};
}

Partition lloyd(const MatrixD &M, std::size_t k, Rng rng) {
  const std::size_t n = M.rows(), p = M.cols();
  Partition part;
  part.centers = MatrixD(k, p);
  // k-means++ seeding
  std::vector<double> d2(n, HUGE_VAL);
  std::size_t first = uniform_index(rng, n);
  std::copy(M.row(first).begin(), M.row(first).end(), part.centers.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(M.row(i), part.centers.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0) {
      const double u = uniform01(rng) * total;
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    std::copy(M.row(pick).begin(), M.row(pick).end(), part.centers.row(c).begin());
  }
  part.assignment.assign(n, 0);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = nearest(part.centers, M.row(i));
      if (c != part.assignment[i]) changed = true;
      part.assignment[i] = c;
    }
    if (!changed) break;
    MatrixD sums(k, p, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < p; ++f) sums(part.assignment[i], f) += M(i, f);
      ++counts[part.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (counts[c] > 0)  // an emptied cluster keeps its previous center
        for (std::size_t f = 0; f < p; ++f) part.centers(c, f) = sums(c, f) / double(counts[c]);
    finish(part, M);
    part.inertiaHistory.push_back(part.inertia);
  }
  finish(part, M);
  return part;
}

}  // namespace

Partition kmeans(MatrixD M, std::size_t k, int restarts, std::uint64_t seed) {
  if (k == 0) throw DataError("k-means: k must be >= 1");
  if (k > M.rows()) throw DataError("k-means: k = " + std::to_string(k) + " exceeds the " + std::to_string(M.rows()) + " items");
  if (restarts < 1) throw DataError("k-means: restarts must be >= 1");
  auto warnings = impute_with_warning(M);
  std::vector<Partition> runs(static_cast<std::size_t>(restarts));
  parallel_for(runs.size(), [&](std::size_t r) { runs[r] = lloyd(M, k, make_rng(seed, {r})); });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  Partition out = std::move(runs[best]);
  out.warnings = std::move(warnings);
  return out;
}

Partition som(MatrixD M, const SomOptions &opt) {
  if (opt.xdim < 1 || opt.ydim < 1) throw DataError("SOM: grid dimensions must be >= 1");
  if (M.rows() == 0) throw DataError("SOM: no items");
  if (!(opt.alpha0 > 0)) throw DataError("SOM: alpha0 must be > 0");
  auto warnings = impute_with_warning(M);
  const std::size_t n = M.rows(), p = M.cols();
  const std::size_t units = std::size_t(opt.xdim) * std::size_t(opt.ydim);
  const long long steps = opt.steps < 0 ? 100LL * (long long)n : opt.steps;
  const double radius0 = opt.radius0 < 0 ? std::max(opt.xdim, opt.ydim) / 2.0 : opt.radius0;

  // unit u sits at column u % xdim, row u / xdim
  std::vector<double> ux(units), uy(units);
  for (std::size_t u = 0; u < units; ++u) {
    const double col = double(u % std::size_t(opt.xdim)), row = double(u / std::size_t(opt.xdim));
    if (opt.topology == SomTopology::hex) {
      ux[u] = col + (std::size_t(row) % 2 == 1 ? 0.5 : 0.0);
      uy[u] = row * std::sqrt(3.0) / 2;
    } else {
      ux[u] = col;
      uy[u] = row;
    }
  }

  Rng rng = make_rng(opt.seed, {0x50fULL});
  Partition part;
  part.xdim = opt.xdim;
  part.ydim = opt.ydim;
  part.topology = opt.topology;
  part.centers = MatrixD(units, p);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), rng);
  for (std::size_t u = 0; u < units; ++u) {
    const auto src = M.row(order[u % n]);
    std::copy(src.begin(), src.end(), part.centers.row(u).begin());
  }
  for (long long t = 0; t < steps; ++t) {
    const double frac = double(t) / double(steps);
    const double alpha = opt.alpha0 + (0.01 - opt.alpha0) * frac;
    const double radius = radius0 * (1 - frac);
    const auto x = M.row(uniform_index(rng, n));
    const auto bmu = nearest(part.centers, x);
    for (std::size_t u = 0; u < units; ++u) {
      double h;
      if (u == bmu) {
        h = 1;
      } else if (radius <= 0) {
        continue;
      } else {
        const double dx = ux[u] - ux[bmu], dy = uy[u] - uy[bmu];
        h = std::exp(-(dx * dx + dy * dy) / (2 * radius * radius));
      }
      for (std::size_t f = 0; f < p; ++f) part.centers(u, f) += alpha * h * (x[f] - part.centers(u, f));
    }
  }
  part.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) part.assignment[i] = nearest(part.centers, M.row(i));
  finish(part, M);
  part.warnings = std::move(warnings);
  return part;
}

ClusterInput select_de_matrix(const DEResult &res, stats::PAdjust adjust, std::size_t nDE, double pCut, ClusterOn on,
                              std::size_t family) {
  if (family >= res.families.size()) throw DataError("no statistic family " + std::to_string(family));
  const auto adj = stats::adjust_pvalues(res.rawP.col(family), adjust);
  std::vector<std::size_t> order(res.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (adj[a] != adj[b]) return adj[a] < adj[b];
    return res.rawP(a, family) < res.rawP(b, family);
  });
  ClusterInput in;
  std::vector<std::size_t> pick;
  if (nDE > 0) {
    if (nDE > order.size()) {
      in.warnings.push_back("requested " + std::to_string(nDE) + " genes but only " + std::to_string(order.size()) +
                            " were tested; using all");
      nDE = order.size();
    }
    pick.assign(order.begin(), order.begin() + std::ptrdiff_t(nDE));
  } else {
    for (auto g : order)
      if (adj[g] <= pCut) pick.push_back(g);
  }
  if (pick.empty()) throw DataError("no gene passes the selection");
  if (on == ClusterOn::genes) {
    if (pick.size() < 2) throw DataError("clustering genes needs at least 2 selected genes");
    in.data = MatrixD(pick.size(), res.W.cols());
    for (std::size_t r = 0; r < pick.size(); ++r) {
      for (std::size_t s = 0; s < res.W.cols(); ++s) in.data(r, s) = res.W(pick[r], s);
      in.labels.push_back(res.geneIds[pick[r]]);
    }
  } else {
    in.data = MatrixD(res.W.cols(), pick.size());
    for (std::size_t s = 0; s < res.W.cols(); ++s)
      for (std::size_t r = 0; r < pick.size(); ++r) in.data(s, r) = res.W(pick[r], s);
    in.labels = res.sampleNames;
  }
  return in;
}

}  // namespace arraykit
