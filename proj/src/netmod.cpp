#include "arraykit/netmod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/rng.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

CorKind parse_cor_kind(const std::string &s) {
  if (s == "pearson") return CorKind::pearson;
  if (s == "robust") return CorKind::robust;
  if (s == "mi") return CorKind::mi;
  throw UsageError("unknown association measure '" + s + "' (pearson, robust, mi)");
}

std::string to_string(CorKind k) {
  switch (k) {
    case CorKind::pearson: return "pearson";
    case CorKind::robust: return "robust";
    case CorKind::mi: return "mi";
  }
  return "?";
}

ModuleMode parse_module_mode(const std::string &s) {
  if (s == "condition" || s == "byCondition") return ModuleMode::byCondition;
  if (s == "sample" || s == "bySample") return ModuleMode::bySample;
  throw UsageError("unknown module mode '" + s + "' (condition, sample)");
}

std::string to_string(ModuleMode m) { return m == ModuleMode::byCondition ? "condition" : "sample"; }

bool RelNet::operator==(const RelNet &o) const {
  if (data.size() != o.data.size()) return false;
  for (std::size_t c = 0; c < data.size(); ++c)
    if (!bitwise_equal(data[c], o.data[c])) return false;
  auto sameEdges = [](const std::vector<Edge> &a, const std::vector<Edge> &b) {
    if (a.size() != b.size()) return false;
    for (std::size_t e = 0; e < a.size(); ++e)
      if (a[e].i != b[e].i || a[e].j != b[e].j ||
          !bitwise_equal(MatrixD(1, 2, {a[e].value, a[e].p}), MatrixD(1, 2, {b[e].value, b[e].p})))
        return false;
    return true;
  };
  return geneIds == o.geneIds && rows == o.rows && sampleLabelId == o.sampleLabelId && conditions == o.conditions &&
         kind == o.kind && (cutPval == o.cutPval) && bitwise_equal(cor, o.cor) && bitwise_equal(p, o.p) &&
         sameEdges(edges, o.edges) && bitwise_equal(rA, o.rA) && bitwise_equal(rB, o.rB) &&
         bitwise_equal(dZ, o.dZ) && notes == o.notes;
}

bool ModuleResult::operator==(const ModuleResult &o) const {
  return groups == o.groups && columns == o.columns && state == o.state && bitwise_equal(pInduced, o.pInduced) &&
         bitwise_equal(pRepressed, o.pRepressed) && bitwise_equal(pValue, o.pValue) && bitwise_equal(score, o.score) &&
         universe == o.universe && cutExp == o.cutExp && cutPhiper == o.cutPhiper && mode == o.mode &&
         adjust == o.adjust && sampleLabelId == o.sampleLabelId;
}

bool NetScore::operator==(const NetScore &o) const {
  return networks == o.networks && conditions == o.conditions && bitwise_equal(statistic, o.statistic) &&
         bitwise_equal(pValue, o.pValue) && edgeCount == o.edgeCount && sampleLabelId == o.sampleLabelId &&
         notes == o.notes;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> condition_samples(const NormalizedDataset &ds, const std::string &label,
                                           const std::string &condition) {
  if (label.empty()) throw UsageError("a sample label is required");
  const auto idx = level_index(ds.annot.samples, label);
  auto it = std::find(idx.levels.begin(), idx.levels.end(), condition);
  if (it == idx.levels.end())
    throw DataError("label '" + label + "' has no level '" + condition + "' (levels: " + text::join(idx.levels, ", ") +
                    ")");
  auto s = idx.members(int(it - idx.levels.begin()));
  if (s.size() < 4)
    throw DataError("condition '" + condition + "' has " + std::to_string(s.size()) + " samples; at least 4 needed");
  return s;
}

MatrixD condition_data(const NormalizedDataset &ds, const std::vector<std::size_t> &rows,
                       const std::vector<std::size_t> &samples, const std::vector<std::string> &ids,
                       const std::string &condition) {
  MatrixD M(rows.size(), samples.size());
  for (std::size_t g = 0; g < rows.size(); ++g) {
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (std::size_t s = 0; s < samples.size(); ++s) {
      M(g, s) = ds.W(rows[g], samples[s]);
      if (std::isfinite(M(g, s))) {
        lo = std::min(lo, M(g, s));
        hi = std::max(hi, M(g, s));
      }
    }
    if (lo == hi) throw DataError("gene '" + ids[g] + "' is constant in condition '" + condition + "'");
  }
  return M;
}

void paired(std::span<const double> a, std::span<const double> b, std::vector<double> &x, std::vector<double> &y) {
  x.clear();
  y.clear();
  for (std::size_t s = 0; s < a.size(); ++s)
    if (std::isfinite(a[s]) && std::isfinite(b[s])) {
      x.push_back(a[s]);
      y.push_back(b[s]);
    }
}

RelNet pool_setup(const NormalizedDataset &ds, const std::vector<std::size_t> &poolRows, const RelNetOptions &opt) {
  RelNet net;
  net.rows = poolRows;
  std::sort(net.rows.begin(), net.rows.end());
  net.rows.erase(std::unique(net.rows.begin(), net.rows.end()), net.rows.end());
  if (net.rows.size() < 2) throw DataError("the gene pool resolves to fewer than 2 genes");
  const auto ids = gene_ids(ds.annot.genes, opt.geneIdLabel);
  for (auto r : net.rows) {
    if (r >= ds.rows()) throw DataError("pool row out of range");
    net.geneIds.push_back(ids[r]);
  }
  net.sampleLabelId = opt.sampleLabel;
  net.cutPval = opt.cutPval;
  return net;
}

void collect_edges(RelNet &net, const MatrixD &value) {
  for (std::size_t i = 0; i < net.geneIds.size(); ++i)
    for (std::size_t j = i + 1; j < net.geneIds.size(); ++j)
      if (net.p(i, j) <= net.cutPval) net.edges.push_back({i, j, value(i, j), net.p(i, j)});
}

}  // namespace

RelNet relnet_single(const NormalizedDataset &ds, const std::string &condition,
                     const std::vector<std::size_t> &poolRows, const RelNetOptions &opt) {
  RelNet net = pool_setup(ds, poolRows, opt);
  const auto samples = condition_samples(ds, opt.sampleLabel, condition);
  net.conditions = {condition};
  net.kind = opt.kind;
  const auto M = condition_data(ds, net.rows, samples, net.geneIds, condition);
  net.data = {M};
  if (opt.kind == CorKind::mi && opt.permutations < 1) throw DataError("MI permutation count must be >= 1");
  const std::size_t g = net.rows.size();
  net.cor = MatrixD(g, g, kNaN);
  net.p = MatrixD(g, g, kNaN);
  std::vector<std::vector<std::string>> notes(g);
  parallel_for(g, [&](std::size_t i) {
    std::vector<double> x, y;
    for (std::size_t j = i + 1; j < g; ++j) {
      paired(M.row(i), M.row(j), x, y);
      double r = kNaN, p = 1;
      if (x.size() < 4) {
        notes[i].push_back(net.geneIds[i] + "~" + net.geneIds[j] + ": fewer than 4 shared samples");
      } else {
        try {
          if (opt.kind == CorKind::pearson) {
            const auto est = stats::pearson(x, y);
            r = est.r;
            p = est.pZero;
          } else if (opt.kind == CorKind::robust) {
            const auto est = stats::robust_cor(x, y);
            r = est.r;
            p = est.pZero;
          } else {
            const auto jitterSeed = stream_seed(opt.seed, {i, j, 0});
            const int k = std::min<int>(opt.miNeighbours, int(x.size()) - 1);
            r = stats::kraskov_mi(x, y, k, jitterSeed);
            Rng rng = make_rng(opt.seed, {i, j, 1});
            std::size_t hits = 0;
            auto perm = y;
            for (int b = 0; b < opt.permutations; ++b) {
              shuffle(perm.begin(), perm.end(), rng);
              const double v = stats::kraskov_mi(x, perm, k, jitterSeed);
              if (v >= r - stats::kResampleTieTolerance * std::max(1.0, std::abs(r))) ++hits;
            }
            p = double(hits + 1) / double(opt.permutations + 1);
          }
        } catch (const DataError &e) {
          notes[i].push_back(net.geneIds[i] + "~" + net.geneIds[j] + ": " + e.what());
          r = kNaN;
          p = 1;
        }
      }
      net.cor(i, j) = r;
      net.p(i, j) = p;
    }
  });
  for (std::size_t i = 0; i < g; ++i) {
    net.cor(i, i) = opt.kind == CorKind::mi ? kNaN : 1.0;
    for (std::size_t j = i + 1; j < g; ++j) {
      net.cor(j, i) = net.cor(i, j);
      net.p(j, i) = net.p(i, j);
    }
    for (auto &n : notes[i]) net.notes.push_back(std::move(n));
  }
  collect_edges(net, net.cor);
  return net;
}

RelNet relnet_diff(const NormalizedDataset &ds, const std::string &conditionA, const std::string &conditionB,
                   const std::vector<std::size_t> &poolRows, const RelNetOptions &opt) {
  RelNet net = pool_setup(ds, poolRows, opt);
  const auto sa = condition_samples(ds, opt.sampleLabel, conditionA);
  const auto sb = condition_samples(ds, opt.sampleLabel, conditionB);
  net.conditions = {conditionA, conditionB};
  net.kind = CorKind::pearson;
  const auto MA = condition_data(ds, net.rows, sa, net.geneIds, conditionA);
  const auto MB = condition_data(ds, net.rows, sb, net.geneIds, conditionB);
  net.data = {MA, MB};
  const std::size_t g = net.rows.size();
  net.rA = MatrixD(g, g, 1.0);
  net.rB = MatrixD(g, g, 1.0);
  net.dZ = MatrixD(g, g, 0.0);
  net.p = MatrixD(g, g, 1.0);
  std::vector<std::vector<std::string>> notes(g);
  parallel_for(g, [&](std::size_t i) {
    std::vector<double> x, y;
    for (std::size_t j = i + 1; j < g; ++j) {
      double rA = kNaN, rB = kNaN, dz = kNaN, p = 1;
      std::size_t nA = 0, nB = 0;
      try {
        paired(MA.row(i), MA.row(j), x, y);
        nA = x.size();
        if (nA >= 4) rA = stats::pearson(x, y).r;
        paired(MB.row(i), MB.row(j), x, y);
        nB = x.size();
        if (nB >= 4) rB = stats::pearson(x, y).r;
      } catch (const DataError &e) {
        notes[i].push_back(net.geneIds[i] + "~" + net.geneIds[j] + ": " + e.what());
      }
      if (std::isfinite(rA) && std::isfinite(rB)) {
        if (rA == rB) {
          dz = 0;
          p = 1;
        } else if (std::abs(rA) < 1 && std::abs(rB) < 1) {
          const auto t = stats::fisher_z_compare(rA, nA, rB, nB);
          dz = std::atanh(rA) - std::atanh(rB);
          p = t.pValue;
        } else {  // a perfect correlation in one condition only
          dz = std::atanh(rA) - std::atanh(rB);
          p = 0;
        }
      } else if (nA < 4 || nB < 4) {
        notes[i].push_back(net.geneIds[i] + "~" + net.geneIds[j] + ": fewer than 4 shared samples");
      }
      net.rA(i, j) = rA;
      net.rB(i, j) = rB;
      net.dZ(i, j) = dz;
      net.p(i, j) = p;
    }
  });
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) {
      net.rA(j, i) = net.rA(i, j);
      net.rB(j, i) = net.rB(i, j);
      net.dZ(j, i) = -net.dZ(i, j);
      net.p(j, i) = net.p(i, j);
    }
    for (auto &n : notes[i]) net.notes.push_back(std::move(n));
  }
  net.cor = net.dZ;
  collect_edges(net, net.dZ);
  return net;
}

ModuleResult active_modules(const NormalizedDataset &ds, const ModuleOptions &opt) {
  if (!(opt.cutExp > 0)) throw DataError("cutExp must be > 0");
  if (!(opt.cutPhiper >= 0 && opt.cutPhiper <= 1)) throw DataError("cutPhiper must be in [0, 1]");
  if (opt.adjust != stats::PAdjust::none && opt.adjust != stats::PAdjust::BH)
    throw UsageError("module p-values can be adjusted with none or BH only");
  if (ds.annot.groups.empty()) throw DataError("no gene groups are loaded");
  ModuleResult res;
  res.cutExp = opt.cutExp;
  res.cutPhiper = opt.cutPhiper;
  res.mode = opt.mode;
  res.adjust = opt.adjust;
  res.sampleLabelId = opt.sampleLabel;

  // expression value of every gene in every column
  MatrixD value;
  if (opt.mode == ModuleMode::byCondition) {
    if (opt.sampleLabel.empty()) throw UsageError("a sample label is required in condition mode");
    const auto idx = level_index(ds.annot.samples, opt.sampleLabel);
    res.columns = idx.levels;
    value = MatrixD(ds.rows(), idx.levels.size(), kNaN);
    for (std::size_t c = 0; c < idx.levels.size(); ++c) {
      const auto members = idx.members(int(c));
      for (std::size_t i = 0; i < ds.rows(); ++i) {
        double s = 0;
        std::size_t n = 0;
        for (auto j : members)
          if (std::isfinite(ds.W(i, j))) {
            s += ds.W(i, j);
            ++n;
          }
        if (n > 0) value(i, c) = s / double(n);
      }
    }
  } else {
    res.columns = ds.annot.samples.fileNames;
    value = ds.W;
  }
  const std::size_t G = ds.annot.groups.size(), C = res.columns.size();
  for (const auto &grp : ds.annot.groups) res.groups.push_back(grp.name);
  res.pInduced = MatrixD(G, C);
  res.pRepressed = MatrixD(G, C);
  res.pValue = MatrixD(G, C);
  res.score = MatrixD(G, C, 0.0);
  res.state = Matrix<int>(G, C, 0);
  res.universe = Matrix<std::int64_t>(1, C, 0);

  std::vector<std::vector<std::size_t>> groupRows;
  for (const auto &grp : ds.annot.groups) groupRows.push_back(resolve_members(ds.annot.genes, grp.labelId, grp.members).rows);
  for (std::size_t c = 0; c < C; ++c) {
    std::int64_t N = 0, nUp = 0, nDown = 0;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      const double v = value(i, c);
      if (!std::isfinite(v)) continue;
      ++N;
      if (v >= opt.cutExp) ++nUp;
      if (v <= -opt.cutExp) ++nDown;
    }
    res.universe(0, c) = N;
    for (std::size_t g = 0; g < G; ++g) {
      std::int64_t K = 0, kUp = 0, kDown = 0;
      for (auto i : groupRows[g]) {
        const double v = value(i, c);
        if (!std::isfinite(v)) continue;
        ++K;
        if (v >= opt.cutExp) ++kUp;
        if (v <= -opt.cutExp) ++kDown;
      }
      if (K == 0)
        throw DataError("gene group '" + res.groups[g] + "' has no gene with data in '" + res.columns[c] + "'");
      res.pInduced(g, c) = kUp == 0 ? 1.0 : stats::hypergeom_tail(kUp, N, K, nUp);
      res.pRepressed(g, c) = kDown == 0 ? 1.0 : stats::hypergeom_tail(kDown, N, K, nDown);
    }
  }
  if (opt.adjust == stats::PAdjust::BH) {
    std::vector<double> all;
    for (std::size_t g = 0; g < G; ++g)
      for (std::size_t c = 0; c < C; ++c) {
        all.push_back(res.pInduced(g, c));
        all.push_back(res.pRepressed(g, c));
      }
    const auto adj = stats::adjust_pvalues(all, stats::PAdjust::BH);
    std::size_t t = 0;
    for (std::size_t g = 0; g < G; ++g)
      for (std::size_t c = 0; c < C; ++c) {
        res.pInduced(g, c) = adj[t++];
        res.pRepressed(g, c) = adj[t++];
      }
  }
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t c = 0; c < C; ++c) {
      const bool up = res.pInduced(g, c) <= res.pRepressed(g, c);
      const double p = up ? res.pInduced(g, c) : res.pRepressed(g, c);
      res.pValue(g, c) = p;
      if (p <= opt.cutPhiper) {
        res.state(g, c) = up ? 1 : -1;
        const double s = p > 0 ? -std::log10(p) : HUGE_VAL;
        res.score(g, c) = up ? s : -s;
      }
    }
  return res;
}

std::pair<double, double> fisher_combine(std::span<const double> p) {
  if (p.empty()) throw DataError("Fisher combination of zero p-values");
  double S = 0;
  for (double v : p) {
    if (!(v >= 0 && v <= 1)) throw DataError("Fisher combination: p-value outside [0, 1]");
    S += v > 0 ? -2 * std::log(v) : HUGE_VAL;
  }
  if (S == 0) S = 0;  // normalize -0
  return {S, stats::chi_sq_sf(S, 2.0 * double(p.size()))};
}

NetScore active_net(const NormalizedDataset &ds, const std::string &sampleLabel) {
  if (ds.annot.networks.empty()) throw DataError("no gene networks are loaded");
  if (sampleLabel.empty()) throw UsageError("a sample label is required");
  const auto idx = level_index(ds.annot.samples, sampleLabel);
  NetScore out;
  out.sampleLabelId = sampleLabel;
  out.conditions = idx.levels;
  const std::size_t N = ds.annot.networks.size(), C = idx.levels.size();
  out.statistic = MatrixD(N, C, kNaN);
  out.pValue = MatrixD(N, C, kNaN);
  out.edgeCount = Matrix<std::int64_t>(N, C, 0);
  std::vector<std::vector<std::size_t>> samples;
  for (std::size_t c = 0; c < C; ++c) {
    samples.push_back(idx.members(int(c)));
    if (samples.back().size() < 4)
      throw DataError("condition '" + idx.levels[c] + "' has " + std::to_string(samples.back().size()) +
                      " samples; at least 4 needed");
  }
  std::vector<double> x, y;
  for (std::size_t n = 0; n < N; ++n) {
    const auto &net = ds.annot.networks[n];
    out.networks.push_back(net.name);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::string> edgeNames;
    for (const auto &[a, b] : net.edges) {
      const auto ra = resolve_members(ds.annot.genes, net.labelId, {a}).rows;
      const auto rb = resolve_members(ds.annot.genes, net.labelId, {b}).rows;
      if (ra.empty() || rb.empty()) {
        out.notes.push_back(net.name + ": edge " + a + "~" + b + " unresolved, excluded");
        continue;
      }
      edges.emplace_back(ra.front(), rb.front());
      edgeNames.push_back(a + "~" + b);
    }
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<double> ps;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        x.clear();
        y.clear();
        for (auto j : samples[c]) {
          const double u = ds.W(edges[e].first, j), v = ds.W(edges[e].second, j);
          if (std::isfinite(u) && std::isfinite(v)) {
            x.push_back(u);
            y.push_back(v);
          }
        }
        try {
          if (x.size() < 4) throw DataError("fewer than 4 shared samples");
          ps.push_back(stats::pearson(x, y).pZero);
        } catch (const DataError &err) {
          out.notes.push_back(net.name + " in " + idx.levels[c] + ": edge " + edgeNames[e] + " excluded (" + err.what() +
                              ")");
        }
      }
      if (ps.empty())
        throw DataError("network '" + net.name + "' has no usable edge in condition '" + idx.levels[c] + "'");
      const auto [S, p] = fisher_combine(ps);
      out.statistic(n, c) = S;
      out.pValue(n, c) = p;
      out.edgeCount(n, c) = std::int64_t(ps.size());
    }
  }
  return out;
}

std::vector<GenePairCondition> gene_pair_data(const RelNet &net, const std::string &geneX, const std::string &geneY) {
  auto find = [&](const std::string &id) {
    auto it = std::find(net.geneIds.begin(), net.geneIds.end(), id);
    if (it == net.geneIds.end()) throw DataError("gene '" + id + "' is not in the network's pool");
    return std::size_t(it - net.geneIds.begin());
  };
  const auto gx = find(geneX), gy = find(geneY);
  std::vector<GenePairCondition> out;
  for (std::size_t c = 0; c < net.conditions.size(); ++c) {
    GenePairCondition pc;
    pc.condition = net.conditions[c];
    paired(net.data[c].row(gx), net.data[c].row(gy), pc.x, pc.y);
    const std::size_t n = pc.x.size();
    double mx = 0, my = 0;
    for (std::size_t s = 0; s < n; ++s) {
      mx += pc.x[s];
      my += pc.y[s];
    }
    mx /= double(std::max<std::size_t>(n, 1));
    my /= double(std::max<std::size_t>(n, 1));
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t s = 0; s < n; ++s) {
      sxx += (pc.x[s] - mx) * (pc.x[s] - mx);
      syy += (pc.y[s] - my) * (pc.y[s] - my);
      sxy += (pc.x[s] - mx) * (pc.y[s] - my);
    }
    if (n < 2 || sxx == 0) {
      pc.degenerate = true;
      pc.slope = kNaN;
      pc.intercept = kNaN;
      pc.r = kNaN;
    } else {
      pc.slope = sxy / sxx;
      pc.intercept = my - pc.slope * mx;
      if (syy == 0) {
        pc.degenerate = true;
        pc.r = kNaN;
      } else {
        pc.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
      }
    }
    out.push_back(std::move(pc));
  }
  return out;
}

}  // namespace arraykit
