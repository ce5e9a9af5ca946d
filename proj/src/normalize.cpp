#include "arraykit/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "arraykit/error.hpp"
#include "arraykit/loess.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/rng.hpp"
#include "arraykit/stats.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

namespace {

bool optional_equal(const std::optional<MatrixD> &a, const std::optional<MatrixD> &b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || bitwise_equal(*a, *b);
}

}  // namespace

bool NormalizedDataset::operator==(const NormalizedDataset &o) const {
  return bitwise_equal(W, o.W) && bitwise_equal(A, o.A) && optional_equal(SW, o.SW) &&
         optional_equal(Wlo, o.Wlo) && optional_equal(Whi, o.Whi) && useSpot == o.useSpot &&
         badSpot == o.badSpot && grid == o.grid && annot == o.annot && log == o.log;
}

BkgMethod parse_bkg(const std::string &s) {
  if (s == "none") return BkgMethod::none;
  if (s == "subtract") return BkgMethod::subtract;
  if (s == "minimumPositive" || s == "minimum") return BkgMethod::minimumPositive;
  throw UsageError("unknown background method '" + s + "' (none, subtract, minimumPositive)");
}

std::string to_string(BkgMethod m) {
  switch (m) {
    case BkgMethod::none: return "none";
    case BkgMethod::subtract: return "subtract";
    case BkgMethod::minimumPositive: return "minimumPositive";
  }
  return "?";
}

LoessScope parse_loess_scope(const std::string &s) {
  if (s == "global") return LoessScope::global;
  if (s == "printTip" || s == "printtip") return LoessScope::printTip;
  throw UsageError("unknown loess scope '" + s + "' (global, printTip)");
}

std::string to_string(LoessScope s) { return s == LoessScope::global ? "global" : "printTip"; }

MadScope parse_mad_scope(const std::string &s) {
  if (s == "printTipMAD") return MadScope::printTipMAD;
  if (s == "globalMAD") return MadScope::globalMAD;
  throw UsageError("unknown scale method '" + s + "' (printTipMAD, globalMAD)");
}

std::string to_string(MadScope s) { return s == MadScope::globalMAD ? "globalMAD" : "printTipMAD"; }

Summary parse_summary(const std::string &s) {
  if (s == "mean") return Summary::mean;
  if (s == "median") return Summary::median;
  if (s == "none" || s == "NULL") return Summary::none;
  throw UsageError("unknown summary function '" + s + "' (mean, median, none)");
}

std::string to_string(Summary s) {
  switch (s) {
    case Summary::mean: return "mean";
    case Summary::median: return "median";
    case Summary::none: return "none";
  }
  return "?";
}

CorrectedChannels background_correct(const RawDataset &raw, BkgMethod method) {
  const std::size_t n = raw.spots(), m = raw.chips();
  CorrectedChannels out{MatrixD(n, m), MatrixD(n, m)};
  auto correct = [&](const MatrixD &fg, const MatrixD &bg, MatrixD &dst) {
    for (std::size_t j = 0; j < m; ++j) {
      double minPositive = HUGE_VAL;
      for (std::size_t i = 0; i < n; ++i) {
        double v = method == BkgMethod::none ? fg(i, j) : fg(i, j) - bg(i, j);
        if (v > 0) minPositive = std::min(minPositive, v);
        dst(i, j) = v;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double &v = dst(i, j);
        if (method == BkgMethod::minimumPositive && std::isfinite(minPositive))
          v = std::max(v, minPositive / 2);
        if (!(v > 0)) v = kMissing;
      }
    }
  };
  correct(raw.ch1Fg, raw.ch1Bg, out.ch1);
  correct(raw.ch2Fg, raw.ch2Bg, out.ch2);
  return out;
}

NormalizedDataset compute_wa(const RawDataset &raw, BkgMethod method) {
  const auto c = background_correct(raw, method);
  const std::size_t n = raw.spots(), m = raw.chips();
  NormalizedDataset ds;
  ds.W = MatrixD(n, m);
  ds.A = MatrixD(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    const bool ch1Interest = raw.annot.samples.interest.at(j) == Channel::ch1;
    for (std::size_t i = 0; i < n; ++i) {
      const double I = ch1Interest ? c.ch1(i, j) : c.ch2(i, j);
      const double C = ch1Interest ? c.ch2(i, j) : c.ch1(i, j);
      if (is_missing(I) || is_missing(C)) {
        ds.W(i, j) = kMissing;
        ds.A(i, j) = kMissing;
        continue;
      }
      const double li = std::log2(I), lc = std::log2(C);
      ds.W(i, j) = li - lc;
      ds.A(i, j) = (li + lc) / 2;
    }
  }
  ds.useSpot = raw.useSpot;
  ds.badSpot = raw.badSpot;
  ds.grid = raw.grid;
  ds.annot = raw.annot;
  ds.log.push_back("computeWA bkg=" + to_string(method));
  return ds;
}

namespace {

// A fitting/scaling unit: one chip, optionally restricted to one block.
struct Unit {
  std::size_t chip;
  std::optional<std::size_t> block;
  std::vector<std::size_t> spots;  // all spots of the unit

  std::string describe() const {
    std::string s = "chip " + std::to_string(chip + 1);
    if (block) s += " block " + std::to_string(*block + 1);
    return s;
  }
};

std::vector<Unit> make_units(const NormalizedDataset &ds, bool byBlock) {
  std::vector<Unit> units;
  if (byBlock && !ds.grid)
    throw DataError("print-tip scope needs the array geometry, which summarized data no longer has");
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    if (!byBlock) {
      Unit u{j, std::nullopt, {}};
      u.spots.resize(ds.rows());
      for (std::size_t i = 0; i < ds.rows(); ++i) u.spots[i] = i;
      units.push_back(std::move(u));
      continue;
    }
    const auto &g = *ds.grid;
    for (std::size_t b = 0; b < g.blocks(); ++b) {
      Unit u{j, b, {}};
      for (std::size_t i = b * g.spots_per_block(); i < (b + 1) * g.spots_per_block(); ++i) u.spots.push_back(i);
      units.push_back(std::move(u));
    }
  }
  return units;
}

bool usable(const NormalizedDataset &ds, std::size_t i, std::size_t j) {
  return ds.useSpot(i, j) && std::isfinite(ds.W(i, j)) && std::isfinite(ds.A(i, j));
}

constexpr std::size_t kMinLoessPoints = 10;

std::string loess_record(const char *name, const LoessOptions &opt) {
  return std::string(name) + " span=" + text::format_double(opt.span) + " scope=" + to_string(opt.scope) +
         " iterations=" + std::to_string(opt.iterations);
}

void check_loess_options(const LoessOptions &opt) {
  if (!(opt.span > 0 && opt.span <= 1)) throw DataError("loess span must be in (0, 1]");
  if (opt.iterations < 0) throw DataError("loess iterations must be >= 0");
}

}  // namespace

NormalizedDataset normalize_loess(NormalizedDataset ds, const LoessOptions &opt) {
  check_loess_options(opt);
  const auto units = make_units(ds, opt.scope == LoessScope::printTip);
  MatrixD out = ds.W;
  parallel_for(units.size(), [&](std::size_t u) {
    const auto &unit = units[u];
    std::vector<double> fx, fy, ex;
    std::vector<std::size_t> evalSpots;
    for (auto i : unit.spots) {
      if (usable(ds, i, unit.chip)) {
        fx.push_back(ds.A(i, unit.chip));
        fy.push_back(ds.W(i, unit.chip));
      }
      if (std::isfinite(ds.W(i, unit.chip)) && std::isfinite(ds.A(i, unit.chip))) {
        ex.push_back(ds.A(i, unit.chip));
        evalSpots.push_back(i);
      }
    }
    if (fx.size() < kMinLoessPoints)
      throw DataError("loess: too few usable spots (" + std::to_string(fx.size()) + ") in " + unit.describe());
    const auto fit = loess_fit(fx, fy, ex, opt.span, opt.iterations, kLowessDelta);
    for (std::size_t t = 0; t < evalSpots.size(); ++t)
      out(evalSpots[t], unit.chip) = ds.W(evalSpots[t], unit.chip) - fit[t];
  });
  ds.W = std::move(out);
  ds.SW.reset();
  ds.Wlo.reset();
  ds.Whi.reset();
  ds.log.push_back(loess_record("loess", opt));
  return ds;
}

double mad(std::vector<double> values) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return kMissing;
  const double med = stats::median(values);
  for (auto &v : values) v = std::abs(v - med);
  return 1.4826 * stats::median(values);
}

NormalizedDataset normalize_scale_mad(NormalizedDataset ds, MadScope scope) {
  const auto units = make_units(ds, scope == MadScope::printTipMAD);
  std::vector<double> mads(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    std::vector<double> vals;
    for (auto i : units[u].spots)
      if (ds.useSpot(i, units[u].chip) && std::isfinite(ds.W(i, units[u].chip))) vals.push_back(ds.W(i, units[u].chip));
    if (vals.size() < 3)
      throw DataError("MAD scaling: fewer than 3 usable values in " + units[u].describe());
    mads[u] = mad(vals);
    if (!(mads[u] > 0)) throw DataError("MAD scaling: zero MAD in " + units[u].describe());
  }
  // Geometric-mean anchor: per chip for print-tip scaling, over all chips otherwise.
  std::vector<double> anchor(units.size());
  if (scope == MadScope::globalMAD) {
    double logSum = 0;
    for (double m : mads) logSum += std::log(m);
    const double g = std::exp(logSum / double(mads.size()));
    std::fill(anchor.begin(), anchor.end(), g);
  } else {
    std::map<std::size_t, std::pair<double, std::size_t>> perChip;
    for (std::size_t u = 0; u < units.size(); ++u) {
      auto &acc = perChip[units[u].chip];
      acc.first += std::log(mads[u]);
      acc.second += 1;
    }
    for (std::size_t u = 0; u < units.size(); ++u) {
      const auto &acc = perChip[units[u].chip];
      anchor[u] = std::exp(acc.first / double(acc.second));
    }
  }
  for (std::size_t u = 0; u < units.size(); ++u) {
    const double factor = mads[u] / anchor[u];
    for (auto i : units[u].spots) {
      const std::size_t j = units[u].chip;
      ds.W(i, j) /= factor;
      if (ds.SW) (*ds.SW)(i, j) /= factor;
      if (ds.Wlo) (*ds.Wlo)(i, j) /= factor;
      if (ds.Whi) (*ds.Whi)(i, j) /= factor;
    }
  }
  ds.log.push_back("scale method=" + to_string(scope));
  return ds;
}

NormalizedDataset normalize_repeated_loess(NormalizedDataset ds, const RepeatedLoessOptions &opt) {
  check_loess_options(opt.loess);
  if (opt.repeats < 2) throw DataError("repeated loess: repeats must be >= 2");
  if (!(opt.fraction > 0 && opt.fraction < 1)) throw DataError("repeated loess: fraction must be in (0, 1)");
  if (!(opt.alpha > 0 && opt.alpha < 1)) throw DataError("repeated loess: alpha must be in (0, 1)");
  const double z = stats::norm_quantile(1 - opt.alpha / 2);
  const auto units = make_units(ds, opt.loess.scope == LoessScope::printTip);
  MatrixD W = ds.W;
  MatrixD SW(ds.rows(), ds.cols(), kMissing);
  MatrixD lo(ds.rows(), ds.cols(), kMissing);
  MatrixD hi(ds.rows(), ds.cols(), kMissing);

  parallel_for(units.size(), [&](std::size_t u) {
    const auto &unit = units[u];
    const std::size_t j = unit.chip;
    std::vector<std::size_t> fitSpots, evalSpots;
    std::vector<double> ex;
    for (auto i : unit.spots) {
      if (usable(ds, i, j)) fitSpots.push_back(i);
      if (std::isfinite(ds.W(i, j)) && std::isfinite(ds.A(i, j))) {
        evalSpots.push_back(i);
        ex.push_back(ds.A(i, j));
      }
    }
    const auto take = std::size_t(opt.fraction * double(fitSpots.size()));
    if (take < kMinLoessPoints)
      throw DataError("repeated loess: too few usable spots (" + std::to_string(take) + " per subsample) in " +
                      unit.describe());
    // values[r * E + e]: normalized value of eval spot e in replicate r
    const std::size_t E = evalSpots.size();
    std::vector<double> values(std::size_t(opt.repeats) * E);
    std::vector<double> fx(take), fy(take);
    for (int r = 0; r < opt.repeats; ++r) {
      Rng rng = make_rng(opt.seed, {u, std::uint64_t(r)});
      auto pick = fitSpots;
      shuffle(pick.begin(), pick.end(), rng);
      for (std::size_t t = 0; t < take; ++t) {
        fx[t] = ds.A(pick[t], j);
        fy[t] = ds.W(pick[t], j);
      }
      const auto fit = loess_fit(fx, fy, ex, opt.loess.span, opt.loess.iterations, kLowessDelta);
      for (std::size_t e = 0; e < E; ++e) values[std::size_t(r) * E + e] = ds.W(evalSpots[e], j) - fit[e];
    }
    for (std::size_t e = 0; e < E; ++e) {
      double m = 0;
      for (int r = 0; r < opt.repeats; ++r) m += values[std::size_t(r) * E + e];
      m /= opt.repeats;
      double ss = 0;
      for (int r = 0; r < opt.repeats; ++r) {
        const double d = values[std::size_t(r) * E + e] - m;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / (opt.repeats - 1));
      const std::size_t i = evalSpots[e];
      W(i, j) = m;
      SW(i, j) = sd;
      lo(i, j) = m - z * sd;
      hi(i, j) = m + z * sd;
    }
  });
  ds.W = std::move(W);
  ds.SW = std::move(SW);
  ds.Wlo = std::move(lo);
  ds.Whi = std::move(hi);
  ds.log.push_back(loess_record("repeatedLoess", opt.loess) + " repeats=" + std::to_string(opt.repeats) +
                   " fraction=" + text::format_double(opt.fraction) + " alpha=" + text::format_double(opt.alpha) +
                   " seed=" + std::to_string(opt.seed));
  return ds;
}

namespace {

double summarize(std::vector<double> v, Summary f) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return kMissing;
  if (f == Summary::median) return stats::median(std::move(v));
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

// Groups items by key in first-appearance order.
std::vector<std::vector<std::size_t>> group_by(const std::vector<std::size_t> &items,
                                               const std::vector<std::string> &keys) {
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (auto i : items) {
    auto [it, fresh] = slot.emplace(keys[i], groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

bool has_duplicates(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

}  // namespace

NormalizedDataset summarize_replicates(const NormalizedDataset &ds, const SummarizeOptions &opt) {
  std::vector<std::string> geneKeys, sampleKeys;
  if (!opt.geneLabel.empty()) geneKeys = ds.annot.genes.column(opt.geneLabel);
  if (!opt.sampleLabel.empty()) sampleKeys = ds.annot.samples.labels.column(opt.sampleLabel);
  if (opt.spots != Summary::none && opt.geneLabel.empty())
    throw DataError("summarize: spot summarization needs a gene label");
  if (opt.samples != Summary::none && opt.sampleLabel.empty())
    throw DataError("summarize: sample summarization needs a sample label");
  if (opt.spots == Summary::none && opt.samples == Summary::none &&
      ((!geneKeys.empty() && has_duplicates(geneKeys)) || (!sampleKeys.empty() && has_duplicates(sampleKeys))))
    throw DataError("summarize: both summary functions are 'none' but labels are duplicated (ambiguous)");

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (opt.rmBad && ds.badSpot[i]) continue;
    if (!opt.keepEmpty && !geneKeys.empty() && text::trim(geneKeys[i]).empty()) continue;
    rows.push_back(i);
  }
  std::vector<std::size_t> cols(ds.cols());
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;

  std::vector<std::vector<std::size_t>> geneGroups, sampleGroups;
  if (opt.spots == Summary::none)
    for (auto i : rows) geneGroups.push_back({i});
  else
    geneGroups = group_by(rows, geneKeys);
  if (opt.samples == Summary::none)
    for (auto j : cols) sampleGroups.push_back({j});
  else
    sampleGroups = group_by(cols, sampleKeys);

  const std::size_t G = geneGroups.size(), S = sampleGroups.size();
  NormalizedDataset out;
  out.W = MatrixD(G, S);
  out.A = MatrixD(G, S);
  out.useSpot = MatrixB(G, S, 0);
  out.badSpot.assign(G, 0);

  auto collapse = [&](const MatrixD &src, MatrixD &dst) {
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> perChip;
        for (auto j : sampleGroups[s]) {
          std::vector<double> spotVals;
          for (auto i : geneGroups[g]) spotVals.push_back(src(i, j));
          perChip.push_back(opt.spots == Summary::none ? spotVals[0] : summarize(spotVals, opt.spots));
        }
        dst(g, s) = opt.samples == Summary::none ? perChip[0] : summarize(perChip, opt.samples);
      }
    }
  };
  collapse(ds.W, out.W);
  collapse(ds.A, out.A);
  for (std::size_t g = 0; g < G; ++g) {
    bool allBad = true;
    for (auto i : geneGroups[g]) allBad = allBad && ds.badSpot[i];
    out.badSpot[g] = allBad ? 1 : 0;
    for (std::size_t s = 0; s < S; ++s) {
      bool any = false;
      for (auto i : geneGroups[g])
        for (auto j : sampleGroups[s]) any = any || ds.useSpot(i, j);
      out.useSpot(g, s) = any ? 1 : 0;
    }
  }

  out.annot = ds.annot;
  out.annot.genes.rows.clear();
  for (const auto &g : geneGroups) out.annot.genes.rows.push_back(ds.annot.genes.rows[g.front()]);
  SampleSheet sheet;
  sheet.labels.names = ds.annot.samples.labels.names;
  for (const auto &members : sampleGroups) {
    std::vector<std::string> files;
    for (auto j : members) files.push_back(ds.annot.samples.fileNames[j]);
    sheet.fileNames.push_back(text::join(files, "+"));
    sheet.interest.push_back(ds.annot.samples.interest[members.front()]);
    std::vector<std::string> row;
    for (std::size_t l = 0; l < sheet.labels.names.size(); ++l) {
      std::vector<std::string> distinct;
      for (auto j : members) {
        const auto &v = ds.annot.samples.labels.rows[j][l];
        if (std::find(distinct.begin(), distinct.end(), v) == distinct.end()) distinct.push_back(v);
      }
      row.push_back(text::join(distinct, "|"));
    }
    sheet.labels.rows.push_back(std::move(row));
  }
  out.annot.samples = std::move(sheet);
  if (rows.size() == ds.rows() && G == ds.rows()) out.grid = ds.grid;
  out.log = ds.log;
  out.log.push_back("summarize geneLabel=" + opt.geneLabel + " sampleLabel=" + opt.sampleLabel +
                    " spots=" + to_string(opt.spots) + " samples=" + to_string(opt.samples) +
                    " keepEmpty=" + (opt.keepEmpty ? "true" : "false") + " rmBad=" + (opt.rmBad ? "true" : "false"));
  return out;
}

}  // namespace arraykit
