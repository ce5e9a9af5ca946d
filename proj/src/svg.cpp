#include "arraykit/svg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "arraykit/error.hpp"
#include "arraykit/text.hpp"

namespace arraykit::svg {

namespace {

std::string num(double v) { return text::format_sig(v, 6); }

class Doc {
public:
  Doc(double w, double h, const std::string &title) {
    out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n<title>" +
           text::html_escape(title) + "</title>\n<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) +
           "\" fill=\"white\"/>\n";
    text(w / 2, 20, title, "middle", 14);
  }
  void circle(double x, double y, double r, const std::string &fill, const std::string &cls = "point") {
    out_ += "<circle class=\"" + cls + "\" cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) + "\" fill=\"" +
            fill + "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string &stroke, double width = 1,
            const std::string &cls = "") {
    out_ += "<line" + (cls.empty() ? std::string() : " class=\"" + cls + "\"") + " x1=\"" + num(x1) + "\" y1=\"" +
            num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
            num(width) + "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string &fill, const std::string &cls = "",
            const std::string &stroke = "none") {
    out_ += "<rect" + (cls.empty() ? std::string() : " class=\"" + cls + "\"") + " x=\"" + num(x) + "\" y=\"" + num(y) +
            "\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>> &pts, const std::string &stroke, double width = 1.5) {
    out_ += "<polyline class=\"curve\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(width) +
            "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) out_ += (i ? " " : "") + num(pts[i].first) + "," + num(pts[i].second);
    out_ += "\"/>\n";
  }
  void text(double x, double y, const std::string &s, const std::string &anchor = "start", double size = 10,
            double rotate = 0) {
    out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" + num(size) +
            "\" text-anchor=\"" + anchor + "\"";
    if (rotate != 0) out_ += " transform=\"rotate(" + num(rotate) + " " + num(x) + " " + num(y) + ")\"";
    out_ += ">" + text::html_escape(s) + "</text>\n";
  }
  std::string finish() { return out_ + "</svg>\n"; }

private:
  std::string out_;
};

struct Range {
  double lo = 0, hi = 1;
};

Range finite_range(const std::vector<double> &v) {
  Range r{HUGE_VAL, -HUGE_VAL};
  for (double x : v)
    if (std::isfinite(x)) {
      r.lo = std::min(r.lo, x);
      r.hi = std::max(r.hi, x);
    }
  if (r.lo > r.hi) return {0, 1};
  if (r.lo == r.hi) return {r.lo - 0.5, r.hi + 0.5};
  const double pad = 0.04 * (r.hi - r.lo);
  return {r.lo - pad, r.hi + pad};
}

std::vector<double> ticks(Range r) {
  const double span = r.hi - r.lo;
  const double raw = span / 5;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(r.lo / step) * step; v <= r.hi + 1e-9 * span; v += step)
    t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  return t;
}

// Plot area with linear axes.
struct Frame {
  double left = 60, top = 40, width = 440, height = 320;
  Range xr, yr;
  double X(double x) const { return left + (x - xr.lo) / (xr.hi - xr.lo) * width; }
  double Y(double y) const { return top + height - (y - yr.lo) / (yr.hi - yr.lo) * height; }
  void draw(Doc &d, const std::string &xlab, const std::string &ylab) const {
    d.line(left, top + height, left + width, top + height, "black", 1, "axis");
    d.line(left, top, left, top + height, "black", 1, "axis");
    for (double t : ticks(xr)) {
      d.line(X(t), top + height, X(t), top + height + 4, "black", 1, "tick");
      d.text(X(t), top + height + 16, num(t), "middle");
    }
    for (double t : ticks(yr)) {
      d.line(left - 4, Y(t), left, Y(t), "black", 1, "tick");
      d.text(left - 6, Y(t) + 3, num(t), "end");
    }
    d.text(left + width / 2, top + height + 34, xlab, "middle", 11);
    d.text(16, top + height / 2, ylab, "middle", 11, -90);
  }
};

std::string hex2(int v) {
  static const char *h = "0123456789abcdef";
  v = std::clamp(v, 0, 255);
  return {h[v >> 4], h[v & 15]};
}

// Blue (negative) - white (0) - red (positive), saturating at +-limit.
std::string diverging(double v, double limit) {
  if (!std::isfinite(v)) return v > 0 ? "#b2182b" : (v < 0 ? "#2166ac" : "#bbbbbb");
  const double t = limit > 0 ? std::clamp(v / limit, -1.0, 1.0) : 0.0;
  int r, g, b;
  if (t >= 0) {
    r = 255 - int(std::lround(t * (255 - 178)));
    g = 255 - int(std::lround(t * (255 - 24)));
    b = 255 - int(std::lround(t * (255 - 43)));
  } else {
    r = 255 - int(std::lround(-t * (255 - 33)));
    g = 255 - int(std::lround(-t * (255 - 102)));
    b = 255 - int(std::lround(-t * (255 - 172)));
  }
  return "#" + hex2(r) + hex2(g) + hex2(b);
}

double abs_limit(const std::vector<double> &v) {
  double m = 0;
  for (double x : v)
    if (std::isfinite(x)) m = std::max(m, std::abs(x));
  return m;
}

void legend(Doc &d, double x, double y, double limit) {
  const int steps = 11;
  for (int s = 0; s < steps; ++s) {
    const double v = limit * (1 - 2.0 * s / (steps - 1));
    d.rect(x, y + s * 12, 14, 12, diverging(v, limit), "legend");
  }
  d.text(x + 18, y + 9, num(limit));
  d.text(x + 18, y + 6 * 12 + 3, "0");
  d.text(x + 18, y + steps * 12, num(-limit));
}

const char *kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};

double quantile7(const std::vector<double> &sorted, double p) {
  const double h = (double(sorted.size()) - 1) * p;
  const auto lo = std::size_t(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::string wa_plot(const std::vector<double> &A, const std::vector<double> &W, const std::optional<Curve> &curve,
                    const std::string &title) {
  if (A.size() != W.size()) throw DataError("WA plot: A and W differ in length");
  Frame f;
  f.xr = finite_range(A);
  f.yr = finite_range(W);
  Doc d(f.left + f.width + 20, f.top + f.height + 50, title);
  f.draw(d, "A (mean log2 intensity)", "W (log2 interest / reference)");
  if (f.yr.lo < 0 && f.yr.hi > 0) d.line(f.left, f.Y(0), f.left + f.width, f.Y(0), "#999999", 1, "zero");
  for (std::size_t i = 0; i < A.size(); ++i)
    if (std::isfinite(A[i]) && std::isfinite(W[i])) d.circle(f.X(A[i]), f.Y(W[i]), 1.5, "#333333");
  if (curve) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < curve->x.size(); ++i)
      if (std::isfinite(curve->x[i]) && std::isfinite(curve->y[i]))
        pts.emplace_back(f.X(curve->x[i]), f.Y(std::clamp(curve->y[i], f.yr.lo, f.yr.hi)));
    d.polyline(pts, "#d62728");
  }
  return d.finish();
}

std::string spatial_plot(const GridGeometry &grid, const std::vector<double> &values, const std::string &title) {
  if (values.size() != grid.spots())
    throw DataError("spatial plot: " + std::to_string(values.size()) + " values for " + std::to_string(grid.spots()) +
                    " spots");
  const std::size_t rows = std::size_t(grid.gridR) * grid.printTipR, cols = std::size_t(grid.gridC) * grid.printTipC;
  const double cell = std::max(2.0, std::min(12.0, 480.0 / double(std::max(rows, cols))));
  const double left = 20, top = 40;
  Doc d(left + double(cols) * cell + 80, top + double(rows) * cell + 20, title);
  const double limit = abs_limit(values);
  for (std::size_t s = 0; s < grid.spots(); ++s)
    d.rect(left + double(grid.layout_col(s)) * cell, top + double(grid.layout_row(s)) * cell, cell, cell,
           diverging(values[s], limit), "spot");
  for (int br = 0; br < grid.gridR; ++br)
    for (int bc = 0; bc < grid.gridC; ++bc)
      d.rect(left + bc * grid.printTipC * cell, top + br * grid.printTipR * cell, grid.printTipC * cell,
             grid.printTipR * cell, "none", "block", "#444444");
  legend(d, left + double(cols) * cell + 12, top, limit);
  return d.finish();
}

std::string boxplot(const std::vector<std::pair<std::string, std::vector<double>>> &groups, const std::string &title) {
  if (groups.empty()) throw DataError("boxplot: no groups");
  std::vector<double> all;
  for (const auto &g : groups) all.insert(all.end(), g.second.begin(), g.second.end());
  Frame f;
  f.xr = {0, double(groups.size())};
  f.yr = finite_range(all);
  Doc d(f.left + f.width + 20, f.top + f.height + 50, title);
  f.draw(d, "", "W");
  const double bw = f.width / double(groups.size()) * 0.5;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    std::vector<double> v;
    for (double x : groups[k].second)
      if (std::isfinite(x)) v.push_back(x);
    const double cx = f.X(double(k) + 0.5);
    d.text(cx, f.top + f.height + 26, groups[k].first, "middle");
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const double q1 = quantile7(v, 0.25), q2 = quantile7(v, 0.5), q3 = quantile7(v, 0.75);
    const double iqr = q3 - q1;
    double lo = q1, hi = q3;
    for (double x : v) {
      if (x >= q1 - 1.5 * iqr) lo = std::min(lo, x);
      if (x <= q3 + 1.5 * iqr) hi = std::max(hi, x);
    }
    d.line(cx, f.Y(hi), cx, f.Y(q3), "black", 1, "whisker");
    d.line(cx, f.Y(q1), cx, f.Y(lo), "black", 1, "whisker");
    d.rect(cx - bw / 2, f.Y(q3), bw, std::max(0.5, f.Y(q1) - f.Y(q3)), "#9ecae1", "box", "black");
    d.line(cx - bw / 2, f.Y(q2), cx + bw / 2, f.Y(q2), "black", 2, "median");
    for (double x : v)
      if (x < lo || x > hi) d.circle(cx, f.Y(x), 2, "none", "outlier");
  }
  return d.finish();
}

std::string dendrogram(const Dendrogram &dg, const std::string &title) {
  const std::size_t n = dg.merges.size() + 1;
  const auto order = dg.leaf_order();
  std::vector<double> x(n + dg.merges.size()), h(n + dg.merges.size(), 0.0);
  for (std::size_t p = 0; p < order.size(); ++p) x[order[p]] = double(p);
  double top = 0;
  for (std::size_t k = 0; k < dg.merges.size(); ++k) {
    x[n + k] = (x[dg.merges[k].a] + x[dg.merges[k].b]) / 2;
    h[n + k] = dg.merges[k].height;
    top = std::max(top, dg.merges[k].height);
  }
  Frame f;
  f.width = std::max(200.0, std::min(1200.0, 14.0 * double(n)));
  f.height = 300;
  f.xr = {-0.5, double(n) - 0.5};
  f.yr = {0, top > 0 ? top * 1.05 : 1};
  Doc d(f.left + f.width + 20, f.top + f.height + 110, title);
  d.line(f.left, f.top, f.left, f.top + f.height, "black", 1, "axis");
  for (double t : ticks(f.yr)) {
    d.line(f.left - 4, f.Y(t), f.left, f.Y(t), "black", 1, "tick");
    d.text(f.left - 6, f.Y(t) + 3, num(t), "end");
  }
  d.text(16, f.top + f.height / 2, "height (" + to_string(dg.linkage) + " linkage)", "middle", 11, -90);
  for (std::size_t k = 0; k < dg.merges.size(); ++k) {
    const auto a = dg.merges[k].a, b = dg.merges[k].b;
    const double y = f.Y(h[n + k]);
    d.line(f.X(x[a]), f.Y(h[a]), f.X(x[a]), y, "black", 1, "branch");
    d.line(f.X(x[b]), f.Y(h[b]), f.X(x[b]), y, "black", 1, "branch");
    d.line(f.X(x[a]), y, f.X(x[b]), y, "black", 1, "branch");
  }
  for (std::size_t p = 0; p < order.size(); ++p) {
    const std::string label = order[p] < dg.leafLabels.size() ? dg.leafLabels[order[p]] : std::to_string(order[p] + 1);
    d.text(f.X(double(p)) + 3, f.top + f.height + 8, label, "end", 9, -90);
  }
  return d.finish();
}

std::string heatmap(const MatrixD &values, const std::vector<std::string> &rowLabels,
                    const std::vector<std::string> &colLabels, std::vector<std::size_t> rowOrder,
                    std::vector<std::size_t> colOrder, const std::string &title) {
  if (rowOrder.empty()) {
    rowOrder.resize(values.rows());
    std::iota(rowOrder.begin(), rowOrder.end(), 0);
  }
  if (colOrder.empty()) {
    colOrder.resize(values.cols());
    std::iota(colOrder.begin(), colOrder.end(), 0);
  }
  if (rowOrder.size() != values.rows() || colOrder.size() != values.cols())
    throw DataError("heatmap: orders do not match the matrix");
  const double cell = std::max(4.0, std::min(20.0, 600.0 / double(std::max(values.rows(), values.cols()))));
  const double left = 20, top = 40;
  const double labelW = 110;
  Doc d(left + double(values.cols()) * cell + labelW + 70, top + double(values.rows()) * cell + labelW, title);
  const double limit = abs_limit(values.data());
  for (std::size_t r = 0; r < rowOrder.size(); ++r) {
    for (std::size_t c = 0; c < colOrder.size(); ++c)
      d.rect(left + double(c) * cell, top + double(r) * cell, cell, cell,
             diverging(values(rowOrder[r], colOrder[c]), limit), "cell");
    if (rowOrder[r] < rowLabels.size())
      d.text(left + double(values.cols()) * cell + 4, top + (double(r) + 0.75) * cell, rowLabels[rowOrder[r]], "start",
             std::min(10.0, cell));
  }
  for (std::size_t c = 0; c < colOrder.size(); ++c)
    if (colOrder[c] < colLabels.size())
      d.text(left + (double(c) + 0.75) * cell, top + double(values.rows()) * cell + 4, colLabels[colOrder[c]], "end",
             std::min(10.0, cell), -90);
  legend(d, left + double(values.cols()) * cell + labelW, top, limit);
  return d.finish();
}

std::string volcano(const std::vector<VolcanoPoint> &points, const std::string &title) {
  std::vector<double> xs, ys;
  for (const auto &p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  Frame f;
  f.xr = finite_range(xs);
  f.yr = finite_range(ys);
  f.yr.lo = std::min(f.yr.lo, 0.0);
  Doc d(f.left + f.width + 20, f.top + f.height + 50, title);
  f.draw(d, "fold change (log2)", "-log10 p");
  for (const auto &p : points)
    if (std::isfinite(p.x) && std::isfinite(p.y)) d.circle(f.X(p.x), f.Y(p.y), 2, "#333333");
  return d.finish();
}

std::string network(const RelNet &net, const std::string &title) {
  const std::size_t n = net.geneIds.size();
  const double cx = 300, cy = 300, R = 220;
  Doc d(600, 600, title);
  std::vector<double> px(n), py(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * double(i) / double(n) - std::numbers::pi / 2;
    px[i] = cx + R * std::cos(a);
    py[i] = cy + R * std::sin(a);
  }
  for (const auto &e : net.edges) {
    const std::string col = e.value >= 0 ? "#b2182b" : "#2166ac";
    const double w = std::clamp(1 + (e.p > 0 ? -std::log10(e.p) : 6.0) / 2, 1.0, 4.0);
    d.line(px[e.i], py[e.i], px[e.j], py[e.j], col, w, "edge");
  }
  for (std::size_t i = 0; i < n; ++i) {
    d.circle(px[i], py[i], 5, "#444444", "node");
    const double a = 2 * std::numbers::pi * double(i) / double(n) - std::numbers::pi / 2;
    d.text(cx + (R + 14) * std::cos(a), cy + (R + 14) * std::sin(a) + 3, net.geneIds[i],
           std::cos(a) >= 0 ? "start" : "end", 9);
  }
  return d.finish();
}

std::string gene_pair(const std::vector<GenePairCondition> &data, const std::string &geneX, const std::string &geneY) {
  std::vector<double> xs, ys;
  for (const auto &c : data) {
    xs.insert(xs.end(), c.x.begin(), c.x.end());
    ys.insert(ys.end(), c.y.begin(), c.y.end());
  }
  Frame f;
  f.xr = finite_range(xs);
  f.yr = finite_range(ys);
  Doc d(f.left + f.width + 140, f.top + f.height + 50, geneY + " against " + geneX);
  f.draw(d, geneX, geneY);
  for (std::size_t c = 0; c < data.size(); ++c) {
    const std::string col = kPalette[c % 8];
    for (std::size_t s = 0; s < data[c].x.size(); ++s) d.circle(f.X(data[c].x[s]), f.Y(data[c].y[s]), 3, col);
    if (std::isfinite(data[c].slope) && std::isfinite(data[c].intercept)) {
      auto yAt = [&](double x) { return std::clamp(data[c].intercept + data[c].slope * x, f.yr.lo, f.yr.hi); };
      d.polyline({{f.X(f.xr.lo), f.Y(yAt(f.xr.lo))}, {f.X(f.xr.hi), f.Y(yAt(f.xr.hi))}}, col);
    }
    d.rect(f.left + f.width + 14, f.top + 16 * double(c), 10, 10, col, "key");
    d.text(f.left + f.width + 28, f.top + 16 * double(c) + 9,
           data[c].condition + " (r=" + (std::isfinite(data[c].r) ? num(data[c].r) : std::string("NA")) + ")");
  }
  return d.finish();
}

std::string module_map(const ModuleResult &res, const std::string &title) {
  return heatmap(res.score, res.groups, res.columns, {}, {}, title);
}

}  // namespace arraykit::svg
