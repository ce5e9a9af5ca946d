#include "arraykit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "arraykit/error.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Stored form of every artifact kind

namespace {

Json num(double v) { return text::format_double(v); }

double num_of(const Json &j) {
  const auto v = text::parse_double(j.get<std::string>());
  if (!v) throw DataError("container metadata: bad number '" + j.get<std::string>() + "'");
  return *v;
}

Json nums(const std::vector<double> &v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> nums_of(const Json &j) {
  std::vector<double> v;
  for (const auto &x : j) v.push_back(num_of(x));
  return v;
}

MatrixD column(const std::vector<double> &v) { return MatrixD(v.size(), 1, v); }

template <typename T>
MatrixD to_double(const Matrix<T> &m) {
  MatrixD out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto v = m.data()[i];
    if constexpr (sizeof(T) == 8)
      if (v > (T(1) << 53) || v < -(T(1) << 53)) throw DataError("integer value too large to store exactly");
    out.data()[i] = double(v);
  }
  return out;
}

template <typename T>
Matrix<T> from_double(const MatrixD &m) {
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = T(m.data()[i]);
  return out;
}

Json label_table(const LabelTable &t) { return {{"names", t.names}, {"rows", t.rows}}; }

LabelTable label_table_of(const Json &j) {
  return {j.at("names").get<std::vector<std::string>>(), j.at("rows").get<std::vector<std::vector<std::string>>>()};
}

Json grid_json(const GridGeometry &g) {
  return {{"gridR", g.gridR}, {"gridC", g.gridC}, {"printTipR", g.printTipR}, {"printTipC", g.printTipC}};
}

GridGeometry grid_of(const Json &j) {
  return {j.at("gridR").get<int>(), j.at("gridC").get<int>(), j.at("printTipR").get<int>(),
          j.at("printTipC").get<int>()};
}

Json annotations(const Annotations &a) {
  Json groups = Json::array(), networks = Json::array(), interest = Json::array();
  for (const auto &g : a.groups) groups.push_back({{"name", g.name}, {"labelId", g.labelId}, {"members", g.members}});
  for (const auto &n : a.networks) {
    Json edges = Json::array();
    for (const auto &[x, y] : n.edges) edges.push_back({x, y});
    networks.push_back({{"name", n.name}, {"labelId", n.labelId}, {"edges", edges}});
  }
  for (auto c : a.samples.interest) interest.push_back(c == Channel::ch1 ? "ch1" : "ch2");
  return {{"datasetId", a.datasetId},
          {"genes", label_table(a.genes)},
          {"samples", {{"fileNames", a.samples.fileNames}, {"interest", interest}, {"labels", label_table(a.samples.labels)}}},
          {"groups", groups},
          {"networks", networks},
          {"notes", a.notes}};
}

Annotations annotations_of(const Json &j) {
  Annotations a;
  a.datasetId = j.at("datasetId").get<std::string>();
  a.genes = label_table_of(j.at("genes"));
  const auto &s = j.at("samples");
  a.samples.fileNames = s.at("fileNames").get<std::vector<std::string>>();
  for (const auto &c : s.at("interest")) a.samples.interest.push_back(c.get<std::string>() == "ch1" ? Channel::ch1 : Channel::ch2);
  a.samples.labels = label_table_of(s.at("labels"));
  for (const auto &g : j.at("groups"))
    a.groups.push_back({g.at("name").get<std::string>(), g.at("labelId").get<std::string>(),
                        g.at("members").get<std::vector<std::string>>()});
  for (const auto &n : j.at("networks")) {
    GeneNetwork net{n.at("name").get<std::string>(), n.at("labelId").get<std::string>(), {}};
    for (const auto &e : n.at("edges")) net.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    a.networks.push_back(std::move(net));
  }
  a.notes = j.at("notes").get<std::vector<std::string>>();
  return a;
}

MatrixD flags_column(const std::vector<char> &v) {
  MatrixD m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i] ? 1 : 0;
  return m;
}

std::vector<char> flags_of(const MatrixD &m) {
  std::vector<char> v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, 0) != 0;
  return v;
}

std::vector<std::size_t> sizes_of(const Json &j) { return j.get<std::vector<std::size_t>>(); }

const char *method_name(stats::TestMethod m) {
  switch (m) {
    case stats::TestMethod::welchT: return "welchT";
    case stats::TestMethod::pooledT: return "pooledT";
    case stats::TestMethod::wilcoxonExact: return "wilcoxonExact";
    case stats::TestMethod::wilcoxonNormal: return "wilcoxonNormal";
    case stats::TestMethod::permutationT: return "permutationT";
    case stats::TestMethod::bootstrapT: return "bootstrapT";
    case stats::TestMethod::fisherZ: return "fisherZ";
    case stats::TestMethod::anovaF: return "anovaF";
    case stats::TestMethod::contrastT: return "contrastT";
  }
  return "?";
}

stats::TestMethod method_of(const std::string &s) {
  for (int m = 0; m <= int(stats::TestMethod::contrastT); ++m)
    if (s == method_name(stats::TestMethod(m))) return stats::TestMethod(m);
  throw DataError("container metadata: unknown test method '" + s + "'");
}

struct Store {
  Container &c;
  void operator()(const RawDataset &d) {
    c.meta["kind"] = "RawDataset";
    c.meta["annotations"] = annotations(d.annot);
    c.meta["grid"] = grid_json(d.grid);
    c.put("ch1Fg", d.ch1Fg);
    c.put("ch1Bg", d.ch1Bg);
    c.put("ch2Fg", d.ch2Fg);
    c.put("ch2Bg", d.ch2Bg);
    c.put("flags", to_double(d.flags));
    c.put("useSpot", to_double(d.useSpot));
    c.put("badSpot", flags_column(d.badSpot));
  }
  void operator()(const NormalizedDataset &d) {
    c.meta["kind"] = "NormalizedDataset";
    c.meta["annotations"] = annotations(d.annot);
    c.meta["grid"] = d.grid ? grid_json(*d.grid) : Json(nullptr);
    c.meta["log"] = d.log;
    c.put("W", d.W);
    c.put("A", d.A);
    if (d.SW) c.put("SW", *d.SW);
    if (d.Wlo) c.put("Wlo", *d.Wlo);
    if (d.Whi) c.put("Whi", *d.Whi);
    c.put("useSpot", to_double(d.useSpot));
    c.put("badSpot", flags_column(d.badSpot));
  }
  void operator()(const DEResult &r) {
    c.meta["kind"] = "DEResult";
    c.meta["geneIds"] = r.geneIds;
    c.meta["sourceRows"] = r.sourceRows;
    c.meta["genes"] = label_table(r.genes);
    c.meta["sampleLabelId"] = r.sampleLabelId;
    c.meta["levels"] = r.levels;
    c.meta["families"] = r.families;
    c.meta["method"] = method_name(r.method);
    c.meta["adjust"] = stats::to_string(r.adjust);
    c.meta["sampleNames"] = r.sampleNames;
    c.meta["sampleLevel"] = r.sampleLevel;
    c.meta["skipped"] = r.skipped;
    c.put("statistic", r.statistic);
    c.put("rawP", r.rawP);
    c.put("adjP", r.adjP);
    c.put("groupMeans", r.groupMeans);
    c.put("foldChange", column(r.foldChange));
    c.put("W", r.W);
  }
  void operator()(const ClusterResult &r) {
    c.meta["kind"] = "ClusterResult";
    c.meta["algorithm"] = r.algorithm;
    c.meta["on"] = r.on == ClusterOn::genes ? "genes" : "samples";
    c.meta["labels"] = r.labels;
    c.meta["featureLabels"] = r.featureLabels;
    c.meta["warnings"] = r.warnings;
    c.put("data", r.data);
    if (r.tree) {
      Json t;
      t["leafLabels"] = r.tree->leafLabels;
      t["linkage"] = to_string(r.tree->linkage);
      t["distance"] = to_string(r.tree->distance);
      c.meta["tree"] = t;
      MatrixD merges(r.tree->merges.size(), 3);
      for (std::size_t k = 0; k < r.tree->merges.size(); ++k) {
        merges(k, 0) = double(r.tree->merges[k].a);
        merges(k, 1) = double(r.tree->merges[k].b);
        merges(k, 2) = r.tree->merges[k].height;
      }
      c.put("merges", merges);
    }
    if (r.partition) {
      const auto &p = *r.partition;
      Json j;
      j["inertia"] = num(p.inertia);
      j["quantizationError"] = num(p.quantizationError);
      j["inertiaHistory"] = nums(p.inertiaHistory);
      j["xdim"] = p.xdim;
      j["ydim"] = p.ydim;
      j["topology"] = to_string(p.topology);
      j["itemLabels"] = p.itemLabels;
      j["warnings"] = p.warnings;
      c.meta["partition"] = j;
      MatrixD assign(p.assignment.size(), 1);
      for (std::size_t i = 0; i < p.assignment.size(); ++i) assign(i, 0) = double(p.assignment[i]);
      c.put("assignment", assign);
      c.put("centers", p.centers);
    }
  }
  void operator()(const ClassifierResult &r) {
    c.meta["kind"] = "ClassifierResult";
    Json subsets = Json::array();
    MatrixD acc(r.subsets.size(), 1);
    for (std::size_t s = 0; s < r.subsets.size(); ++s) {
      subsets.push_back(
          {{"rows", r.subsets[s].rows}, {"geneIds", r.subsets[s].geneIds}, {"predictions", r.subsets[s].predictions}});
      acc(s, 0) = r.subsets[s].accuracy;
    }
    c.meta["subsets"] = subsets;
    c.meta["method"] = to_string(r.method);
    c.meta["k"] = r.k;
    c.meta["searchSpaceSize"] = r.searchSpaceSize;
    c.meta["sampleLabelId"] = r.sampleLabelId;
    c.meta["levels"] = r.levels;
    c.meta["sampleNames"] = r.sampleNames;
    c.meta["sampleClass"] = r.sampleClass;
    c.meta["heuristic"] = r.heuristic;
    c.meta["pool"] = r.pool;
    c.meta["excluded"] = r.excluded;
    c.put("accuracy", acc);
  }
  void operator()(const RelNet &n) {
    c.meta["kind"] = "RelNet";
    c.meta["geneIds"] = n.geneIds;
    c.meta["rows"] = n.rows;
    c.meta["sampleLabelId"] = n.sampleLabelId;
    c.meta["conditions"] = n.conditions;
    c.meta["corKind"] = to_string(n.kind);
    c.meta["cutPval"] = num(n.cutPval);
    c.meta["notes"] = n.notes;
    MatrixD edges(n.edges.size(), 4);
    for (std::size_t e = 0; e < n.edges.size(); ++e) {
      edges(e, 0) = double(n.edges[e].i);
      edges(e, 1) = double(n.edges[e].j);
      edges(e, 2) = n.edges[e].value;
      edges(e, 3) = n.edges[e].p;
    }
    c.put("edges", edges);
    c.put("cor", n.cor);
    c.put("p", n.p);
    c.put("rA", n.rA);
    c.put("rB", n.rB);
    c.put("dZ", n.dZ);
    for (std::size_t k = 0; k < n.data.size(); ++k) c.put("data" + std::to_string(k), n.data[k]);
  }
  void operator()(const ModuleResult &m) {
    c.meta["kind"] = "ModuleResult";
    c.meta["groups"] = m.groups;
    c.meta["columns"] = m.columns;
    c.meta["cutExp"] = num(m.cutExp);
    c.meta["cutPhiper"] = num(m.cutPhiper);
    c.meta["mode"] = to_string(m.mode);
    c.meta["adjust"] = stats::to_string(m.adjust);
    c.meta["sampleLabelId"] = m.sampleLabelId;
    c.put("state", to_double(m.state));
    c.put("pInduced", m.pInduced);
    c.put("pRepressed", m.pRepressed);
    c.put("pValue", m.pValue);
    c.put("score", m.score);
    c.put("universe", to_double(m.universe));
  }
  void operator()(const NetScore &s) {
    c.meta["kind"] = "NetScore";
    c.meta["networks"] = s.networks;
    c.meta["conditions"] = s.conditions;
    c.meta["sampleLabelId"] = s.sampleLabelId;
    c.meta["notes"] = s.notes;
    c.put("statistic", s.statistic);
    c.put("pValue", s.pValue);
    c.put("edgeCount", to_double(s.edgeCount));
  }
};

Artifact load_artifact(const Container &c) {
  const auto &m = c.meta;
  const auto kind = m.at("kind").get<std::string>();
  if (kind == "RawDataset") {
    RawDataset d;
    d.annot = annotations_of(m.at("annotations"));
    d.grid = grid_of(m.at("grid"));
    d.ch1Fg = c.matrix("ch1Fg");
    d.ch1Bg = c.matrix("ch1Bg");
    d.ch2Fg = c.matrix("ch2Fg");
    d.ch2Bg = c.matrix("ch2Bg");
    d.flags = from_double<std::int64_t>(c.matrix("flags"));
    d.useSpot = from_double<char>(c.matrix("useSpot"));
    d.badSpot = flags_of(c.matrix("badSpot"));
    return d;
  }
  if (kind == "NormalizedDataset") {
    NormalizedDataset d;
    d.annot = annotations_of(m.at("annotations"));
    if (!m.at("grid").is_null()) d.grid = grid_of(m.at("grid"));
    d.log = m.at("log").get<std::vector<std::string>>();
    d.W = c.matrix("W");
    d.A = c.matrix("A");
    if (c.has_matrix("SW")) d.SW = c.matrix("SW");
    if (c.has_matrix("Wlo")) d.Wlo = c.matrix("Wlo");
    if (c.has_matrix("Whi")) d.Whi = c.matrix("Whi");
    d.useSpot = from_double<char>(c.matrix("useSpot"));
    d.badSpot = flags_of(c.matrix("badSpot"));
    return d;
  }
  if (kind == "DEResult") {
    DEResult r;
    r.geneIds = m.at("geneIds").get<std::vector<std::string>>();
    r.sourceRows = sizes_of(m.at("sourceRows"));
    r.genes = label_table_of(m.at("genes"));
    r.sampleLabelId = m.at("sampleLabelId").get<std::string>();
    r.levels = m.at("levels").get<std::vector<std::string>>();
    r.families = m.at("families").get<std::vector<std::string>>();
    r.method = method_of(m.at("method").get<std::string>());
    r.adjust = stats::parse_padjust(m.at("adjust").get<std::string>());
    r.sampleNames = m.at("sampleNames").get<std::vector<std::string>>();
    r.sampleLevel = m.at("sampleLevel").get<std::vector<int>>();
    r.skipped = m.at("skipped").get<std::vector<std::string>>();
    r.statistic = c.matrix("statistic");
    r.rawP = c.matrix("rawP");
    r.adjP = c.matrix("adjP");
    r.groupMeans = c.matrix("groupMeans");
    r.foldChange = c.matrix("foldChange").data();
    r.W = c.matrix("W");
    return r;
  }
  if (kind == "ClusterResult") {
    ClusterResult r;
    r.algorithm = m.at("algorithm").get<std::string>();
    r.on = parse_cluster_on(m.at("on").get<std::string>());
    r.labels = m.at("labels").get<std::vector<std::string>>();
    r.featureLabels = m.at("featureLabels").get<std::vector<std::string>>();
    r.warnings = m.at("warnings").get<std::vector<std::string>>();
    r.data = c.matrix("data");
    if (m.contains("tree")) {
      Dendrogram d;
      d.leafLabels = m["tree"].at("leafLabels").get<std::vector<std::string>>();
      d.linkage = parse_linkage(m["tree"].at("linkage").get<std::string>());
      d.distance = parse_distance(m["tree"].at("distance").get<std::string>());
      const auto &mg = c.matrix("merges");
      for (std::size_t k = 0; k < mg.rows(); ++k)
        d.merges.push_back({std::size_t(mg(k, 0)), std::size_t(mg(k, 1)), mg(k, 2)});
      r.tree = std::move(d);
    }
    if (m.contains("partition")) {
      const auto &j = m["partition"];
      Partition p;
      p.inertia = num_of(j.at("inertia"));
      p.quantizationError = num_of(j.at("quantizationError"));
      p.inertiaHistory = nums_of(j.at("inertiaHistory"));
      p.xdim = j.at("xdim").get<int>();
      p.ydim = j.at("ydim").get<int>();
      p.topology = parse_topology(j.at("topology").get<std::string>());
      p.itemLabels = j.at("itemLabels").get<std::vector<std::string>>();
      p.warnings = j.at("warnings").get<std::vector<std::string>>();
      for (double v : c.matrix("assignment").data()) p.assignment.push_back(std::size_t(v));
      p.centers = c.matrix("centers");
      r.partition = std::move(p);
    }
    return r;
  }
  if (kind == "ClassifierResult") {
    ClassifierResult r;
    const auto &acc = c.matrix("accuracy");
    std::size_t s = 0;
    for (const auto &j : m.at("subsets")) {
      GeneSubset g;
      g.rows = sizes_of(j.at("rows"));
      g.geneIds = j.at("geneIds").get<std::vector<std::string>>();
      g.predictions = j.at("predictions").get<std::vector<int>>();
      g.accuracy = acc(s++, 0);
      r.subsets.push_back(std::move(g));
    }
    r.method = parse_class_method(m.at("method").get<std::string>());
    r.k = m.at("k").get<int>();
    r.searchSpaceSize = m.at("searchSpaceSize").get<std::uint64_t>();
    r.sampleLabelId = m.at("sampleLabelId").get<std::string>();
    r.levels = m.at("levels").get<std::vector<std::string>>();
    r.sampleNames = m.at("sampleNames").get<std::vector<std::string>>();
    r.sampleClass = m.at("sampleClass").get<std::vector<int>>();
    r.heuristic = m.at("heuristic").get<bool>();
    r.pool = m.at("pool").get<std::vector<std::string>>();
    r.excluded = m.at("excluded").get<std::vector<std::string>>();
    return r;
  }
  if (kind == "RelNet") {
    RelNet n;
    n.geneIds = m.at("geneIds").get<std::vector<std::string>>();
    n.rows = sizes_of(m.at("rows"));
    n.sampleLabelId = m.at("sampleLabelId").get<std::string>();
    n.conditions = m.at("conditions").get<std::vector<std::string>>();
    n.kind = parse_cor_kind(m.at("corKind").get<std::string>());
    n.cutPval = num_of(m.at("cutPval"));
    n.notes = m.at("notes").get<std::vector<std::string>>();
    const auto &e = c.matrix("edges");
    for (std::size_t k = 0; k < e.rows(); ++k) n.edges.push_back({std::size_t(e(k, 0)), std::size_t(e(k, 1)), e(k, 2), e(k, 3)});
    n.cor = c.matrix("cor");
    n.p = c.matrix("p");
    n.rA = c.matrix("rA");
    n.rB = c.matrix("rB");
    n.dZ = c.matrix("dZ");
    for (std::size_t k = 0; c.has_matrix("data" + std::to_string(k)); ++k) n.data.push_back(c.matrix("data" + std::to_string(k)));
    return n;
  }
  if (kind == "ModuleResult") {
    ModuleResult r;
    r.groups = m.at("groups").get<std::vector<std::string>>();
    r.columns = m.at("columns").get<std::vector<std::string>>();
    r.cutExp = num_of(m.at("cutExp"));
    r.cutPhiper = num_of(m.at("cutPhiper"));
    r.mode = parse_module_mode(m.at("mode").get<std::string>());
    r.adjust = stats::parse_padjust(m.at("adjust").get<std::string>());
    r.sampleLabelId = m.at("sampleLabelId").get<std::string>();
    r.state = from_double<int>(c.matrix("state"));
    r.pInduced = c.matrix("pInduced");
    r.pRepressed = c.matrix("pRepressed");
    r.pValue = c.matrix("pValue");
    r.score = c.matrix("score");
    r.universe = from_double<std::int64_t>(c.matrix("universe"));
    return r;
  }
  if (kind == "NetScore") {
    NetScore s;
    s.networks = m.at("networks").get<std::vector<std::string>>();
    s.conditions = m.at("conditions").get<std::vector<std::string>>();
    s.sampleLabelId = m.at("sampleLabelId").get<std::string>();
    s.notes = m.at("notes").get<std::vector<std::string>>();
    s.statistic = c.matrix("statistic");
    s.pValue = c.matrix("pValue");
    s.edgeCount = from_double<std::int64_t>(c.matrix("edgeCount"));
    return s;
  }
  throw DataError("container holds an unknown object kind '" + kind + "'");
}

}  // namespace

bool ClusterResult::operator==(const ClusterResult &o) const {
  return algorithm == o.algorithm && on == o.on && bitwise_equal(data, o.data) && labels == o.labels &&
         featureLabels == o.featureLabels && tree == o.tree && partition == o.partition && warnings == o.warnings;
}

std::string artifact_kind(const Artifact &a) {
  static const char *names[] = {"RawDataset", "NormalizedDataset", "DEResult", "ClusterResult",
                                "ClassifierResult", "RelNet", "ModuleResult", "NetScore"};
  return names[a.index()];
}

Container to_container(const Artifact &a) {
  Container c;
  std::visit(Store{c}, a);
  return c;
}

Artifact from_container(const Container &c) {
  try {
    return load_artifact(c);
  } catch (const Json::exception &e) {
    throw DataError(std::string("container metadata is incomplete: ") + e.what());
  }
}

std::string artifact_hash(const Artifact &a) { return content_hash(to_container(a)); }

// ---------------------------------------------------------------------------
// Operation registry

namespace {

using K = OptionSpec::Kind;

OptionSpec opt(std::string name, K kind, std::string fallback, std::string help, std::vector<std::string> choices = {}) {
  return {std::move(name), kind, std::move(fallback), std::move(help), std::move(choices), true};
}

OptionSpec side(std::string name, K kind, std::string fallback, std::string help) {
  return {std::move(name), kind, std::move(fallback), std::move(help), {}, false};
}

const std::vector<std::string> kAdjust = {"none", "bonferroni", "holm", "BH", "BY", "fdr"};

std::vector<OpSpec> build_specs() {
  std::vector<OpSpec> s;
  s.push_back({"load", "read a dataset described by a config file", false,
               {opt("config", K::text, "", "load configuration file"),
                opt("groups", K::text, "", "gene groups: name=file[,name=file...]"),
                opt("networks", K::text, "", "gene networks: name=file[,name=file...]"),
                opt("group-label", K::text, "", "gene label matched by group and network members (default: first gene-map column)")}});
  s.push_back({"select", "choose the spots used for normalization", true,
               {opt("sig-noise", K::real, "0", "minimum foreground/background ratio in both channels"),
                opt("rm-flags", K::text, "", "comma-separated flag values to exclude"),
                opt("remove-names", K::text, "", "comma-separated gene labels to exclude (e.g. controls)"),
                opt("label", K::text, "", "gene label used by --remove-names"),
                opt("mark-bad", K::text, "", "comma-separated 1-based spot numbers to mark bad")}});
  s.push_back({"qc", "draw a quality-control plot", true,
               {opt("kind", K::text, "wa", "plot kind", {"wa", "spatial", "boxplot"}),
                opt("chip", K::integer, "1", "1-based chip (sample) number"),
                opt("gene", K::text, "", "gene for the boxplot"),
                opt("label", K::text, "", "sample label grouping the boxplot"),
                opt("gene-id", K::text, "", "gene label used to find --gene"),
                opt("bkg", K::text, "subtract", "background correction for raw input", {"none", "subtract", "minimumPositive"}),
                side("svg", K::text, "", "output SVG file")}});
  s.push_back({"normalize", "compute and normalize log-ratios", true,
               {opt("method", K::text, "loess", "intensity-dependent normalization", {"loess", "repeatedLoess", "none"}),
                opt("span", K::real, "0.4", "loess span"),
                opt("scope", K::text, "global", "loess fitting unit", {"global", "printTip"}),
                opt("iterations", K::integer, "2", "loess robustness iterations"),
                opt("scale", K::text, "none", "MAD scaling", {"none", "printTipMAD", "globalMAD"}),
                opt("bkg", K::text, "subtract", "background correction for raw input", {"none", "subtract", "minimumPositive"}),
                opt("repeats", K::integer, "30", "repeated loess: number of refits"),
                opt("fraction", K::real, "0.7", "repeated loess: subsample fraction"),
                opt("alpha", K::real, "0.05", "repeated loess: interval level"),
                opt("seed", K::integer, "1", "master seed")}});
  s.push_back({"summarize", "collapse replicate spots and chips", true,
               {opt("gene-label", K::text, "", "gene label identifying replicate spots"),
                opt("sample-label", K::text, "", "sample label identifying replicate chips"),
                opt("spots", K::text, "median", "spot summary", {"mean", "median", "none"}),
                opt("samples", K::text, "mean", "chip summary", {"mean", "median", "none"}),
                opt("keep-empty", K::flag, "false", "keep rows with an empty gene label"),
                opt("rm-bad", K::flag, "false", "drop spots marked bad")}});
  s.push_back({"de", "two-group differential expression", true,
               {opt("label", K::text, "", "two-level sample label"),
                opt("test", K::text, "t", "test", {"t", "wilcox", "bootT"}),
                opt("adjust", K::text, "BH", "p-value adjustment", kAdjust),
                opt("pooled", K::flag, "false", "equal-variance t"),
                opt("exact", K::flag, "false", "exact Wilcoxon null when there are no ties"),
                opt("boot-b", K::integer, "999", "resamples for bootT"),
                opt("gene-id", K::text, "", "gene label used as identifier"),
                opt("seed", K::integer, "1", "master seed"),
                side("csv", K::text, "", "output CSV table"),
                side("html", K::text, "", "output HTML table"),
                side("svg", K::text, "", "output volcano plot"),
                side("top", K::integer, "0", "rows in the tables (0 = all)")}});
  s.push_back({"anova", "gene-wise ANOVA", true,
               {opt("factors", K::text, "", "comma-separated factor labels"),
                opt("f-test", K::flag, "false", "report the F test instead of contrast t tests"),
                opt("contrasts", K::text, "pairwise", "contrast set", {"pairwise", "baseline"}),
                opt("adjust", K::text, "BH", "p-value adjustment", kAdjust),
                opt("gene-id", K::text, "", "gene label used as identifier"),
                side("csv", K::text, "", "output CSV table"),
                side("html", K::text, "", "output HTML table"),
                side("top", K::integer, "0", "rows in the tables (0 = all)")}});
  s.push_back({"cluster", "cluster genes or samples", true,
               {opt("alg", K::text, "hier", "algorithm", {"hier", "kmeans", "som"}),
                opt("on", K::text, "genes", "items to cluster", {"genes", "samples"}),
                opt("n-de", K::integer, "20", "DE input: number of top genes (0 = use --p-cut)"),
                opt("p-cut", K::real, "0.05", "DE input: adjusted p cut when --n-de is 0"),
                opt("adjust", K::text, "BH", "DE input: adjustment used for the selection", kAdjust),
                opt("distance", K::text, "auto", "distance for hierarchical clustering",
                    {"auto", "euclidean", "oneMinusCor", "oneMinusAbsCor"}),
                opt("linkage", K::text, "average", "linkage", {"single", "complete", "average"}),
                opt("k", K::integer, "2", "k-means clusters"),
                opt("restarts", K::integer, "10", "k-means restarts"),
                opt("xdim", K::integer, "2", "SOM grid columns"),
                opt("ydim", K::integer, "1", "SOM grid rows"),
                opt("topol", K::text, "rect", "SOM topology", {"rect", "hex"}),
                opt("steps", K::integer, "-1", "SOM updates (-1 = 100 per item)"),
                opt("alpha0", K::real, "0.05", "SOM initial learning rate"),
                opt("radius0", K::real, "-1", "SOM initial radius (-1 = half the larger grid side)"),
                opt("seed", K::integer, "1", "master seed"),
                side("svg", K::text, "", "output dendrogram or heatmap"),
                side("csv", K::text, "", "output assignment or merge table")}});
  s.push_back({"classify", "search small gene sets that separate two classes", true,
               {opt("label", K::text, "", "two-level sample label"),
                opt("method", K::text, "lda", "classifier", {"lda", "knn"}),
                opt("k", K::integer, "3", "kNN neighbours"),
                opt("n-genes", K::integer, "3", "genes per classifier"),
                opt("group", K::text, "", "gene group (name or 1-based index) forming the pool"),
                opt("network", K::text, "", "gene network forming the pool"),
                opt("search", K::text, "exhaustive", "search strategy", {"exhaustive", "snc"}),
                opt("pool-size", K::integer, "30", "search and choose: genes kept after pre-ranking"),
                opt("prerank", K::text, "cv", "search and choose: pre-ranking", {"cv", "de"}),
                opt("top", K::integer, "50", "classifiers kept"),
                opt("gene-id", K::text, "", "gene label used as identifier"),
                side("csv", K::text, "", "output CSV table"),
                side("html", K::text, "", "output HTML table")}});
  s.push_back({"relnet", "relevance network in one condition", true,
               {opt("label", K::text, "", "sample label"),
                opt("condition", K::text, "", "level of the label"),
                opt("group", K::text, "", "gene group forming the pool (default: all genes)"),
                opt("cor", K::text, "pearson", "association measure", {"pearson", "robust", "mi"}),
                opt("cut", K::real, "0.05", "p-value cut for edges"),
                opt("perms", K::integer, "999", "MI permutations"),
                opt("gene-id", K::text, "", "gene label used as identifier"),
                opt("seed", K::integer, "1", "master seed"),
                side("svg", K::text, "", "output network plot"),
                side("csv", K::text, "", "output edge table"),
                side("pair", K::text, "", "gene pair X,Y for a scatter plot"),
                side("pair-svg", K::text, "", "output gene-pair plot")}});
  s.push_back({"relnet-diff", "network of correlation changes between two conditions", true,
               {opt("label", K::text, "", "sample label"),
                opt("a", K::text, "", "first condition"),
                opt("b", K::text, "", "second condition"),
                opt("group", K::text, "", "gene group forming the pool (default: all genes)"),
                opt("cut", K::real, "0.05", "p-value cut for edges"),
                opt("gene-id", K::text, "", "gene label used as identifier"),
                side("svg", K::text, "", "output network plot"),
                side("csv", K::text, "", "output edge table"),
                side("pair", K::text, "", "gene pair X,Y for a scatter plot"),
                side("pair-svg", K::text, "", "output gene-pair plot")}});
  s.push_back({"modules", "activation of gene groups", true,
               {opt("label", K::text, "", "sample label (condition mode)"),
                opt("cut-exp", K::real, "1", "log-ratio threshold for induction and repression"),
                opt("cut-p", K::real, "0.05", "p-value threshold"),
                opt("mode", K::text, "condition", "columns", {"condition", "sample"}),
                opt("adjust", K::text, "none", "adjustment across groups, columns and directions", {"none", "BH"}),
                side("svg", K::text, "", "output module map"),
                side("csv", K::text, "", "output table")}});
  s.push_back({"netscore", "score loaded gene networks per condition", true,
               {opt("label", K::text, "", "sample label"), side("csv", K::text, "", "output table")}});
  return s;
}

}  // namespace

const std::vector<OpSpec> &op_specs() {
  static const std::vector<OpSpec> specs = build_specs();
  return specs;
}

const OpSpec &op_spec(const std::string &name) {
  for (const auto &s : op_specs())
    if (s.name == name) return s;
  throw UsageError("unknown operation '" + name + "'");
}

Params canonical_params(const OpSpec &spec, const std::map<std::string, std::string> &given) {
  Params out;
  for (const auto &[k, v] : given) {
    auto it = std::find_if(spec.options.begin(), spec.options.end(), [&](const OptionSpec &o) { return o.name == k; });
    if (it == spec.options.end() || !it->recorded) throw UsageError(spec.name + ": unknown parameter '" + k + "'");
  }
  for (const auto &o : spec.options) {
    if (!o.recorded) continue;
    auto it = given.find(o.name);
    std::string v = it == given.end() ? o.fallback : it->second;
    switch (o.kind) {
      case K::text: break;
      case K::integer: {
        auto x = text::parse_int(text::trim(v));
        if (!x) throw UsageError(spec.name + ": --" + o.name + " expects an integer, got '" + v + "'");
        v = std::to_string(*x);
        break;
      }
      case K::real: {
        auto x = text::parse_double(text::trim(v));
        if (!x || std::isnan(*x)) throw UsageError(spec.name + ": --" + o.name + " expects a number, got '" + v + "'");
        v = text::format_double(*x);
        break;
      }
      case K::flag:
        if (v == "true" || v == "1") v = "true";
        else if (v == "false" || v == "0" || v.empty()) v = "false";
        else throw UsageError(spec.name + ": --" + o.name + " is a flag");
        break;
    }
    if (!o.choices.empty() && std::find(o.choices.begin(), o.choices.end(), v) == o.choices.end())
      throw UsageError(spec.name + ": --" + o.name + " must be one of " + text::join(o.choices, ", ") + ", got '" + v + "'");
    out[o.name] = v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operations

namespace {

struct P {
  const Params &p;
  const std::string &get(const std::string &k) const {
    auto it = p.find(k);
    if (it == p.end()) throw UsageError("missing parameter '" + k + "'");
    return it->second;
  }
  std::string text(const std::string &k) const { return get(k); }
  std::string required(const std::string &k) const {
    const auto &v = get(k);
    if (v.empty()) throw UsageError("--" + k + " is required");
    return v;
  }
  long long integer(const std::string &k) const {
    auto v = text::parse_int(get(k));
    if (!v) throw UsageError("--" + k + " expects an integer");
    return *v;
  }
  double real(const std::string &k) const {
    auto v = text::parse_double(get(k));
    if (!v) throw UsageError("--" + k + " expects a number");
    return *v;
  }
  bool flag(const std::string &k) const { return get(k) == "true"; }
  std::uint64_t seed() const { return std::uint64_t(integer("seed")); }
};

std::vector<std::string> list(const std::string &s) {
  std::vector<std::string> out;
  if (text::trim(s).empty()) return out;
  for (const auto &part : text::split(s, ',')) out.emplace_back(text::trim(part));
  return out;
}

fs::path resolve(const fs::path &base, const std::string &p) {
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

template <typename T>
const T &input_as(const Artifact *in, const std::string &op) {
  if (!in) throw UsageError(op + " needs an input container (--in)");
  if (auto p = std::get_if<T>(in)) return *p;
  throw DataError(op + " cannot use a " + artifact_kind(*in) + " as input");
}

const NormalizedDataset &normalized(const Artifact *in, const std::string &op) {
  if (in && std::holds_alternative<RawDataset>(*in))
    throw DataError(op + " needs normalized data; run normalize first");
  return input_as<NormalizedDataset>(in, op);
}

std::vector<std::size_t> pool_rows(const NormalizedDataset &ds, const std::string &group, const std::string &network) {
  if (!group.empty() && !network.empty()) throw UsageError("give either --group or --network, not both");
  if (!group.empty()) {
    const auto &g = ds.annot.group(group);
    return resolve_members(ds.annot.genes, g.labelId, g.members).rows;
  }
  if (!network.empty()) {
    const auto &n = ds.annot.network(network);
    std::vector<std::string> members;
    for (const auto &[a, b] : n.edges) {
      members.push_back(a);
      members.push_back(b);
    }
    return resolve_members(ds.annot.genes, n.labelId, members).rows;
  }
  std::vector<std::size_t> all(ds.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

OpResult op_load(const P &p, const fs::path &base) {
  const auto configArg = p.required("config");
  const auto configPath = resolve(base, configArg);
  const std::string configText = text::read_file(configPath.string());
  const LoadConfig cfg = parse_config(configText);
  const fs::path cfgDir = fs::path(configArg).parent_path();
  OpResult out;
  RawDataset ds = load_dataset(cfg, resolve(base, cfgDir.string()));

  out.inputFiles[configArg] = sha256_hex(configText);
  const fs::path dataDir = cfgDir / cfg.dataDir;
  auto hashData = [&](const std::string &name) {
    const auto rel = (dataDir / name).lexically_normal().generic_string();
    out.inputFiles[rel] = sha256_hex(text::read_file(resolve(base, rel).string()));
  };
  hashData(cfg.sampleFile);
  hashData(cfg.geneMap);
  for (const auto &f : ds.annot.samples.fileNames) hashData(f + cfg.ext.value_or(""));

  std::string labelId = p.text("group-label");
  if (labelId.empty() && !ds.annot.genes.names.empty()) labelId = ds.annot.genes.names.front();
  auto named = [&](const std::string &spec, auto &&add) {
    for (const auto &item : list(spec)) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("expected name=file, got '" + item + "'");
      const std::string name = item.substr(0, eq), file = item.substr(eq + 1);
      out.inputFiles[file] = sha256_hex(text::read_file(resolve(base, file).string()));
      add(name, resolve(base, file).string());
    }
  };
  named(p.text("groups"), [&](const std::string &name, const std::string &path) {
    ds = add_gene_groups(std::move(ds), name, read_group_file(path), labelId);
  });
  named(p.text("networks"), [&](const std::string &name, const std::string &path) {
    ds = add_network(std::move(ds), name, read_network_file(path), labelId);
  });
  out.messages.push_back("loaded " + std::to_string(ds.spots()) + " spots x " + std::to_string(ds.chips()) + " chips");
  out.artifact = std::move(ds);
  return out;
}

OpResult op_select(const P &p, const Artifact *in) {
  RawDataset ds = input_as<RawDataset>(in, "select");
  SpotSelection sel;
  sel.sigNoise = p.real("sig-noise");
  for (const auto &f : list(p.text("rm-flags"))) {
    auto v = text::parse_int(f);
    if (!v) throw UsageError("--rm-flags expects integers, got '" + f + "'");
    sel.rmFlags.push_back(*v);
  }
  sel.removeNames = list(p.text("remove-names"));
  sel.labelId = p.text("label");
  if (!sel.removeNames.empty() && sel.labelId.empty()) sel.labelId = ds.annot.genes.names.front();
  std::vector<std::size_t> bad;
  for (const auto &s : list(p.text("mark-bad"))) {
    auto v = text::parse_int(s);
    if (!v || *v < 1) throw UsageError("--mark-bad expects 1-based spot numbers, got '" + s + "'");
    bad.push_back(std::size_t(*v - 1));
  }
  if (!bad.empty()) ds = mark_bad_spots(std::move(ds), bad);
  ds = select_spots(std::move(ds), sel);
  std::size_t used = 0;
  for (char c : ds.useSpot.data()) used += c ? 1 : 0;
  OpResult out{std::move(ds), {}, {}};
  out.messages.push_back(std::to_string(used) + " spot measurements selected for normalization");
  return out;
}

OpResult op_normalize(const P &p, const Artifact *in) {
  NormalizedDataset ds;
  if (in && std::holds_alternative<RawDataset>(*in))
    ds = compute_wa(std::get<RawDataset>(*in), parse_bkg(p.text("bkg")));
  else
    ds = input_as<NormalizedDataset>(in, "normalize");
  LoessOptions lo{p.real("span"), parse_loess_scope(p.text("scope")), int(p.integer("iterations"))};
  const auto method = p.text("method");
  if (method == "loess") {
    ds = normalize_loess(std::move(ds), lo);
  } else if (method == "repeatedLoess") {
    RepeatedLoessOptions ro;
    ro.loess = lo;
    ro.repeats = int(p.integer("repeats"));
    ro.fraction = p.real("fraction");
    ro.alpha = p.real("alpha");
    ro.seed = p.seed();
    ds = normalize_repeated_loess(std::move(ds), ro);
  }
  if (p.text("scale") != "none") ds = normalize_scale_mad(std::move(ds), parse_mad_scope(p.text("scale")));
  return {std::move(ds), {}, {}};
}

OpResult op_summarize(const P &p, const Artifact *in) {
  SummarizeOptions o;
  o.geneLabel = p.text("gene-label");
  o.sampleLabel = p.text("sample-label");
  o.spots = parse_summary(p.text("spots"));
  o.samples = parse_summary(p.text("samples"));
  if (o.geneLabel.empty()) o.spots = Summary::none;
  if (o.sampleLabel.empty()) o.samples = Summary::none;
  o.keepEmpty = p.flag("keep-empty");
  o.rmBad = p.flag("rm-bad");
  auto ds = summarize_replicates(normalized(in, "summarize"), o);
  OpResult out{std::move(ds), {}, {}};
  const auto &d = std::get<NormalizedDataset>(out.artifact);
  out.messages.push_back("summarized to " + std::to_string(d.rows()) + " rows x " + std::to_string(d.cols()) + " columns");
  return out;
}

OpResult op_de(const P &p, const Artifact *in) {
  TwoGroupOptions o;
  o.sampleLabel = p.required("label");
  o.test = parse_two_group_test(p.text("test"));
  o.adjust = stats::parse_padjust(p.text("adjust"));
  o.pooled = p.flag("pooled");
  o.exact = p.flag("exact");
  o.bootB = int(p.integer("boot-b"));
  o.seed = p.seed();
  o.geneIdLabel = p.text("gene-id");
  auto res = de_two_groups(normalized(in, "de"), o);
  OpResult out;
  out.messages.push_back("tested " + std::to_string(res.size()) + " genes, skipped " + std::to_string(res.skipped.size()));
  out.artifact = std::move(res);
  return out;
}

OpResult op_anova(const P &p, const Artifact *in) {
  const auto &ds = normalized(in, "anova");
  const auto factors = list(p.required("factors"));
  const auto design = design_anova(ds, factors, parse_contrast_kind(p.text("contrasts")));
  AnovaOptions o;
  o.returnF = p.flag("f-test");
  o.adjust = stats::parse_padjust(p.text("adjust"));
  o.geneIdLabel = p.text("gene-id");
  auto res = fit_anova(ds, design, o);
  OpResult out;
  out.messages.push_back("design " + std::to_string(design.design.rows()) + "x" + std::to_string(design.design.cols()) +
                         ", " + std::to_string(design.contrasts.cols()) + " contrasts; tested " +
                         std::to_string(res.size()) + " genes");
  out.artifact = std::move(res);
  return out;
}

OpResult op_cluster(const P &p, const Artifact *in) {
  ClusterResult r;
  r.algorithm = p.text("alg");
  r.on = parse_cluster_on(p.text("on"));
  if (in && std::holds_alternative<DEResult>(*in)) {
    const auto &de = std::get<DEResult>(*in);
    const auto n = p.integer("n-de");
    if (n < 0) throw UsageError("--n-de must be >= 0");
    auto sel = select_de_matrix(de, stats::parse_padjust(p.text("adjust")), std::size_t(n), p.real("p-cut"), r.on);
    r.data = std::move(sel.data);
    r.labels = std::move(sel.labels);
    r.warnings = std::move(sel.warnings);
    if (r.on == ClusterOn::genes) {
      r.featureLabels = de.sampleNames;
    } else {
      auto genesSel = select_de_matrix(de, stats::parse_padjust(p.text("adjust")), std::size_t(n), p.real("p-cut"),
                                       ClusterOn::genes);
      r.featureLabels = genesSel.labels;
    }
  } else {
    const auto &ds = normalized(in, "cluster");
    const auto ids = gene_ids(ds.annot.genes, "");
    if (r.on == ClusterOn::genes) {
      r.data = ds.W;
      r.labels = ids;
      r.featureLabels = ds.annot.samples.fileNames;
    } else {
      r.data = MatrixD(ds.cols(), ds.rows());
      for (std::size_t i = 0; i < ds.rows(); ++i)
        for (std::size_t j = 0; j < ds.cols(); ++j) r.data(j, i) = ds.W(i, j);
      r.labels = ds.annot.samples.fileNames;
      r.featureLabels = ids;
    }
  }
  if (r.algorithm == "hier") {
    std::string dist = p.text("distance");
    if (dist == "auto") dist = r.on == ClusterOn::genes ? "oneMinusCor" : "euclidean";
    const auto kind = parse_distance(dist);
    auto tree = hier_cluster(distance_matrix(r.data, kind), parse_linkage(p.text("linkage")), r.labels);
    tree.distance = kind;
    r.tree = std::move(tree);
  } else if (r.algorithm == "kmeans") {
    const auto k = p.integer("k");
    if (k < 1) throw UsageError("--k must be >= 1");
    r.partition = kmeans(r.data, std::size_t(k), int(p.integer("restarts")), p.seed());
  } else {
    SomOptions o;
    o.xdim = int(p.integer("xdim"));
    o.ydim = int(p.integer("ydim"));
    o.topology = parse_topology(p.text("topol"));
    o.steps = p.integer("steps");
    o.alpha0 = p.real("alpha0");
    o.radius0 = p.real("radius0");
    o.seed = p.seed();
    r.partition = som(r.data, o);
  }
  if (r.partition) {
    r.partition->itemLabels = r.labels;
    for (const auto &w : r.partition->warnings) r.warnings.push_back(w);
  }
  OpResult out;
  out.messages = r.warnings;
  out.messages.push_back("clustered " + std::to_string(r.data.rows()) + " items");
  out.artifact = std::move(r);
  return out;
}

OpResult op_classify(const P &p, const Artifact *in) {
  const auto &ds = normalized(in, "classify");
  ClassifierOptions o;
  o.sampleLabel = p.required("label");
  o.method = parse_class_method(p.text("method"));
  o.k = int(p.integer("k"));
  o.nGenes = int(p.integer("n-genes"));
  if (o.nGenes < 1) throw UsageError("--n-genes must be >= 1");
  const auto top = p.integer("top");
  if (top < 0) throw UsageError("--top must be >= 0");
  o.topK = std::size_t(top);
  o.geneIdLabel = p.text("gene-id");
  const auto pool = pool_rows(ds, p.text("group"), p.text("network"));
  ClassifierResult res;
  if (p.text("search") == "exhaustive") {
    res = exhaustive_search(ds, o, pool);
  } else {
    const auto size = p.integer("pool-size");
    if (size < 1) throw UsageError("--pool-size must be >= 1");
    res = search_and_choose(ds, o, pool, std::size_t(size), parse_prerank(p.text("prerank")));
  }
  OpResult out;
  out.messages.push_back(std::to_string(res.searchSpaceSize) + " classifiers of " + std::to_string(o.nGenes) +
                         " genes evaluated");
  out.artifact = std::move(res);
  return out;
}

RelNetOptions relnet_options(const P &p) {
  RelNetOptions o;
  o.sampleLabel = p.required("label");
  o.cutPval = p.real("cut");
  o.geneIdLabel = p.text("gene-id");
  return o;
}

OpResult op_relnet(const P &p, const Artifact *in) {
  const auto &ds = normalized(in, "relnet");
  auto o = relnet_options(p);
  o.kind = parse_cor_kind(p.text("cor"));
  o.permutations = int(p.integer("perms"));
  o.seed = p.seed();
  auto net = relnet_single(ds, p.required("condition"), pool_rows(ds, p.text("group"), ""), o);
  OpResult out;
  out.messages.push_back(std::to_string(net.edges.size()) + " edges among " + std::to_string(net.geneIds.size()) + " genes");
  out.artifact = std::move(net);
  return out;
}

OpResult op_relnet_diff(const P &p, const Artifact *in) {
  const auto &ds = normalized(in, "relnet-diff");
  auto net = relnet_diff(ds, p.required("a"), p.required("b"), pool_rows(ds, p.text("group"), ""), relnet_options(p));
  OpResult out;
  out.messages.push_back(std::to_string(net.edges.size()) + " edges among " + std::to_string(net.geneIds.size()) + " genes");
  out.artifact = std::move(net);
  return out;
}

OpResult op_modules(const P &p, const Artifact *in) {
  ModuleOptions o;
  o.sampleLabel = p.text("label");
  o.cutExp = p.real("cut-exp");
  o.cutPhiper = p.real("cut-p");
  o.mode = parse_module_mode(p.text("mode"));
  o.adjust = stats::parse_padjust(p.text("adjust"));
  return {active_modules(normalized(in, "modules"), o), {}, {}};
}

OpResult op_netscore(const P &p, const Artifact *in) {
  auto res = active_net(normalized(in, "netscore"), p.required("label"));
  OpResult out;
  out.messages = res.notes;
  out.artifact = std::move(res);
  return out;
}

OpResult op_qc(const Artifact *in) {
  if (!in) throw UsageError("qc needs an input container (--in)");
  if (!std::holds_alternative<RawDataset>(*in) && !std::holds_alternative<NormalizedDataset>(*in))
    throw DataError("qc needs a raw or normalized dataset");
  return {*in, {}, {}};
}

}  // namespace

OpResult run_op(const std::string &name, const Params &params, const Artifact *input, const fs::path &baseDir) {
  const P p{params};
  if (name == "load") return op_load(p, baseDir);
  if (name == "select") return op_select(p, input);
  if (name == "qc") return op_qc(input);
  if (name == "normalize") return op_normalize(p, input);
  if (name == "summarize") return op_summarize(p, input);
  if (name == "de") return op_de(p, input);
  if (name == "anova") return op_anova(p, input);
  if (name == "cluster") return op_cluster(p, input);
  if (name == "classify") return op_classify(p, input);
  if (name == "relnet") return op_relnet(p, input);
  if (name == "relnet-diff") return op_relnet_diff(p, input);
  if (name == "modules") return op_modules(p, input);
  if (name == "netscore") return op_netscore(p, input);
  throw UsageError("unknown operation '" + name + "'");
}

// ---------------------------------------------------------------------------
// Replay

bool ReplayReport::allMatch() const {
  return std::all_of(nodes.begin(), nodes.end(), [](const ReplayNode &n) { return n.status == "match"; });
}

ReplayReport replay(const ProvenanceGraph &g, const fs::path &baseDir, const fs::path &keepDir) {
  ReplayReport report;
  std::map<int, Artifact> objects;
  std::set<int> tainted;  // objects downstream of a divergence
  for (const ProvNode *op : g.operations()) {
    ReplayNode rn;
    rn.opId = op->id;
    rn.opName = op->label;
    rn.recordedHash = op->outputHash;
    op_spec(op->label);  // unknown operations are an error
    bool upstream = false;
    const Artifact *input = nullptr;
    for (int id : op->inputIds) {
      if (tainted.count(id)) upstream = true;
      if (g.node(id).label != "files") {
        auto it = objects.find(id);
        if (it == objects.end()) {
          rn.status = "downstream";
          rn.detail = "input object " + std::to_string(id) + " was not reproduced";
          upstream = true;
          break;
        }
        input = &it->second;
      }
    }
    if (!rn.detail.empty()) {
      tainted.insert(op->outputId);
      report.nodes.push_back(std::move(rn));
      continue;
    }
    try {
      auto res = run_op(op->label, op->params, input, baseDir);
      rn.replayedHash = artifact_hash(res.artifact);
      if (op->label == "load") {
        const auto &files = g.node(op->inputIds.front()).params;
        if (files != res.inputFiles) rn.detail = "input files differ from the recorded ones";
      }
      if (!keepDir.empty())
        save_container((keepDir / ("obj" + std::to_string(op->outputId) + ".bin")).string(), to_container(res.artifact));
      objects.emplace(op->outputId, std::move(res.artifact));
    } catch (const std::exception &e) {
      rn.detail = e.what();
    }
    if (upstream)
      rn.status = "downstream";
    else
      rn.status = rn.detail.empty() && rn.replayedHash == rn.recordedHash ? "match" : "mismatch";
    if (rn.status != "match") tainted.insert(op->outputId);
    report.nodes.push_back(std::move(rn));
  }
  report.script = replay_script(g);
  return report;
}

namespace {

std::string shell_quote(const std::string &s) {
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '.' || c == '_' || c == '-' || c == '/' || c == '=' || c == ',' || c == '+';
      }))
    return s;
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

}  // namespace

std::string replay_script(const ProvenanceGraph &g) {
  std::string s = "#!/bin/sh\n# Re-runs the recorded analysis; each step writes obj<N>.bin in the current directory.\nset -e\n"
                  "ARRAYKIT=${ARRAYKIT:-arraykit}\n";
  for (const ProvNode *op : g.operations()) {
    const auto &spec = op_spec(op->label);
    std::string line = "\"$ARRAYKIT\" " + op->label;
    if (spec.needsInput) {
      for (int id : op->inputIds)
        if (g.node(id).label != "files") line += " --in obj" + std::to_string(id) + ".bin";
    }
    for (const auto &[k, v] : op->params) {
      auto it = std::find_if(spec.options.begin(), spec.options.end(), [&](const OptionSpec &o) { return o.name == k; });
      if (it != spec.options.end() && it->kind == OptionSpec::Kind::flag) {
        if (v == "true") line += " --" + k;
      } else if (v.empty()) {
        // the parser rejects "--key=" with nothing after it
        if (it == spec.options.end() || !it->fallback.empty()) line += " --" + k + " ''";
      } else {
        line += " --" + k + "=" + shell_quote(v);
      }
    }
    line += " --out obj" + std::to_string(op->outputId) + ".bin";
    s += line + "\n";
  }
  return s;
}

}  // namespace arraykit
