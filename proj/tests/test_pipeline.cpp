#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <regex>
#include <set>

#include "arraykit/container.hpp"
#include "arraykit/error.hpp"
#include "arraykit/ops.hpp"
#include "arraykit/svg.hpp"
#include "arraykit/text.hpp"
#include "helpers.hpp"

using namespace arraykit;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(ARRAYKIT_SOURCE_DIR) / "data" / "synthetic";

// Runs operations the way the command-line tool records them.
struct Session {
  ProvenanceGraph g;
  std::map<int, Artifact> objects;
  fs::path base = kData;

  int run(const std::string &op, const std::map<std::string, std::string> &given, int input = 0) {
    const auto params = canonical_params(op_spec(op), given);
    auto res = run_op(op, params, input ? &objects.at(input) : nullptr, base);
    std::vector<int> inputs;
    if (input) {
      inputs.push_back(input);
    } else {
      const auto filesHash = sha256_hex(canonical_json(Json(res.inputFiles)));
      inputs.push_back(g.add_object("files", filesHash, res.inputFiles));
    }
    const int out = g.add_object(artifact_kind(res.artifact), artifact_hash(res.artifact));
    g.record(op, params, inputs, out);
    g.head = out;
    objects.emplace(out, std::move(res.artifact));
    return out;
  }
};

// A short analysis touching every artifact kind; returns the object ids.
std::map<std::string, int> small_pipeline(Session &s) {
  std::map<std::string, int> id;
  id["raw"] = s.run("load", {{"config", "synthetic.conf"},
                             {"groups", "type=type_genes.txt,module=module_genes.txt"},
                             {"networks", "module=module_net.txt"}});
  id["sel"] = s.run("select", {{"rm-flags", "-50"}, {"remove-names", "Control"}, {"label", "GeneName"}}, id["raw"]);
  id["norm"] = s.run("normalize", {{"scope", "printTip"}, {"scale", "printTipMAD"}}, id["sel"]);
  id["genes"] = s.run("summarize", {{"gene-label", "GeneName"}, {"sample-label", "Sample"}}, id["norm"]);
  id["de"] = s.run("de", {{"label", "Type"}}, id["genes"]);
  id["hier"] = s.run("cluster", {{"alg", "hier"}, {"n-de", "10"}}, id["de"]);
  id["km"] = s.run("cluster", {{"alg", "kmeans"}, {"k", "3"}, {"seed", "3"}}, id["de"]);
  id["cls"] = s.run("classify", {{"label", "Type"}, {"group", "type"}, {"n-genes", "2"}}, id["genes"]);
  id["net"] = s.run("relnet-diff", {{"label", "Type"}, {"a", "Normal"}, {"b", "Tumor"}, {"group", "module"}}, id["genes"]);
  id["mod"] = s.run("modules", {{"label", "Tissue"}}, id["genes"]);
  id["score"] = s.run("netscore", {{"label", "Type"}}, id["genes"]);
  return id;
}

Session &shared_session() {
  static Session s;
  static std::map<std::string, int> ids = small_pipeline(s);
  (void)ids;
  return s;
}

}  // namespace

TEST(Container, EveryArtifactKindRoundTrips) {
  auto &s = shared_session();
  std::set<std::string> kinds;
  for (const auto &[id, art] : s.objects) {
    kinds.insert(artifact_kind(art));
    const auto bytes = serialize(to_container(art));
    const auto back = from_container(deserialize(bytes));
    EXPECT_TRUE(back == art) << artifact_kind(art);
    EXPECT_EQ(artifact_hash(back), artifact_hash(art));
    EXPECT_EQ(serialize(to_container(back)), bytes);
  }
  EXPECT_EQ(kinds.size(), 8u);
}

TEST(Container, CorruptionIsADataError) {
  Container c;
  c.meta["kind"] = "test";
  MatrixD m(2, 3, 1.5);
  c.put("m", m);
  const auto bytes = serialize(c);
  const auto back = deserialize(bytes);
  EXPECT_TRUE(bitwise_equal(back.matrix("m"), m));
  EXPECT_EQ(back.meta, c.meta);
  EXPECT_THROW(deserialize(bytes.substr(0, bytes.size() - 3)), DataError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize(bad), DataError);
  EXPECT_THROW(deserialize(""), DataError);
  EXPECT_THROW(back.matrix("nope"), DataError);
  Container junk;
  junk.meta["kind"] = "mystery";
  EXPECT_THROW(from_container(junk), DataError);
}

TEST(Container, HashIgnoresProvenanceAndToolVersion) {
  Container c;
  c.meta["kind"] = "x";
  c.put("m", MatrixD(1, 1, 2.0));
  const auto h = content_hash(c);
  c.meta["provenance"] = Json{{"head", 1}};
  c.meta["toolVersion"] = "9.9";
  EXPECT_EQ(content_hash(c), h);
  c.meta["other"] = 1;
  EXPECT_NE(content_hash(c), h);
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Provenance, DagRulesAndJsonRoundTrip) {
  ProvenanceGraph g;
  const int a = g.add_object("x", "h1"), b = g.add_object("x", "h2"), c = g.add_object("x", "h3");
  const int op1 = g.record("select", {{"k", "v"}}, {a}, b);
  EXPECT_EQ(g.node(op1).inputHash, "h1");
  EXPECT_EQ(g.node(op1).outputHash, "h2");
  EXPECT_THROW(g.record("select", {}, {a}, b), DataError);      // b already produced
  EXPECT_THROW(g.record("select", {}, {b}, a), DataError);      // cycle
  EXPECT_THROW(g.record("select", {}, {op1}, c), DataError);    // operation as input
  EXPECT_THROW(g.record("select", {}, {}, c), DataError);
  g.record("normalize", {}, {b}, c);
  g.head = c;
  const auto back = provenance_from_json(to_json(g));
  EXPECT_EQ(back, g);
  EXPECT_EQ(provenance_fingerprint(back), provenance_fingerprint(g));
  Json broken = to_json(g);
  broken["nodes"][0]["id"] = 7;
  EXPECT_THROW(provenance_from_json(broken), DataError);
  EXPECT_THROW(provenance_from_json(Json::object()), DataError);
}

TEST(Provenance, TimestampHonoursSourceDateEpoch) {
  setenv("SOURCE_DATE_EPOCH", "86400", 1);
  EXPECT_EQ(current_timestamp(), "1970-01-02T00:00:00Z");
  unsetenv("SOURCE_DATE_EPOCH");
}

TEST(Replay, ReproducesEveryNode) {
  auto &s = shared_session();
  const auto report = replay(s.g, kData);
  EXPECT_TRUE(report.allMatch());
  EXPECT_EQ(report.nodes.size(), s.g.operations().size());
  for (const auto &n : report.nodes) EXPECT_EQ(n.status, "match") << n.opName << ": " << n.detail;
}

TEST(Replay, DetectsTamperedParametersAndInputs) {
  auto g = shared_session().g;
  // change the adjustment recorded for the "de" operation
  for (auto &n : g.nodes)
    if (n.kind == "operation" && n.label == "de") n.params["adjust"] = "holm";
  auto report = replay(g, kData);
  EXPECT_FALSE(report.allMatch());
  bool sawMismatch = false, sawDownstream = false;
  for (const auto &n : report.nodes) {
    if (n.opName == "de") {
      EXPECT_EQ(n.status, "mismatch");
      sawMismatch = true;
    }
    if (n.opName == "cluster") {
      EXPECT_EQ(n.status, "downstream");
      sawDownstream = true;
    }
    if (n.opName == "classify") EXPECT_EQ(n.status, "match");
  }
  EXPECT_TRUE(sawMismatch && sawDownstream);

  // an edited data file changes the recorded file hash
  const auto dir = testing_support::temp_dir("tamper");
  fs::copy(kData, dir, fs::copy_options::recursive);
  auto text = text::read_file((dir / "Colon_Normal_1_a.txt").string());
  text.back() = text.back() == '\n' ? ' ' : '\n';
  text::write_file((dir / "Colon_Normal_1_a.txt").string(), text + "\n");
  const auto r2 = replay(shared_session().g, dir);
  EXPECT_EQ(r2.nodes.front().status, "mismatch");
  fs::remove_all(dir);
}

TEST(Replay, ScriptListsEveryOperation) {
  const auto &g = shared_session().g;
  const auto script = replay_script(g);
  EXPECT_EQ(script.rfind("#!/bin/sh\n", 0), 0u);
  const auto lines = text::lines(script);
  std::size_t opLines = 0;
  for (const auto &l : lines)
    if (l.rfind("\"$ARRAYKIT\" ", 0) == 0) ++opLines;
  EXPECT_EQ(opLines, g.operations().size());
  EXPECT_NE(script.find("--rm-flags=-50"), std::string::npos);
  EXPECT_NE(script.find("--out obj"), std::string::npos);
  EXPECT_EQ(script.find("=''"), std::string::npos);  // empty values are not glued to their key
}

TEST(Params, CanonicalForms) {
  const auto &spec = op_spec("normalize");
  const auto p = canonical_params(spec, {{"span", "0.40"}, {"iterations", "+2"}});
  EXPECT_EQ(p.at("span"), "0.4");
  EXPECT_EQ(p.at("iterations"), "2");
  EXPECT_EQ(p.at("method"), "loess");
  EXPECT_THROW(canonical_params(spec, {{"span", "wide"}}), UsageError);
  EXPECT_THROW(canonical_params(spec, {{"method", "magic"}}), UsageError);
  EXPECT_THROW(canonical_params(spec, {{"colour", "red"}}), UsageError);
  EXPECT_EQ(canonical_params(op_spec("de"), {{"pooled", "1"}}).at("pooled"), "true");
  EXPECT_THROW(canonical_params(op_spec("de"), {{"pooled", "yes"}}), UsageError);
}

TEST(Svg, SpatialPlotCoversTheChipLattice) {
  GridGeometry grid{12, 4, 10, 10};
  std::vector<double> v(grid.spots());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(double(i));
  const auto doc = svg::spatial_plot(grid, v, "chip 1");
  EXPECT_EQ(doc, svg::spatial_plot(grid, v, "chip 1"));
  const std::regex cell("<rect class=\"spot\" x=\"([0-9.]+)\" y=\"([0-9.]+)\"");
  std::set<std::string> xs, ys, cells;
  for (auto it = std::sregex_iterator(doc.begin(), doc.end(), cell); it != std::sregex_iterator(); ++it) {
    xs.insert((*it)[1]);
    ys.insert((*it)[2]);
    cells.insert((*it)[1].str() + "," + (*it)[2].str());
  }
  EXPECT_EQ(cells.size(), 4800u);
  EXPECT_EQ(ys.size(), 120u);
  EXPECT_EQ(xs.size(), 40u);
  EXPECT_THROW(svg::spatial_plot(grid, std::vector<double>(4799), "x"), DataError);
}
