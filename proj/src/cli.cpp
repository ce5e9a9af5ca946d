#include "arraykit/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>

#include "arraykit/error.hpp"
#include "arraykit/loess.hpp"
#include "arraykit/ops.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/svg.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

namespace {

using text::format_double;

struct Command {
  const OpSpec *spec = nullptr;  // null for replay and provenance
  CLI::App *app = nullptr;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::string in, out;
  std::vector<std::string> loess;  // normalize: key=value shorthand
};

bool ends_with(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string side_value(const Command &c, const std::string &name) {
  auto it = c.values.find(name);
  return it == c.values.end() ? std::string() : it->second;
}

std::size_t top_rows(const Command &c) {
  const auto v = side_value(c, "top");
  if (v.empty()) return 0;
  const auto n = text::parse_int(v);
  if (!n || *n < 0) throw UsageError("--top expects a non-negative integer");
  return std::size_t(*n);
}

std::vector<double> column_values(const MatrixD &m, std::size_t col) {
  std::vector<double> v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, col);
  return v;
}

// Raw input is corrected and log-transformed with `bkg` before plotting.
NormalizedDataset qc_data(const Artifact &a, const std::string &bkg) {
  if (auto raw = std::get_if<RawDataset>(&a)) return compute_wa(*raw, parse_bkg(bkg));
  return std::get<NormalizedDataset>(a);
}

std::string qc_plot(const Artifact &a, const Params &p) {
  const auto ds = qc_data(a, p.at("bkg"));
  const auto chip = text::parse_int(p.at("chip")).value_or(0);
  const auto kind = p.at("kind");
  if (kind == "boxplot") {
    std::vector<std::pair<std::string, std::vector<double>>> groups;
    const auto &gene = p.at("gene");
    if (gene.empty()) {
      for (std::size_t j = 0; j < ds.cols(); ++j) groups.emplace_back(ds.annot.samples.fileNames[j], column_values(ds.W, j));
      return svg::boxplot(groups, "W by chip");
    }
    const auto ids = gene_ids(ds.annot.genes, p.at("gene-id"));
    const auto row = std::find(ids.begin(), ids.end(), gene);
    if (row == ids.end()) throw DataError("gene '" + gene + "' not found");
    const std::size_t r = std::size_t(row - ids.begin());
    if (p.at("label").empty()) {
      groups.emplace_back(gene, std::vector<double>(ds.W.row(r).begin(), ds.W.row(r).end()));
    } else {
      const auto li = level_index(ds.annot.samples, p.at("label"));
      for (std::size_t l = 0; l < li.levels.size(); ++l) {
        std::vector<double> v;
        for (auto j : li.members(int(l))) v.push_back(ds.W(r, j));
        groups.emplace_back(li.levels[l], std::move(v));
      }
    }
    return svg::boxplot(groups, "W for gene " + gene);
  }
  if (chip < 1 || std::size_t(chip) > ds.cols())
    throw UsageError("--chip must be between 1 and " + std::to_string(ds.cols()));
  const std::size_t j = std::size_t(chip - 1);
  const std::string title = ds.annot.samples.fileNames[j];
  if (kind == "spatial") {
    if (!ds.grid) throw DataError("spatial plot needs the grid geometry, which summarized data no longer has");
    return svg::spatial_plot(*ds.grid, column_values(ds.W, j), "W on chip " + title);
  }
  const auto A = column_values(ds.A, j), W = column_values(ds.W, j);
  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < A.size(); ++i)
    if (ds.useSpot(i, j) && std::isfinite(A[i]) && std::isfinite(W[i])) {
      fx.push_back(A[i]);
      fy.push_back(W[i]);
    }
  std::optional<svg::Curve> curve;
  if (fx.size() >= 10) {
    svg::Curve c;
    c.x = fx;
    std::sort(c.x.begin(), c.x.end());
    c.x.erase(std::unique(c.x.begin(), c.x.end()), c.x.end());
    c.y = loess_fit(fx, fy, c.x, 0.4, 2, kLowessDelta);
    curve = std::move(c);
  }
  return svg::wa_plot(A, W, curve, "WA plot of chip " + title);
}

std::string cluster_csv(const ClusterResult &r) {
  std::vector<std::vector<std::string>> rows;
  if (r.tree) {
    for (std::size_t k = 0; k < r.tree->merges.size(); ++k) {
      const auto &m = r.tree->merges[k];
      rows.push_back({std::to_string(k + 1), std::to_string(m.a), std::to_string(m.b), format_double(m.height)});
    }
    return text::csv_document({"step", "a", "b", "height"}, rows);
  }
  for (std::size_t i = 0; i < r.labels.size(); ++i)
    rows.push_back({r.labels[i], std::to_string(r.partition->assignment[i] + 1)});
  return text::csv_document({"item", "cluster"}, rows);
}

std::string cluster_svg(const ClusterResult &r) {
  if (r.tree) return svg::dendrogram(*r.tree, "Hierarchical clustering");
  std::vector<std::size_t> order(r.labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.partition->assignment[a] < r.partition->assignment[b]; });
  return svg::heatmap(r.data, r.labels, r.featureLabels, order, {}, r.algorithm + " clusters");
}

std::string relnet_csv(const RelNet &n) {
  std::vector<std::vector<std::string>> rows;
  for (const auto &e : n.edges)
    rows.push_back({n.geneIds[e.i], n.geneIds[e.j], format_double(e.value), format_double(e.p)});
  return text::csv_document({"gene1", "gene2", n.two_condition() ? "deltaZ" : "value", "p"}, rows);
}

std::string modules_csv(const ModuleResult &m) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t g = 0; g < m.groups.size(); ++g)
    for (std::size_t c = 0; c < m.columns.size(); ++c)
      rows.push_back({m.groups[g], m.columns[c], std::to_string(m.state(g, c)), format_double(m.pInduced(g, c)),
                      format_double(m.pRepressed(g, c)), format_double(m.score(g, c))});
  return text::csv_document({"group", "column", "state", "pInduced", "pRepressed", "score"}, rows);
}

std::string netscore_csv(const NetScore &s) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t n = 0; n < s.networks.size(); ++n)
    for (std::size_t c = 0; c < s.conditions.size(); ++c)
      rows.push_back({s.networks[n], s.conditions[c], std::to_string(s.edgeCount(n, c)),
                      format_double(s.statistic(n, c)), format_double(s.pValue(n, c))});
  return text::csv_document({"network", "condition", "edges", "statistic", "pValue"}, rows);
}

void write_pair(const RelNet &n, const Command &c) {
  const auto pair = side_value(c, "pair"), path = side_value(c, "pair-svg");
  if (pair.empty() && path.empty()) return;
  if (pair.empty() || path.empty()) throw UsageError("--pair and --pair-svg go together");
  const auto parts = text::split(pair, ',');
  if (parts.size() != 2) throw UsageError("--pair expects two gene ids separated by a comma");
  const std::string x(text::trim(parts[0])), y(text::trim(parts[1]));
  text::write_file(path, svg::gene_pair(gene_pair_data(n, x, y), x, y));
}

void write_side_outputs(const Command &c, const Artifact &a, const Params &params) {
  auto write = [&](const std::string &name, auto &&make) {
    const auto path = side_value(c, name);
    if (!path.empty()) text::write_file(path, make());
  };
  const auto &op = c.spec->name;
  if (op == "qc") {
    write("svg", [&] { return qc_plot(a, params); });
  } else if (auto de = std::get_if<DEResult>(&a)) {
    const auto top = top_rows(c);
    write("csv", [&] { return de_table(*de, TableFormat::csv, top); });
    write("html", [&] { return de_table(*de, TableFormat::html, top); });
    write("svg", [&] { return svg::volcano(volcano_data(*de), "Volcano plot"); });
  } else if (auto cl = std::get_if<ClusterResult>(&a)) {
    write("csv", [&] { return cluster_csv(*cl); });
    write("svg", [&] { return cluster_svg(*cl); });
  } else if (auto cr = std::get_if<ClassifierResult>(&a)) {
    write("csv", [&] { return class_table(*cr, TableFormat::csv); });
    write("html", [&] { return class_table(*cr, TableFormat::html); });
  } else if (auto n = std::get_if<RelNet>(&a)) {
    write("csv", [&] { return relnet_csv(*n); });
    write("svg", [&] {
      return svg::network(*n, n->two_condition() ? "Differential network " + n->conditions[0] + " vs " + n->conditions[1]
                                                 : "Relevance network " + n->conditions[0]);
    });
    write_pair(*n, c);
  } else if (auto m = std::get_if<ModuleResult>(&a)) {
    write("csv", [&] { return modules_csv(*m); });
    write("svg", [&] { return svg::module_map(*m, "Active modules"); });
  } else if (auto s = std::get_if<NetScore>(&a)) {
    write("csv", [&] { return netscore_csv(*s); });
  }
}

struct Loaded {
  Artifact artifact;
  ProvenanceGraph graph;
};

Loaded read_input(const std::string &path) {
  const Container c = load_container(path);
  Loaded l{from_container(c), {}};
  const auto hash = artifact_hash(l.artifact);
  if (c.meta.contains("provenance")) {
    l.graph = provenance_from_json(c.meta.at("provenance"));
    if (l.graph.head == 0 || l.graph.node(l.graph.head).outputHash != hash)
      throw DataError(path + ": contents do not match the hash recorded in its provenance");
  } else {
    l.graph.head = l.graph.add_object(artifact_kind(l.artifact), hash);
  }
  return l;
}

// `--out x.csv` (or .html, .svg) names a side output when the command has
// one of that kind and it was not given separately.
void route_out(Command &c) {
  for (const char *ext : {"csv", "html", "svg"}) {
    if (!ends_with(c.out, std::string(".") + ext)) continue;
    auto it = std::find_if(c.spec->options.begin(), c.spec->options.end(),
                           [&](const OptionSpec &o) { return o.name == ext && !o.recorded; });
    if (it == c.spec->options.end()) continue;
    if (c.values[ext].empty()) {
      c.values[ext] = c.out;
      c.out.clear();
    }
    return;
  }
}

int run_command(Command &c, std::ostream &out) {
  std::map<std::string, std::string> given;
  for (const auto &o : c.spec->options) {
    if (!o.recorded) continue;
    if (o.kind == OptionSpec::Kind::flag) {
      if (c.flags[o.name]) given[o.name] = "true";
    } else if (c.app->count("--" + o.name) > 0) {
      given[o.name] = c.values[o.name];
    }
  }
  for (const auto &kv : c.loess) {
    const auto eq = kv.find('=');
    const std::string key = kv.substr(0, eq);
    if (eq == std::string::npos || (key != "span" && key != "scope" && key != "iterations"))
      throw UsageError("--loess expects span=, scope= or iterations= settings, got '" + kv + "'");
    if (!given.count(key)) given[key] = kv.substr(eq + 1);
  }
  const Params params = canonical_params(*c.spec, given);
  route_out(c);

  std::optional<Loaded> input;
  if (c.spec->needsInput) {
    if (c.in.empty()) throw UsageError(c.spec->name + " needs --in <container>");
    input = read_input(c.in);
  }
  OpResult res = run_op(c.spec->name, params, input ? &input->artifact : nullptr);
  for (const auto &m : res.messages) out << m << '\n';

  ProvenanceGraph g = input ? std::move(input->graph) : ProvenanceGraph{};
  const int obj = g.add_object(artifact_kind(res.artifact), artifact_hash(res.artifact));
  if (c.spec->name == "load") {
    const int files = g.add_object("files", sha256_hex(canonical_json(Json(res.inputFiles))), res.inputFiles);
    g.record("load", params, {files}, obj);
  } else {
    g.record(c.spec->name, params, {g.head}, obj);
  }
  g.head = obj;

  write_side_outputs(c, res.artifact, params);
  if (!c.out.empty()) {
    Container oc = to_container(res.artifact);
    oc.meta["provenance"] = to_json(g);
    oc.meta["toolVersion"] = tool_version();
    save_container(c.out, oc);
  }
  return 0;
}

ProvenanceGraph read_graph(const std::string &path) {
  const std::string bytes = text::read_file(path);
  const auto first = bytes.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && bytes[first] == '{') {
    try {
      return provenance_from_json(Json::parse(bytes));
    } catch (const Json::exception &e) {
      throw DataError(path + ": " + e.what());
    }
  }
  const Container c = deserialize(bytes);
  if (!c.meta.contains("provenance")) throw DataError(path + ": container has no provenance");
  return provenance_from_json(c.meta.at("provenance"));
}

}  // namespace

int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Two-channel microarray analysis with recorded provenance", "arraykit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());
  unsigned threads = 0;
  long long seed = 1;

  std::vector<std::unique_ptr<Command>> commands;
  for (const auto &spec : op_specs()) {
    auto c = std::make_unique<Command>();
    c->spec = &spec;
    c->app = app.add_subcommand(spec.name, spec.help);
    for (const auto &o : spec.options) {
      std::string help = o.help;
      if (!o.choices.empty()) help += " (" + text::join(o.choices, "|") + ")";
      if (!o.fallback.empty() && o.kind != OptionSpec::Kind::flag) help += " [" + o.fallback + "]";
      if (o.kind == OptionSpec::Kind::flag)
        c->app->add_flag("--" + o.name, c->flags[o.name], help);
      else
        c->app->add_option("--" + o.name, c->values[o.name], help);
    }
    if (spec.needsInput) c->app->add_option("--in", c->in, "input container");
    c->app->add_option("--out", c->out, "output container (.csv/.html/.svg names a table or plot)");
    c->app->add_option("--threads", threads, "worker threads (0 = all cores)");
    if (std::none_of(spec.options.begin(), spec.options.end(), [](const OptionSpec &o) { return o.name == "seed"; }))
      c->app->add_option("--seed", seed, "master seed (this command draws no random numbers)");
    if (spec.name == "normalize")
      c->app->add_option("--loess", c->loess, "loess settings as span=, scope=, iterations=")->expected(1, 3);
    commands.push_back(std::move(c));
  }

  std::string replayIn, replayBase, replayScript, keepDir;
  bool strict = false;
  auto *replayCmd = app.add_subcommand("replay", "re-run a recorded analysis and verify every output hash");
  replayCmd->add_option("--in", replayIn, "container or provenance JSON")->required();
  replayCmd->add_option("--base", replayBase, "directory the recorded input paths are relative to");
  replayCmd->add_option("--script", replayScript, "write the equivalent shell script here");
  replayCmd->add_option("--keep-intermediates", keepDir, "write every reproduced object to this directory");
  replayCmd->add_flag("--strict", strict, "exit with status 2 when any hash differs");
  replayCmd->add_option("--threads", threads, "worker threads (0 = all cores)");

  std::string provIn, provOut;
  auto *provCmd = app.add_subcommand("provenance", "print the provenance graph of a container as JSON");
  provCmd->add_option("--in", provIn, "input container")->required();
  provCmd->add_option("--out", provOut, "write the JSON here instead of standard output");

  std::vector<std::string> argvStore;
  argvStore.push_back("arraykit");
  argvStore.insert(argvStore.end(), args.begin(), args.end());
  std::vector<char *> argv;
  for (auto &a : argvStore) argv.push_back(a.data());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    set_thread_count(threads);
    if (*replayCmd) {
      const auto g = read_graph(replayIn);
      if (!keepDir.empty()) std::filesystem::create_directories(keepDir);
      const auto report = replay(g, replayBase, keepDir);
      for (const auto &n : report.nodes) {
        out << "op " << n.opId << ' ' << n.opName << ": " << n.status;
        if (!n.detail.empty()) out << " (" << n.detail << ')';
        out << '\n';
      }
      out << (report.allMatch() ? "all operations reproduced" : "replay found differences") << '\n';
      if (!replayScript.empty()) text::write_file(replayScript, report.script);
      return strict && !report.allMatch() ? 2 : 0;
    }
    if (*provCmd) {
      const auto doc = to_json(read_graph(provIn)).dump(2) + "\n";
      if (provOut.empty())
        out << doc;
      else
        text::write_file(provOut, doc);
      return 0;
    }
    for (auto &c : commands)
      if (*c->app) return run_command(*c, out);
  } catch (const UsageError &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace arraykit
