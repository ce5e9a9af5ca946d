#include "arraykit/dataset.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "arraykit/error.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

GridGeometry::Position GridGeometry::position(std::size_t spot) const {
  const std::size_t per = spots_per_block();
  const std::size_t block = spot / per;
  const std::size_t within = spot % per;
  return {int(block / gridC), int(block % gridC), int(within / printTipC), int(within % printTipC)};
}

std::size_t GridGeometry::index(const Position &p) const {
  const std::size_t block = std::size_t(p.gridRow) * gridC + p.gridCol;
  return block * spots_per_block() + std::size_t(p.tipRow) * printTipC + p.tipCol;
}

std::size_t GridGeometry::layout_row(std::size_t spot) const {
  const auto p = position(spot);
  return std::size_t(p.gridRow) * printTipR + p.tipRow;
}

std::size_t GridGeometry::layout_col(std::size_t spot) const {
  const auto p = position(spot);
  return std::size_t(p.gridCol) * printTipC + p.tipCol;
}

std::optional<std::size_t> LabelTable::index_of(const std::string &name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return std::size_t(it - names.begin());
}

std::size_t LabelTable::require(const std::string &name) const {
  auto idx = index_of(name);
  if (!idx) throw DataError("unknown label '" + name + "' (declared: " + text::join(names, ", ") + ")");
  return *idx;
}

std::vector<std::string> LabelTable::column(const std::string &name) const {
  const auto c = require(name);
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto &r : rows) out.push_back(r[c]);
  return out;
}

const std::string &LabelTable::at(std::size_t row, const std::string &name) const {
  return rows.at(row)[require(name)];
}

Resolution resolve_members(const LabelTable &genes, const std::string &labelId,
                           const std::vector<std::string> &members) {
  const auto col = genes.require(labelId);
  std::multimap<std::string, std::size_t> index;
  for (std::size_t r = 0; r < genes.rows.size(); ++r) index.emplace(genes.rows[r][col], r);
  Resolution res;
  std::set<std::size_t> rows;
  for (const auto &m : members) {
    auto [b, e] = index.equal_range(m);
    if (b == e) {
      res.unresolved.push_back(m);
      continue;
    }
    for (auto it = b; it != e; ++it) rows.insert(it->second);
  }
  res.rows.assign(rows.begin(), rows.end());
  return res;
}

std::vector<std::size_t> LevelIndex::members(int level) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < levelOf.size(); ++j)
    if (levelOf[j] == level) out.push_back(j);
  return out;
}

LevelIndex level_index(const SampleSheet &samples, const std::string &labelId) {
  const auto values = samples.labels.column(labelId);
  LevelIndex idx;
  std::set<std::string> distinct;
  for (const auto &v : values)
    if (!v.empty() && v != "NA") distinct.insert(v);
  idx.levels.assign(distinct.begin(), distinct.end());
  for (const auto &v : values) {
    auto it = std::lower_bound(idx.levels.begin(), idx.levels.end(), v);
    idx.levelOf.push_back(it != idx.levels.end() && *it == v ? int(it - idx.levels.begin()) : -1);
  }
  return idx;
}

std::vector<std::string> gene_ids(const LabelTable &genes, const std::string &labelId) {
  if (!labelId.empty()) return genes.column(labelId);
  if (!genes.names.empty()) return genes.column(genes.names.front());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < genes.rows.size(); ++i) out.push_back("spot" + std::to_string(i + 1));
  return out;
}

namespace {

template <typename Named>
const Named &find_named(const std::vector<Named> &items, const std::string &key, const char *what) {
  for (const auto &g : items)
    if (g.name == key) return g;
  // 1-based positional lookup, e.g. "--group 6"
  if (auto idx = text::parse_int(key); idx && *idx >= 1 && std::size_t(*idx) <= items.size())
    return items[std::size_t(*idx) - 1];
  throw DataError(std::string("no ") + what + " named '" + key + "'");
}

}  // namespace

const GeneGroup &Annotations::group(const std::string &key) const {
  return find_named(groups, key, "gene group");
}

const GeneNetwork &Annotations::network(const std::string &key) const {
  return find_named(networks, key, "gene network");
}

void add_gene_group(Annotations &a, const std::string &name, std::vector<std::string> members,
                    const std::string &labelId) {
  a.genes.require(labelId);
  for (const auto &g : a.groups)
    if (g.name == name) throw DataError("duplicate gene group '" + name + "'");
  if (members.empty()) throw DataError("gene group '" + name + "' has no members");
  const auto res = resolve_members(a.genes, labelId, members);
  a.notes.push_back("group " + name + ": " + std::to_string(members.size()) + " members, " +
                    std::to_string(res.rows.size()) + " spots mapped, " +
                    std::to_string(res.unresolved.size()) + " unresolved");
  for (const auto &u : res.unresolved) a.notes.push_back("group " + name + ": unresolved member '" + u + "'");
  a.groups.push_back({name, labelId, std::move(members)});
}

void add_network(Annotations &a, const std::string &name,
                 const std::vector<std::pair<std::string, std::string>> &edges, const std::string &labelId) {
  a.genes.require(labelId);
  for (const auto &n : a.networks)
    if (n.name == name) throw DataError("duplicate gene network '" + name + "'");
  if (edges.empty()) throw DataError("gene network '" + name + "' has no edges");
  std::set<std::pair<std::string, std::string>> unique;
  GeneNetwork net{name, labelId, {}};
  for (const auto &[x, y] : edges) {
    if (x == y) throw DataError("gene network '" + name + "': self-edge on '" + x + "'");
    auto e = x < y ? std::pair{x, y} : std::pair{y, x};
    if (unique.insert(e).second) net.edges.push_back(e);
  }
  std::vector<std::string> nodes;
  for (const auto &[x, y] : net.edges) {
    nodes.push_back(x);
    nodes.push_back(y);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  const auto res = resolve_members(a.genes, labelId, nodes);
  a.notes.push_back("network " + name + ": " + std::to_string(net.edges.size()) + " edges, " +
                    std::to_string(res.unresolved.size()) + " unresolved nodes");
  for (const auto &u : res.unresolved) a.notes.push_back("network " + name + ": unresolved node '" + u + "'");
  a.networks.push_back(std::move(net));
}

}  // namespace arraykit
