#include "arraykit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "arraykit/error.hpp"
#include "arraykit/parallel.hpp"
#include "arraykit/text.hpp"

namespace arraykit {

namespace {

struct ConfigValue {
  enum Kind { null, string, integer, vector } kind = null;
  std::string str;
  long long num = 0;
  std::vector<std::string> items;
};

[[noreturn]] void config_error(std::size_t line, const std::string &msg) {
  throw DataError("config line " + std::to_string(line) + ": " + msg);
}

// Reads a quoted string starting at s[pos] (which must be ' or ").
std::string read_quoted(std::string_view s, std::size_t &pos, std::size_t line) {
  const char q = s[pos++];
  std::string out;
  while (pos < s.size() && s[pos] != q) {
    if (s[pos] == '\\' && pos + 1 < s.size()) {
      const char e = s[pos + 1];
      out += e == 't' ? '\t' : e == 'n' ? '\n' : e;
      pos += 2;
      continue;
    }
    out += s[pos++];
  }
  if (pos >= s.size()) config_error(line, "unterminated string");
  ++pos;
  return out;
}

ConfigValue parse_value(std::string_view v, std::size_t line) {
  v = text::trim(v);
  ConfigValue out;
  if (v.empty()) config_error(line, "missing value");
  if (v == "NULL") return out;
  if (v.front() == '\'' || v.front() == '"') {
    std::size_t pos = 0;
    out.kind = ConfigValue::string;
    out.str = read_quoted(v, pos, line);
    if (!text::trim(v.substr(pos)).empty()) config_error(line, "trailing characters after string");
    return out;
  }
  if (const auto rest = text::trim(v.substr(1)); v[0] == 'c' && !rest.empty() && rest.front() == '(') {
    auto body = rest;
    if (body.back() != ')') config_error(line, "malformed c(...) vector: missing ')'");
    body = body.substr(1, body.size() - 2);
    out.kind = ConfigValue::vector;
    std::size_t pos = 0;
    bool expect_item = true;
    while (true) {
      while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
      if (pos >= body.size()) break;
      if (expect_item) {
        if (body[pos] != '\'' && body[pos] != '"') config_error(line, "malformed c(...) vector: items must be quoted");
        out.items.push_back(read_quoted(body, pos, line));
        expect_item = false;
      } else {
        if (body[pos] != ',') config_error(line, "malformed c(...) vector: expected ','");
        ++pos;
        expect_item = true;
      }
    }
    if (expect_item && !out.items.empty()) config_error(line, "malformed c(...) vector: trailing ','");
    return out;
  }
  if (auto n = text::parse_int(v)) {
    out.kind = ConfigValue::integer;
    out.num = *n;
    return out;
  }
  config_error(line, "unrecognized value '" + std::string(v) + "'");
}

// Strips a '#' comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

const char *const kConfigKeys[] = {"dataDir", "ext",  "sampleFile", "datasetId", "geneMap",   "headers",
                                   "skip",    "sep",  "gridR",      "gridC",     "printTipR", "printTipC"};

}  // namespace

LoadConfig parse_config(std::string_view textIn) {
  std::map<std::string, std::pair<ConfigValue, std::size_t>> values;
  const auto all = text::lines(textIn);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const std::size_t lineNo = i + 1;
    const auto line = text::trim(strip_comment(all[i]));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) config_error(lineNo, "expected 'key = value'");
    std::string key(text::trim(line.substr(0, eq)));
    if (key == "dridC") key = "gridC";
    if (std::find(std::begin(kConfigKeys), std::end(kConfigKeys), key) == std::end(kConfigKeys))
      config_error(lineNo, "unknown key '" + key + "'");
    if (values.count(key)) config_error(lineNo, "duplicate key '" + key + "'");
    values.emplace(key, std::pair{parse_value(line.substr(eq + 1), lineNo), lineNo});
  }
  for (const char *k : kConfigKeys)
    if (!values.count(k)) throw DataError(std::string("config: missing mandatory key '") + k + "'");

  auto string_of = [&](const char *key, bool allowNull) -> std::optional<std::string> {
    const auto &[v, line] = values.at(key);
    if (v.kind == ConfigValue::null && allowNull) return std::nullopt;
    if (v.kind != ConfigValue::string) config_error(line, std::string("'") + key + "' must be a quoted string");
    return v.str;
  };
  auto int_of = [&](const char *key, long long min) -> int {
    const auto &[v, line] = values.at(key);
    if (v.kind != ConfigValue::integer) config_error(line, std::string("'") + key + "' must be an integer");
    if (v.num < min || v.num > 1'000'000)
      config_error(line, std::string("'") + key + "' out of range: " + std::to_string(v.num));
    return int(v.num);
  };

  LoadConfig cfg;
  cfg.dataDir = *string_of("dataDir", false);
  cfg.ext = string_of("ext", true);
  cfg.sampleFile = *string_of("sampleFile", false);
  cfg.datasetId = *string_of("datasetId", false);
  cfg.geneMap = *string_of("geneMap", false);
  {
    const auto &[v, line] = values.at("headers");
    if (v.kind != ConfigValue::vector) config_error(line, "'headers' must be a c(...) vector");
    if (v.items.size() != 5) config_error(line, "'headers' must have exactly 5 entries");
    std::set<std::string> distinct(v.items.begin(), v.items.end());
    if (distinct.size() != 5) config_error(line, "'headers' entries must be distinct");
    std::copy(v.items.begin(), v.items.end(), cfg.headers.begin());
  }
  cfg.skip = int_of("skip", 0);
  {
    const auto sep = *string_of("sep", false);
    if (sep.size() != 1) config_error(values.at("sep").second, "'sep' must be a single character");
    cfg.sep = sep[0];
  }
  cfg.grid.gridR = int_of("gridR", 1);
  cfg.grid.gridC = int_of("gridC", 1);
  cfg.grid.printTipR = int_of("printTipR", 1);
  cfg.grid.printTipC = int_of("printTipC", 1);
  return cfg;
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lineNumbers;  // 1-based line of each row
};

// Reads a delimited table; every row must have as many fields as the header.
Table read_table(const std::string &path, char sep, int skip) {
  const auto contents = text::read_file(path);
  const auto all = text::lines(contents);
  Table t;
  std::size_t i = std::size_t(skip);
  if (i >= all.size()) throw DataError(path + ": no header row after skipping " + std::to_string(skip) + " lines");
  auto header = text::split_record(all[i], sep);
  if (!header) throw DataError(path + ":" + std::to_string(i + 1) + ": unterminated quote in header");
  t.header = std::move(*header);
  for (++i; i < all.size(); ++i) {
    if (text::trim(all[i]).empty()) continue;
    auto fields = text::split_record(all[i], sep);
    if (!fields) throw DataError(path + ":" + std::to_string(i + 1) + ": unterminated quote");
    if (fields->size() != t.header.size())
      throw DataError(path + ":" + std::to_string(i + 1) + ": expected " + std::to_string(t.header.size()) +
                      " fields, found " + std::to_string(fields->size()));
    t.rows.push_back(std::move(*fields));
    t.lineNumbers.push_back(i + 1);
  }
  return t;
}

struct QuantColumns {
  std::array<std::vector<double>, 4> intensity;
  std::vector<std::int64_t> flags;
};

QuantColumns parse_quant(const std::string &path, const LoadConfig &cfg) {
  const Table t = read_table(path, cfg.sep, cfg.skip);
  std::array<std::size_t, 5> col{};
  for (std::size_t h = 0; h < 5; ++h) {
    auto it = std::find(t.header.begin(), t.header.end(), cfg.headers[h]);
    if (it == t.header.end())
      throw DataError(path + ": missing column '" + cfg.headers[h] + "' in header at line " +
                      std::to_string(cfg.skip + 1));
    col[h] = std::size_t(it - t.header.begin());
  }
  const std::size_t expected = cfg.grid.spots();
  if (t.rows.size() != expected)
    throw DataError(path + ": row-count mismatch: " + std::to_string(t.rows.size()) + " data rows, expected " +
                    std::to_string(expected) + " (gridR*gridC*printTipR*printTipC)");
  QuantColumns q;
  for (auto &v : q.intensity) v.resize(expected);
  q.flags.resize(expected);
  for (std::size_t r = 0; r < expected; ++r) {
    const auto where = [&](std::size_t h) {
      return path + ":" + std::to_string(t.lineNumbers[r]) + ": column '" + cfg.headers[h] + "'";
    };
    for (std::size_t h = 0; h < 4; ++h) {
      const auto &cell = t.rows[r][col[h]];
      auto v = text::parse_double(cell);
      if (!v || std::isnan(*v) || std::isinf(*v)) throw DataError(where(h) + ": unparsable number '" + cell + "'");
      if (*v < 0) throw DataError(where(h) + ": negative intensity " + cell);
      q.intensity[h][r] = *v;
    }
    const auto &cell = t.rows[r][col[4]];
    auto f = text::parse_int(cell);
    if (!f) {
      auto d = text::parse_double(cell);
      if (!d || std::isnan(*d) || *d != std::floor(*d) || std::abs(*d) > 9e15)
        throw DataError(where(4) + ": unparsable flag '" + cell + "'");
      f = static_cast<long long>(*d);
    }
    q.flags[r] = *f;
  }
  return q;
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
  std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

bool RawDataset::operator==(const RawDataset &o) const {
  return bitwise_equal(ch1Fg, o.ch1Fg) && bitwise_equal(ch1Bg, o.ch1Bg) && bitwise_equal(ch2Fg, o.ch2Fg) &&
         bitwise_equal(ch2Bg, o.ch2Bg) && flags == o.flags && useSpot == o.useSpot && badSpot == o.badSpot &&
         grid == o.grid && annot == o.annot;
}

RawDataset load_dataset(const LoadConfig &cfg, const std::filesystem::path &baseDir) {
  const auto dataDir = resolve(baseDir, cfg.dataDir);
  const std::size_t nSpots = cfg.grid.spots();

  // Sample sheet: fileName, interestChannel, then sample labels.
  const auto samplePath = resolve(dataDir, cfg.sampleFile).string();
  const Table sheet = read_table(samplePath, cfg.sep, 0);
  if (sheet.header.size() < 2 || sheet.header[0] != "fileName" || sheet.header[1] != "interestChannel")
    throw DataError(samplePath + ": header must start with 'fileName' and 'interestChannel'");
  if (sheet.rows.empty()) throw DataError(samplePath + ": no chips listed");
  SampleSheet samples;
  samples.labels.names.assign(sheet.header.begin() + 2, sheet.header.end());
  {
    std::set<std::string> distinct(samples.labels.names.begin(), samples.labels.names.end());
    if (distinct.size() != samples.labels.names.size()) throw DataError(samplePath + ": duplicate sample label");
  }
  std::set<std::string> seen;
  for (std::size_t r = 0; r < sheet.rows.size(); ++r) {
    const auto &row = sheet.rows[r];
    const auto loc = samplePath + ":" + std::to_string(sheet.lineNumbers[r]);
    if (row[0].empty()) throw DataError(loc + ": empty fileName");
    if (!seen.insert(row[0]).second) throw DataError(loc + ": duplicate fileName '" + row[0] + "'");
    std::string ch = row[1];
    std::transform(ch.begin(), ch.end(), ch.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ch != "ch1" && ch != "ch2")
      throw DataError(loc + ": interestChannel must be ch1 or ch2, found '" + row[1] + "'");
    samples.fileNames.push_back(row[0]);
    samples.interest.push_back(ch == "ch1" ? Channel::ch1 : Channel::ch2);
    samples.labels.rows.emplace_back(row.begin() + 2, row.end());
  }

  // Gene map: one row per spot in scan order.
  const auto genePath = resolve(dataDir, cfg.geneMap).string();
  const Table genes = read_table(genePath, cfg.sep, 0);
  if (genes.header.empty() || (genes.header.size() == 1 && genes.header[0].empty()))
    throw DataError(genePath + ": empty header");
  if (genes.rows.size() != nSpots)
    throw DataError(genePath + ": row-count mismatch: " + std::to_string(genes.rows.size()) +
                    " rows, expected " + std::to_string(nSpots));

  // Quantification tables; parsed independently, validated before assembly.
  const std::size_t nChips = samples.size();
  std::vector<QuantColumns> quant(nChips);
  std::vector<std::string> paths(nChips);
  for (std::size_t j = 0; j < nChips; ++j)
    paths[j] = resolve(dataDir, samples.fileNames[j] + cfg.ext.value_or("")).string();
  parallel_for(nChips, [&](std::size_t j) { quant[j] = parse_quant(paths[j], cfg); });

  RawDataset ds;
  ds.grid = cfg.grid;
  ds.ch1Fg = MatrixD(nSpots, nChips);
  ds.ch1Bg = MatrixD(nSpots, nChips);
  ds.ch2Fg = MatrixD(nSpots, nChips);
  ds.ch2Bg = MatrixD(nSpots, nChips);
  ds.flags = Matrix<std::int64_t>(nSpots, nChips);
  ds.useSpot = MatrixB(nSpots, nChips, 1);
  ds.badSpot.assign(nSpots, 0);
  MatrixD *targets[4] = {&ds.ch1Fg, &ds.ch1Bg, &ds.ch2Fg, &ds.ch2Bg};
  for (std::size_t j = 0; j < nChips; ++j) {
    for (std::size_t h = 0; h < 4; ++h) targets[h]->set_col(j, quant[j].intensity[h]);
    ds.flags.set_col(j, quant[j].flags);
  }
  ds.annot.datasetId = cfg.datasetId;
  ds.annot.samples = std::move(samples);
  ds.annot.genes.names = genes.header;
  ds.annot.genes.rows = genes.rows;
  // Notes name files relative to dataDir so that they do not depend on where the data lives.
  ds.annot.notes.push_back("read " + cfg.sampleFile + ": " + std::to_string(nChips) + " chips");
  ds.annot.notes.push_back("read " + cfg.geneMap + ": " + std::to_string(nSpots) + " spots");
  for (std::size_t j = 0; j < nChips; ++j)
    ds.annot.notes.push_back("read " + ds.annot.samples.fileNames[j] + cfg.ext.value_or("") + ": " +
                             std::to_string(nSpots) + " rows");
  return ds;
}

std::vector<std::string> read_group_file(const std::string &path) {
  std::vector<std::string> out;
  for (const auto &line : text::lines(text::read_file(path))) {
    auto l = text::trim(line.substr(0, line.find('#')));
    if (!l.empty()) out.emplace_back(l);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_network_file(const std::string &path) {
  std::vector<std::pair<std::string, std::string>> out;
  const auto all = text::lines(text::read_file(path));
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto l = text::trim(std::string_view(all[i]).substr(0, all[i].find('#')));
    if (l.empty()) continue;
    std::vector<std::string> parts;
    std::string cur;
    for (char c : l) {
      if (c == ' ' || c == '\t' || c == ',') {
        if (!cur.empty()) parts.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    if (parts.size() != 2)
      throw DataError(path + ":" + std::to_string(i + 1) + ": expected two labels per line");
    out.emplace_back(parts[0], parts[1]);
  }
  return out;
}

RawDataset add_gene_groups(RawDataset ds, const std::string &name, std::vector<std::string> members,
                           const std::string &labelId) {
  add_gene_group(ds.annot, name, std::move(members), labelId);
  return ds;
}

RawDataset add_network(RawDataset ds, const std::string &name,
                       const std::vector<std::pair<std::string, std::string>> &edges, const std::string &labelId) {
  add_network(ds.annot, name, edges, labelId);
  return ds;
}

RawDataset select_spots(RawDataset ds, const SpotSelection &sel) {
  if (!(sel.sigNoise >= 0)) throw DataError("sigNoise must be >= 0");
  if (!sel.removeNames.empty() && sel.labelId.empty())
    throw DataError("removeNames given without a gene label id");
  std::vector<char> removed(ds.spots(), 0);
  if (!sel.labelId.empty()) {
    const auto col = ds.annot.genes.require(sel.labelId);
    std::set<std::string> names(sel.removeNames.begin(), sel.removeNames.end());
    for (std::size_t i = 0; i < ds.spots(); ++i) removed[i] = names.count(ds.annot.genes.rows[i][col]) ? 1 : 0;
  }
  std::set<std::int64_t> flags(sel.rmFlags.begin(), sel.rmFlags.end());
  auto snr_ok = [&](double fg, double bg) { return bg == 0.0 || fg / bg >= sel.sigNoise; };
  for (std::size_t i = 0; i < ds.spots(); ++i) {
    for (std::size_t j = 0; j < ds.chips(); ++j) {
      const bool keep = snr_ok(ds.ch1Fg(i, j), ds.ch1Bg(i, j)) && snr_ok(ds.ch2Fg(i, j), ds.ch2Bg(i, j)) &&
                        !flags.count(ds.flags(i, j)) && !removed[i] && !ds.badSpot[i];
      ds.useSpot(i, j) = keep ? 1 : 0;
    }
  }
  return ds;
}

RawDataset mark_bad_spots(RawDataset ds, const std::vector<std::size_t> &spots) {
  for (auto s : spots)
    if (s >= ds.spots()) throw DataError("bad spot index " + std::to_string(s) + " out of range");
  for (auto s : spots) {
    ds.badSpot[s] = 1;
    for (std::size_t j = 0; j < ds.chips(); ++j) ds.useSpot(s, j) = 0;
  }
  return ds;
}

}  // namespace arraykit
