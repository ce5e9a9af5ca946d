#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "arraykit/ingest.hpp"
#include "arraykit/normalize.hpp"
#include "arraykit/rng.hpp"

namespace testing_support {

using arraykit::MatrixD;

inline double normal(arraykit::Rng &rng) {
  // Box-Muller on the library-independent uniform source.
  const double u1 = 1.0 - arraykit::uniform01(rng), u2 = arraykit::uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline MatrixD noise(std::size_t rows, std::size_t cols, arraykit::Rng &rng, double sd = 1.0) {
  MatrixD m(rows, cols);
  for (auto &v : m.data()) v = sd * normal(rng);
  return m;
}

/// Gene x sample data set with gene names g1..gN (label "Gene") and the
/// given sample labels.
inline arraykit::NormalizedDataset make_dataset(MatrixD W,
                                                const std::vector<std::pair<std::string, std::vector<std::string>>> &labels,
                                                std::vector<std::string> geneNames = {}) {
  arraykit::NormalizedDataset ds;
  const std::size_t n = W.rows(), m = W.cols();
  ds.A = MatrixD(n, m, 10.0);
  ds.W = std::move(W);
  ds.useSpot = arraykit::MatrixB(n, m, 1);
  ds.badSpot.assign(n, 0);
  ds.annot.datasetId = "test";
  ds.annot.genes.names = {"Gene"};
  for (std::size_t i = 0; i < n; ++i)
    ds.annot.genes.rows.push_back({geneNames.empty() ? "g" + std::to_string(i + 1) : geneNames[i]});
  for (std::size_t j = 0; j < m; ++j) {
    ds.annot.samples.fileNames.push_back("s" + std::to_string(j + 1));
    ds.annot.samples.interest.push_back(arraykit::Channel::ch1);
    ds.annot.samples.labels.rows.emplace_back();
  }
  for (const auto &[name, values] : labels) {
    ds.annot.samples.labels.names.push_back(name);
    for (std::size_t j = 0; j < m; ++j) ds.annot.samples.labels.rows[j].push_back(values[j]);
  }
  return ds;
}

/// `count` copies of each level, in blocks: {a,a,b,b} for ({a,b}, 2).
inline std::vector<std::string> blocks(const std::vector<std::string> &levels, std::size_t count) {
  std::vector<std::string> out;
  for (const auto &l : levels) out.insert(out.end(), count, l);
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string &name) {
  auto p = std::filesystem::temp_directory_path() / ("arraykit_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline bool negated_bitwise(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  const double nb = -b;
  return std::memcmp(&a, &nb, sizeof a) == 0;
}

// Raw chips with an intensity-dependent dye bias and block offsets. Chips
// come in pairs; the second of each pair has its channels exchanged.
inline arraykit::RawDataset make_raw(arraykit::GridGeometry grid, std::size_t pairs, std::uint64_t seed) {
  using namespace arraykit;
  auto rng = make_rng(seed);
  RawDataset ds;
  ds.grid = grid;
  const std::size_t n = grid.spots(), m = 2 * pairs;
  for (MatrixD *mat : std::vector<MatrixD *>{&ds.ch1Fg, &ds.ch1Bg, &ds.ch2Fg, &ds.ch2Bg}) *mat = MatrixD(n, m);
  ds.flags = Matrix<std::int64_t>(n, m);
  ds.useSpot = MatrixB(n, m, 1);
  ds.badSpot.assign(n, 0);
  ds.annot.genes.names = {"Name"};
  for (std::size_t i = 0; i < n; ++i) ds.annot.genes.rows.push_back({"gene" + std::to_string(i / 2)});
  ds.annot.samples.labels.names = {"Sample"};
  for (std::size_t p = 0; p < pairs; ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = 7 + 6 * uniform01(rng);
      const double w = 0.3 * normal(rng) + 0.4 * (a - 10) + 0.1 * double(grid.block_of(i));
      const double i1 = std::exp2(a + w / 2), i2 = std::exp2(a - w / 2);
      const double b1 = 30 + 20 * uniform01(rng), b2 = 30 + 20 * uniform01(rng);
      ds.ch1Fg(i, 2 * p) = i1 + b1;
      ds.ch1Bg(i, 2 * p) = b1;
      ds.ch2Fg(i, 2 * p) = i2 + b2;
      ds.ch2Bg(i, 2 * p) = b2;
      ds.ch1Fg(i, 2 * p + 1) = i2 + b2;
      ds.ch1Bg(i, 2 * p + 1) = b2;
      ds.ch2Fg(i, 2 * p + 1) = i1 + b1;
      ds.ch2Bg(i, 2 * p + 1) = b1;
    }
    for (int k = 0; k < 2; ++k) {
      ds.annot.samples.fileNames.push_back("chip" + std::to_string(2 * p + k));
      ds.annot.samples.interest.push_back(Channel::ch1);
      ds.annot.samples.labels.rows.push_back({"S" + std::to_string(p)});
    }
  }
  return ds;
}

}  // namespace testing_support
