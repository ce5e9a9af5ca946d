#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "arraykit/cli.hpp"
#include "arraykit/container.hpp"
#include "arraykit/ops.hpp"
#include "arraykit/text.hpp"
#include "helpers.hpp"

using namespace arraykit;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(ARRAYKIT_SOURCE_DIR) / "data" / "synthetic";

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

// Loads and summarizes the synthetic data into `dir`.
void prepare(const fs::path &dir) {
  const auto cfg = (kData / "synthetic.conf").string();
  ASSERT_EQ(cli({"load", "--config", cfg, "--out", (dir / "raw.bin").string()}).code, 0);
  ASSERT_EQ(cli({"normalize", "--in", (dir / "raw.bin").string(), "--out", (dir / "norm.bin").string()}).code, 0);
  ASSERT_EQ(cli({"summarize", "--in", (dir / "norm.bin").string(), "--gene-label", "GeneName", "--sample-label",
                 "Sample", "--out", (dir / "genes.bin").string()})
                .code,
            0);
}

}  // namespace

TEST(Cli, UnknownFlagIsAUsageError) {
  const auto r = cli({"de", "--in", "x.bin", "--colour", "red"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--colour"), std::string::npos);
  EXPECT_NE(r.err.find("--label"), std::string::npos);  // usage text follows
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"normalize", "--in", "x.bin", "--method", "magic", "--out", "y.bin"}).code, 1);
}

TEST(Cli, DataErrorsExitWithTwo) {
  const auto dir = testing_support::temp_dir("cli_errors");
  prepare(dir);
  const auto r = cli({"de", "--in", (dir / "genes.bin").string(), "--label", "Tissue", "--out", (dir / "de.bin").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("4 levels"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "de.bin"));
  EXPECT_EQ(cli({"de", "--in", (dir / "missing.bin").string(), "--label", "Type", "--out", (dir / "x.bin").string()}).code, 2);
  text::write_file((dir / "junk.bin").string(), "not a container");
  EXPECT_EQ(cli({"de", "--in", (dir / "junk.bin").string(), "--label", "Type", "--out", (dir / "x.bin").string()}).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, ProvenanceTravelsWithTheObject) {
  const auto dir = testing_support::temp_dir("cli_prov");
  prepare(dir);
  const auto de = (dir / "de.bin").string();
  ASSERT_EQ(cli({"de", "--in", (dir / "genes.bin").string(), "--label", "Type", "--out", de}).code, 0);
  const auto c = load_container(de);
  const auto g = provenance_from_json(c.meta.at("provenance"));
  std::vector<std::string> ops;
  for (const auto *op : g.operations()) ops.push_back(op->label);
  EXPECT_EQ(ops, (std::vector<std::string>{"load", "normalize", "summarize", "de"}));
  EXPECT_EQ(g.node(g.head).outputHash, content_hash(c));

  const auto r = cli({"replay", "--in", de, "--strict"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("op"), std::string::npos);
  EXPECT_EQ(r.out.find("mismatch"), std::string::npos);

  // side outputs by extension
  ASSERT_EQ(cli({"de", "--in", (dir / "genes.bin").string(), "--label", "Type", "--out", (dir / "de.csv").string()}).code, 0);
  EXPECT_EQ(text::read_file((dir / "de.csv").string()).rfind("geneId,", 0), 0u);
  fs::remove_all(dir);
}

TEST(Cli, BinaryRunsTheBundledPipeline) {
  const auto dir = testing_support::temp_dir("cli_pipeline");
  fs::copy(kData, dir / "data", fs::copy_options::recursive);
  const std::string cmd = "cd '" + dir.string() + "' && ARRAYKIT='" + std::string(ARRAYKIT_CLI) + "' sh '" +
                          std::string(ARRAYKIT_SOURCE_DIR) + "/tests/pipeline.sh' 2 > log.txt 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0) << text::read_file((dir / "log.txt").string());
  for (const char *f : {"netscore.bin", "de.csv", "volcano.svg", "relnet.svg", "modules.csv", "spatial.svg"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  fs::remove_all(dir);
}
