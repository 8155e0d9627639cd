#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run(const std::string& args) {
  std::string cmd = std::string(OBDAML_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.output.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("obdaml_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const std::string kSource = OBDAML_SOURCE_DIR;

}  // namespace

TEST(Cli, HelpForEverySubcommand) {
  EXPECT_EQ(run("--help").code, 0);
  for (const char* sub : {"generate", "ingest", "rollup", "train", "eval", "sweep", "classify", "map", "query", "serve",
                          "report"}) {
    auto r = run(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub << "\n" << r.output;
    EXPECT_NE(r.output.find("--"), std::string::npos) << sub;
  }
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("rollup --data x.csv").code, 1);
}

TEST(Cli, DataErrorsExitTwo) {
  auto dir = scratch("errors");
  EXPECT_EQ(run("rollup --data /nonexistent/data.csv --out " + dir.string()).code, 2);
  std::ofstream(dir / "bad.csv") << "record_id,plant_id\n1,p\n";
  EXPECT_EQ(run("ingest --data " + (dir / "bad.csv").string() + " --out " + (dir / "o").string()).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, InvalidArgumentExitsOne) {
  auto dir = scratch("badarg");
  auto data = kSource + "/data/example/training.csv";
  EXPECT_EQ(run("rollup --data " + data + " --level BL7 --out " + dir.string()).code, 1);
  fs::remove_all(dir);
}

TEST(Cli, ExamplePipeline) {
  auto dir = scratch("example");
  auto ex = kSource + "/data/example/";
  auto r = run("train --data " + ex + "training.csv --level BL2 --model nb --mode flat --min-support 1 --validation-fraction 0.2 --out " +
               dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  auto model = dir / "model_BL2_nb_flat.json";
  ASSERT_TRUE(fs::exists(model));
  r = run("classify --data " + ex + "example1.csv --hierarchies " + ex + " --model-file " + model.string() + " --out " +
          dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  auto preds = slurp(dir / "predictions_BL2_nb.csv");
  EXPECT_NE(preds.find("Power plant 1/100,QA,"), std::string::npos) << preds;
  r = run("map --data " + ex + "example1.csv --hierarchies " + ex + " --model-file " + model.string() + " --context " +
          ex + "context.json --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  r = run("query --triples " + (dir / "triples.nt").string() + " --class QA --level BL2 --hierarchies " + ex);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("http://example.org/plant/power-plant-1/100"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("http://example.org/plant/power-plant-1/101"), std::string::npos) << r.output;
  fs::remove_all(dir);
}

TEST(Cli, RollupWritesArtifactsAndManifest) {
  auto dir = scratch("rollup");
  auto r = run("generate --config " + kSource + "/data/benchmark/synthetic.json --records 800 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  r = run("rollup --data " + (dir / "dataset.csv").string() + " --level BL1 --v 30 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* f : {"mapping_BL1.csv", "audit_BL1.csv", "rollup_summary_BL1.txt", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_NE(slurp(dir / "manifest.json").find("mapping_BL1.csv"), std::string::npos);
  fs::remove_all(dir);
}
