#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "connecto/cli.hpp"
#include "connecto/connectome.hpp"

using namespace connecto;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "connecto");
  args.insert(args.begin() + 1, "--quiet");
  return cli::run(args);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("connecto_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({"fit", "--team", "11"}) == 2);
  CHECK(run_cli({"--version"}) == 0);
}

TEST_CASE("synth writes consistent tables") {
  const auto dir = scratch("synth");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--subjects", "20", "--test-subjects", "10", "--rois", "6", "--seed", "4"}) == 0);
  const auto t0 = load_csv(dir / "train_t0.csv", 15);
  const auto t1 = load_csv(dir / "train_t1.csv", 15);
  CHECK(t0.n_subjects() == 20);
  CHECK(t0.subject_ids() == t1.subject_ids());
  const auto pub = load_csv(dir / "test_t1_public.csv", 15);
  const auto priv = load_csv(dir / "test_t1_private.csv", 15);
  CHECK(pub.n_subjects() + priv.n_subjects() == 10);
  CHECK(load_csv(dir / "test_t0.csv", 15).n_subjects() == 10);
  const auto again = scratch("synth2");
  REQUIRE(run_cli({"synth", "--out", again.string(), "--subjects", "20", "--test-subjects", "10", "--rois", "6", "--seed", "4"}) == 0);
  CHECK(slurp(dir / "train_t0.csv") == slurp(again / "train_t0.csv"));
}

TEST_CASE("fit, predict and residual") {
  const auto dir = scratch("fit");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--subjects", "30", "--test-subjects", "6", "--rois", "6", "--seed", "1"}) == 0);
  const std::string t0 = (dir / "train_t0.csv").string();
  const std::string t1 = (dir / "train_t1.csv").string();
  const std::string test = (dir / "test_t0.csv").string();
  REQUIRE(run_cli({"fit", "--team", "11", "--train-t0", t0, "--train-t1", t1, "--out", (dir / "m.bin").string()}) == 0);
  REQUIRE(run_cli({"predict", "--model", (dir / "m.bin").string(), "--input", test, "--out", (dir / "a.csv").string()}) == 0);
  REQUIRE(run_cli({"predict", "--team", "11", "--train-t0", t0, "--train-t1", t1, "--input", test, "--out",
               (dir / "b.csv").string()}) == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  const auto pred = load_csv(dir / "a.csv", 15);
  CHECK(pred.n_subjects() == 6);

  const auto wide = scratch("wide");
  REQUIRE(run_cli({"synth", "--out", wide.string(), "--subjects", "10", "--test-subjects", "4", "--rois", "7"}) == 0);
  CHECK(run_cli({"predict", "--model", (dir / "m.bin").string(), "--input", (wide / "test_t0.csv").string(), "--out",
             (dir / "c.csv").string()}) == 2);
  CHECK(run_cli({"predict", "--model", (dir / "missing.bin").string(), "--input", test, "--out", (dir / "d.csv").string()}) == 2);

  const std::string id = pred.subject_ids()[0];
  REQUIRE(run_cli({"residual", "--pred", (dir / "a.csv").string(), "--truth", (dir / "test_t1_public.csv").string(),
               "--subject", id, "--out", (dir / "r.csv").string()}) == 0);
  CHECK(fs::file_size(dir / "r.csv") > 0);
  CHECK(run_cli({"residual", "--pred", (dir / "a.csv").string(), "--truth", (dir / "test_t1_public.csv").string(),
             "--subject", "nobody", "--out", (dir / "r2.csv").string()}) == 2);
}

TEST_CASE("bench writes results, table, p-values and manifest") {
  const auto dir = scratch("bench");
  REQUIRE(run_cli({"synth", "--out", dir.string(), "--subjects", "40", "--test-subjects", "10", "--rois", "6", "--seed", "2"}) == 0);
  const auto out = dir / "out";
  REQUIRE(run_cli({"bench", "--train-t0", (dir / "train_t0.csv").string(), "--train-t1", (dir / "train_t1.csv").string(),
               "--test-t0", (dir / "test_t0.csv").string(), "--test-t1-public", (dir / "test_t1_public.csv").string(),
               "--test-t1-private", (dir / "test_t1_private.csv").string(), "--pipelines", "2,11,13", "--folds", "3",
               "--out", out.string()}) == 0);
  for (const char* f : {"results.json", "table2.csv", "pvalues_mae.csv", "pvalues_pcc.csv", "manifest.json"}) {
    CHECK(fs::exists(out / f));
  }
  const auto results = nlohmann::json::parse(slurp(out / "results.json"));
  CHECK(results.dump().find("wall") == std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.contains("wall_clock_seconds"));
  std::istringstream table(slurp(out / "table2.csv"));
  std::string header;
  std::getline(table, header);
  CHECK(header.rfind("rank,pipeline,", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(table, line);) rows += line.empty() ? 0 : 1;
  CHECK(rows == 3);
}

TEST_CASE("export-config writes one file per team") {
  const auto dir = scratch("export");
  REQUIRE(run_cli({"export-config", "--team", "all", "--out", dir.string()}) == 0);
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".ini";
  CHECK(n == 20);
  CHECK(run_cli({"export-config", "--team", "99", "--out", dir.string()}) == 2);
}
