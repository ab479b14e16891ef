#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "abcmi/data_io.hpp"
#include "support/fixtures.hpp"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "abcmi_test_cli";
    fs::create_directories(dir_);
    const auto scene = abcmi::testing::planted_scene(21, 5, 6);
    abcmi::write_cube(scene.cube, dir_ / "scene.hsic");
    abcmi::write_ground_truth(scene.gt, dir_ / "scene.hsig");
  }

  static std::string inputs() {
    return " --cube " + (dir_ / "scene.hsic").string() + " --gt " +
           (dir_ / "scene.hsig").string();
  }

  static CliResult run(const std::string& args) {
    const auto err_path = dir_ / "stderr.txt";
    const std::string cmd =
        std::string(ABCMI_CLI_PATH) + " " + args + " 2>" + err_path.string();
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(err_path);
    std::stringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
  }

  static fs::path dir_;
};

fs::path Cli::dir_;

TEST_F(Cli, StatsWritesOneRowPerBand) {
  const auto r = run("stats" + inputs());
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream in(r.out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("band,abc,mi,vif_1,", 0), 0u);
  EXPECT_NE(header.find(",vif_30"), std::string::npos);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 30u);
}

TEST_F(Cli, MissingGroundTruthNamesThePath) {
  const auto r = run("stats --cube " + (dir_ / "scene.hsic").string() + " --gt " +
                     (dir_ / "nope.hsig").string());
  EXPECT_EQ(r.status, 4);
  EXPECT_NE(r.err.find("nope.hsig"), std::string::npos);
}

TEST_F(Cli, MissingRequiredOptionIsAUsageError) {
  EXPECT_EQ(run("select --cube x").status, 2);
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("--help").status, 0);
}

TEST_F(Cli, SelectIsReproducibleAndOneBased) {
  const auto a = run("select" + inputs() + " --threads 1");
  const auto b = run("select" + inputs() + " --threads 4");
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["selected_bands"].size(), 5u);
  EXPECT_EQ(j["vif_lim"].get<double>(), 1.0);
  for (const auto& band : j["selected_bands"]) {
    EXPECT_GE(band.get<int>(), 1);
    EXPECT_LE(band.get<int>(), 30);
  }
  EXPECT_TRUE(j["candidates"][0].contains("abc"));
  EXPECT_TRUE(j["candidates"][0].contains("mi"));
}

TEST_F(Cli, SelectWritesToOutFile) {
  const auto path = dir_ / "result.json";
  fs::remove(path);
  const auto r = run("select" + inputs() + " --out " + path.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(fs::exists(path));
}

TEST_F(Cli, TooManyBandsExitsInfeasible) {
  const auto r = run("select" + inputs() + " --bands-count 31");
  EXPECT_EQ(r.status, 3);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, InvalidValuesExitWithValidationStatus) {
  EXPECT_EQ(run("select" + inputs() + " --tolerance -1").status, 2);
  EXPECT_EQ(run("select" + inputs() + " --variant nope").status, 2);
}

TEST_F(Cli, AbcOnlyOmitsMutualInformation) {
  const auto r = run("select" + inputs() + " --variant abc-only");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_FALSE(j["candidates"][0].contains("mi"));
  EXPECT_EQ(j["centroids"][0].size(), 1u);
}

TEST_F(Cli, EvaluateExplicitBandList) {
  const auto r = run("evaluate" + inputs() + " --bands \"3;16;27\" --repeats 2 --baseline ubs");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["report"]["band_set"], nlohmann::json({3, 16, 27}));
  EXPECT_EQ(j["report"]["per_run"].size(), 2u);
  EXPECT_FALSE(j.contains("selection"));
  EXPECT_EQ(j["baseline"]["report"]["band_set"], nlohmann::json({1, 16, 30}));
}

TEST_F(Cli, SweepCsvShape) {
  const auto r = run("sweep" + inputs() +
                     " --bands-count 5:5:10 --tolerance 0,1 --repeats 1 --restarts 5 --baseline ubs");
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n_prime,tolerance_y,oa_mean,oa_std,kappa_mean,kappa_std,selected_bands");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 2u * 3u + 3u);
  EXPECT_EQ(rows[0].rfind("5,0,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("5,ubs,", 0), 0u);
  EXPECT_EQ(rows[6].rfind("avg,0,", 0), 0u);
  const auto again = run("sweep" + inputs() +
                         " --bands-count 5:5:10 --tolerance 0,1 --repeats 1 --restarts 5 --baseline ubs");
  EXPECT_EQ(again.out, r.out);
}

TEST_F(Cli, TextMatrixInputs) {
  const auto band = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir_ / name) << body;
    return (dir_ / name).string();
  };
  const auto b1 = band("t1.csv", "1,2,3\n4,5,6\n");
  const auto b2 = band("t2.csv", "6,1,5\n2,4,3\n");
  const auto gt = band("tgt.csv", "1,1,2\n2,1,2\n");
  const auto r = run("stats --cube " + b1 + " --cube " + b2 + " --gt " + gt);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "band,abc,mi,vif_1,vif_2");
}

}  // namespace
