#include "commands.hpp"

#include "lsstream/ingest.hpp"
#include "lsstream/io.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using lsstream::cli::run_cli;

namespace {

const fs::path kFixtures = LSSTREAM_FIXTURE_DIR;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lsstream_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

}  // namespace

TEST_F(Cli, SimulateThenRun) {
  ASSERT_EQ(run({"simulate", "--out", dir_.string(), "--K", "2", "--n", "800", "--seed", "3"}), 0)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "stream.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "spec.txt"));

  const fs::path run_dir = dir_ / "run";
  ASSERT_EQ(run({"run", "--out", run_dir.string(), "--stream", (dir_ / "stream.csv").string(),
                 "--spec", (dir_ / "spec.txt").string(), "--K", "2", "--n0", "50"}),
            0)
      << err_.str();
  EXPECT_NE(out_.str().find("selected"), std::string::npos);
  for (const char* f : {"metrics.csv", "decisions.csv", "snapshot.json", "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(run_dir / f)) << f;
  }
  const auto manifest = lsstream::io::read_key_values(run_dir / "manifest.txt");
  EXPECT_EQ(manifest.at("command"), "run");
  EXPECT_EQ(manifest.at("config.n0"), "50");
  EXPECT_EQ(manifest.at("checksum.stream"),
            lsstream::io::file_checksum(dir_ / "stream.csv"));
  EXPECT_EQ(slurp(run_dir / "metrics.csv").rfind("tau,t,est_error,pred_error,n_selected\n", 0), 0u);
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  std::ofstream(dir_ / "cfg.txt") << "K = 3\nn = 300\nseed = 5\n";
  ASSERT_EQ(run({"simulate", "--config", (dir_ / "cfg.txt").string(), "--out", dir_.string(),
                 "--n", "120"}),
            0)
      << err_.str();
  const auto manifest = lsstream::io::read_key_values(dir_ / "manifest.txt");
  EXPECT_EQ(manifest.at("config.n"), "120");
  EXPECT_EQ(manifest.at("config.K"), "3");
  EXPECT_EQ(manifest.at("config.seed"), "5");
  // header plus 120 rows
  const std::string csv = slurp(dir_ / "stream.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 121);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run({"simulate", "--out", dir_.string(), "--n", "0"}), 1);
  EXPECT_EQ(run({"simulate", "--bogus", "1"}), 1);
  EXPECT_EQ(run({}), 1);
  std::ofstream(dir_ / "bad.txt") << "not_a_key = 1\n";
  EXPECT_EQ(run({"simulate", "--config", (dir_ / "bad.txt").string(), "--out", dir_.string()}), 1);
  EXPECT_EQ(run({"doptcheck", "--out", dir_.string(), "--q", "0"}), 1);
}

TEST_F(Cli, PowerOnFixturesReportsDataErrors) {
  const std::string cols =
      "DE_load_actual_entsoe_transparency,FR_load_actual_entsoe_transparency";
  EXPECT_EQ(run({"power", "--out", dir_.string(), "--csv", (kFixtures / "gapped.csv").string(),
                 "--columns", cols}),
            2);
  EXPECT_NE(err_.str().find("row 2"), std::string::npos) << err_.str();
  EXPECT_EQ(run({"power", "--out", dir_.string(), "--csv", (kFixtures / "complete.csv").string(),
                 "--columns", "IT_load_actual_entsoe_transparency"}),
            2);
  // three rows cannot feed a lag-24 model
  EXPECT_EQ(run({"power", "--out", dir_.string(), "--csv", (kFixtures / "complete.csv").string(),
                 "--columns", cols}),
            2);
}

TEST_F(Cli, PowerEndToEnd) {
  ASSERT_EQ(run({"simulate", "--out", dir_.string(), "--model", "seasonal_varx", "--K", "2",
                 "--p1", "2", "--n", "3000", "--radius", "0.9", "--mean_level", "50"}),
            0)
      << err_.str();
  // re-emit the stream in the wide layout
  std::ifstream in(dir_ / "stream.csv");
  const auto points = lsstream::io::read_stream_csv(in);
  const auto table = lsstream::table_from_stream(points, 1451606400);
  {
    std::ofstream wide(dir_ / "wide.csv");
    lsstream::write_wide_csv(wide, table);
  }
  const fs::path out = dir_ / "power";
  ASSERT_EQ(run({"power", "--out", out.string(), "--csv", (dir_ / "wide.csv").string(),
                 "--columns", "y1,y2", "--p1", "2", "--n0", "200"}),
            0)
      << err_.str();
  EXPECT_TRUE(fs::exists(out / "metrics.csv"));
  EXPECT_TRUE(fs::exists(out / "missing.log"));
  const auto manifest = lsstream::io::read_key_values(out / "manifest.txt");
  EXPECT_EQ(manifest.at("checksum.csv"), lsstream::io::file_checksum(dir_ / "wide.csv"));
}

TEST_F(Cli, DoptcheckRanksOptimumFirst) {
  ASSERT_EQ(run({"doptcheck", "--out", dir_.string(), "--n_mc", "40000"}), 0) << err_.str();
  EXPECT_NE(out_.str().find("optimum ranked first"), std::string::npos);
  const std::string csv = slurp(dir_ / "doptcheck.csv");
  EXPECT_EQ(csv.rfind("rank,candidate,admissible,det_gamma,det_se,q_hat\n1,upper_tail,", 0), 0u)
      << csv;
  // q0 = q leaves nothing to separate
  EXPECT_EQ(run({"doptcheck", "--out", dir_.string(), "--q0", "0.5", "--n_mc", "20000"}), 3);
}

TEST_F(Cli, BenchIsDeterministicAcrossParallelism) {
  const std::vector<std::string> common{"--K", "3", "--n", "1200", "--n0", "50",
                                        "--replicates", "3", "--seed", "4"};
  auto with = [&](const fs::path& out, const std::string& par) {
    std::vector<std::string> args{"bench", "--out", out.string(), "--parallelism", par};
    args.insert(args.end(), common.begin(), common.end());
    return run(args);
  };
  ASSERT_EQ(with(dir_ / "a", "1"), 0) << err_.str();
  ASSERT_EQ(with(dir_ / "b", "3"), 0) << err_.str();
  EXPECT_EQ(slurp(dir_ / "a" / "bench.csv"), slurp(dir_ / "b" / "bench.csv"));
}
