#include <algorithm>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "cognate/cli.hpp"
#include "cognate/dataio.hpp"
#include "cognate/diagnostics.hpp"

namespace fs = std::filesystem;
using cognate::cli::kExitData;
using cognate::cli::kExitOk;
using cognate::cli::kExitUsage;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cognate::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const char* kGold =
    "ID\tFAMILY\tDOCULECT\tCONCEPT\tTOKENS\tCOGID\n"
    "1\tIE\tRussian\tall\tf sʲ e\t1\n"
    "2\tIE\tCzech\tall\tf ʃ ɛ\t1\n"
    "3\tIE\tEnglish\tall\tɔː l\t2\n"
    "4\tIE\tGerman\tall\ta l ə\t2\n"
    "5\tIE\tRussian\thand\tr u k a\t7\n"
    "6\tIE\tCzech\thand\tr u k a\t7\n";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    cognate::set_log_level(cognate::LogLevel::error);
    dir_ = fs::temp_directory_path() / ("cognate_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    cognate::write_text_file(dir_ / "gold.tsv", kGold);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, EvaluateGoldAgainstGold) {
  const auto r = run({"evaluate", "--input", path("gold.tsv"), "--gold", path("gold.tsv")});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("mean"), std::string::npos);
  EXPECT_NE(r.out.find("1.000"), std::string::npos);
  EXPECT_EQ(r.out.find("0."), std::string::npos);

  const auto j = run({"evaluate", "--input", path("gold.tsv"), "--gold", path("gold.tsv"), "--json"});
  EXPECT_EQ(j.code, kExitOk);
  EXPECT_NE(j.out.find("\"f1\": 1.0"), std::string::npos) << j.out;
}

TEST_F(Cli, UsageErrorsExitOne) {
  const auto unknown = run({"evaluate", "--bogus"});
  EXPECT_EQ(unknown.code, kExitUsage);
  EXPECT_NE(unknown.err.find("Usage"), std::string::npos) << unknown.err;
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"predict", "--input", path("gold.tsv"), "--checkpoint", "x", "--threshold", "1.5"}).code, kExitUsage);
  EXPECT_EQ(run({"evaluate", "--input", path("gold.tsv"), "--gold", path("gold.tsv"), "--log-level", "loud"}).code,
            kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(Cli, DataErrorsExitTwoWithContext) {
  const auto missing = run({"evaluate", "--input", path("nope.tsv"), "--gold", path("gold.tsv")});
  EXPECT_EQ(missing.code, kExitData);
  EXPECT_NE(missing.err.find("nope.tsv"), std::string::npos);

  cognate::write_text_file(dir_ / "bad.tsv", "ID\tFAMILY\tDOCULECT\tCONCEPT\tTOKENS\tCOGID\n1\tA\tx\tc\t\t1\n");
  const auto bad = run({"align", "--input", path("bad.tsv")});
  EXPECT_EQ(bad.code, kExitData);
  EXPECT_NE(bad.err.find("bad.tsv:2"), std::string::npos) << bad.err;

  const auto ckpt = run({"predict", "--input", path("gold.tsv"), "--checkpoint", path("gold.tsv")});
  EXPECT_EQ(ckpt.code, kExitData);
}

TEST_F(Cli, AlignWritesOneFilePerConcept) {
  const auto r = run({"align", "--input", path("gold.tsv"), "--output", path("msa"), "--workers", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string all = cognate::read_text_file(dir_ / "msa" / "IE" / "all.tsv");
  EXPECT_EQ(std::count(all.begin(), all.end(), '\n'), 4);
  EXPECT_EQ(all.rfind("1\tRussian\tf\t", 0), 0u) << all;
  EXPECT_TRUE(fs::exists(dir_ / "msa" / "IE" / "hand.tsv"));
  const auto stdout_run = run({"align", "--input", path("gold.tsv")});
  EXPECT_NE(stdout_run.out.find("# IE/all"), std::string::npos);
}

TEST_F(Cli, TrainPredictEvaluateIsDeterministic) {
  const auto t = run({"train", "--input", path("gold.tsv"), "--checkpoint", path("m.ckpt"), "--epochs", "1", "--seed",
                      "3", "--deterministic"});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  const auto p1 = run({"predict", "--input", path("gold.tsv"), "--checkpoint", path("m.ckpt"), "--output",
                       path("p1.tsv"), "--deterministic"});
  const auto p2 = run({"predict", "--input", path("gold.tsv"), "--checkpoint", path("m.ckpt"), "--output",
                       path("p2.tsv"), "--workers", "3"});
  ASSERT_EQ(p1.code, kExitOk) << p1.err;
  ASSERT_EQ(p2.code, kExitOk) << p2.err;
  const std::string a = cognate::read_text_file(dir_ / "p1.tsv");
  EXPECT_EQ(a, cognate::read_text_file(dir_ / "p2.tsv"));
  EXPECT_NE(a.find("PREDICTED_COGID"), std::string::npos);
  EXPECT_NE(a.find("all:"), std::string::npos);

  const auto overridden = run({"predict", "--input", path("gold.tsv"), "--checkpoint", path("m.ckpt"), "--threshold",
                               "0.999"});
  EXPECT_EQ(overridden.code, kExitOk);
  const auto e = run({"evaluate", "--input", path("p1.tsv"), "--gold", path("gold.tsv"), "--per-concept"});
  EXPECT_EQ(e.code, kExitOk) << e.err;
}

TEST_F(Cli, SplitMaterializesFolds) {
  cognate::write_text_file(dir_ / "train.tsv",
                           "ID\tFAMILY\tDOCULECT\tCONCEPT\tTOKENS\tCOGID\n100\tX\ta\tc\tp a\t1\n");
  const auto r = run({"split", "--input", path("train.tsv"), "--test", path("gold.tsv"), "--output", path("folds"),
                      "--proportion", "0.5", "--folds", "3", "--seed", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (int k = 0; k < 3; ++k) {
    const auto fold = dir_ / "folds" / ("fold_" + std::to_string(k));
    const auto train = cognate::load_wordlist(fold / "train.tsv");
    const auto test = cognate::load_wordlist(fold / "test.tsv");
    EXPECT_EQ(train.rows.size() + test.rows.size(), 7u);
    // Half of the two test concepts moves to training.
    ASSERT_FALSE(test.rows.empty());
    for (const auto& row : test.rows) EXPECT_EQ(row.concept_name, test.rows.front().concept_name);
  }
}
