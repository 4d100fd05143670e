#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "vsrn/harness/checkpoint.hpp"
#include "vsrn/harness/corpus.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vsrn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with stdout and stderr captured; returns the exit status.
  int run(const std::string& args) {
    const std::string cmd = std::string(VSRN_CLI_PATH) + " " + args + " >" + path("stdout") +
                            " 2>" + path("stderr");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string err() const { return slurp(dir_ / "stderr"); }

  void make_corpus_and_model() {
    ASSERT_EQ(run("gen-data --out " + path("c.bin") +
                  " --seed 2 --items 24 --concepts 8 --regions 4 --feature-dim 6 --val 4 --test 4"),
              0);
    std::ofstream(path("cfg.txt")) << "joint_dim = 8\nword_dim = 6\nrrr_layers = 2\n"
                                      "batch_size = 4\nepochs = 3\ndecay_epoch = 2\n"
                                      "lr_initial = 0.002\nseed = 5\n";
    ASSERT_EQ(run("train --config " + path("cfg.txt") + " --corpus " + path("c.bin") + " --out " +
                  path("m.ckpt") + " --log " + path("log.tsv")),
              0)
        << err();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenDataIsDeterministic) {
  ASSERT_EQ(run("gen-data --out " + path("a.bin") + " --seed 9 --items 20 --val 4"), 0);
  ASSERT_EQ(run("gen-data --out " + path("b.bin") + " --seed 9 --items 20 --val 4"), 0);
  EXPECT_EQ(slurp(dir_ / "a.bin"), slurp(dir_ / "b.bin"));
  EXPECT_EQ(slurp(dir_ / "a.bin.vocab"), slurp(dir_ / "b.bin.vocab"));
  const auto corpus = vsrn::load_corpus(path("a.bin"));
  EXPECT_EQ(corpus.items.size(), 20u);
  EXPECT_EQ(corpus.indices(vsrn::Split::val).size(), 4u);
  ASSERT_EQ(run("gen-data --out " + path("c.bin") + " --seed 10 --items 20 --val 4"), 0);
  EXPECT_NE(slurp(dir_ / "a.bin"), slurp(dir_ / "c.bin"));
}

TEST_F(Cli, TrainWritesCheckpointAndLog) {
  make_corpus_and_model();
  const auto ckpt = vsrn::load_checkpoint(path("m.ckpt"));
  const auto restored = vsrn::restore(ckpt);
  EXPECT_EQ(restored.config.seed, 5u);
  EXPECT_EQ(restored.config.joint_dim, 8u);
  std::istringstream log(slurp(dir_ / "log.tsv"));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  EXPECT_EQ(lines, 4);
}

TEST_F(Cli, SeedFlagOverridesConfig) {
  make_corpus_and_model();
  ASSERT_EQ(run("train --config " + path("cfg.txt") + " --corpus " + path("c.bin") + " --out " +
                path("s.ckpt") + " --seed 77"),
            0);
  EXPECT_EQ(vsrn::restore(vsrn::load_checkpoint(path("s.ckpt"))).config.seed, 77u);
}

TEST_F(Cli, EvalReportsAndSelfEnsembleIsExact) {
  make_corpus_and_model();
  const std::string base = "eval --corpus " + path("c.bin") + " --checkpoint " + path("m.ckpt");
  ASSERT_EQ(run(base + " --out " + path("one.txt")), 0) << err();
  ASSERT_EQ(run(base + " --checkpoint " + path("m.ckpt") + " --out " + path("two.txt")), 0);
  const std::string one = slurp(dir_ / "one.txt");
  EXPECT_EQ(one, slurp(dir_ / "two.txt"));
  EXPECT_NE(one.find("caption_r1"), std::string::npos);
  EXPECT_NE(one.find("rsum"), std::string::npos);
  ASSERT_EQ(run(base + " --split val --folds 2 --out " + path("val.txt")), 0) << err();
}

TEST_F(Cli, AttendIsByteIdentical) {
  make_corpus_and_model();
  const std::string base =
      "attend --corpus " + path("c.bin") + " --checkpoint " + path("m.ckpt") + " --item 3 --out ";
  ASSERT_EQ(run(base + path("a.pgm")), 0) << err();
  ASSERT_EQ(run(base + path("b.pgm")), 0);
  const std::string a = slurp(dir_ / "a.pgm");
  EXPECT_EQ(a, slurp(dir_ / "b.pgm"));
  const std::string header = "P5\n64 64\n255\n";
  ASSERT_GE(a.size(), header.size());
  EXPECT_EQ(a.substr(0, header.size()), header);
  EXPECT_EQ(a.size(), header.size() + 64 * 64);
}

TEST_F(Cli, FailuresExitNonzeroWithOneLine) {
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("bogus"), 0);
  EXPECT_NE(run("gen-data"), 0);
  EXPECT_NE(run("gen-data --out " + path("x.bin") + " --items notanumber"), 0);
  EXPECT_NE(run("eval --checkpoint " + path("missing") + " --corpus " + path("missing") +
                " --out " + path("r.txt")),
            0);
  const std::string e = err();
  EXPECT_FALSE(e.empty());
  EXPECT_EQ(e.find('\n'), e.size() - 1);
}

TEST_F(Cli, CorruptInputsAreReported) {
  make_corpus_and_model();
  std::string bytes = slurp(dir_ / "m.ckpt");
  bytes[bytes.size() / 2] ^= 0x10;
  std::ofstream(path("bad.ckpt"), std::ios::binary) << bytes;
  EXPECT_EQ(run("eval --checkpoint " + path("bad.ckpt") + " --corpus " + path("c.bin") +
                " --out " + path("r.txt")),
            1);
  EXPECT_NE(err().find("checksum"), std::string::npos) << err();
  EXPECT_FALSE(fs::exists(dir_ / "r.txt"));

  ASSERT_EQ(run("gen-data --out " + path("other.bin") + " --feature-dim 7"), 0);
  EXPECT_EQ(run("attend --checkpoint " + path("m.ckpt") + " --corpus " + path("other.bin") +
                " --item 0 --out " + path("a.pgm")),
            1);
  EXPECT_EQ(run("attend --checkpoint " + path("m.ckpt") + " --corpus " + path("c.bin") +
                " --item 24 --out " + path("a.pgm")),
            1);
  EXPECT_EQ(run("eval --checkpoint " + path("m.ckpt") + " --corpus " + path("c.bin") +
                " --split nope --out " + path("r.txt")),
            2);
}

TEST_F(Cli, HelpExitsZero) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_NE(slurp(dir_ / "stdout").find("gen-data"), std::string::npos);
  EXPECT_EQ(run("eval --help"), 0);
}
