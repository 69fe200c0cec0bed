#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "phishguard/cli.hpp"
#include "phishguard/corpus.hpp"
#include "phishguard/error.hpp"

namespace fs = std::filesystem;
using namespace phishguard::cli;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Console {
  std::ostringstream out, err;
  Io io() { return {out, err}; }
};

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "phishguard_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    Console r;
    cmd_synth(400, 3, root_ / "corpus.csv", r.io());
  }

  RunConfig config(const std::string& name) const {
    RunConfig c;
    c.dataset = root_ / "corpus.csv";
    c.output_dir = root_ / name;
    c.epochs = 8;
    c.lr = 1.0;
    c.lime_samples = 100;
    return c;
  }

  static fs::path root_;
};

fs::path Pipeline::root_;

int run_shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_F(Pipeline, PrepareWritesSplitsAndRatioTable) {
  Console r;
  EXPECT_EQ(cmd_prepare(config("prep"), r.io()), 0);
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "vocab.json"}) {
    EXPECT_TRUE(fs::exists(root_ / "prep" / f)) << f;
  }
  EXPECT_NE(r.out.str().find("60.00"), std::string::npos);
  EXPECT_NE(r.out.str().find("40.00"), std::string::npos);
}

TEST_F(Pipeline, RerunIsByteIdentical) {
  for (const char* name : {"det_a", "det_b"}) {
    Console r;
    const auto c = config(name);
    cmd_prepare(c, r.io());
    cmd_train(c, true, r.io());
    cmd_perturb(c, r.io());
    cmd_eval(c, {root_ / name / "fgm.ckpt.json"}, r.io());
  }
  for (const char* f : {"train.jsonl", "test.jsonl", "vocab.json", "fgm.ckpt.json", "fgm.history.jsonl",
                        "test.noise-0.10.jsonl", "report.json", "report.txt"}) {
    EXPECT_EQ(slurp(root_ / "det_a" / f), slurp(root_ / "det_b" / f)) << f;
  }
}

TEST_F(Pipeline, MaskingOnlyTouchesPiiSpans) {
  Console r;
  auto masked = config("mask_on");
  auto plain = config("mask_off");
  plain.masking = false;
  cmd_prepare(masked, r.io());
  cmd_prepare(plain, r.io());
  const auto a = phishguard::corpus::load_dataset(root_ / "mask_on" / "train.jsonl", phishguard::corpus::Format::Jsonl);
  const auto b = phishguard::corpus::load_dataset(root_ / "mask_off" / "train.jsonl", phishguard::corpus::Format::Jsonl);
  ASSERT_EQ(a.dataset.size(), b.dataset.size());
  std::size_t differing = 0;
  const std::regex ph(R"(\\\[(name|email|phone|account)\\\])");
  for (std::size_t i = 0; i < a.dataset.size(); ++i) {
    const auto& m = a.dataset.records()[i].text;
    const auto& u = b.dataset.records()[i].text;
    if (m == u) continue;
    ++differing;
    // Escape the masked text, then let each placeholder stand for any non-empty span.
    const std::string escaped = std::regex_replace(m, std::regex(R"([.^$|()\[\]{}*+?\\])"), R"(\$&)");
    const std::string pattern = std::regex_replace(escaped, ph, "(.+?)");
    EXPECT_TRUE(std::regex_match(u, std::regex(pattern))) << m << "\n" << u;
  }
  EXPECT_GT(differing, 0u);
}

TEST_F(Pipeline, TrainBaselineHistoryHasZeroAdv) {
  Console r;
  const auto c = config("hist");
  cmd_prepare(c, r.io());
  cmd_train(c, false, r.io());
  std::ifstream in(root_ / "hist" / "baseline.history.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("l_adv").get<double>(), 0.0);
    EXPECT_FALSE(j.contains("seconds"));
    ++n;
  }
  EXPECT_EQ(n, c.epochs);
  EXPECT_NE(r.err.str().find("epoch 1"), std::string::npos);
}

TEST_F(Pipeline, EvalTwoCheckpointsThreeLevels) {
  Console r;
  const auto c = config("grid");
  cmd_prepare(c, r.io());
  cmd_train(c, false, r.io());
  cmd_train(c, true, r.io());
  cmd_eval(c, {root_ / "grid" / "baseline.ckpt.json", root_ / "grid" / "fgm.ckpt.json"}, r.io());
  const auto j = nlohmann::json::parse(slurp(root_ / "grid" / "report.json"));
  ASSERT_EQ(j.at("models").size(), 2u);
  EXPECT_EQ(j.at("models")[0].at("name"), "baseline");
  EXPECT_EQ(j.at("models")[1].at("noise").size(), 3u);
  Console rep;
  cmd_report(c, rep.io());
  EXPECT_EQ(rep.out.str(), slurp(root_ / "grid" / "report.txt"));
}

TEST_F(Pipeline, EvalErrors) {
  Console r;
  const auto c = config("errs");
  EXPECT_THROW(cmd_eval(c, {}, r.io()), phishguard::PipelineError);
  EXPECT_THROW(cmd_train(c, false, r.io()), phishguard::PipelineError);
  cmd_prepare(c, r.io());
  // A checkpoint built for another vocabulary size.
  const auto other = config("grid");
  cmd_prepare(other, r.io());
  auto small = c;
  small.dataset = root_ / "tiny.csv";
  {
    std::ofstream f(small.dataset);
    f << "text,label\n";
    for (int i = 0; i < 20; ++i) f << "hello there " << i << ",Safe Email\nverify now " << i << ",Phishing Email\n";
  }
  small.output_dir = root_ / "tiny";
  cmd_prepare(small, r.io());
  cmd_train(small, false, r.io());
  EXPECT_THROW(cmd_eval(c, {root_ / "tiny" / "baseline.ckpt.json"}, r.io()), phishguard::PipelineError);
}

TEST_F(Pipeline, ExplainExitCodesAndJson) {
  const auto out = root_ / "explain";
  const std::string cli = PHISHGUARD_CLI_PATH;
  const std::string base = cli + " --help > /dev/null";
  ASSERT_EQ(run_shell(base), 0);

  Console r;
  const auto c = config("explain");
  cmd_prepare(c, r.io());
  cmd_train(c, true, r.io());
  const std::string common = " -o " + out.string() + " --checkpoint " + (out / "fgm.ckpt.json").string();
  const int phish = run_shell(cli + " explain" + common +
                              " --text 'Dear Mary, urgent: verify your password now and click the link to "
                              "restore your bank account' > " + (root_ / "p.txt").string());
  EXPECT_EQ(phish, 2);
  EXPECT_NE(slurp(root_ / "p.txt").find("PHISHING"), std::string::npos);
  const int safe = run_shell(cli + " explain --json" + common +
                             " --text 'Hi Rita, the team meeting is moved to Thursday afternoon.' > " +
                             (root_ / "s.json").string());
  EXPECT_EQ(safe, 0);
  const auto j = nlohmann::json::parse(slurp(root_ / "s.json"));
  EXPECT_EQ(j.at("verdict"), "LEGITIMATE");
  EXPECT_LE(j.at("features").size(), 8u);
  EXPECT_TRUE(fs::exists(out / "explanation.json"));

  const int bad = run_shell(cli + " explain" + common + " --text '   ' 2> " + (root_ / "e.txt").string());
  EXPECT_EQ(bad, 1);
  EXPECT_NE(slurp(root_ / "e.txt").find("error [cli]"), std::string::npos);
  EXPECT_EQ(run_shell(cli + " explain" + common + " --input /nonexistent 2>/dev/null"), 1);
}

TEST(Config, JsonRoundTripAndUnknownKey) {
  RunConfig c;
  c.seed = 9;
  c.noise_levels = {0.1};
  c.gen_endpoint = "http://localhost:1/x";
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.noise_levels, std::vector<double>{0.1});
  EXPECT_EQ(*back.gen_endpoint, "http://localhost:1/x");
  EXPECT_THROW(config_from_json({{"sede", 1}}), phishguard::PipelineError);
}

TEST(Config, ValidationCatchesBadValues) {
  RunConfig c;
  c.noise_levels = {1.5};
  EXPECT_THROW(c.validate(), phishguard::PipelineError);
  c = RunConfig{};
  c.gazetteer = "/nonexistent/names.txt";
  EXPECT_THROW(c.validate(), phishguard::PipelineError);
}
