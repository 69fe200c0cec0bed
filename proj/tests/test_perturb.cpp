#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "oracles/oracles.hpp"
#include "phishguard/error.hpp"
#include "phishguard/perturb.hpp"
#include "phishguard/rng.hpp"

using namespace phishguard::perturb;

namespace {

NoiseSpec spec(double level, std::uint64_t seed) {
  NoiseSpec s;
  s.level = level;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Budget, UrgentVerifyHeadline) {
  const std::string t = "Urgent: Verify Your Account Immediately!";
  EXPECT_EQ(eligible_positions(t).size(), 34u);
  EXPECT_EQ(edit_budget(t, 0.10), 3u);
  const auto r = inject_noise(t, spec(0.10, 3));
  EXPECT_EQ(r.edits.size(), 3u);
}

TEST(Budget, RoundsHalfAwayFromZero) {
  EXPECT_EQ(edit_budget("abcdefghij", 0.05), 1u);  // 0.5 -> 1
  EXPECT_EQ(edit_budget("abcdefghij", 0.04), 0u);
  EXPECT_EQ(edit_budget("ab", 0.75), 2u);          // 1.5 -> 2
}

TEST(Budget, PlaceholdersAndPunctuationIneligible) {
  EXPECT_EQ(eligible_positions("[name], hi!").size(), 2u);
  EXPECT_EQ(eligible_positions("a [account] b"), (std::vector<std::size_t>{0, 12}));
}

TEST(Pinned, DeleteInAccount) {
  const auto r = inject_noise("account", spec(0.10, 44));
  EXPECT_EQ(r.text, "acount");
  ASSERT_EQ(r.edits.size(), 1u);
  EXPECT_EQ(r.edits[0], (Edit{2, NoiseOp::Delete, "c", ""}));
}

TEST(Pinned, HomoglyphO) {
  const auto r = inject_noise("o", spec(1.0, 0));
  EXPECT_EQ(r.text, "0");
  ASSERT_EQ(r.edits.size(), 1u);
  EXPECT_EQ(r.edits[0].op, NoiseOp::Homoglyph);
}

TEST(Pinned, InsertInFinancial) {
  const auto r = inject_noise("financial", spec(0.10, 1916));
  EXPECT_EQ(r.text, "finanxcial");
  ASSERT_EQ(r.edits.size(), 1u);
  EXPECT_EQ(r.edits[0], (Edit{4, NoiseOp::Insert, "n", "nx"}));
}

TEST(Pinned, SwapInFinancial) {
  const auto r = inject_noise("financial", spec(0.10, 46));
  EXPECT_EQ(r.text, "fianncial");
  ASSERT_EQ(r.edits.size(), 1u);
  EXPECT_EQ(r.edits[0], (Edit{2, NoiseOp::Swap, "na", "an"}));
}

TEST(Noise, LevelZeroIsIdentity) {
  const auto r = inject_noise("verify your account now", spec(0.0, 1));
  EXPECT_EQ(r.text, "verify your account now");
  EXPECT_TRUE(r.edits.empty());
}

TEST(Noise, SingleOpRestriction) {
  for (auto op : {NoiseOp::Delete, NoiseOp::Homoglyph, NoiseOp::Insert}) {
    auto s = spec(0.3, 9);
    s.ops = {op};
    const auto r = inject_noise("please confirm the transfer today", s);
    for (const auto& e : r.edits) EXPECT_EQ(e.op, op);
  }
}

TEST(Noise, HomoglyphTableUsed) {
  auto s = spec(1.0, 2);
  s.ops = {NoiseOp::Homoglyph};
  const auto r = inject_noise("olie", s);
  EXPECT_EQ(r.text, "0113");
}

TEST(Noise, PropertiesOnRandomTexts) {
  const std::vector<std::string> words{"urgent", "[name]", "verify", "account", "12345", "now!", "bank,",
                                       "the",    "a",      "meeting", "x",      "[email]", "pay:"};
  phishguard::Rng rng(77);
  for (int i = 0; i < 500; ++i) {
    std::string t;
    const std::size_t n = 1 + rng.uniform_index(15);
    for (std::size_t k = 0; k < n; ++k) {
      if (!t.empty()) t += ' ';
      t += words[rng.uniform_index(words.size())];
    }
    for (double level : {0.05, 0.10, 0.20, 0.5}) {
      const auto r = inject_noise(t, spec(level, static_cast<std::uint64_t>(i)));
      const auto k = static_cast<std::size_t>(std::llround(level * static_cast<double>(eligible_positions(t).size())));
      ASSERT_EQ(r.edits.size(), k) << t;
      ASSERT_LE(oracles::levenshtein(t, r.text), 2 * k) << t;
      for (const char* ph : {"[name]", "[email]"}) {
        std::size_t before = 0, after = 0;
        for (auto at = t.find(ph); at != std::string::npos; at = t.find(ph, at + 1)) ++before;
        for (auto at = r.text.find(ph); at != std::string::npos; at = r.text.find(ph, at + 1)) ++after;
        ASSERT_EQ(before, after) << t << " -> " << r.text;
      }
    }
  }
}

TEST(Noise, Deterministic) {
  const std::string t = "final warning: your password expires in 30 minutes";
  EXPECT_EQ(inject_noise(t, spec(0.2, 5)).text, inject_noise(t, spec(0.2, 5)).text);
  EXPECT_NE(inject_noise(t, spec(0.2, 5)).text, inject_noise(t, spec(0.2, 6)).text);
}

TEST(Sets, ThreeLevelsSameShape) {
  const phishguard::corpus::Dataset test({{"a", "verify your account now", 1}, {"b", "lunch at noon", 0}});
  const std::vector<double> levels{0.05, 0.10, 0.20};
  const auto sets = make_noisy_testsets(test, levels, 7);
  ASSERT_EQ(sets.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(sets[i].level, levels[i]);
    ASSERT_EQ(sets[i].data.size(), 2u);
    EXPECT_EQ(sets[i].data.records()[0].id, "a");
    EXPECT_EQ(sets[i].data.records()[1].label, 0);
    EXPECT_EQ(sets[i].edits.size(), 2u);
  }
  const auto again = make_noisy_testsets(test, levels, 7);
  EXPECT_EQ(again[2].data.records(), sets[2].data.records());
  EXPECT_TRUE(make_noisy_testsets(test, {}, 7).empty());
  EXPECT_EQ(test.records()[0].text, "verify your account now");
}

TEST(Sets, RecordSeedIndependentOfNeighbours) {
  const phishguard::corpus::Dataset one({{"a", "verify your account now", 1}});
  const phishguard::corpus::Dataset two({{"z", "other text here", 0}, {"a", "verify your account now", 1}});
  const std::vector<double> levels{0.2};
  EXPECT_EQ(make_noisy_testsets(one, levels, 3)[0].data.records()[0].text,
            make_noisy_testsets(two, levels, 3)[0].data.records()[1].text);
}

TEST(Sets, JsonlCarriesEdits) {
  const phishguard::corpus::Dataset test({{"a", "verify your account now", 1}});
  const std::vector<double> levels{0.2};
  const auto sets = make_noisy_testsets(test, levels, 1);
  const auto p = std::filesystem::temp_directory_path() / "phishguard_noisy.jsonl";
  write_noisy_jsonl(sets[0], p);
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j.at("id"), "a");
  EXPECT_EQ(j.at("edits").size(), sets[0].edits[0].size());
  EXPECT_TRUE(j.at("edits")[0].contains("op"));
}

TEST(Homoglyphs, FileMatchesDefault) {
  EXPECT_EQ(load_homoglyphs(PHISHGUARD_DATA_DIR "/homoglyphs.tsv"), default_homoglyphs());
}

TEST(Spec, Validation) {
  auto s = spec(1.5, 0);
  EXPECT_THROW(s.validate(), phishguard::PipelineError);
  s = spec(0.1, 0);
  s.ops.clear();
  EXPECT_THROW(s.validate(), phishguard::PipelineError);
}
