#include <gtest/gtest.h>

#include "phishguard/error.hpp"
#include "phishguard/synthetic.hpp"

using namespace phishguard::synthetic;

TEST(Synthetic, ExactClassRatio) {
  const auto d = generate_corpus({2000, 0.6, 1});
  EXPECT_EQ(d.size(), 2000u);
  EXPECT_EQ(d.class_counts()[0], 1200u);
  EXPECT_EQ(d.class_counts()[1], 800u);
}

TEST(Synthetic, DeterministicPerSeed) {
  EXPECT_EQ(generate_corpus({100, 0.6, 5}).records(), generate_corpus({100, 0.6, 5}).records());
  EXPECT_NE(generate_corpus({100, 0.6, 5}).records(), generate_corpus({100, 0.6, 6}).records());
}

TEST(Synthetic, CarriesPii) {
  const auto d = generate_corpus({300, 0.6, 2});
  std::size_t at = 0, greeting = 0;
  for (const auto& r : d.records()) {
    at += r.text.find('@') != std::string::npos;
    greeting += r.text.rfind("Hi ", 0) == 0 || r.text.rfind("Dear ", 0) == 0;
  }
  EXPECT_GT(at, 10u);
  EXPECT_GT(greeting, 50u);
}

TEST(Synthetic, RejectsBadSpec) {
  EXPECT_THROW(generate_corpus({1, 0.6, 0}), phishguard::PipelineError);
  EXPECT_THROW(generate_corpus({10, 1.0, 0}), phishguard::PipelineError);
}
